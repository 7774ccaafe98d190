#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "orthodict/data.hpp"
#include "support.hpp"

#include <bit>
#include <cstring>
#include <fstream>

using namespace orthodict;
using orthodict::testing::gaussian;
using orthodict::testing::scratch_dir;

namespace {

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::vector<std::uint8_t> concat(std::string head, std::vector<std::uint8_t> body) {
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

GrayImage constant_image(std::size_t w, std::size_t h, std::uint8_t v) {
  return GrayImage{w, h, std::vector<std::uint8_t>(w * h, v)};
}

GrayImage ramp_image(std::size_t w, std::size_t h) {
  GrayImage img{w, h, std::vector<std::uint8_t>(w * h)};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>((i * 37) % 256);
  return img;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& b) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::string parse_error_of(const std::vector<std::uint8_t>& b) {
  try {
    parse_netpbm(b);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("luma") {
  CHECK(luma(255, 255, 255) == 255);
  CHECK(luma(0, 0, 0) == 0);
  CHECK(luma(255, 0, 0) == 76);   // 76.245
  CHECK(luma(0, 255, 0) == 150);  // 149.685
  CHECK(luma(0, 0, 255) == 29);   // 29.07
  CHECK(luma(10, 20, 30) == 18);  // 17.15
}

TEST_CASE("netpbm grayscale") {
  const GrayImage expect{2, 2, {0, 255, 128, 64}};
  SUBCASE("binary P5") {
    CHECK(parse_netpbm(concat("P5\n2 2\n255\n", {0, 255, 128, 64})) == expect);
  }
  SUBCASE("ASCII P2 with comments and odd whitespace") {
    CHECK(parse_netpbm(bytes("P2\n# a comment\n2  2 # trailing\n255\n0 255\n\t128 64\n")) == expect);
  }
  SUBCASE("P5 and P2 of the same image agree") {
    const GrayImage img = ramp_image(13, 7);
    const auto dir = scratch_dir("netpbm");
    save_pgm(dir / "b.pgm", img, true);
    save_pgm(dir / "a.pgm", img, false);
    CHECK(load_image(dir / "b.pgm") == img);
    CHECK(load_image(dir / "a.pgm") == img);
  }
  SUBCASE("maxval other than 255 is rescaled") {
    CHECK(parse_netpbm(bytes("P2 3 1 15 0 15 7\n")).pixels == std::vector<std::uint8_t>{0, 255, 119});
    // 16-bit big-endian samples
    CHECK(parse_netpbm(concat("P5 2 1 65535\n", {0xff, 0xff, 0x80, 0x00})).pixels ==
          std::vector<std::uint8_t>{255, 128});
  }
}

TEST_CASE("netpbm color") {
  CHECK(parse_netpbm(concat("P6\n1 1\n255\n", {255, 255, 255})).pixels ==
        std::vector<std::uint8_t>{255});
  const GrayImage img = parse_netpbm(bytes("P3\n2 1\n255\n255 0 0  10 20 30\n"));
  CHECK(img.pixels == std::vector<std::uint8_t>{76, 18});
  CHECK(parse_netpbm(concat("P6 2 1 255\n", {255, 0, 0, 10, 20, 30})) == img);
}

TEST_CASE("netpbm errors carry a byte offset") {
  SUBCASE("unsupported format") {
    const auto what = parse_error_of(bytes("P4\n1 1\n\x01"));
    CHECK(what.find("unsupported") != std::string::npos);
    CHECK(what.find("at byte") != std::string::npos);
    CHECK(parse_error_of(bytes("GIF89a")).find("magic") != std::string::npos);
  }
  SUBCASE("truncated raster") {
    try {
      parse_netpbm(concat("P5\n4 4\n255\n", {1, 2, 3}));
      FAIL("expected a ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 11);
      CHECK(std::string(e.what()).find("expected 16 bytes, found 3") != std::string::npos);
    }
  }
  SUBCASE("truncated header and bad samples") {
    CHECK(!parse_error_of(bytes("P2\n4")).empty());
    CHECK(parse_error_of(bytes("P2 1 1 10 11")).find("exceeds maxval") != std::string::npos);
    CHECK(parse_error_of(bytes("P2 x 1 10 1")).find("width") != std::string::npos);
    CHECK(!parse_error_of(bytes("P2 0 1 10 1")).empty());
  }
  SUBCASE("load_image names the file") {
    const auto dir = scratch_dir("netpbm_err");
    write_bytes(dir / "bad.pgm", bytes("P5\n4 4\n255\n"));
    try {
      load_image(dir / "bad.pgm");
      FAIL("expected a ParseError");
    } catch (const ParseError& e) {
      const std::string what = e.what();
      CHECK(what.find("bad.pgm") != std::string::npos);
      CHECK(what.find("(at byte 11)") != std::string::npos);
      CHECK(what.find("(at byte", what.find("(at byte") + 1) == std::string::npos);
    }
    CHECK_THROWS_AS(load_image(dir / "missing.pgm"), std::runtime_error);
  }
}

TEST_CASE("normalization names") {
  CHECK(parse_normalization("unit-range") == Normalization::unit_range);
  CHECK(parse_normalization("unit-range-dc-removed") == Normalization::unit_range_dc_removed);
  CHECK(to_string(Normalization::unit_range_dc_removed) == "unit-range-dc-removed");
  CHECK_THROWS_AS(parse_normalization("zscore"), ContractError);
}

TEST_CASE("extract_patches") {
  PatchConfig cfg;
  cfg.count = 50;
  cfg.seed = 9;
  SUBCASE("constant image, unit range") {
    const Matrix y = extract_patches(constant_image(20, 15, 128), cfg);
    CHECK(y.rows() == 64);
    CHECK(y.cols() == 50);
    CHECK((y.array() == 128.0 / 255.0).all());
  }
  SUBCASE("constant image, dc removed") {
    cfg.normalization = Normalization::unit_range_dc_removed;
    const Matrix y = extract_patches(constant_image(20, 15, 200), cfg);
    CHECK(y.cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("deterministic for a fixed seed") {
    const GrayImage img = ramp_image(40, 30);
    CHECK(extract_patches(img, cfg) == extract_patches(img, cfg));
    PatchConfig other = cfg;
    other.seed = 10;
    CHECK(extract_patches(img, cfg) != extract_patches(img, other));
  }
  SUBCASE("column-major patches taken from valid positions") {
    // Pixel value encodes its position so each patch can be located.
    GrayImage img{12, 10, std::vector<std::uint8_t>(120)};
    for (std::size_t r = 0; r < 10; ++r) {
      for (std::size_t c = 0; c < 12; ++c) img.pixels[r * 12 + c] = static_cast<std::uint8_t>(r * 12 + c);
    }
    cfg.patch_edge = 3;
    cfg.count = 500;
    const Matrix y = extract_patches(img, cfg);
    std::vector<int> seen(120, 0);
    for (Index j = 0; j < y.cols(); ++j) {
      const auto first = static_cast<std::size_t>(std::lround(y(0, j) * 255.0));
      const std::size_t top = first / 12, left = first % 12;
      REQUIRE(top + 3 <= 10);
      REQUIRE(left + 3 <= 12);
      ++seen[first];
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t r = 0; r < 3; ++r) {
          CHECK(y(static_cast<Index>(c * 3 + r), j) == img.at(top + r, left + c) / 255.0);
        }
      }
    }
    // 500 draws over 80 corners with replacement reach the far corner.
    CHECK(seen[7 * 12 + 9] > 0);
  }
  SUBCASE("value ranges") {
    const GrayImage img = ramp_image(33, 33);
    const Matrix unit = extract_patches(img, cfg);
    CHECK(unit.minCoeff() >= 0.0);
    CHECK(unit.maxCoeff() <= 1.0);
    cfg.normalization = Normalization::unit_range_dc_removed;
    const Matrix dc = extract_patches(img, cfg);
    CHECK(dc.minCoeff() >= -1.0);
    CHECK(dc.maxCoeff() <= 1.0);
    CHECK(dc.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("input errors") {
    CHECK_THROWS_AS(extract_patches(constant_image(7, 20, 1), cfg), ContractError);
    cfg.count = 0;
    CHECK_THROWS_AS(extract_patches(constant_image(20, 20, 1), cfg), ContractError);
  }
}

TEST_CASE("extract_patches over several images") {
  const std::vector<GrayImage> images{ramp_image(20, 20), constant_image(16, 16, 7),
                                      ramp_image(30, 11)};
  PatchConfig cfg;
  cfg.count = 10;
  cfg.seed = 4;
  const Matrix y = extract_patches(images, cfg);
  CHECK(y.cols() == 10);
  // Split 4 + 3 + 3; the second image contributes columns 4..6.
  for (Index j = 4; j < 7; ++j) CHECK((y.col(j).array() == 7.0 / 255.0).all());
  PatchConfig first = cfg;
  first.count = 4;
  first.seed = derive_seed(cfg.seed, seed_stream::kPatches, 0);
  CHECK(y.leftCols(4) == extract_patches(images[0], first));
  CHECK(extract_patches(images, cfg) == y);
  cfg.count = 2;
  CHECK_THROWS_AS(extract_patches(images, cfg), ContractError);
}

TEST_CASE("ODM1 matrix files") {
  const auto dir = scratch_dir("odm");
  SUBCASE("1x1 layout") {
    Matrix a(1, 1);
    a << 2.5;
    save_matrix(dir / "one.odm", a);
    const auto b = read_file(dir / "one.odm");
    REQUIRE(b.size() == 28);
    CHECK(std::string(b.begin(), b.begin() + 4) == "ODM1");
    std::uint64_t rows = 0, cols = 0, bits = 0;
    for (int i = 7; i >= 0; --i) {
      rows = (rows << 8) | b[4 + i];
      cols = (cols << 8) | b[12 + i];
      bits = (bits << 8) | b[20 + i];
    }
    CHECK(rows == 1);
    CHECK(cols == 1);
    CHECK(bits == std::bit_cast<std::uint64_t>(2.5));
    CHECK(load_matrix(dir / "one.odm") == a);
  }
  SUBCASE("bit-exact round trip") {
    Matrix a = gaussian(64, 1000, 3);
    a(0, 0) = -0.0;
    a(1, 0) = std::numeric_limits<double>::denorm_min();
    save_matrix(dir / "big.odm", a);
    const Matrix b = load_matrix(dir / "big.odm");
    REQUIRE(b.rows() == 64);
    REQUIRE(b.cols() == 1000);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 64000) == 0);
    CHECK(std::filesystem::file_size(dir / "big.odm") == 20 + 8 * 64000);
  }
  SUBCASE("empty matrix") {
    save_matrix(dir / "empty.odm", Matrix(3, 0));
    CHECK(load_matrix(dir / "empty.odm").rows() == 3);
  }
  SUBCASE("truncated payload names expected and actual byte counts") {
    save_matrix(dir / "t.odm", gaussian(2, 3, 1));
    auto b = read_file(dir / "t.odm");
    b.resize(b.size() - 5);
    write_bytes(dir / "t.odm", b);
    try {
      load_matrix(dir / "t.odm");
      FAIL("expected a ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("expected 48 bytes, got 43") != std::string::npos);
    }
  }
  SUBCASE("bad magic, short header, trailing bytes, non-finite payload") {
    write_bytes(dir / "m.odm", bytes("ODM2xxxxxxxxxxxxxxxx"));
    CHECK_THROWS_WITH_AS(load_matrix(dir / "m.odm"), doctest::Contains("bad magic"), ParseError);
    write_bytes(dir / "h.odm", bytes("ODM1abc"));
    CHECK_THROWS_WITH_AS(load_matrix(dir / "h.odm"), doctest::Contains("truncated header"),
                         ParseError);
    save_matrix(dir / "x.odm", Matrix::Ones(1, 1));
    auto b = read_file(dir / "x.odm");
    b.push_back(0);
    write_bytes(dir / "x.odm", b);
    CHECK_THROWS_WITH_AS(load_matrix(dir / "x.odm"), doctest::Contains("size mismatch"),
                         ParseError);
    Matrix nan = Matrix::Ones(1, 2);
    nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
    save_matrix(dir / "n.odm", nan);
    CHECK_THROWS_AS(load_matrix(dir / "n.odm"), ParseError);
  }
}
