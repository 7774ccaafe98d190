#include "orthodict/data.hpp"

#include "orthodict/parallel.hpp"

#include <bit>
#include <cctype>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

namespace orthodict {

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const unsigned weighted = 299u * r + 587u * g + 114u * b;
  return static_cast<std::uint8_t>((weighted + 500u) / 1000u);
}

namespace {

class NetpbmReader {
 public:
  explicit NetpbmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  GrayImage parse() {
    if (bytes_.size() < 2 || bytes_[0] != 'P') fail("not a netpbm file: missing 'P' magic");
    const char kind = static_cast<char>(bytes_[1]);
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
      fail(std::string("unsupported netpbm variant P") + kind);
    }
    pos_ = 2;
    const bool ascii = kind == '2' || kind == '3';
    const std::size_t channels = (kind == '3' || kind == '6') ? 3 : 1;

    const std::size_t width = header_number("width");
    const std::size_t height = header_number("height");
    const std::size_t maxval = header_number("maxval");
    if (width == 0 || height == 0) fail("image has zero width or height");
    if (maxval == 0 || maxval > 65535) fail("maxval must be in 1..65535");

    if (!ascii) {
      if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
        fail("expected a single whitespace byte before the raster");
      }
      ++pos_;
    }

    const std::size_t samples = width * height * channels;
    std::vector<unsigned> raw(samples);
    if (ascii) {
      for (auto& v : raw) {
        v = static_cast<unsigned>(header_number("sample"));
        if (v > maxval) fail("sample exceeds maxval");
      }
    } else {
      const std::size_t per = maxval > 255 ? 2 : 1;
      const std::size_t need = samples * per;
      if (bytes_.size() - pos_ < need) {
        fail("truncated raster: expected " + std::to_string(need) + " bytes, found " +
             std::to_string(bytes_.size() - pos_));
      }
      for (auto& v : raw) {
        v = per == 2 ? (unsigned{bytes_[pos_]} << 8) | bytes_[pos_ + 1] : bytes_[pos_];
        if (v > maxval) fail("sample exceeds maxval");
        pos_ += per;
      }
    }

    auto scale = [maxval](unsigned v) -> std::uint8_t {
      if (maxval == 255) return static_cast<std::uint8_t>(v);
      return static_cast<std::uint8_t>((2ull * v * 255ull + maxval) / (2ull * maxval));
    };

    GrayImage image{width, height, std::vector<std::uint8_t>(width * height)};
    for (std::size_t i = 0; i < width * height; ++i) {
      image.pixels[i] = channels == 1 ? scale(raw[i])
                                      : luma(scale(raw[3 * i]), scale(raw[3 * i + 1]),
                                             scale(raw[3 * i + 2]));
    }
    return image;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t header_number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail(std::string("unexpected end of file reading ") + what);
    if (!std::isdigit(bytes_[pos_])) fail(std::string("expected a decimal ") + what);
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (std::size_t{1} << 40)) fail(std::string(what) + " is too large");
      ++pos_;
    }
    return value;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(buf, 8);
}

std::uint64_t get_u64(const unsigned char* buf) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

}  // namespace

GrayImage parse_netpbm(std::span<const std::uint8_t> bytes) { return NetpbmReader(bytes).parse(); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_netpbm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

void save_pgm(const std::filesystem::path& path, const GrayImage& image, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (binary ? "P5" : "P2") << '\n' << image.width << ' ' << image.height << "\n255\n";
  if (binary) {
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
  } else {
    for (std::size_t r = 0; r < image.height; ++r) {
      for (std::size_t c = 0; c < image.width; ++c) {
        out << static_cast<unsigned>(image.at(r, c)) << (c + 1 == image.width ? '\n' : ' ');
      }
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string to_string(Normalization n) {
  return n == Normalization::unit_range ? "unit-range" : "unit-range-dc-removed";
}

Normalization parse_normalization(const std::string& text) {
  if (text == "unit-range") return Normalization::unit_range;
  if (text == "unit-range-dc-removed" || text == "dc-removed") {
    return Normalization::unit_range_dc_removed;
  }
  throw ContractError("unknown normalization '" + text +
                      "' (expected unit-range or unit-range-dc-removed)");
}

Matrix extract_patches(const GrayImage& image, const PatchConfig& cfg) {
  const std::size_t e = cfg.patch_edge;
  if (e < 1) throw ContractError("patch edge must be >= 1");
  if (cfg.count < 1) throw ContractError("patch count must be >= 1");
  if (image.width < e || image.height < e) {
    throw ContractError("image " + std::to_string(image.width) + "x" +
                        std::to_string(image.height) + " is smaller than a " +
                        std::to_string(e) + "x" + std::to_string(e) + " patch");
  }

  const std::size_t rows_valid = image.height - e + 1;
  const std::size_t cols_valid = image.width - e + 1;
  Rng rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> corner(0, rows_valid * cols_valid - 1);

  const auto p = static_cast<Index>(e * e);
  Matrix patches(p, static_cast<Index>(cfg.count));
  for (Index j = 0; j < patches.cols(); ++j) {
    const std::size_t pick = corner(rng);
    const std::size_t top = pick / cols_valid;
    const std::size_t left = pick % cols_valid;
    auto col = patches.col(j);
    for (std::size_t c = 0; c < e; ++c) {
      for (std::size_t r = 0; r < e; ++r) {
        col(static_cast<Index>(c * e + r)) = image.at(top + r, left + c) / 255.0;
      }
    }
    if (cfg.normalization == Normalization::unit_range_dc_removed) {
      col.array() -= col.mean();
    }
  }
  return patches;
}

Matrix extract_patches(std::span<const GrayImage> images, const PatchConfig& cfg) {
  if (images.empty()) throw ContractError("no input images");
  if (cfg.count < images.size()) {
    throw ContractError("patch count " + std::to_string(cfg.count) + " is smaller than the " +
                        std::to_string(images.size()) + " input images");
  }
  const std::size_t base = cfg.count / images.size();
  const std::size_t extra = cfg.count % images.size();
  Matrix all(static_cast<Index>(cfg.patch_edge * cfg.patch_edge), static_cast<Index>(cfg.count));
  Index offset = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    PatchConfig sub = cfg;
    sub.count = base + (i < extra ? 1 : 0);
    sub.seed = derive_seed(cfg.seed, seed_stream::kPatches, i);
    all.middleCols(offset, static_cast<Index>(sub.count)) = extract_patches(images[i], sub);
    offset += static_cast<Index>(sub.count);
  }
  return all;
}

void write_matrix(std::ostream& out, const Matrix& a) {
  out.write("ODM1", 4);
  put_u64(out, static_cast<std::uint64_t>(a.rows()));
  put_u64(out, static_cast<std::uint64_t>(a.cols()));
  const double* data = a.data();
  for (Index i = 0; i < a.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(data[i]));
}

Matrix read_matrix(std::istream& in, std::size_t offset) {
  unsigned char header[kMatrixHeaderBytes];
  in.read(reinterpret_cast<char*>(header), kMatrixHeaderBytes);
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got < 4 || std::string(reinterpret_cast<char*>(header), 4) != "ODM1") {
    throw ParseError("bad magic: expected ODM1", offset);
  }
  if (got < kMatrixHeaderBytes) {
    throw ParseError("truncated header: expected " + std::to_string(kMatrixHeaderBytes) +
                         " bytes, got " + std::to_string(got),
                     offset + got);
  }
  const std::uint64_t rows = get_u64(header + 4);
  const std::uint64_t cols = get_u64(header + 12);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
  if (rows > kLimit || cols > kLimit || (rows != 0 && cols > kLimit / rows)) {
    throw ParseError("matrix dimensions " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " are implausible",
                     offset + 4);
  }

  const std::uint64_t expected = rows * cols * 8;
  std::vector<unsigned char> payload(expected);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(expected));
  const auto read = static_cast<std::uint64_t>(in.gcount());
  if (read != expected) {
    throw ParseError("truncated payload: expected " + std::to_string(expected) +
                         " bytes, got " + std::to_string(read),
                     offset + kMatrixHeaderBytes + read);
  }

  Matrix a(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::uint64_t i = 0; i < rows * cols; ++i) {
    a.data()[i] = std::bit_cast<double>(get_u64(payload.data() + 8 * i));
  }
  if (!a.allFinite()) throw ParseError("matrix payload contains non-finite values", offset);
  return a;
}

void save_matrix(const std::filesystem::path& path, const Matrix& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_matrix(out, a);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    Matrix a = read_matrix(in, 0);
    if (in.peek() != std::char_traits<char>::eof()) {
      const std::size_t used = kMatrixHeaderBytes + static_cast<std::size_t>(a.size()) * 8;
      throw ParseError("size mismatch: " + std::to_string(std::filesystem::file_size(path)) +
                           " bytes on disk, header describes " + std::to_string(used),
                       used);
    }
    return a;
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace orthodict
