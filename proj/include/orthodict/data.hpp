#pragma once

#include "orthodict/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace orthodict {

/// Malformed input file. offset() is the byte position where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        detail_(what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t offset_;
};

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// 0.299 R + 0.587 G + 0.114 B rounded to nearest.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Parses P2/P3/P5/P6 netpbm data. Color images are converted with luma();
/// samples with maxval != 255 are rescaled to 0..255.
GrayImage parse_netpbm(std::span<const std::uint8_t> bytes);
GrayImage load_image(const std::filesystem::path& path);

void save_pgm(const std::filesystem::path& path, const GrayImage& image, bool binary = true);

enum class Normalization { unit_range, unit_range_dc_removed };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& text);

struct PatchConfig {
  std::size_t patch_edge = 8;
  std::size_t count = 0;
  std::uint64_t seed = 1;
  Normalization normalization = Normalization::unit_range;
};

/// m random patches (top-left corners uniform over valid positions, with
/// replacement), each vectorized column-major into one column.
Matrix extract_patches(const GrayImage& image, const PatchConfig& cfg);

/// Splits cfg.count across the images (earlier images take the remainder) and
/// concatenates their patches; each image gets its own derived seed.
Matrix extract_patches(std::span<const GrayImage> images, const PatchConfig& cfg);

// "ODM1" container: magic, rows and cols as u64 little-endian, then the
// column-major payload as little-endian IEEE-754 doubles.
inline constexpr std::size_t kMatrixHeaderBytes = 4 + 8 + 8;

void write_matrix(std::ostream& out, const Matrix& a);
/// Reads one record; `offset` is the stream position used in error messages.
Matrix read_matrix(std::istream& in, std::size_t offset = 0);

void save_matrix(const std::filesystem::path& path, const Matrix& a);
Matrix load_matrix(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace orthodict
