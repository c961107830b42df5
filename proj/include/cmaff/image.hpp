#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace cmaff {

// 8-bit interleaved image, row-major: pixel (y, x) channel k at
// (y * width + x) * channels + k.
class Image {
 public:
  Image(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill = 0);
  Image(std::size_t width, std::size_t height, std::size_t channels,
        std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t k = 0) const {
    return pixels_[(y * width_ + x) * channels_ + k];
  }
  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t k = 0) {
    return pixels_[(y * width_ + x) * channels_ + k];
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::size_t channels_;
  std::vector<std::uint8_t> pixels_;
};

// Binary netpbm: P5 (1 channel) and P6 (3 channels), maxval 255.
void write_pnm(std::ostream& out, const Image& img);
Image read_pnm(std::istream& in);
void write_pnm_file(const std::filesystem::path& path, const Image& img);
Image read_pnm_file(const std::filesystem::path& path);

// Min-max normalizes `values` into a grayscale image of the given size.
// A constant input renders as mid-gray.
Image render_heatmap(std::span<const float> values, std::size_t width, std::size_t height);

}  // namespace cmaff
