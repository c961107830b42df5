#include "cmaff/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "cmaff/errors.hpp"

namespace cmaff {

Image::Image(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill)
    : Image(width, height, channels, std::vector<std::uint8_t>(width * height * channels, fill)) {}

Image::Image(std::size_t width, std::size_t height, std::size_t channels,
             std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  if (width_ == 0 || height_ == 0) throw ShapeError("Image: dimensions must be positive");
  if (channels_ != 1 && channels_ != 3) throw ShapeError("Image: channels must be 1 or 3");
  if (pixels_.size() != width_ * height_ * channels_) {
    throw ShapeError("Image: pixel buffer size mismatch");
  }
}

void write_pnm(std::ostream& out, const Image& img) {
  out << (img.channels() == 1 ? "P5" : "P6") << "\n"
      << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size()));
  if (!out) throw IoError("PNM: write failed");
}

namespace {

// Next header integer, skipping whitespace and '#' comments.
std::size_t header_int(std::istream& in) {
  int ch = in.peek();
  while (ch != std::char_traits<char>::eof()) {
    if (ch == '#') {
      std::string dummy;
      std::getline(in, dummy);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
    ch = in.peek();
  }
  std::size_t v = 0;
  if (!std::isdigit(in.peek()) || !(in >> v)) throw FormatError("PNM: malformed header");
  return v;
}

}  // namespace

Image read_pnm(std::istream& in) {
  char magic[2];
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw FormatError("PNM: expected P5 or P6");
  }
  const std::size_t channels = magic[1] == '5' ? 1 : 3;
  const auto width = header_int(in);
  const auto height = header_int(in);
  const auto maxval = header_int(in);
  if (width == 0 || height == 0) throw FormatError("PNM: zero dimension");
  if (maxval != 255) throw FormatError("PNM: only maxval 255 is supported");
  if (!std::isspace(in.get())) throw FormatError("PNM: missing separator before raster");
  std::vector<std::uint8_t> px(width * height * channels);
  if (!in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()))) {
    throw FormatError("PNM: truncated raster");
  }
  return Image(width, height, channels, std::move(px));
}

void write_pnm_file(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_pnm(out, img);
}

Image read_pnm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_pnm(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Image render_heatmap(std::span<const float> values, std::size_t width, std::size_t height) {
  if (values.size() != width * height) throw ShapeError("render_heatmap: size mismatch");
  Image img(width, height, 1);
  if (values.empty()) return img;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  for (std::size_t i = 0; i < values.size(); ++i) {
    double t = range > 0.0 ? (static_cast<double>(values[i]) - *lo) / range : 0.5;
    img.pixels()[i] = static_cast<std::uint8_t>(std::lround(t * 255.0));
  }
  return img;
}

}  // namespace cmaff
