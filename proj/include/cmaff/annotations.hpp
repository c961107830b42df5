#pragma once

// Rotated four-corner annotations to normalized horizontal boxes, label-file
// text, and dataset summaries.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmaff/metrics.hpp"

namespace cmaff::annotations {

using metrics::Box;

inline constexpr int kDefaultImageSize = 1024;

// Default class-name table, indexed by class id.
inline constexpr std::array<std::string_view, 9> kVedaiClassNames = {
    "car", "truck", "pickup", "tractor", "camper", "ship", "van", "plane", "other"};

struct RotatedBox {
  std::array<double, 4> x{};
  std::array<double, 4> y{};
  int class_id = 0;
  int image_size = kDefaultImageSize;  // square side in pixels
};

struct Conversion {
  Box box;
  // True when the raw box left [0,1] by more than 1e-6 and had to be clamped.
  bool clamped = false;
};

// Axis-aligned hull of the four corners, normalized by image_size and clamped
// to [0,1]. Throws DegenerateGeometryError when the hull has zero width or
// height, ConfigError on a non-positive image size or non-finite corner.
Conversion convert_obb_to_hbb(const RotatedBox& r);

// Parses "x1 y1 x2 y2 x3 y3 x4 y4 class_id". Blank and '#' lines yield
// nullopt. Other malformed lines throw ParseError(line_no).
//
// Raw VEDAI files carry extra columns; convert those to this 9-field form
// before calling (or extend here).
std::optional<RotatedBox> parse_vedai(std::string_view line, std::size_t line_no,
                                      int image_size = kDefaultImageSize);

// "class xc yc w h" with 6 decimals.
std::string write_label(const Box& b, int class_id);

// Inverse of write_label. Blank and '#' lines yield nullopt.
std::optional<std::pair<int, Box>> parse_label(std::string_view line, std::size_t line_no);

std::vector<std::pair<int, Box>> read_labels(std::istream& in);

struct ConvertSummary {
  std::size_t converted = 0;
  std::size_t clamped = 0;
};

// Streams a VEDAI-format file into label lines. Clamping warnings go to
// `warnings` (may be null) with their line numbers.
ConvertSummary convert_stream(std::istream& in, std::ostream& out, int image_size,
                              std::ostream* warnings);

struct Histogram2d {
  std::size_t bins = 0;             // per axis
  std::vector<std::size_t> counts;  // row-major: counts[row * bins + col], row = second axis

  std::size_t total() const;
  std::size_t at(std::size_t row, std::size_t col) const { return counts[row * bins + col]; }
};

struct DatasetStats {
  std::map<int, std::size_t> class_counts;
  Histogram2d centers;  // (xc, yc)
  Histogram2d sizes;    // (w, h)
  std::size_t instances = 0;
};

// Bin index for v in [0,1]: floor(v * n), with v = 1 falling in the last bin.
std::size_t histogram_bin(double v, std::size_t n);

// Throws ConfigError if grid_n == 0.
DatasetStats dataset_stats(const std::vector<std::pair<int, Box>>& labels, std::size_t grid_n);

// Key/value summary: instances=, class.<id>.count= (with .name= when the id is
// in the default table), center.<row>.<col>= and size.<row>.<col>= for
// nonzero bins.
void write_stats(std::ostream& out, const DatasetStats& s);

}  // namespace cmaff::annotations
