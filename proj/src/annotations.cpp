#include "cmaff/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>

#include "cmaff/errors.hpp"
#include "text_util.hpp"

namespace cmaff::annotations {

namespace {

constexpr double kClampSlack = 1e-6;

double clamp_unit(double v, bool& clamped) {
  if (v < -kClampSlack || v > 1.0 + kClampSlack) clamped = true;
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

Conversion convert_obb_to_hbb(const RotatedBox& r) {
  if (r.image_size <= 0) throw ConfigError("image size must be positive");
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(r.x[i]) || !std::isfinite(r.y[i])) {
      throw ConfigError("rotated box has a non-finite corner");
    }
  }
  const auto [min_x, max_x] = std::minmax_element(r.x.begin(), r.x.end());
  const auto [min_y, max_y] = std::minmax_element(r.y.begin(), r.y.end());
  if (*max_x == *min_x || *max_y == *min_y) {
    throw DegenerateGeometryError("rotated box has zero width or height");
  }
  const double s = static_cast<double>(r.image_size);

  // Clip the hull to the image, then express it as center/size.
  bool clamped = false;
  const double x0 = clamp_unit(*min_x / s, clamped);
  const double x1 = clamp_unit(*max_x / s, clamped);
  const double y0 = clamp_unit(*min_y / s, clamped);
  const double y1 = clamp_unit(*max_y / s, clamped);
  if (!clamped) {
    return {Box{(*max_x + *min_x) / (2.0 * s), (*max_y + *min_y) / (2.0 * s),
                (*max_x - *min_x) / s, (*max_y - *min_y) / s},
            false};
  }
  if (x1 <= x0 || y1 <= y0) {
    throw DegenerateGeometryError("rotated box lies entirely outside the image");
  }
  return {Box{(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0}, true};
}

std::optional<RotatedBox> parse_vedai(std::string_view line, std::size_t line_no,
                                      int image_size) {
  const auto toks = text::tokens(line);
  if (toks.empty()) return std::nullopt;
  if (toks.size() != 9) {
    throw ParseError(line_no, "expected 'x1 y1 x2 y2 x3 y3 x4 y4 class_id', got " +
                                  std::to_string(toks.size()) + " fields");
  }
  RotatedBox r;
  r.image_size = image_size;
  for (int i = 0; i < 4; ++i) {
    r.x[i] = text::to_double(toks[2 * i], line_no, "x coordinate");
    r.y[i] = text::to_double(toks[2 * i + 1], line_no, "y coordinate");
    if (!std::isfinite(r.x[i]) || !std::isfinite(r.y[i])) {
      throw ParseError(line_no, "non-finite coordinate");
    }
  }
  r.class_id = text::to_int(toks[8], line_no, "class_id");
  if (r.class_id < 0) throw ParseError(line_no, "negative class_id");
  return r;
}

std::string write_label(const Box& b, int class_id) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", class_id, b.xc, b.yc, b.w, b.h);
  return buf;
}

std::optional<std::pair<int, Box>> parse_label(std::string_view line, std::size_t line_no) {
  const auto toks = text::tokens(line);
  if (toks.empty()) return std::nullopt;
  if (toks.size() != 5) {
    throw ParseError(line_no, "expected 'class xc yc w h', got " + std::to_string(toks.size()) +
                                  " fields");
  }
  const int cls = text::to_int(toks[0], line_no, "class");
  if (cls < 0) throw ParseError(line_no, "negative class");
  Box b{text::to_double(toks[1], line_no, "xc"), text::to_double(toks[2], line_no, "yc"),
        text::to_double(toks[3], line_no, "w"), text::to_double(toks[4], line_no, "h")};
  if (!metrics::is_valid(b)) throw ParseError(line_no, "box outside the normalized frame");
  return std::pair{cls, b};
}

std::vector<std::pair<int, Box>> read_labels(std::istream& in) {
  std::vector<std::pair<int, Box>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (auto l = parse_label(line, ++n)) out.push_back(*l);
  }
  return out;
}

ConvertSummary convert_stream(std::istream& in, std::ostream& out, int image_size,
                              std::ostream* warnings) {
  ConvertSummary summary;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto r = parse_vedai(line, n, image_size);
    if (!r) continue;
    Conversion c;
    try {
      c = convert_obb_to_hbb(*r);
    } catch (const DegenerateGeometryError& e) {
      throw ParseError(n, e.what());
    }
    if (c.clamped) {
      ++summary.clamped;
      if (warnings) *warnings << "warning: line " << n << ": box clamped to image bounds\n";
    }
    out << write_label(c.box, r->class_id) << "\n";
    ++summary.converted;
  }
  return summary;
}

std::size_t Histogram2d::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t histogram_bin(double v, std::size_t n) {
  if (!(v > 0.0)) return 0;
  const auto b = static_cast<std::size_t>(std::floor(v * static_cast<double>(n)));
  return std::min(b, n - 1);
}

DatasetStats dataset_stats(const std::vector<std::pair<int, Box>>& labels, std::size_t grid_n) {
  if (grid_n == 0) throw ConfigError("dataset_stats: grid size must be >= 1");
  DatasetStats s;
  s.centers = {grid_n, std::vector<std::size_t>(grid_n * grid_n, 0)};
  s.sizes = {grid_n, std::vector<std::size_t>(grid_n * grid_n, 0)};
  for (const auto& [cls, b] : labels) {
    ++s.class_counts[cls];
    ++s.centers.counts[histogram_bin(b.yc, grid_n) * grid_n + histogram_bin(b.xc, grid_n)];
    ++s.sizes.counts[histogram_bin(b.h, grid_n) * grid_n + histogram_bin(b.w, grid_n)];
    ++s.instances;
  }
  return s;
}

void write_stats(std::ostream& out, const DatasetStats& s) {
  out << "instances=" << s.instances << "\n";
  out << "grid=" << s.centers.bins << "\n";
  for (const auto& [cls, n] : s.class_counts) {
    out << "class." << cls << ".count=" << n << "\n";
    if (cls >= 0 && static_cast<std::size_t>(cls) < kVedaiClassNames.size()) {
      out << "class." << cls << ".name=" << kVedaiClassNames[cls] << "\n";
    }
  }
  auto dump = [&](const char* prefix, const Histogram2d& h) {
    for (std::size_t r = 0; r < h.bins; ++r) {
      for (std::size_t c = 0; c < h.bins; ++c) {
        if (h.at(r, c) != 0) out << prefix << '.' << r << '.' << c << '=' << h.at(r, c) << "\n";
      }
    }
  };
  dump("center", s.centers);
  dump("size", s.sizes);
}

}  // namespace cmaff::annotations
