#include "cmaff/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "cmaff/annotations.hpp"
#include "cmaff/errors.hpp"

namespace cmaff::augment {

void check_aligned(const ImagePair& p) {
  if (p.rgb.channels() != 3) throw AlignmentError("RGB plane must have 3 channels");
  if (p.ir.channels() != 1) throw AlignmentError("IR plane must have 1 channel");
  if (p.rgb.width() != p.ir.width() || p.rgb.height() != p.ir.height()) {
    throw AlignmentError("RGB " + std::to_string(p.rgb.width()) + "x" +
                         std::to_string(p.rgb.height()) + " and IR " +
                         std::to_string(p.ir.width()) + "x" + std::to_string(p.ir.height()) +
                         " planes are not aligned");
  }
}

std::optional<Box> remap_box(const Box& b, const TileTransform& t) {
  const double canvas = static_cast<double>(t.canvas);
  const double x0 = std::max({b.x_min() * t.scale_x + t.offset_x, t.clip.x0, 0.0});
  const double x1 = std::min({b.x_max() * t.scale_x + t.offset_x, t.clip.x1, canvas});
  const double y0 = std::max({b.y_min() * t.scale_y + t.offset_y, t.clip.y0, 0.0});
  const double y1 = std::min({b.y_max() * t.scale_y + t.offset_y, t.clip.y1, canvas});
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  const double w = (x1 - x0) / canvas;
  const double h = (y1 - y0) / canvas;
  if (w * h < t.min_area) return std::nullopt;
  return Box{(x0 + x1) / (2.0 * canvas), (y0 + y1) / (2.0 * canvas), w, h};
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void validate(const MosaicConfig& cfg) {
  if (cfg.out_size < 2) throw ConfigError("mosaic: out_size must be >= 2");
  if (!(cfg.center_jitter >= 0.0 && cfg.center_jitter <= 0.5)) {
    throw ConfigError("mosaic: center_jitter must lie in [0, 0.5]");
  }
  if (!(cfg.min_area >= 0.0)) throw ConfigError("mosaic: min_area must be >= 0");
}

// Source index for each destination column/row of a quadrant. Computed once
// and used for both planes.
std::vector<std::size_t> sample_indices(std::size_t dst_begin, std::size_t dst_end,
                                        double offset, double scale, std::size_t src_len) {
  std::vector<std::size_t> idx;
  idx.reserve(dst_end - dst_begin);
  for (std::size_t d = dst_begin; d < dst_end; ++d) {
    const double s = std::floor((static_cast<double>(d) + 0.5 - offset) / scale);
    const double clamped = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
    idx.push_back(static_cast<std::size_t>(clamped));
  }
  return idx;
}

}  // namespace

Mosaic mosaic_pair(std::span<const ImagePair> tiles, const MosaicConfig& cfg) {
  if (tiles.size() != 4) {
    throw ArityError("mosaic needs exactly 4 tiles, got " + std::to_string(tiles.size()));
  }
  for (const auto& t : tiles) check_aligned(t);
  validate(cfg);

  // All randomness is drawn here, before any per-plane work.
  std::mt19937_64 rng(cfg.seed);
  const double lo = 0.5 - cfg.center_jitter;
  const double span_frac = 2.0 * cfg.center_jitter;
  const std::size_t n = cfg.out_size;
  const double side = static_cast<double>(n);
  auto draw = [&] {
    const double v = std::round(side * (lo + span_frac * unit_uniform(rng)));
    return static_cast<std::size_t>(std::clamp(v, 1.0, side - 1.0));
  };
  const std::size_t cx = draw();
  const std::size_t cy = draw();

  Mosaic out{ImagePair{Image(n, n, 3), Image(n, n, 1), {}}, cx, cy, {}};
  const std::size_t qx0[4] = {0, cx, 0, cx};
  const std::size_t qx1[4] = {cx, n, cx, n};
  const std::size_t qy0[4] = {0, 0, cy, cy};
  const std::size_t qy1[4] = {cy, cy, n, n};

  for (std::size_t k = 0; k < 4; ++k) {
    const auto& tile = tiles[k];
    const double tw = static_cast<double>(tile.rgb.width());
    const double th = static_cast<double>(tile.rgb.height());
    const double qw = static_cast<double>(qx1[k] - qx0[k]);
    const double qh = static_cast<double>(qy1[k] - qy0[k]);
    const double s = std::max(qw / tw, qh / th);
    const bool left = (k % 2) == 0;
    const bool top = k < 2;
    const double off_x = left ? static_cast<double>(cx) - tw * s : static_cast<double>(cx);
    const double off_y = top ? static_cast<double>(cy) - th * s : static_cast<double>(cy);

    const auto xs = sample_indices(qx0[k], qx1[k], off_x, s, tile.rgb.width());
    const auto ys = sample_indices(qy0[k], qy1[k], off_y, s, tile.rgb.height());
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const std::size_t y = qy0[k] + j;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t x = qx0[k] + i;
        for (std::size_t c = 0; c < 3; ++c) out.pair.rgb.at(y, x, c) = tile.rgb.at(ys[j], xs[i], c);
        out.pair.ir.at(y, x) = tile.ir.at(ys[j], xs[i]);
      }
    }

    TileTransform t{tw * s,
                    th * s,
                    off_x,
                    off_y,
                    {static_cast<double>(qx0[k]), static_cast<double>(qy0[k]),
                     static_cast<double>(qx1[k]), static_cast<double>(qy1[k])},
                    n,
                    cfg.min_area};
    for (const auto& [cls, box] : tile.labels) {
      if (auto r = remap_box(box, t)) out.pair.labels.emplace_back(cls, *r);
    }
    out.transforms.push_back(t);
  }
  return out;
}

std::vector<Mosaic> mosaic_batch(std::span<const ImagePair> tiles, const MosaicConfig& cfg,
                                 std::size_t count, unsigned threads) {
  std::vector<std::optional<Mosaic>> slots(count);
  auto run = [&](std::size_t i) {
    MosaicConfig c = cfg;
    c.seed = cfg.seed ^ static_cast<std::uint64_t>(i);
    slots[i] = mosaic_pair(tiles, c);
  };
  const unsigned workers = std::max(1u, threads);
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<Mosaic> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

ImagePair load_pair(const std::filesystem::path& dir) {
  ImagePair p{read_pnm_file(dir / "rgb.ppm"), read_pnm_file(dir / "ir.pgm"), {}};
  const auto labels = dir / "labels.txt";
  if (std::filesystem::exists(labels)) {
    std::ifstream in(labels);
    if (!in) throw IoError("cannot open " + labels.string());
    p.labels = annotations::read_labels(in);
  }
  check_aligned(p);
  return p;
}

void save_pair(const std::filesystem::path& dir, const ImagePair& p) {
  std::filesystem::create_directories(dir);
  write_pnm_file(dir / "rgb.ppm", p.rgb);
  write_pnm_file(dir / "ir.pgm", p.ir);
  std::ofstream out(dir / "labels.txt", std::ios::trunc);
  if (!out) throw IoError("cannot open " + (dir / "labels.txt").string() + " for writing");
  for (const auto& [cls, box] : p.labels) out << annotations::write_label(box, cls) << "\n";
}

}  // namespace cmaff::augment
