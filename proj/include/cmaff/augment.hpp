#pragma once

// Four-tile mosaic for aligned RGB/IR pairs. Both planes of every tile go
// through one shared geometric transform, and labels follow the same mapping.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cmaff/image.hpp"
#include "cmaff/metrics.hpp"

namespace cmaff::augment {

using metrics::Box;
using Label = std::pair<int, Box>;

struct ImagePair {
  Image rgb;  // 3 channels
  Image ir;   // 1 channel, same width/height as rgb
  std::vector<Label> labels;
};

// Throws AlignmentError on mismatched planes or wrong channel counts.
void check_aligned(const ImagePair& p);

struct MosaicConfig {
  std::size_t out_size = 640;  // square canvas side in pixels
  double center_jitter = 0.25;  // split point drawn from [0.5 - j, 0.5 + j] of the canvas
  std::uint64_t seed = 0;
  double min_area = 1e-4;  // surviving labels need at least this fraction of the canvas
};

struct PixelRect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
};

// Maps a normalized source coordinate u to canvas pixels: u * scale + offset.
struct TileTransform {
  double scale_x = 1.0;
  double scale_y = 1.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  PixelRect clip;            // visible region of the tile, in canvas pixels
  std::size_t canvas = 1;    // canvas side used for normalization
  double min_area = 1e-4;
};

// Transforms b, clips it to t.clip and the canvas, and renormalizes. Returns
// nullopt when nothing remains or the remainder covers less than t.min_area
// of the canvas.
std::optional<Box> remap_box(const Box& b, const TileTransform& t);

struct Mosaic {
  ImagePair pair;
  std::size_t split_x = 0;
  std::size_t split_y = 0;
  std::vector<TileTransform> transforms;  // one per tile: TL, TR, BL, BR
};

// Tiles fill the quadrants around a seeded split point in the order top-left,
// top-right, bottom-left, bottom-right. Each tile is scaled (aspect preserved,
// nearest neighbor) to cover its quadrant with the corner nearest the split
// point anchored there; overflow is cropped.
// Throws ArityError unless exactly 4 tiles, AlignmentError for misaligned
// tiles, ConfigError for an invalid config.
Mosaic mosaic_pair(std::span<const ImagePair> tiles, const MosaicConfig& cfg);

// `count` mosaics of the same tiles, sample i seeded with cfg.seed ^ i.
// Output order is sample order regardless of `threads`.
std::vector<Mosaic> mosaic_batch(std::span<const ImagePair> tiles, const MosaicConfig& cfg,
                                 std::size_t count, unsigned threads = 1);

// Directory layout: rgb.ppm, ir.pgm and optional labels.txt.
ImagePair load_pair(const std::filesystem::path& dir);
void save_pair(const std::filesystem::path& dir, const ImagePair& p);

}  // namespace cmaff::augment
