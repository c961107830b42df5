#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "cmaff/augment.hpp"
#include "cmaff/errors.hpp"

using namespace cmaff;
using namespace cmaff::augment;

namespace {

Image noise_image(std::mt19937_64& rng, std::size_t w, std::size_t h, std::size_t ch) {
  std::vector<std::uint8_t> px(w * h * ch);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng() & 0xff);
  return Image(w, h, ch, std::move(px));
}

// RGB whose three channels all equal the IR plane.
ImagePair replicated_pair(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  Image ir = noise_image(rng, w, h, 1);
  Image rgb(w, h, 3);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) rgb.at(y, x, c) = ir.at(y, x);
  return {std::move(rgb), std::move(ir), {}};
}

std::vector<ImagePair> four_tiles(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t sizes[4][2] = {{40, 30}, {50, 50}, {20, 60}, {33, 17}};
  std::vector<ImagePair> tiles;
  for (const auto& s : sizes) {
    ImagePair p{noise_image(rng, s[0], s[1], 3), noise_image(rng, s[0], s[1], 1), {}};
    p.labels.push_back({1, Box{0.5, 0.5, 0.4, 0.3}});
    p.labels.push_back({2, Box{0.1, 0.9, 0.2, 0.2}});
    tiles.push_back(std::move(p));
  }
  return tiles;
}

TileTransform identity_transform(std::size_t canvas) {
  const double n = static_cast<double>(canvas);
  return TileTransform{n, n, 0.0, 0.0, {0.0, 0.0, n, n}, canvas, 1e-4};
}

}  // namespace

TEST_SUITE("remap_box") {
  TEST_CASE("identity transform leaves the box unchanged") {
    const Box b{0.3, 0.6, 0.2, 0.4};
    const auto r = remap_box(b, identity_transform(100));
    REQUIRE(r.has_value());
    CHECK(r->xc == doctest::Approx(b.xc).epsilon(1e-12));
    CHECK(r->yc == doctest::Approx(b.yc).epsilon(1e-12));
    CHECK(r->w == doctest::Approx(b.w).epsilon(1e-12));
    CHECK(r->h == doctest::Approx(b.h).epsilon(1e-12));
  }

  TEST_CASE("box moved fully outside is dropped") {
    auto t = identity_transform(100);
    t.offset_x = 150.0;
    CHECK_FALSE(remap_box(Box{0.5, 0.5, 0.2, 0.2}, t).has_value());
  }

  TEST_CASE("half-clipped box") {
    auto t = identity_transform(100);
    t.offset_x = 60.0;
    const auto r = remap_box(Box{0.5, 0.5, 0.4, 0.4}, t);
    REQUIRE(r.has_value());
    // x spans [90, 130] before clipping to [90, 100].
    CHECK(r->xc == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(r->w == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r->yc == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r->h == doctest::Approx(0.4).epsilon(1e-12));
  }

  TEST_CASE("slivers below the area threshold are dropped") {
    auto t = identity_transform(100);
    t.offset_x = 69.5;
    // Only [99.5, 100] survives: 0.005 x 0.01 of the canvas.
    CHECK_FALSE(remap_box(Box{0.5, 0.5, 0.4, 0.01}, t).has_value());
  }
}

TEST_SUITE("mosaic") {
  TEST_CASE("replicated rgb and ir planes stay identical") {
    std::mt19937_64 rng(301);
    const std::size_t sizes[4][2] = {{40, 30}, {50, 50}, {20, 60}, {33, 17}};
    std::vector<ImagePair> tiles;
    for (const auto& s : sizes) tiles.push_back(replicated_pair(rng, s[0], s[1]));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      MosaicConfig cfg;
      cfg.out_size = 64;
      cfg.seed = seed;
      const auto m = mosaic_pair(tiles, cfg);
      bool identical = true;
      for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x)
          for (std::size_t c = 0; c < 3; ++c)
            identical = identical && m.pair.rgb.at(y, x, c) == m.pair.ir.at(y, x);
      CHECK(identical);
    }
  }

  TEST_CASE("same seed gives byte-identical mosaics") {
    const auto tiles = four_tiles(302);
    MosaicConfig cfg;
    cfg.out_size = 96;
    cfg.seed = 7;
    const auto a = mosaic_pair(tiles, cfg);
    const auto b = mosaic_pair(tiles, cfg);
    CHECK(a.pair.rgb == b.pair.rgb);
    CHECK(a.pair.ir == b.pair.ir);
    CHECK(a.pair.labels == b.pair.labels);
    cfg.seed = 8;
    const auto c = mosaic_pair(tiles, cfg);
    CHECK((c.split_x != a.split_x || c.split_y != a.split_y || !(c.pair.rgb == a.pair.rgb)));
  }

  TEST_CASE("split point respects the jitter range") {
    const auto tiles = four_tiles(303);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      MosaicConfig cfg;
      cfg.out_size = 100;
      cfg.seed = seed;
      const auto m = mosaic_pair(tiles, cfg);
      CHECK(m.split_x >= 25);
      CHECK(m.split_x <= 75);
      CHECK(m.split_y >= 25);
      CHECK(m.split_y <= 75);
    }
    MosaicConfig fixed;
    fixed.out_size = 100;
    fixed.center_jitter = 0.0;
    const auto m = mosaic_pair(tiles, fixed);
    CHECK(m.split_x == 50);
    CHECK(m.split_y == 50);
  }

  TEST_CASE("a full-tile box in the top-left tile covers that quadrant") {
    auto tiles = four_tiles(304);
    for (auto& t : tiles) t.labels.clear();
    tiles[0].labels.push_back({4, Box{0.5, 0.5, 1.0, 1.0}});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      MosaicConfig cfg;
      cfg.out_size = 128;
      cfg.seed = seed;
      const auto m = mosaic_pair(tiles, cfg);
      REQUIRE(m.pair.labels.size() == 1);
      const auto& [cls, b] = m.pair.labels[0];
      const double qx = static_cast<double>(m.split_x) / 128.0;
      const double qy = static_cast<double>(m.split_y) / 128.0;
      CHECK(cls == 4);
      CHECK(std::abs(b.xc - qx / 2) <= 1e-12);
      CHECK(std::abs(b.yc - qy / 2) <= 1e-12);
      CHECK(std::abs(b.w - qx) <= 1e-12);
      CHECK(std::abs(b.h - qy) <= 1e-12);
    }
  }

  TEST_CASE("every output label is inside the canvas with positive area") {
    const auto tiles = four_tiles(305);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      MosaicConfig cfg;
      cfg.out_size = 80;
      cfg.seed = seed;
      const auto m = mosaic_pair(tiles, cfg);
      for (const auto& [cls, b] : m.pair.labels) {
        CHECK(metrics::is_valid(b));
        CHECK(b.w * b.h >= cfg.min_area);
      }
    }
  }

  TEST_CASE("batch seeds and thread independence") {
    const auto tiles = four_tiles(306);
    MosaicConfig cfg;
    cfg.out_size = 48;
    cfg.seed = 11;
    const auto serial = mosaic_batch(tiles, cfg, 6, 1);
    const auto parallel = mosaic_batch(tiles, cfg, 6, 3);
    REQUIRE(serial.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      MosaicConfig single = cfg;
      single.seed = cfg.seed ^ i;
      const auto want = mosaic_pair(tiles, single);
      CHECK(serial[i].pair.rgb == want.pair.rgb);
      CHECK(serial[i].pair.ir == want.pair.ir);
      CHECK(parallel[i].pair.rgb == want.pair.rgb);
      CHECK(parallel[i].pair.labels == want.pair.labels);
    }
  }

  TEST_CASE("arity, alignment and config errors") {
    auto tiles = four_tiles(307);
    MosaicConfig cfg;
    cfg.out_size = 32;
    CHECK_THROWS_AS(mosaic_pair(std::span(tiles).first(3), cfg), ArityError);
    tiles[2].ir = Image(5, 5, 1);
    CHECK_THROWS_AS(mosaic_pair(tiles, cfg), AlignmentError);
    auto ok = four_tiles(308);
    cfg.center_jitter = 0.6;
    CHECK_THROWS_AS(mosaic_pair(ok, cfg), ConfigError);
    ImagePair gray_rgb{Image(4, 4, 1), Image(4, 4, 1), {}};
    CHECK_THROWS_AS(check_aligned(gray_rgb), AlignmentError);
  }

  TEST_CASE("pair directories round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "cmaff_test_pair";
    std::filesystem::remove_all(dir);
    auto p = four_tiles(309)[0];
    save_pair(dir, p);
    const auto q = load_pair(dir);
    CHECK(q.rgb == p.rgb);
    CHECK(q.ir == p.ir);
    REQUIRE(q.labels.size() == p.labels.size());
    CHECK(q.labels[0].second.w == doctest::Approx(0.4));
    std::filesystem::remove_all(dir);
  }
}
