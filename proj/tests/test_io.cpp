#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "cmaff/errors.hpp"
#include "cmaff/ften.hpp"
#include "cmaff/image.hpp"
#include "test_support.hpp"

using namespace cmaff;

namespace {

std::string encode(const ften::RawTensor& t) {
  std::ostringstream out(std::ios::binary);
  ften::write(out, t);
  return out.str();
}

ften::RawTensor decode(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return ften::read(in);
}

}  // namespace

TEST_SUITE("ften") {
  TEST_CASE("byte layout of a small tensor") {
    const ften::RawTensor t{{2}, {1.0f, -2.0f}};
    const auto b = encode(t);
    REQUIRE(b.size() == 4 + 4 + 4 + 4 + 4 + 8);
    CHECK(b.substr(0, 4) == "FTEN");
    CHECK(b[4] == 1);
    CHECK(b[8] == 1);
    CHECK(b[12] == 2);
    CHECK(b[16] == 0);
    // 1.0f is 0x3F800000, stored little-endian.
    CHECK(static_cast<unsigned char>(b[23]) == 0x3F);
    CHECK(static_cast<unsigned char>(b[22]) == 0x80);
  }

  TEST_CASE("round trip is bit exact for random maps") {
    std::mt19937_64 rng(401);
    for (int t = 0; t < 50; ++t) {
      const auto m = cmaff::testing::random_map<float>(rng, 1 + rng() % 6, 1 + rng() % 7,
                                                       1 + rng() % 7, -1e3, 1e3);
      const auto back = ften::to_feature_map(decode(encode(ften::to_raw(m))));
      CHECK(back == m);
    }
    const ChannelVector v({0.25f, -0.0f, 3.5e-20f});
    const auto vb = ften::to_channel_vector(decode(encode(ften::to_raw(v))));
    CHECK(std::memcmp(vb.data().data(), v.data().data(), 3 * sizeof(float)) == 0);
  }

  TEST_CASE("malformed files are rejected") {
    const auto good = encode(ften::RawTensor{{2, 1, 1}, {1.0f, 2.0f}});
    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode(bad_magic), FormatError);
    auto bad_version = good;
    bad_version[4] = 2;
    CHECK_THROWS_AS(decode(bad_version), FormatError);
    auto bad_dtype = good;
    bad_dtype[24] = 1;
    CHECK_THROWS_AS(decode(bad_dtype), FormatError);
    CHECK_THROWS_AS(decode(good.substr(0, good.size() - 1)), FormatError);
    CHECK_THROWS_AS(decode(good + "x"), FormatError);
    CHECK_THROWS_AS(decode(good.substr(0, 10)), FormatError);
    CHECK_THROWS_AS(decode(""), FormatError);
  }

  TEST_CASE("shape conversions and write errors") {
    const ften::RawTensor flat{{4}, {1, 2, 3, 4}};
    CHECK_THROWS_AS(ften::to_feature_map(flat), ShapeError);
    CHECK_THROWS_AS(ften::to_channel_vector(ften::RawTensor{{2, 2}, {1, 2, 3, 4}}), ShapeError);
    std::ostringstream sink;
    CHECK_THROWS_AS(ften::write(sink, ften::RawTensor{{3}, {1, 2}}), ShapeError);
    const ften::RawTensor nan_map{{1, 1, 1}, {std::nanf("")}};
    CHECK_THROWS_AS(ften::to_feature_map(decode(encode(nan_map))), NumericError);
  }

  TEST_CASE("file helpers") {
    const auto path = std::filesystem::temp_directory_path() / "cmaff_test.ften";
    const ften::RawTensor t{{1, 2, 2}, {1, 2, 3, 4}};
    ften::write_file(path, t);
    CHECK(ften::read_file(path) == t);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(ften::read_file(path), IoError);
  }
}

TEST_SUITE("pnm") {
  TEST_CASE("round trip for gray and color") {
    std::mt19937_64 rng(402);
    for (std::size_t ch : {std::size_t{1}, std::size_t{3}}) {
      std::vector<std::uint8_t> px(7 * 5 * ch);
      for (auto& p : px) p = static_cast<std::uint8_t>(rng());
      const Image img(7, 5, ch, px);
      std::ostringstream out(std::ios::binary);
      write_pnm(out, img);
      std::istringstream in(out.str(), std::ios::binary);
      CHECK(read_pnm(in) == img);
    }
  }

  TEST_CASE("header comments and errors") {
    std::istringstream commented(std::string("P5\n# made by hand\n2 1\n255\n") + "\x01\x02",
                                 std::ios::binary);
    const auto img = read_pnm(commented);
    CHECK(img.width() == 2);
    CHECK(img.at(0, 1) == 2);
    std::istringstream p3("P3\n1 1\n255\n0 0 0\n");
    CHECK_THROWS_AS(read_pnm(p3), FormatError);
    std::istringstream deep("P5\n1 1\n65535\n\x01\x02");
    CHECK_THROWS_AS(read_pnm(deep), FormatError);
    std::istringstream truncated("P6\n2 2\n255\nabc");
    CHECK_THROWS_AS(read_pnm(truncated), FormatError);
  }

  TEST_CASE("heatmap normalization") {
    const std::vector<float> v{0.0f, 1.0f, 2.0f, 4.0f};
    const auto img = render_heatmap(v, 2, 2);
    CHECK(img.at(0, 0) == 0);
    CHECK(img.at(1, 1) == 255);
    CHECK(img.at(0, 1) == 64);
    const std::vector<float> flat(6, 3.0f);
    const auto gray = render_heatmap(flat, 3, 2);
    for (auto p : gray.pixels()) CHECK(p == 128);
    CHECK_THROWS_AS(render_heatmap(v, 3, 2), ShapeError);
  }
}
