#pragma once

// FTEN v1 binary tensor files:
//   "FTEN" | u32 version (=1) | u32 ndim | ndim x u32 dims | u32 dtype (0 = f32)
//   | row-major f32 payload
// All integers and floats are little-endian.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cmaff/tensor.hpp"

namespace cmaff::ften {

inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 0;

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
  friend bool operator==(const RawTensor&, const RawTensor&) = default;
};

void write(std::ostream& out, const RawTensor& t);
RawTensor read(std::istream& in);

void write_file(const std::filesystem::path& path, const RawTensor& t);
RawTensor read_file(const std::filesystem::path& path);

RawTensor to_raw(const FeatureMap& m);
RawTensor to_raw(const ChannelVector& v);

// Requires exactly 3 dims (C, H, W).
FeatureMap to_feature_map(const RawTensor& t);
// Requires exactly 1 dim.
ChannelVector to_channel_vector(const RawTensor& t);

}  // namespace cmaff::ften
