#include "cmaff/ften.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "cmaff/errors.hpp"

namespace cmaff::ften {

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'T', 'E', 'N'};
constexpr std::uint32_t kMaxDims = 16;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFFu), static_cast<char>((v >> 8) & 0xFFu),
                         static_cast<char>((v >> 16) & 0xFFu),
                         static_cast<char>((v >> 24) & 0xFFu)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in, const char* field) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw FormatError(std::string("FTEN: truncated header reading ") + field);
  }
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

std::size_t RawTensor::element_count() const {
  if (dims.empty()) return 0;
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write(std::ostream& out, const RawTensor& t) {
  if (t.dims.empty()) throw ShapeError("FTEN: tensor needs at least one dimension");
  if (t.element_count() != t.data.size()) {
    throw ShapeError("FTEN: payload length does not match dims");
  }
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  put_u32(out, kDtypeF32);
  for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw IoError("FTEN: write failed");
}

RawTensor read(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("FTEN: bad magic");
  }
  const auto version = get_u32(in, "version");
  if (version != kVersion) {
    throw FormatError("FTEN: unsupported version " + std::to_string(version));
  }
  const auto ndim = get_u32(in, "ndim");
  if (ndim == 0 || ndim > kMaxDims) {
    throw FormatError("FTEN: invalid dimension count " + std::to_string(ndim));
  }
  RawTensor t;
  t.dims.reserve(ndim);
  for (std::uint32_t i = 0; i < ndim; ++i) t.dims.push_back(get_u32(in, "dims"));
  const auto dtype = get_u32(in, "dtype");
  if (dtype != kDtypeF32) throw FormatError("FTEN: unsupported dtype " + std::to_string(dtype));

  const std::size_t n = t.element_count();
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
      throw FormatError("FTEN: payload shorter than dims require (" + std::to_string(i) +
                        " of " + std::to_string(n) + " elements)");
    }
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                               (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    t.data[i] = std::bit_cast<float>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("FTEN: trailing bytes after payload");
  }
  return t;
}

void write_file(const std::filesystem::path& path, const RawTensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write(out, t);
}

RawTensor read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

RawTensor to_raw(const FeatureMap& m) {
  return {{static_cast<std::uint32_t>(m.channels()), static_cast<std::uint32_t>(m.height()),
           static_cast<std::uint32_t>(m.width())},
          std::vector<float>(m.data().begin(), m.data().end())};
}

RawTensor to_raw(const ChannelVector& v) {
  return {{static_cast<std::uint32_t>(v.size())},
          std::vector<float>(v.data().begin(), v.data().end())};
}

FeatureMap to_feature_map(const RawTensor& t) {
  if (t.dims.size() != 3) {
    throw ShapeError("FTEN: expected a 3-d (C,H,W) tensor, got " +
                     std::to_string(t.dims.size()) + " dims");
  }
  return FeatureMap(t.dims[0], t.dims[1], t.dims[2], t.data);
}

ChannelVector to_channel_vector(const RawTensor& t) {
  if (t.dims.size() != 1) {
    throw ShapeError("FTEN: expected a 1-d tensor, got " + std::to_string(t.dims.size()) +
                     " dims");
  }
  return ChannelVector(t.data);
}

}  // namespace cmaff::ften
