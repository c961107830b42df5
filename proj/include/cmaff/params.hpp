#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cmaff/fusion.hpp"

namespace cmaff {

// Closed-form scalar parameter count (weights + biases) of one fusion block.
constexpr std::size_t param_count(std::size_t channels,
                                  std::size_t dem_reduction = kDefaultDemReduction,
                                  bool use_concat = false) {
  const std::size_t c = channels;
  const std::size_t hd = bottleneck_width(c, dem_reduction);
  const std::size_t hc = bottleneck_width(c, kCsmReduction);
  const std::size_t dem = (c * hd + hd) + (hd * c + c);
  const std::size_t csm = (c * hc + hc) + 2 * (hc * c + c);
  const std::size_t concat = use_concat ? (2 * c * c + c) : 0;
  return dem + csm + concat;
}

template <typename T>
struct NamedBuffer {
  std::string name;
  std::vector<std::uint32_t> dims;  // weights: {out, in}; biases: {out}
  std::span<const T> data;
};

namespace detail {

template <typename T>
void push_layer(std::vector<NamedBuffer<T>>& out, const std::string& prefix,
                const BasicAffineLayer<T>& l) {
  out.push_back({prefix + ".w",
                 {static_cast<std::uint32_t>(l.out_dim()), static_cast<std::uint32_t>(l.in_dim())},
                 l.weights()});
  out.push_back({prefix + ".b", {static_cast<std::uint32_t>(l.out_dim())}, l.bias()});
}

template <typename T>
BasicAffineLayer<T> take_layer(std::span<const T>& values, std::size_t in, std::size_t out) {
  if (values.size() < in * out + out) throw ShapeError("unflatten: parameter vector too short");
  std::vector<T> w(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(in * out));
  values = values.subspan(in * out);
  std::vector<T> b(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(out));
  values = values.subspan(out);
  return BasicAffineLayer<T>(in, out, std::move(w), std::move(b));
}

}  // namespace detail

// Every parameter buffer in canonical order: dem.reduce.{w,b}, dem.expand.{w,b},
// csm.shared.{w,b}, csm.rgb.{w,b}, csm.ir.{w,b}, then concat.{w,b} if present.
// The spans alias p and are valid for its lifetime.
template <typename T>
std::vector<NamedBuffer<T>> parameter_buffers(const BasicCmaffParams<T>& p) {
  std::vector<NamedBuffer<T>> out;
  detail::push_layer(out, "dem.reduce", p.dem().reduce());
  detail::push_layer(out, "dem.expand", p.dem().expand());
  detail::push_layer(out, "csm.shared", p.csm().shared());
  detail::push_layer(out, "csm.rgb", p.csm().branch_rgb());
  detail::push_layer(out, "csm.ir", p.csm().branch_ir());
  if (p.concat_reduce()) detail::push_layer(out, "concat", p.concat_reduce()->project());
  return out;
}

// Count obtained by walking the constructed buffers.
template <typename T>
std::size_t enumerate_param_count(const BasicCmaffParams<T>& p) {
  std::size_t n = 0;
  for (const auto& b : parameter_buffers(p)) n += b.data.size();
  return n;
}

// All parameters concatenated in canonical order.
template <typename T>
std::vector<T> flatten(const BasicCmaffParams<T>& p) {
  std::vector<T> out;
  for (const auto& b : parameter_buffers(p)) out.insert(out.end(), b.data.begin(), b.data.end());
  return out;
}

// Inverse of flatten: rebuilds parameters with the layout of `like`.
template <typename T>
BasicCmaffParams<T> unflatten(const BasicCmaffParams<T>& like, std::span<const T> values) {
  const std::size_t c = like.channels();
  const std::size_t hd = bottleneck_width(c, like.dem().reduction());
  const std::size_t hc = bottleneck_width(c, kCsmReduction);
  auto reduce = detail::take_layer(values, c, hd);
  auto expand = detail::take_layer(values, hd, c);
  auto shared = detail::take_layer(values, c, hc);
  auto rgb = detail::take_layer(values, hc, c);
  auto ir = detail::take_layer(values, hc, c);
  std::optional<BasicConcatReduceParams<T>> concat;
  if (like.concat_reduce()) concat.emplace(detail::take_layer(values, 2 * c, c));
  if (!values.empty()) throw ShapeError("unflatten: parameter vector too long");
  return BasicCmaffParams<T>(BasicDemParams<T>(std::move(reduce), std::move(expand),
                                               like.dem().reduction()),
                             BasicCsmParams<T>(std::move(shared), std::move(rgb), std::move(ir)),
                             std::move(concat), like.seed());
}

// Seeded initialization: weights uniform in +-sqrt(6 / (in + out)), biases zero.
// Buffers are drawn in canonical order from one mt19937_64 stream, so equal
// arguments give bit-identical parameters on every platform.
CmaffParams init_params(std::size_t channels, std::size_t dem_reduction = kDefaultDemReduction,
                        std::uint64_t seed = 0, bool with_concat = false);

// Writes <dir>/manifest.txt plus one FTEN file per buffer. The manifest holds
// "# reduction <r>" and "# seed <s>" header lines followed by one
// "<name> <file>" line per buffer in canonical order. Returns the manifest path.
std::filesystem::path write_bundle(const std::filesystem::path& dir, const CmaffParams& p);

// Reads a manifest written by write_bundle. File names resolve relative to the
// manifest's directory. Names must appear in canonical order.
CmaffParams read_bundle(const std::filesystem::path& manifest);

}  // namespace cmaff
