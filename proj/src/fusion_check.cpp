#include "cmaff/fusion_check.hpp"

#include <random>
#include <vector>

#include "cmaff/params.hpp"

namespace cmaff {

namespace {

using MapD = BasicFeatureMap<double>;
using ParamsD = BasicCmaffParams<double>;

std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return v;
}

double contract(const MapD& a, const MapD& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

}  // namespace

FuseCheckResult check_fuse_gradients(Arrangement arrangement, std::uint64_t seed,
                                     const FuseCheckConfig& cfg) {
  const std::size_t c = cfg.channels;
  const std::size_t h = cfg.height;
  const std::size_t w = cfg.width;
  const std::size_t n = c * h * w;
  std::mt19937_64 rng(seed);

  const MapD fr(c, h, w, uniform_vector(rng, n, -1.0, 1.0));
  const MapD ft(c, h, w, uniform_vector(rng, n, -1.0, 1.0));
  const MapD upstream(c, h, w, uniform_vector(rng, n, -1.0, 1.0));
  const bool with_concat = arrangement == Arrangement::ParallelConcat;
  const ParamsD layout = init_params(c, cfg.dem_reduction, seed, with_concat).cast<double>();
  const auto pvec = uniform_vector(rng, enumerate_param_count(layout), -0.8, 0.8);
  const ParamsD params = unflatten<double>(layout, pvec);

  // Point layout: [fr | ft | params].
  std::vector<double> x0;
  x0.reserve(2 * n + pvec.size());
  x0.insert(x0.end(), fr.data().begin(), fr.data().end());
  x0.insert(x0.end(), ft.data().begin(), ft.data().end());
  x0.insert(x0.end(), pvec.begin(), pvec.end());

  auto loss = [&](std::span<const double> x) {
    const MapD a(c, h, w, std::vector<double>(x.begin(), x.begin() + n));
    const MapD b(c, h, w, std::vector<double>(x.begin() + n, x.begin() + 2 * n));
    const auto p = unflatten<double>(layout, x.subspan(2 * n));
    return contract(upstream, fuse(a, b, p, arrangement));
  };

  const auto grad = fuse_backward(fr, ft, params, arrangement, upstream);
  std::vector<double> analytic;
  analytic.reserve(x0.size());
  analytic.insert(analytic.end(), grad.rgb.data().begin(), grad.rgb.data().end());
  analytic.insert(analytic.end(), grad.ir.data().begin(), grad.ir.data().end());
  const auto gp = flatten(grad.params);
  analytic.insert(analytic.end(), gp.begin(), gp.end());
  if (cfg.corrupt_adjoint) analytic[0] += 1.0;

  const auto result = grad_check(loss, x0, analytic, cfg.step);
  return {result.max_rel_error, x0.size()};
}

}  // namespace cmaff
