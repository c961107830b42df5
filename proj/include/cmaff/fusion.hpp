#pragma once

// Cross-modality attentive feature fusion of an RGB feature map F^R and a
// thermal feature map F^T of identical shape.
//
//   common        F^C = F^R + F^T
//   differential  F^D = F^R - F^T
//
// DEM: M_DM = sigmoid(F_SC(gap(F^D)) + F_SC(gmp(F^D))), F_SC = expand . relu . reduce
//      outputs (F^R * (1 + M_DM), F^T * (1 + M_DM))
// CSM: s = gap(F^C), h = relu(shared(s)),
//      (M_R, M_T) = per-channel softmax(branch_rgb(h), branch_ir(h))
//      outputs (F^R * M_R, F^T * M_T)
//
// Both modules are dual-input/dual-output so they can be wired in parallel or
// in sequence; see Arrangement.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "cmaff/errors.hpp"
#include "cmaff/ops.hpp"
#include "cmaff/tensor.hpp"

namespace cmaff {

inline constexpr std::size_t kDefaultDemReduction = 16;
inline constexpr std::size_t kCsmReduction = 32;

// ceil(channels / ratio), never below 1.
constexpr std::size_t bottleneck_width(std::size_t channels, std::size_t ratio) {
  const std::size_t w = (channels + ratio - 1) / ratio;
  return w == 0 ? 1 : w;
}

// ---------------------------------------------------------------------------
// Parameters

template <typename T>
class BasicDemParams {
 public:
  BasicDemParams(BasicAffineLayer<T> reduce, BasicAffineLayer<T> expand, std::size_t reduction)
      : reduce_(std::move(reduce)), expand_(std::move(expand)), reduction_(reduction) {
    if (reduction_ == 0) throw ConfigError("DemParams: reduction ratio must be positive");
    const std::size_t c = reduce_.in_dim();
    const std::size_t hidden = bottleneck_width(c, reduction_);
    if (reduce_.out_dim() != hidden || expand_.in_dim() != hidden || expand_.out_dim() != c) {
      throw ShapeError("DemParams: layers inconsistent with C=" + std::to_string(c) +
                       ", ratio=" + std::to_string(reduction_));
    }
  }

  const BasicAffineLayer<T>& reduce() const noexcept { return reduce_; }
  const BasicAffineLayer<T>& expand() const noexcept { return expand_; }
  std::size_t reduction() const noexcept { return reduction_; }
  std::size_t channels() const noexcept { return reduce_.in_dim(); }

 private:
  BasicAffineLayer<T> reduce_;
  BasicAffineLayer<T> expand_;
  std::size_t reduction_;
};

// The first layer is held once and feeds both branches.
template <typename T>
class BasicCsmParams {
 public:
  BasicCsmParams(BasicAffineLayer<T> shared, BasicAffineLayer<T> branch_rgb,
                 BasicAffineLayer<T> branch_ir)
      : shared_(std::move(shared)), branch_rgb_(std::move(branch_rgb)),
        branch_ir_(std::move(branch_ir)) {
    const std::size_t c = shared_.in_dim();
    const std::size_t hidden = bottleneck_width(c, kCsmReduction);
    if (shared_.out_dim() != hidden || branch_rgb_.in_dim() != hidden ||
        branch_rgb_.out_dim() != c || !branch_rgb_.same_shape(branch_ir_)) {
      throw ShapeError("CsmParams: layers inconsistent with C=" + std::to_string(c));
    }
  }

  const BasicAffineLayer<T>& shared() const noexcept { return shared_; }
  const BasicAffineLayer<T>& branch_rgb() const noexcept { return branch_rgb_; }
  const BasicAffineLayer<T>& branch_ir() const noexcept { return branch_ir_; }
  std::size_t channels() const noexcept { return shared_.in_dim(); }

 private:
  BasicAffineLayer<T> shared_;
  BasicAffineLayer<T> branch_rgb_;
  BasicAffineLayer<T> branch_ir_;
};

// Per-pixel 2C -> C projection used by the concatenating parallel arrangement.
// Input channel order is [DEM sum ; CSM sum].
template <typename T>
class BasicConcatReduceParams {
 public:
  explicit BasicConcatReduceParams(BasicAffineLayer<T> project) : project_(std::move(project)) {
    if (project_.in_dim() != 2 * project_.out_dim()) {
      throw ShapeError("ConcatReduceParams: projection must map 2C -> C");
    }
  }

  const BasicAffineLayer<T>& project() const noexcept { return project_; }
  std::size_t channels() const noexcept { return project_.out_dim(); }

 private:
  BasicAffineLayer<T> project_;
};

template <typename T>
class BasicCmaffParams {
 public:
  BasicCmaffParams(BasicDemParams<T> dem, BasicCsmParams<T> csm,
                   std::optional<BasicConcatReduceParams<T>> concat_reduce = std::nullopt,
                   std::uint64_t seed = 0)
      : dem_(std::move(dem)), csm_(std::move(csm)), concat_reduce_(std::move(concat_reduce)),
        seed_(seed) {
    if (dem_.channels() != csm_.channels() ||
        (concat_reduce_ && concat_reduce_->channels() != dem_.channels())) {
      throw ShapeError("CmaffParams: sub-module channel counts disagree");
    }
  }

  std::size_t channels() const noexcept { return dem_.channels(); }
  const BasicDemParams<T>& dem() const noexcept { return dem_; }
  const BasicCsmParams<T>& csm() const noexcept { return csm_; }
  const std::optional<BasicConcatReduceParams<T>>& concat_reduce() const noexcept {
    return concat_reduce_;
  }
  std::uint64_t seed() const noexcept { return seed_; }

  // All-zero weights and biases. Used for closed-form checks.
  static BasicCmaffParams zeros(std::size_t channels,
                                std::size_t dem_reduction = kDefaultDemReduction,
                                bool with_concat = false) {
    const std::size_t hd = bottleneck_width(channels, dem_reduction);
    const std::size_t hc = bottleneck_width(channels, kCsmReduction);
    using L = BasicAffineLayer<T>;
    std::optional<BasicConcatReduceParams<T>> concat;
    if (with_concat) concat.emplace(L::zeros(2 * channels, channels));
    return BasicCmaffParams(
        BasicDemParams<T>(L::zeros(channels, hd), L::zeros(hd, channels), dem_reduction),
        BasicCsmParams<T>(L::zeros(channels, hc), L::zeros(hc, channels),
                          L::zeros(hc, channels)),
        std::move(concat));
  }

  template <typename U>
  BasicCmaffParams<U> cast() const {
    std::optional<BasicConcatReduceParams<U>> concat;
    if (concat_reduce_) {
      concat.emplace(concat_reduce_->project().template cast<U>());
    }
    return BasicCmaffParams<U>(
        BasicDemParams<U>(dem_.reduce().template cast<U>(), dem_.expand().template cast<U>(),
                          dem_.reduction()),
        BasicCsmParams<U>(csm_.shared().template cast<U>(),
                          csm_.branch_rgb().template cast<U>(),
                          csm_.branch_ir().template cast<U>()),
        std::move(concat), seed_);
  }

 private:
  BasicDemParams<T> dem_;
  BasicCsmParams<T> csm_;
  std::optional<BasicConcatReduceParams<T>> concat_reduce_;
  std::uint64_t seed_;
};

using DemParams = BasicDemParams<float>;
using CsmParams = BasicCsmParams<float>;
using ConcatReduceParams = BasicConcatReduceParams<float>;
using CmaffParams = BasicCmaffParams<float>;

enum class Arrangement { Parallel, ParallelConcat, CommonFirst, DifferentialFirst };

inline constexpr Arrangement kAllArrangements[] = {
    Arrangement::Parallel, Arrangement::ParallelConcat, Arrangement::CommonFirst,
    Arrangement::DifferentialFirst};

// Command-line names: parallel, parallel-concat, csm-dem, dem-csm.
inline std::string_view to_string(Arrangement a) {
  switch (a) {
    case Arrangement::Parallel: return "parallel";
    case Arrangement::ParallelConcat: return "parallel-concat";
    case Arrangement::CommonFirst: return "csm-dem";
    case Arrangement::DifferentialFirst: return "dem-csm";
  }
  return "unknown";
}

inline Arrangement parse_arrangement(std::string_view name) {
  for (auto a : kAllArrangements) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown arrangement '" + std::string(name) +
                    "' (expected parallel, parallel-concat, csm-dem or dem-csm)");
}

// ---------------------------------------------------------------------------
// Decomposition

template <typename T>
struct Decomposition {
  BasicFeatureMap<T> common;
  BasicFeatureMap<T> differential;
};

template <typename T>
Decomposition<T> decompose(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft) {
  return {add(fr, ft), subtract(fr, ft)};
}

// A pair of per-modality streams (RGB first, thermal second).
template <typename T>
struct StreamPair {
  BasicFeatureMap<T> rgb;
  BasicFeatureMap<T> ir;

  BasicFeatureMap<T> sum() const { return add(rgb, ir); }
};

// ---------------------------------------------------------------------------
// Differential enhancive module

template <typename T>
struct DemTrace {
  BasicFeatureMap<T> differential;
  BasicChannelVector<T> pooled_avg;
  BasicChannelVector<T> pooled_max;
  std::vector<std::size_t> max_index;
  BasicChannelVector<T> hidden_avg_pre;
  BasicChannelVector<T> hidden_max_pre;
  BasicChannelVector<T> hidden_avg;
  BasicChannelVector<T> hidden_max;
  BasicChannelVector<T> mask;  // M_DM
  BasicChannelVector<T> gain;  // 1 + M_DM
};

template <typename T>
DemTrace<T> dem_trace(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                      const BasicDemParams<T>& p) {
  detail::require_same_shape(fr, ft, "dem");
  if (fr.channels() != p.channels()) {
    throw ShapeError("dem: parameters built for C=" + std::to_string(p.channels()) +
                     ", input has C=" + std::to_string(fr.channels()));
  }
  auto diff = subtract(fr, ft);
  auto pooled_avg = gap(diff);
  auto max_index = gmp_argmax(diff);
  auto pooled_max = gmp(diff);
  auto hidden_avg_pre = affine_apply(p.reduce(), pooled_avg);
  auto hidden_max_pre = affine_apply(p.reduce(), pooled_max);
  auto hidden_avg = relu(hidden_avg_pre);
  auto hidden_max = relu(hidden_max_pre);
  auto z = add(affine_apply(p.expand(), hidden_avg), affine_apply(p.expand(), hidden_max));
  auto mask = sigmoid(z);
  std::vector<T> gain(mask.size());
  for (std::size_t c = 0; c < gain.size(); ++c) gain[c] = T(1) + mask[c];
  return {std::move(diff),           std::move(pooled_avg), std::move(pooled_max),
          std::move(max_index),      std::move(hidden_avg_pre), std::move(hidden_max_pre),
          std::move(hidden_avg),     std::move(hidden_max), std::move(mask),
          BasicChannelVector<T>(std::move(gain))};
}

template <typename T>
BasicChannelVector<T> dem_attention(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                                    const BasicDemParams<T>& p) {
  return dem_trace(fr, ft, p).mask;
}

template <typename T>
StreamPair<T> dem_forward(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                          const BasicDemParams<T>& p) {
  const auto trace = dem_trace(fr, ft, p);
  return {channel_mul(fr, trace.gain), channel_mul(ft, trace.gain)};
}

// ---------------------------------------------------------------------------
// Common selective module

template <typename T>
struct CsmTrace {
  BasicFeatureMap<T> common;
  BasicChannelVector<T> pooled;
  BasicChannelVector<T> hidden_pre;
  BasicChannelVector<T> hidden;
  BasicChannelVector<T> logits_rgb;
  BasicChannelVector<T> logits_ir;
  BasicChannelVector<T> mask_rgb;
  BasicChannelVector<T> mask_ir;
};

template <typename T>
CsmTrace<T> csm_trace(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                      const BasicCsmParams<T>& p) {
  detail::require_same_shape(fr, ft, "csm");
  if (fr.channels() != p.channels()) {
    throw ShapeError("csm: parameters built for C=" + std::to_string(p.channels()) +
                     ", input has C=" + std::to_string(fr.channels()));
  }
  auto common = add(fr, ft);
  auto pooled = gap(common);
  auto hidden_pre = affine_apply(p.shared(), pooled);
  auto hidden = relu(hidden_pre);
  auto logits_rgb = affine_apply(p.branch_rgb(), hidden);
  auto logits_ir = affine_apply(p.branch_ir(), hidden);
  auto [mask_rgb, mask_ir] = softmax_pair(logits_rgb, logits_ir);
  return {std::move(common),     std::move(pooled),    std::move(hidden_pre),
          std::move(hidden),     std::move(logits_rgb), std::move(logits_ir),
          std::move(mask_rgb),   std::move(mask_ir)};
}

template <typename T>
std::pair<BasicChannelVector<T>, BasicChannelVector<T>> csm_attention(
    const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft, const BasicCsmParams<T>& p) {
  auto trace = csm_trace(fr, ft, p);
  return {std::move(trace.mask_rgb), std::move(trace.mask_ir)};
}

template <typename T>
StreamPair<T> csm_forward(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                          const BasicCsmParams<T>& p) {
  const auto trace = csm_trace(fr, ft, p);
  return {channel_mul(fr, trace.mask_rgb), channel_mul(ft, trace.mask_ir)};
}

// ---------------------------------------------------------------------------
// Concatenation + per-pixel projection

template <typename T>
BasicFeatureMap<T> concat_project(const BasicFeatureMap<T>& dem_sum,
                                  const BasicFeatureMap<T>& csm_sum,
                                  const BasicConcatReduceParams<T>& p) {
  detail::require_same_shape(dem_sum, csm_sum, "concat_project");
  const std::size_t c = dem_sum.channels();
  if (p.channels() != c) throw ShapeError("concat_project: projection channel mismatch");
  const std::size_t hw = dem_sum.spatial_size();
  const auto& w = p.project();
  auto d = dem_sum.data();
  auto s = csm_sum.data();
  std::vector<T> out(c * hw);
  for (std::size_t oc = 0; oc < c; ++oc) {
    for (std::size_t i = 0; i < hw; ++i) {
      double acc = static_cast<double>(w.bias()[oc]);
      for (std::size_t k = 0; k < c; ++k) {
        acc += static_cast<double>(w.weight(oc, k)) * static_cast<double>(d[k * hw + i]);
      }
      for (std::size_t k = 0; k < c; ++k) {
        acc += static_cast<double>(w.weight(oc, c + k)) * static_cast<double>(s[k * hw + i]);
      }
      out[oc * hw + i] = static_cast<T>(acc);
    }
  }
  return BasicFeatureMap<T>(c, dem_sum.height(), dem_sum.width(), std::move(out));
}

// ---------------------------------------------------------------------------
// Fusion

template <typename T>
struct FuseResult {
  BasicFeatureMap<T> output;
  BasicChannelVector<T> dem_mask;  // M_DM of the DEM stage
  BasicChannelVector<T> csm_rgb;   // M_CM^R of the CSM stage
  BasicChannelVector<T> csm_ir;    // M_CM^T of the CSM stage
};

// Fusion together with the attention vectors it used. In sequential
// arrangements the second stage's masks are computed from the first stage's
// outputs.
template <typename T>
FuseResult<T> fuse_detailed(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                            const BasicCmaffParams<T>& p, Arrangement a) {
  detail::require_same_shape(fr, ft, "fuse");
  if (a == Arrangement::ParallelConcat && !p.concat_reduce()) {
    throw ConfigError("fuse: parallel-concat arrangement requires concat_reduce parameters");
  }
  switch (a) {
    case Arrangement::Parallel:
    case Arrangement::ParallelConcat: {
      const auto dt = dem_trace(fr, ft, p.dem());
      const auto ct = csm_trace(fr, ft, p.csm());
      const StreamPair<T> dem{channel_mul(fr, dt.gain), channel_mul(ft, dt.gain)};
      const StreamPair<T> csm{channel_mul(fr, ct.mask_rgb), channel_mul(ft, ct.mask_ir)};
      auto out = a == Arrangement::Parallel
                     ? add(dem.sum(), csm.sum())
                     : concat_project(dem.sum(), csm.sum(), *p.concat_reduce());
      return {std::move(out), dt.mask, ct.mask_rgb, ct.mask_ir};
    }
    case Arrangement::CommonFirst: {
      const auto ct = csm_trace(fr, ft, p.csm());
      const StreamPair<T> csm{channel_mul(fr, ct.mask_rgb), channel_mul(ft, ct.mask_ir)};
      const auto dt = dem_trace(csm.rgb, csm.ir, p.dem());
      const StreamPair<T> dem{channel_mul(csm.rgb, dt.gain), channel_mul(csm.ir, dt.gain)};
      return {dem.sum(), dt.mask, ct.mask_rgb, ct.mask_ir};
    }
    case Arrangement::DifferentialFirst: {
      const auto dt = dem_trace(fr, ft, p.dem());
      const StreamPair<T> dem{channel_mul(fr, dt.gain), channel_mul(ft, dt.gain)};
      const auto ct = csm_trace(dem.rgb, dem.ir, p.csm());
      const StreamPair<T> csm{channel_mul(dem.rgb, ct.mask_rgb),
                              channel_mul(dem.ir, ct.mask_ir)};
      return {csm.sum(), dt.mask, ct.mask_rgb, ct.mask_ir};
    }
  }
  throw ConfigError("fuse: unknown arrangement");
}

template <typename T>
BasicFeatureMap<T> fuse(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                        const BasicCmaffParams<T>& p, Arrangement a) {
  return fuse_detailed(fr, ft, p, a).output;
}

// ---------------------------------------------------------------------------
// Adjoints

template <typename T>
struct DemGradient {
  BasicFeatureMap<T> rgb;
  BasicFeatureMap<T> ir;
  BasicDemParams<T> params;
};

template <typename T>
struct CsmGradient {
  BasicFeatureMap<T> rgb;
  BasicFeatureMap<T> ir;
  BasicCsmParams<T> params;
};

// Gradient of <grad_rgb, out.rgb> + <grad_ir, out.ir> for (out.rgb, out.ir) = dem_forward(fr, ft).
template <typename T>
DemGradient<T> dem_backward(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                            const BasicDemParams<T>& p, const BasicFeatureMap<T>& grad_rgb,
                            const BasicFeatureMap<T>& grad_ir) {
  const auto t = dem_trace(fr, ft, p);
  auto [g_fr, g_gain_r] = channel_mul_backward(fr, t.gain, grad_rgb);
  auto [g_ft, g_gain_t] = channel_mul_backward(ft, t.gain, grad_ir);
  // d(1 + M)/dM = 1; both logit paths receive the same gradient since z = z1 + z2.
  const auto g_z = sigmoid_backward(t.mask, add(g_gain_r, g_gain_t));

  const auto exp_avg = affine_backward(p.expand(), t.hidden_avg, g_z);
  const auto exp_max = affine_backward(p.expand(), t.hidden_max, g_z);
  const auto red_avg =
      affine_backward(p.reduce(), t.pooled_avg, relu_backward(t.hidden_avg_pre, exp_avg.input));
  const auto red_max =
      affine_backward(p.reduce(), t.pooled_max, relu_backward(t.hidden_max_pre, exp_max.input));

  const auto g_diff = add(gap_backward(red_avg.input, fr.height(), fr.width()),
                          gmp_backward(red_max.input, t.max_index, fr.height(), fr.width()));
  return {add(g_fr, g_diff), subtract(g_ft, g_diff),
          BasicDemParams<T>(add(red_avg.layer, red_max.layer), add(exp_avg.layer, exp_max.layer),
                            p.reduction())};
}

template <typename T>
CsmGradient<T> csm_backward(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                            const BasicCsmParams<T>& p, const BasicFeatureMap<T>& grad_rgb,
                            const BasicFeatureMap<T>& grad_ir) {
  const auto t = csm_trace(fr, ft, p);
  auto [g_fr, g_mask_r] = channel_mul_backward(fr, t.mask_rgb, grad_rgb);
  auto [g_ft, g_mask_t] = channel_mul_backward(ft, t.mask_ir, grad_ir);
  const auto [g_z_r, g_z_t] = softmax_pair_backward(t.mask_rgb, t.mask_ir, g_mask_r, g_mask_t);

  const auto br = affine_backward(p.branch_rgb(), t.hidden, g_z_r);
  const auto bi = affine_backward(p.branch_ir(), t.hidden, g_z_t);
  const auto sh =
      affine_backward(p.shared(), t.pooled, relu_backward(t.hidden_pre, add(br.input, bi.input)));
  const auto g_common = gap_backward(sh.input, fr.height(), fr.width());
  return {add(g_fr, g_common), add(g_ft, g_common),
          BasicCsmParams<T>(sh.layer, br.layer, bi.layer)};
}

template <typename T>
struct FuseGradient {
  BasicFeatureMap<T> rgb;
  BasicFeatureMap<T> ir;
  BasicCmaffParams<T> params;  // zero for sub-modules the arrangement does not use
};

template <typename T>
struct ConcatGradient {
  BasicFeatureMap<T> dem_sum;
  BasicFeatureMap<T> csm_sum;
  BasicConcatReduceParams<T> params;
};

template <typename T>
ConcatGradient<T> concat_project_backward(const BasicFeatureMap<T>& dem_sum,
                                          const BasicFeatureMap<T>& csm_sum,
                                          const BasicConcatReduceParams<T>& p,
                                          const BasicFeatureMap<T>& grad_out) {
  detail::require_same_shape(dem_sum, grad_out, "concat_project_backward");
  const std::size_t c = dem_sum.channels();
  const std::size_t hw = dem_sum.spatial_size();
  const auto& w = p.project();
  auto d = dem_sum.data();
  auto s = csm_sum.data();
  auto g = grad_out.data();
  std::vector<T> gw(2 * c * c);
  std::vector<T> gb(c);
  for (std::size_t oc = 0; oc < c; ++oc) {
    double acc_b = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc_b += static_cast<double>(g[oc * hw + i]);
    gb[oc] = static_cast<T>(acc_b);
    for (std::size_t k = 0; k < c; ++k) {
      double acc_d = 0.0;
      double acc_s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        acc_d += static_cast<double>(g[oc * hw + i]) * static_cast<double>(d[k * hw + i]);
        acc_s += static_cast<double>(g[oc * hw + i]) * static_cast<double>(s[k * hw + i]);
      }
      gw[oc * 2 * c + k] = static_cast<T>(acc_d);
      gw[oc * 2 * c + c + k] = static_cast<T>(acc_s);
    }
  }
  std::vector<T> gd(c * hw);
  std::vector<T> gs(c * hw);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < hw; ++i) {
      double acc_d = 0.0;
      double acc_s = 0.0;
      for (std::size_t oc = 0; oc < c; ++oc) {
        acc_d += static_cast<double>(w.weight(oc, k)) * static_cast<double>(g[oc * hw + i]);
        acc_s += static_cast<double>(w.weight(oc, c + k)) * static_cast<double>(g[oc * hw + i]);
      }
      gd[k * hw + i] = static_cast<T>(acc_d);
      gs[k * hw + i] = static_cast<T>(acc_s);
    }
  }
  return {BasicFeatureMap<T>(c, dem_sum.height(), dem_sum.width(), std::move(gd)),
          BasicFeatureMap<T>(c, dem_sum.height(), dem_sum.width(), std::move(gs)),
          BasicConcatReduceParams<T>(
              BasicAffineLayer<T>(2 * c, c, std::move(gw), std::move(gb)))};
}

// Gradient of <upstream, fuse(fr, ft, p, a)> with respect to both inputs and
// every parameter of p.
template <typename T>
FuseGradient<T> fuse_backward(const BasicFeatureMap<T>& fr, const BasicFeatureMap<T>& ft,
                              const BasicCmaffParams<T>& p, Arrangement a,
                              const BasicFeatureMap<T>& upstream) {
  detail::require_same_shape(fr, ft, "fuse_backward");
  detail::require_same_shape(fr, upstream, "fuse_backward");
  if (a == Arrangement::ParallelConcat && !p.concat_reduce()) {
    throw ConfigError("fuse_backward: parallel-concat arrangement requires concat_reduce");
  }
  const auto zero = BasicCmaffParams<T>::zeros(p.channels(), p.dem().reduction(),
                                               p.concat_reduce().has_value());
  auto concat_grad = zero.concat_reduce();

  auto assemble = [&](BasicFeatureMap<T> g_fr, BasicFeatureMap<T> g_ft, BasicDemParams<T> dem,
                      BasicCsmParams<T> csm) {
    return FuseGradient<T>{std::move(g_fr), std::move(g_ft),
                           BasicCmaffParams<T>(std::move(dem), std::move(csm),
                                               std::move(concat_grad), p.seed())};
  };

  switch (a) {
    case Arrangement::Parallel:
    case Arrangement::ParallelConcat: {
      BasicFeatureMap<T> g_dem_sum = upstream;
      BasicFeatureMap<T> g_csm_sum = upstream;
      if (a == Arrangement::ParallelConcat) {
        const auto dem = dem_forward(fr, ft, p.dem());
        const auto csm = csm_forward(fr, ft, p.csm());
        auto cg = concat_project_backward(dem.sum(), csm.sum(), *p.concat_reduce(), upstream);
        g_dem_sum = std::move(cg.dem_sum);
        g_csm_sum = std::move(cg.csm_sum);
        concat_grad.emplace(std::move(cg.params));
      }
      auto dg = dem_backward(fr, ft, p.dem(), g_dem_sum, g_dem_sum);
      auto cg = csm_backward(fr, ft, p.csm(), g_csm_sum, g_csm_sum);
      return assemble(add(dg.rgb, cg.rgb), add(dg.ir, cg.ir), std::move(dg.params),
                      std::move(cg.params));
    }
    case Arrangement::CommonFirst: {
      const auto csm = csm_forward(fr, ft, p.csm());
      auto dg = dem_backward(csm.rgb, csm.ir, p.dem(), upstream, upstream);
      auto cg = csm_backward(fr, ft, p.csm(), dg.rgb, dg.ir);
      return assemble(std::move(cg.rgb), std::move(cg.ir), std::move(dg.params),
                      std::move(cg.params));
    }
    case Arrangement::DifferentialFirst: {
      const auto dem = dem_forward(fr, ft, p.dem());
      auto cg = csm_backward(dem.rgb, dem.ir, p.csm(), upstream, upstream);
      auto dg = dem_backward(fr, ft, p.dem(), cg.rgb, cg.ir);
      return assemble(std::move(dg.rgb), std::move(dg.ir), std::move(dg.params),
                      std::move(cg.params));
    }
  }
  throw ConfigError("fuse_backward: unknown arrangement");
}

}  // namespace cmaff
