#pragma once

// Forward primitives and their hand-derived adjoints. Every function is pure;
// reductions accumulate in double regardless of the storage type.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cmaff/errors.hpp"
#include "cmaff/tensor.hpp"

namespace cmaff {

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

template <typename T>
void require_same_shape(const BasicFeatureMap<T>& a, const BasicFeatureMap<T>& b,
                        const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.channels()) +
                     "x" + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                     " vs " + std::to_string(b.channels()) + "x" +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + ")");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise map arithmetic

template <typename T>
BasicFeatureMap<T> add(const BasicFeatureMap<T>& a, const BasicFeatureMap<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return BasicFeatureMap<T>(a.channels(), a.height(), a.width(), std::move(out));
}

template <typename T>
BasicFeatureMap<T> subtract(const BasicFeatureMap<T>& a, const BasicFeatureMap<T>& b) {
  detail::require_same_shape(a, b, "subtract");
  std::vector<T> out(a.size());
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  return BasicFeatureMap<T>(a.channels(), a.height(), a.width(), std::move(out));
}

template <typename T>
BasicFeatureMap<T> scale(const BasicFeatureMap<T>& a, T factor) {
  std::vector<T> out(a.size());
  auto da = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * factor;
  return BasicFeatureMap<T>(a.channels(), a.height(), a.width(), std::move(out));
}

// out[c, y, x] = m[c, y, x] * gains[c]
template <typename T>
BasicFeatureMap<T> channel_mul(const BasicFeatureMap<T>& m, const BasicChannelVector<T>& gains) {
  detail::require_same_length(m.channels(), gains.size(), "channel_mul");
  const std::size_t hw = m.spatial_size();
  std::vector<T> out(m.size());
  auto d = m.data();
  for (std::size_t c = 0; c < m.channels(); ++c) {
    const T g = gains[c];
    for (std::size_t i = 0; i < hw; ++i) out[c * hw + i] = d[c * hw + i] * g;
  }
  return BasicFeatureMap<T>(m.channels(), m.height(), m.width(), std::move(out));
}

// Adjoint of channel_mul: returns (d/dm, d/dgains).
template <typename T>
std::pair<BasicFeatureMap<T>, BasicChannelVector<T>> channel_mul_backward(
    const BasicFeatureMap<T>& m, const BasicChannelVector<T>& gains,
    const BasicFeatureMap<T>& grad_out) {
  detail::require_same_shape(m, grad_out, "channel_mul_backward");
  const std::size_t hw = m.spatial_size();
  std::vector<T> grad_m(m.size());
  std::vector<T> grad_g(m.channels());
  auto d = m.data();
  auto g = grad_out.data();
  for (std::size_t c = 0; c < m.channels(); ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      grad_m[c * hw + i] = g[c * hw + i] * gains[c];
      acc += static_cast<double>(g[c * hw + i]) * static_cast<double>(d[c * hw + i]);
    }
    grad_g[c] = static_cast<T>(acc);
  }
  return {BasicFeatureMap<T>(m.channels(), m.height(), m.width(), std::move(grad_m)),
          BasicChannelVector<T>(std::move(grad_g))};
}

// ---------------------------------------------------------------------------
// Pooling

template <typename T>
BasicChannelVector<T> gap(const BasicFeatureMap<T>& m) {
  const std::size_t hw = m.spatial_size();
  std::vector<T> out(m.channels());
  for (std::size_t c = 0; c < m.channels(); ++c) {
    double acc = 0.0;
    for (T v : m.channel(c)) acc += static_cast<double>(v);
    out[c] = static_cast<T>(acc / static_cast<double>(hw));
  }
  return BasicChannelVector<T>(std::move(out));
}

template <typename T>
BasicFeatureMap<T> gap_backward(const BasicChannelVector<T>& grad, std::size_t height,
                                std::size_t width) {
  const std::size_t hw = height * width;
  std::vector<T> out(grad.size() * hw);
  for (std::size_t c = 0; c < grad.size(); ++c) {
    const T g = static_cast<T>(static_cast<double>(grad[c]) / static_cast<double>(hw));
    for (std::size_t i = 0; i < hw; ++i) out[c * hw + i] = g;
  }
  return BasicFeatureMap<T>(grad.size(), height, width, std::move(out));
}

// Flat spatial index of each channel's maximum; ties resolve to the first.
template <typename T>
std::vector<std::size_t> gmp_argmax(const BasicFeatureMap<T>& m) {
  std::vector<std::size_t> idx(m.channels(), 0);
  for (std::size_t c = 0; c < m.channels(); ++c) {
    auto ch = m.channel(c);
    for (std::size_t i = 1; i < ch.size(); ++i) {
      if (ch[i] > ch[idx[c]]) idx[c] = i;
    }
  }
  return idx;
}

template <typename T>
BasicChannelVector<T> gmp(const BasicFeatureMap<T>& m) {
  const auto idx = gmp_argmax(m);
  std::vector<T> out(m.channels());
  for (std::size_t c = 0; c < m.channels(); ++c) out[c] = m.channel(c)[idx[c]];
  return BasicChannelVector<T>(std::move(out));
}

// Routes each channel's gradient to the position that produced the maximum.
template <typename T>
BasicFeatureMap<T> gmp_backward(const BasicChannelVector<T>& grad,
                                const std::vector<std::size_t>& argmax, std::size_t height,
                                std::size_t width) {
  detail::require_same_length(grad.size(), argmax.size(), "gmp_backward");
  const std::size_t hw = height * width;
  std::vector<T> out(grad.size() * hw, T(0));
  for (std::size_t c = 0; c < grad.size(); ++c) out[c * hw + argmax[c]] = grad[c];
  return BasicFeatureMap<T>(grad.size(), height, width, std::move(out));
}

// ---------------------------------------------------------------------------
// Activations

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
BasicChannelVector<T> sigmoid(const BasicChannelVector<T>& v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid_scalar(v[i]);
  return BasicChannelVector<T>(std::move(out));
}

// Takes the forward output, not the input.
template <typename T>
BasicChannelVector<T> sigmoid_backward(const BasicChannelVector<T>& out,
                                       const BasicChannelVector<T>& grad_out) {
  detail::require_same_length(out.size(), grad_out.size(), "sigmoid_backward");
  std::vector<T> g(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) g[i] = grad_out[i] * out[i] * (T(1) - out[i]);
  return BasicChannelVector<T>(std::move(g));
}

template <typename T>
BasicChannelVector<T> relu(const BasicChannelVector<T>& v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > T(0) ? v[i] : T(0);
  return BasicChannelVector<T>(std::move(out));
}

template <typename T>
BasicChannelVector<T> relu_backward(const BasicChannelVector<T>& input,
                                    const BasicChannelVector<T>& grad_out) {
  detail::require_same_length(input.size(), grad_out.size(), "relu_backward");
  std::vector<T> g(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > T(0) ? grad_out[i] : T(0);
  return BasicChannelVector<T>(std::move(g));
}

// Two-way softmax applied independently at every channel: the pair
// (a[c], b[c]) is normalized so that out_a[c] + out_b[c] = 1.
template <typename T>
std::pair<BasicChannelVector<T>, BasicChannelVector<T>> softmax_pair(
    const BasicChannelVector<T>& a, const BasicChannelVector<T>& b) {
  detail::require_same_length(a.size(), b.size(), "softmax_pair");
  std::vector<T> oa(a.size());
  std::vector<T> ob(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    const T m = a[c] > b[c] ? a[c] : b[c];
    const T ea = std::exp(a[c] - m);
    const T eb = std::exp(b[c] - m);
    const T denom = ea + eb;
    oa[c] = ea / denom;
    ob[c] = eb / denom;
  }
  return {BasicChannelVector<T>(std::move(oa)), BasicChannelVector<T>(std::move(ob))};
}

// Adjoint given the forward outputs (out_a, out_b) and their upstream grads.
template <typename T>
std::pair<BasicChannelVector<T>, BasicChannelVector<T>> softmax_pair_backward(
    const BasicChannelVector<T>& out_a, const BasicChannelVector<T>& out_b,
    const BasicChannelVector<T>& grad_a, const BasicChannelVector<T>& grad_b) {
  detail::require_same_length(out_a.size(), out_b.size(), "softmax_pair_backward");
  detail::require_same_length(out_a.size(), grad_a.size(), "softmax_pair_backward");
  detail::require_same_length(out_a.size(), grad_b.size(), "softmax_pair_backward");
  std::vector<T> ga(out_a.size());
  std::vector<T> gb(out_a.size());
  for (std::size_t c = 0; c < out_a.size(); ++c) {
    const T g = out_a[c] * out_b[c] * (grad_a[c] - grad_b[c]);
    ga[c] = g;
    gb[c] = -g;
  }
  return {BasicChannelVector<T>(std::move(ga)), BasicChannelVector<T>(std::move(gb))};
}

// ---------------------------------------------------------------------------
// Affine

template <typename T>
BasicChannelVector<T> affine_apply(const BasicAffineLayer<T>& layer,
                                   const BasicChannelVector<T>& v) {
  if (v.size() != layer.in_dim()) {
    throw ShapeError("affine_apply: input length " + std::to_string(v.size()) +
                     " != in_dim " + std::to_string(layer.in_dim()));
  }
  std::vector<T> out(layer.out_dim());
  for (std::size_t r = 0; r < layer.out_dim(); ++r) {
    double acc = static_cast<double>(layer.bias()[r]);
    for (std::size_t k = 0; k < layer.in_dim(); ++k) {
      acc += static_cast<double>(layer.weight(r, k)) * static_cast<double>(v[k]);
    }
    out[r] = static_cast<T>(acc);
  }
  return BasicChannelVector<T>(std::move(out));
}

template <typename T>
struct AffineGradient {
  BasicChannelVector<T> input;
  BasicAffineLayer<T> layer;  // same shape as the forward layer
};

template <typename T>
AffineGradient<T> affine_backward(const BasicAffineLayer<T>& layer,
                                  const BasicChannelVector<T>& input,
                                  const BasicChannelVector<T>& grad_out) {
  detail::require_same_length(input.size(), layer.in_dim(), "affine_backward");
  detail::require_same_length(grad_out.size(), layer.out_dim(), "affine_backward");
  std::vector<T> gw(layer.in_dim() * layer.out_dim());
  std::vector<T> gb(layer.out_dim());
  std::vector<T> gx(layer.in_dim());
  for (std::size_t r = 0; r < layer.out_dim(); ++r) {
    gb[r] = grad_out[r];
    for (std::size_t k = 0; k < layer.in_dim(); ++k) {
      gw[r * layer.in_dim() + k] = grad_out[r] * input[k];
    }
  }
  for (std::size_t k = 0; k < layer.in_dim(); ++k) {
    double acc = 0.0;
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
      acc += static_cast<double>(layer.weight(r, k)) * static_cast<double>(grad_out[r]);
    }
    gx[k] = static_cast<T>(acc);
  }
  return {BasicChannelVector<T>(std::move(gx)),
          BasicAffineLayer<T>(layer.in_dim(), layer.out_dim(), std::move(gw), std::move(gb))};
}

// Elementwise sums used when accumulating gradients from several paths.
template <typename T>
BasicChannelVector<T> add(const BasicChannelVector<T>& a, const BasicChannelVector<T>& b) {
  detail::require_same_length(a.size(), b.size(), "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return BasicChannelVector<T>(std::move(out));
}

template <typename T>
BasicAffineLayer<T> add(const BasicAffineLayer<T>& a, const BasicAffineLayer<T>& b) {
  if (!a.same_shape(b)) throw ShapeError("add: affine layer shape mismatch");
  std::vector<T> w(a.weights().size());
  std::vector<T> bias(a.bias().size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = a.weights()[i] + b.weights()[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = a.bias()[i] + b.bias()[i];
  return BasicAffineLayer<T>(a.in_dim(), a.out_dim(), std::move(w), std::move(bias));
}

}  // namespace cmaff
