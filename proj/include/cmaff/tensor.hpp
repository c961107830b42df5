#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmaff/errors.hpp"

namespace cmaff {

namespace detail {

template <typename T>
void require_finite(std::span<const T> data, const char* what) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NumericError(std::string(what) + ": non-finite element at index " +
                         std::to_string(i));
    }
  }
}

template <typename To, typename From>
std::vector<To> convert(std::span<const From> src) {
  std::vector<To> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<To>(src[i]);
  return out;
}

}  // namespace detail

// Dense C x H x W map stored channel-major: index = (c * H + y) * W + x.
// Immutable once constructed; every element is finite.
template <typename T>
class BasicFeatureMap {
 public:
  using value_type = T;

  BasicFeatureMap(std::size_t channels, std::size_t height, std::size_t width,
                  std::vector<T> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (channels_ == 0 || height_ == 0 || width_ == 0) {
      throw ShapeError("FeatureMap: dimensions must be positive");
    }
    if (data_.size() != channels_ * height_ * width_) {
      throw ShapeError("FeatureMap: data length " + std::to_string(data_.size()) +
                       " != C*H*W = " + std::to_string(channels_ * height_ * width_));
    }
    detail::require_finite<T>(data_, "FeatureMap");
  }

  static BasicFeatureMap zeros(std::size_t channels, std::size_t height, std::size_t width) {
    return BasicFeatureMap(channels, height, width,
                           std::vector<T>(channels * height * width, T(0)));
  }

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t spatial_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const T> data() const noexcept { return data_; }
  std::span<const T> channel(std::size_t c) const {
    return std::span<const T>(data_).subspan(c * spatial_size(), spatial_size());
  }
  T operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }

  bool same_shape(const BasicFeatureMap& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  template <typename U>
  BasicFeatureMap<U> cast() const {
    return BasicFeatureMap<U>(channels_, height_, width_, detail::convert<U, T>(data_));
  }

  friend bool operator==(const BasicFeatureMap&, const BasicFeatureMap&) = default;

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<T> data_;
};

// Length-C per-channel descriptor (pooled features, logits, attention masks).
template <typename T>
class BasicChannelVector {
 public:
  using value_type = T;

  explicit BasicChannelVector(std::vector<T> data) : data_(std::move(data)) {
    if (data_.empty()) throw ShapeError("ChannelVector: length must be positive");
    detail::require_finite<T>(data_, "ChannelVector");
  }

  static BasicChannelVector zeros(std::size_t length) {
    return BasicChannelVector(std::vector<T>(length, T(0)));
  }

  std::size_t size() const noexcept { return data_.size(); }
  std::span<const T> data() const noexcept { return data_; }
  T operator[](std::size_t i) const { return data_[i]; }

  template <typename U>
  BasicChannelVector<U> cast() const {
    return BasicChannelVector<U>(detail::convert<U, T>(data_));
  }

  friend bool operator==(const BasicChannelVector&, const BasicChannelVector&) = default;

 private:
  std::vector<T> data_;
};

// out = weights * in + bias, weights stored row-major (out_dim x in_dim).
// Doubles as a 1x1 convolution on a C x 1 x 1 input.
template <typename T>
class BasicAffineLayer {
 public:
  using value_type = T;

  BasicAffineLayer(std::size_t in_dim, std::size_t out_dim, std::vector<T> weights,
                   std::vector<T> bias)
      : in_dim_(in_dim), out_dim_(out_dim), weights_(std::move(weights)),
        bias_(std::move(bias)) {
    if (in_dim_ == 0 || out_dim_ == 0) {
      throw ShapeError("AffineLayer: dimensions must be positive");
    }
    if (weights_.size() != in_dim_ * out_dim_) {
      throw ShapeError("AffineLayer: weight buffer has " + std::to_string(weights_.size()) +
                       " elements, expected " + std::to_string(in_dim_ * out_dim_));
    }
    if (bias_.size() != out_dim_) {
      throw ShapeError("AffineLayer: bias length " + std::to_string(bias_.size()) +
                       " != out_dim " + std::to_string(out_dim_));
    }
    detail::require_finite<T>(weights_, "AffineLayer weights");
    detail::require_finite<T>(bias_, "AffineLayer bias");
  }

  static BasicAffineLayer zeros(std::size_t in_dim, std::size_t out_dim) {
    return BasicAffineLayer(in_dim, out_dim, std::vector<T>(in_dim * out_dim, T(0)),
                            std::vector<T>(out_dim, T(0)));
  }

  static BasicAffineLayer identity(std::size_t dim) {
    std::vector<T> w(dim * dim, T(0));
    for (std::size_t i = 0; i < dim; ++i) w[i * dim + i] = T(1);
    return BasicAffineLayer(dim, dim, std::move(w), std::vector<T>(dim, T(0)));
  }

  std::size_t in_dim() const noexcept { return in_dim_; }
  std::size_t out_dim() const noexcept { return out_dim_; }
  std::span<const T> weights() const noexcept { return weights_; }
  std::span<const T> bias() const noexcept { return bias_; }
  T weight(std::size_t row, std::size_t col) const { return weights_[row * in_dim_ + col]; }
  std::size_t param_count() const noexcept { return weights_.size() + bias_.size(); }

  bool same_shape(const BasicAffineLayer& other) const noexcept {
    return in_dim_ == other.in_dim_ && out_dim_ == other.out_dim_;
  }

  template <typename U>
  BasicAffineLayer<U> cast() const {
    return BasicAffineLayer<U>(in_dim_, out_dim_, detail::convert<U, T>(weights_),
                               detail::convert<U, T>(bias_));
  }

  friend bool operator==(const BasicAffineLayer&, const BasicAffineLayer&) = default;

 private:
  std::size_t in_dim_;
  std::size_t out_dim_;
  std::vector<T> weights_;
  std::vector<T> bias_;
};

using FeatureMap = BasicFeatureMap<float>;
using ChannelVector = BasicChannelVector<float>;
using AffineLayer = BasicAffineLayer<float>;

}  // namespace cmaff
