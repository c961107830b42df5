#pragma once

#include <cstddef>
#include <cstdint>

#include "cmaff/fusion.hpp"
#include "cmaff/grad_check.hpp"

namespace cmaff {

struct FuseCheckConfig {
  std::size_t channels = 8;
  std::size_t height = 5;
  std::size_t width = 5;
  std::size_t dem_reduction = kDefaultDemReduction;
  double step = 1e-5;
  // Negative control: perturbs one analytic gradient entry before comparison.
  bool corrupt_adjoint = false;
};

struct FuseCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;  // inputs + parameters checked
};

// Draws a random double-precision instance (inputs, every parameter including
// biases, and an upstream gradient) from `seed`, then compares fuse_backward
// against central differences of sum(upstream * fuse(...)).
FuseCheckResult check_fuse_gradients(Arrangement arrangement, std::uint64_t seed,
                                     const FuseCheckConfig& cfg = {});

}  // namespace cmaff
