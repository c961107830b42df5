#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cmaff {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> numeric;  // central-difference gradient, one entry per coordinate
};

// Compares an analytic gradient of a scalar function against central
// differences (f(x + h e_i) - f(x - h e_i)) / 2h. The per-coordinate error is
// |analytic - numeric| / max(1, |analytic|, |numeric|); the maximum is returned.
// Throws NumericError if f returns a non-finite value, ShapeError if the
// analytic gradient length differs from x0, ConfigError if h <= 0.
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x0, std::span<const double> analytic,
                           double h = 1e-5);

}  // namespace cmaff
