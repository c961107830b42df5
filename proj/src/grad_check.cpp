#include "cmaff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmaff/errors.hpp"

namespace cmaff {

namespace {

double evaluate(const std::function<double(std::span<const double>)>& f,
                std::span<const double> x, std::size_t coord) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    throw NumericError("grad_check: non-finite function value while perturbing coordinate " +
                       std::to_string(coord));
  }
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x0, std::span<const double> analytic,
                           double h) {
  if (!(h > 0.0)) throw ConfigError("grad_check: step must be positive");
  if (analytic.size() != x0.size()) {
    throw ShapeError("grad_check: analytic gradient has " + std::to_string(analytic.size()) +
                     " entries, point has " + std::to_string(x0.size()));
  }
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (!std::isfinite(analytic[i])) {
      throw NumericError("grad_check: non-finite analytic gradient at coordinate " +
                         std::to_string(i));
    }
  }
  GradCheckResult result;
  result.numeric.resize(x0.size());
  std::vector<double> x(x0.begin(), x0.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = evaluate(f, x, i);
    x[i] = orig - h;
    const double down = evaluate(f, x, i);
    x[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    result.numeric[i] = numeric;
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace cmaff
