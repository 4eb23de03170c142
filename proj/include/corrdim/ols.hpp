#pragma once

#include <cstddef>
#include <span>

namespace corrdim {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

// Unweighted least-squares line y = slope * x + intercept. Requires at least
// two points with distinct x. r2 is 1 when the residuals vanish.
LineFit ols_fit(std::span<const double> x, std::span<const double> y);

}  // namespace corrdim
