#pragma once

#include <span>

namespace sglab {

/// Least-squares line y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Throws InsufficientSamples for fewer than two points or constant x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Fit y = prefactor * x^exponent on log-log axes; all inputs must be positive.
struct PowerFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r2 = 0.0;
};

PowerFit fit_power_law(std::span<const double> x, std::span<const double> y);

}  // namespace sglab
