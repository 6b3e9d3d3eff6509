#include "sglab/fit.hpp"

#include <cmath>
#include <vector>

#include "sglab/error.hpp"

namespace sglab {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "fit: length mismatch");
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) throw Error(ErrorCode::InsufficientSamples, "fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InsufficientSamples, "fit: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

PowerFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0))
      throw Error(ErrorCode::InvalidArgument, "power-law fit needs positive data");
    lx[k] = std::log(x[k]);
  }
  for (std::size_t k = 0; k < y.size(); ++k) ly[k] = std::log(y[k]);
  const LineFit line = fit_line(lx, ly);
  return {line.slope, std::exp(line.intercept), line.r2};
}

}  // namespace sglab
