#include "sglab/presets.hpp"

#include <cmath>

namespace sglab::presets {
namespace {

constexpr double kTwoPi = 6.28318530717958647692;

TorusField unit_mass(TorusField f) {
  const double mass = integral(f);
  f *= 1.0 / mass;
  return f;
}

TorusField periodic_bumps(TorusGrid g, double width) {
  const Vec2 centers[2] = {{0.3, 0.3}, {0.7, 0.65}};
  return TorusField::from_function(g, [&](Vec2 x) {
    double s = 0.0;
    for (const auto& c : centers)
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) {
          const Vec2 d = x - c - Vec2{double(a), double(b)};
          s += std::exp(-dot(d, d) / (2.0 * width * width));
        }
    return s;
  });
}

double normalized_mean(const TorusField& f) {
  const double lo = f.min(), hi = f.max();
  return (f.mean() - lo) / (hi - lo);
}

}  // namespace

TorusField uniform(TorusGrid g) { return TorusField(g, 1.0); }

TorusField perturbed(TorusGrid g) {
  return unit_mass(TorusField::from_function(
      g, [](Vec2 x) { return 1.0 + 0.3 * std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]); }));
}

TorusField two_bump(TorusGrid g) {
  // Width chosen so that 0.5 + 1.5 * normalized bumps has unit mass.
  double lo = 0.04, hi = 0.4;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (normalized_mean(periodic_bumps(g, mid)) < 1.0 / 3.0)
      lo = mid;
    else
      hi = mid;
  }
  TorusField f = periodic_bumps(g, 0.5 * (lo + hi));
  const double fmin = f.min(), fmax = f.max();
  for (auto& v : f.mutable_values()) v = 0.5 + 1.5 * (v - fmin) / (fmax - fmin);
  return unit_mass(std::move(f));
}

TorusField sheared(TorusGrid g) {
  return unit_mass(TorusField::from_function(g, [](Vec2 x) {
    return 1.0 + 0.2 * std::cos(kTwoPi * x[0]) + 0.1 * std::sin(2.0 * kTwoPi * x[1]) +
           0.1 * std::cos(kTwoPi * (x[0] + x[1]));
  }));
}

TorusField manufactured_q(TorusGrid g, double amplitude) {
  return TorusField::from_function(g, [amplitude](Vec2 x) {
    return amplitude * std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
  });
}

TorusField manufactured_density(TorusGrid g, double amplitude) {
  const double a = kTwoPi * kTwoPi * amplitude;
  return TorusField::from_function(g, [a](Vec2 x) {
    const double cc = std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
    const double ss = std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
    return (1.0 - a * cc) * (1.0 - a * cc) - a * a * ss * ss;
  });
}

TorusField density(const std::string& name, TorusGrid g) {
  if (name == "uniform" || name == "quadratic") return uniform(g);
  if (name == "perturbed") return perturbed(g);
  if (name == "two_bump") return two_bump(g);
  if (name == "sheared") return sheared(g);
  throw Error(ErrorCode::Config, "unknown density preset '" + name + "'");
}

std::pair<double, double> density_bounds(const std::string& name) {
  if (name == "uniform" || name == "quadratic") return {1.0, 1.0};
  if (name == "perturbed") return {0.7, 1.3};
  if (name == "two_bump") return {0.5, 2.0};
  if (name == "sheared") return {0.6, 1.4};
  throw Error(ErrorCode::Config, "unknown density preset '" + name + "'");
}

std::vector<std::string> density_names() { return {"uniform", "perturbed", "two_bump", "sheared"}; }

}  // namespace sglab::presets
