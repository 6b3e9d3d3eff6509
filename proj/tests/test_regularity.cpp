#include <cmath>
#include <random>

#include "doctest.h"
#include "sglab/presets.hpp"
#include "sglab/regularity.hpp"

using namespace sglab;

namespace {

constexpr double kPi = 3.14159265358979323846;

TorusField radial_profile(TorusGrid g, CellIndex x0, double gamma) {
  const Vec2 c = g.center(x0.i, x0.j);
  return TorusField::from_function(g, [&](Vec2 x) {
    return std::pow(std::hypot(wrap_half(x[0] - c[0]), wrap_half(x[1] - c[1])), gamma);
  });
}

TorusField smooth_boundary(TorusGrid g) {
  return TorusField::from_function(g, [](Vec2 x) {
    return std::sin(2 * kPi * x[0]) + 0.5 * std::cos(2 * kPi * (x[1] + 0.3 * x[0]));
  });
}

}  // namespace

TEST_CASE("oscillation") {
  TorusGrid g(128);
  const auto phi = ConvexPotential::identity(g);
  const Section S = extract_section(phi, {64, 64}, 0.02);
  CHECK(oscillation(TorusField(g, 2.5), S) == 0.0);
  const auto x1 = TorusField::from_function(g, [](Vec2 x) { return x[0]; });
  CHECK(std::abs(oscillation(x1, S) - 2 * std::sqrt(0.04)) <= 2 * g.spacing());
}

TEST_CASE("oscillation decay on paraboloid sections") {
  TorusGrid g(128);
  const auto phi = ConvexPotential::identity(g);
  const CellIndex x0{64, 64};
  SUBCASE("affine functions decay like the section diameter") {
    const auto u = TorusField::from_function(g, [](Vec2 x) { return 0.3 * x[0] - 0.7 * x[1]; });
    const auto d = oscillation_decay(u, phi, x0, 0.025, 4);
    for (const auto& r : d.rungs) CHECK(r.ratio == doctest::Approx(std::sqrt(0.5)).epsilon(0.1 / std::sqrt(0.5)));
  }
  SUBCASE("harmonic family") {
    const Vec2 c = g.center(x0.i, x0.j);
    for (int k = 2; k <= 4; ++k) {
      // Re (z - c)^k is harmonic; take the discrete homogeneous solution with those boundary values.
      const auto b = TorusField::from_function(g, [&](Vec2 x) {
        const double r = norm(x - c), th = std::atan2(x[1] - c[1], x[0] - c[0]);
        return std::pow(r, k) * std::cos(k * th) + 0.1 * (x[0] - c[0]);
      });
      const auto S = extract_section(phi, x0, 0.025);
      const auto u = homogeneous_solution(phi, S, b);
      const auto d = oscillation_decay(u, phi, x0, 0.025, 4);
      for (const auto& r : d.rungs) CHECK(r.ratio <= 0.95);
    }
  }
  SUBCASE("non-solutions are rejected") {
    const auto u = TorusField::from_function(g, [](Vec2 x) { return std::cos(2 * kPi * x[0]) * std::cos(2 * kPi * x[1]); });
    CHECK_THROWS_AS(oscillation_decay(u, phi, x0, 0.025, 3), Error);
  }
}

TEST_CASE("oscillation decay for a generic solved potential is stable under refinement") {
  std::vector<double> beta;
  for (int n : {64, 128}) {
    TorusGrid g(n);
    const auto phi = solve_ma_periodic(presets::two_bump(g), 0.5, 2.0, 0.0);
    const auto x0 = g.nearest_cell({0.45, 0.5});
    const auto S = extract_section(phi, x0, 0.02);
    const auto u = homogeneous_solution(phi, S, smooth_boundary(g));
    const auto d = oscillation_decay(u, phi, x0, 0.02, 3);
    for (const auto& r : d.rungs) CHECK(r.ratio < 1.0);
    beta.push_back(d.beta_hat);
    // Nested sections: oscillation never increases down the ladder.
    for (const auto& r : d.rungs) CHECK(r.osc_half <= r.osc_h);
  }
  MESSAGE("beta_hat " << beta[0] << " " << beta[1]);
  CHECK(std::abs(beta[0] - beta[1]) <= 0.1);
}

TEST_CASE("holder fit calibration") {
  TorusGrid g(128);
  const CellIndex x0{40, 90};
  const auto radii = default_holder_radii(g);
  for (double gamma : {0.25, 0.5, 0.75, 1.0}) {
    const auto fit = holder_fit(radial_profile(g, x0, gamma), x0, radii);
    CHECK(fit.gamma == doctest::Approx(gamma).epsilon(0.05 / gamma));
    CHECK(fit.r2 >= 0.99);
    CHECK(fit.flag.empty());
  }
  const auto flat = holder_fit(TorusField(g, 1.0), x0, radii);
  CHECK(flat.flag == "constant");
  CHECK(std::isinf(flat.gamma));
  CHECK_THROWS_AS(holder_fit(TorusField(g), x0, {0.1, 0.2, 0.3}), Error);
}

TEST_CASE("Harnack quotient") {
  TorusGrid g(128);
  const auto phi = ConvexPotential::identity(g);
  const CellIndex x0{64, 64};
  const double h = 0.01;
  const Section S2 = extract_section(phi, x0, 2 * h);
  SUBCASE("constants") {
    CHECK(harnack_quotient(homogeneous_solution(phi, S2, TorusField(g, 3.0)), phi, x0, h) ==
          doctest::Approx(1.0));
  }
  SUBCASE("Poisson kernel against the classical disc value") {
    const Vec2 c = g.center(x0.i, x0.j);
    const double R2 = std::sqrt(4 * h);  // radius of S(x0, 2h)
    const double rho = 1.1 * R2;        // pole just outside
    const Vec2 zeta = c + Vec2{rho, 0.0};
    const auto kernel = TorusField::from_function(g, [&](Vec2 x) {
      const Vec2 d = x - c;
      return (rho * rho - dot(d, d)) / dot(x - zeta, x - zeta);
    });
    const auto u = homogeneous_solution(phi, S2, kernel);
    const double r = std::sqrt(2 * h);
    const double exact = std::pow((rho + r) / (rho - r), 2);
    const double q = harnack_quotient(u, phi, x0, h);
    MESSAGE("Harnack quotient " << q << " classical " << exact);
    CHECK(q == doctest::Approx(exact).epsilon(0.15));
  }
  SUBCASE("errors") {
    const auto neg = homogeneous_solution(phi, S2, TorusField(g, -1.0));
    CHECK_THROWS_AS(harnack_quotient(neg, phi, x0, h), Error);
    const auto bumpy = TorusField::from_function(g, [](Vec2 x) { return 2 + std::cos(6 * kPi * x[0]); });
    CHECK_THROWS_AS(harnack_quotient(bumpy, phi, x0, h), Error);
  }
}
