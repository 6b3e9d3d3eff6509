#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "sglab/polar.hpp"

using namespace sglab;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Displacement of grad(|x|^2/2 + eps cos(2 pi x1) + eta cos(2 pi x1) cos(2 pi x2)) o s,
// with s(x) = (x1 + a sin(2 pi x2), x2) measure-preserving.
PeriodicDisplacement gradient_map(TorusGrid g, double eps, double eta, double a = 0.0) {
  VectorField d(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.center(k);
    const Vec2 s{x[0] + a * std::sin(2 * kPi * x[1]), x[1]};
    const double c1 = std::cos(2 * kPi * s[0]), s1 = std::sin(2 * kPi * s[0]);
    const double c2 = std::cos(2 * kPi * s[1]), s2 = std::sin(2 * kPi * s[1]);
    d.c1[k] = (s[0] - x[0]) - 2 * kPi * eps * s1 - 2 * kPi * eta * s1 * c2;
    d.c2[k] = -2 * kPi * eta * c1 * s2;
  }
  return PeriodicDisplacement(d);
}

// x1 with x1 - 2 pi eps sin(2 pi x1) = y1.
double invert_profile(double y, double eps) {
  double x = y;
  for (int it = 0; it < 60; ++it)
    x -= (x - 2 * kPi * eps * std::sin(2 * kPi * x) - y) / (1 - 4 * kPi * kPi * eps * std::cos(2 * kPi * x));
  return x;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

MapTimeSeries analytic_family(TorusGrid g, int count, double dt) {
  MapTimeSeries s;
  s.grid = g;
  for (int k = 0; k < count; ++k) {
    const double t = dt * k;
    s.times.push_back(t);
    s.maps.push_back(gradient_map(g, 0.03 * std::sin(t), 0.0));
  }
  return s;
}

}  // namespace

TEST_CASE("pushforward of measure-preserving maps") {
  TorusGrid g(64);
  SUBCASE("identity") {
    double f = 0.0;
    const auto rho = pushforward_density(PeriodicDisplacement(g), &f);
    CHECK((rho - TorusField(g, 1.0)).sup_norm() <= 1e-12);
    CHECK(f == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("lattice shift") {
    const auto rho = pushforward_density(PeriodicDisplacement(VectorField(TorusField(g, 0.25), TorusField(g))));
    CHECK((rho - TorusField(g, 1.0)).sup_norm() <= 1e-12);
  }
  SUBCASE("off-lattice shift and a shear, within one-cell histogram error") {
    const auto shift = pushforward_density(PeriodicDisplacement(VectorField(TorusField(g, 0.013), TorusField(g, 0.3071))));
    CHECK((shift - TorusField(g, 1.0)).sup_norm() <= 1e-12);
    const auto shear = pushforward_density(gradient_map(g, 0.0, 0.0, 0.05));
    CHECK(lp_norm(shear - TorusField(g, 1.0), 1.0) <= 0.01);
  }
  SUBCASE("degenerate map") {
    VectorField d(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      d.c1[k] = 0.5 - g.center(k)[0];
      d.c2[k] = 0.5 - g.center(k)[1];
    }
    CHECK_THROWS_AS(pushforward_density(PeriodicDisplacement(d)), Error);
  }
}

TEST_CASE("pushforward against change of variables") {
  for (int n : {64, 128}) {
    TorusGrid g(n);
    for (double eps : {0.005, 0.015}) {
      const auto rho = pushforward_density(gradient_map(g, eps, 0.0));
      const auto exact = TorusField::from_function(g, [&](Vec2 y) {
        return 1.0 / (1.0 - 4 * kPi * kPi * eps * std::cos(2 * kPi * invert_profile(y[0], eps)));
      });
      const double err = lp_norm(rho - exact, 1.0);
      CAPTURE(n);
      CAPTURE(eps);
      CHECK(err <= 0.02);
    }
  }
}

TEST_CASE("factorization") {
  TorusGrid g(64);
  SUBCASE("identity") {
    const auto f = factorize(PeriodicDisplacement(g), 0.5, 2.0);
    CHECK(f.defect <= 1e-6);
    CHECK(f.g.sup_norm() <= 1e-12);
    CHECK(f.pstar.periodic().sup_norm() <= 1e-12);
  }
  SUBCASE("gradient of a convex potential gives g = identity") {
    const auto X = gradient_map(g, 0.01, 0.004);
    const auto f = factorize(X, 0.3, 3.0);
    std::vector<double> e;
    for (std::size_t k = 0; k < g.size(); ++k) e.push_back(norm(f.g.at(k)));
    MESSAGE("g - id median " << median(e) << ", residual " << f.residual_median);
    CHECK(median(e) <= 5 * g.spacing());
    CHECK(f.residual_median <= 5 * g.spacing());
    CHECK(f.residual_max <= 2 * legendre_inversion_residual(f.pstar, f.p) + 5 * g.spacing());
  }
  SUBCASE("composed shear is recovered") {
    const double a = 0.05;
    const auto f = factorize(gradient_map(g, 0.008, 0.004, a), 0.3, 3.0);
    std::vector<double> e;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec2 x = g.center(k);
      e.push_back(std::hypot(wrap_half(f.g.at(k)[0] - a * std::sin(2 * kPi * x[1])), wrap_half(f.g.at(k)[1])));
    }
    CHECK(median(e) <= 5 * g.spacing());
    CHECK(f.defect <= 0.02);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(factorize(gradient_map(g, 0.01, 0.0), 0.3, 3.0, 1e-12), Error);
    CHECK_THROWS_AS(factorize(gradient_map(g, 0.01, 0.0), 0.9, 1.1), Error);
  }
}

TEST_CASE("map series") {
  TorusGrid g(16);
  auto s = analytic_family(g, 4, 0.1);
  SUBCASE("round trip through the manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "sglab_polar_series";
    std::filesystem::remove_all(dir);
    s.save(dir);
    const auto r = MapTimeSeries::load(dir / "manifest.json");
    CHECK(r.times == s.times);
    REQUIRE(r.maps.size() == s.maps.size());
    for (std::size_t t = 0; t < r.maps.size(); ++t)
      CHECK((r.maps[t].field().c1 - s.maps[t].field().c1).sup_norm() == 0.0);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("validation") {
    s.times[2] = s.times[1];
    CHECK_THROWS_AS(s.validate(), Error);
  }
  SUBCASE("time derivative") {
    const auto d = s.time_derivative(1);
    const double expect = -2 * kPi * 0.03 * (std::sin(0.2) - std::sin(0.0)) / 0.2;
    const std::size_t k = g.index(4, 0);  // x1 = 9/32
    CHECK(d.c1[k] == doctest::Approx(expect * std::sin(2 * kPi * g.center(k)[0])).epsilon(1e-12));
  }
}

TEST_CASE("time regularity of the polar factorization") {
  SUBCASE("constant in time") {
    TorusGrid g(32);
    MapTimeSeries s;
    s.grid = g;
    for (int k = 0; k < 3; ++k) {
      s.times.push_back(k);
      s.maps.push_back(gradient_map(g, 0.01, 0.0));
    }
    const auto rep = polar_time_regularity(s, 0.5, 2.0);
    CHECK(rep.flag == "constant");
    s.times.pop_back();
    s.maps.pop_back();
    CHECK_THROWS_AS(polar_time_regularity(s, 0.5, 2.0), Error);
  }
  SUBCASE("analytic family") {
    TorusGrid g(64);
    const auto s = analytic_family(g, 11, 0.05);
    PolarOptions o;
    o.seed = 4;
    const auto rep = polar_time_regularity(s, 0.4, 2.6, o);
    for (std::size_t k = 0; k < rep.steps.size(); ++k) {
      const double t = s.times[k], eps = 0.03 * std::sin(t), deps = 0.03 * std::cos(t);
      // d_t P*(y) = -d_t Phat(grad Phat*(y)).
      const auto exact = subtract_mean(TorusField::from_function(g, [&](Vec2 y) {
        return -deps * std::cos(2 * kPi * invert_profile(y[0], eps));
      }));
      CAPTURE(t);
      CHECK(l2_norm(rep.dt_pstar[k] - exact) <= 0.1 * l2_norm(exact));
      CHECK(rep.steps[k].holder.r2 >= 0.8);
      CHECK(rep.steps[k].good_fraction >= 0.8);
    }
    CHECK(rep.gamma_min > 0.0);
    CHECK(rep.C_max > 0.0);
  }
}
