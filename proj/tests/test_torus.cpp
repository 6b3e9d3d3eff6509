#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sglab/field_io.hpp"
#include "sglab/torus.hpp"

using namespace sglab;

namespace {

constexpr double kPi = 3.14159265358979323846;

TorusField random_field(TorusGrid g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> v(g.size());
  for (auto& x : v) x = nd(rng);
  return TorusField(g, std::move(v));
}

}  // namespace

TEST_CASE("grid geometry wraps in both axes") {
  TorusGrid g(8);
  CHECK(g.spacing() * g.n() == 1.0);
  CHECK(g.index(-1, 0) == g.index(7, 0));
  CHECK(g.index(3, 9) == g.index(3, 1));
  CHECK(g.center(0, 0)[0] == doctest::Approx(1.0 / 16));
  auto c = g.nearest_cell({-0.01, 1.02});
  CHECK(c.i == 7);
  CHECK(c.j == 0);
}

TEST_CASE("gradient of a constant vanishes") {
  TorusGrid g(16);
  auto grad = periodic_gradient(TorusField(g, 3.5));
  CHECK(grad.sup_norm() == 0.0);
}

TEST_CASE("gradient of sin(2 pi x1) has the centered-difference error") {
  TorusGrid g(64);
  auto f = TorusField::from_function(g, [](Vec2 x) { return std::sin(2 * kPi * x[0]); });
  auto grad = periodic_gradient(f);
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.center(k);
    err = std::max(err, std::abs(grad.c1[k] - 2 * kPi * std::cos(2 * kPi * x[0])));
    CHECK(std::abs(grad.c2[k]) < 1e-12);
  }
  // Exact discrete error (2 pi - sin(2 pi h)/h) |cos| at the cell nearest x1 = 0.
  CHECK(err == doctest::Approx(0.0100883260877076 * std::cos(kPi / 64)).epsilon(1e-9));
  CHECK(err * 64 * 64 <= 41.34);
}

TEST_CASE("split potential |x|^2/2 has gradient x") {
  TorusGrid g(16);
  SplitPotential p{TorusField(g), {0.0, 0.0}};
  auto grad = split_gradient(p);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(grad.c1[k] == doctest::Approx(g.center(k)[0]));
    CHECK(grad.c2[k] == doctest::Approx(g.center(k)[1]));
  }
}

TEST_CASE("divergence identities") {
  TorusGrid g(32);
  SUBCASE("constant field") {
    VectorField v(TorusField(g, 1.5), TorusField(g, -2.0));
    CHECK(periodic_divergence(v).sup_norm() == 0.0);
  }
  SUBCASE("rotational field is discretely divergence free") {
    VectorField v(TorusField::from_function(g, [](Vec2 x) { return -std::sin(2 * kPi * x[1]); }),
                  TorusField::from_function(g, [](Vec2 x) { return std::sin(2 * kPi * x[0]); }));
    CHECK(periodic_divergence(v).sup_norm() <= 1e-12);
  }
  SUBCASE("div of grad is the composed wide-stencil Laplacian") {
    std::mt19937_64 rng(7);
    auto f = random_field(g, rng);
    auto a = periodic_divergence(periodic_gradient(f));
    auto b = composed_laplacian(f);
    CHECK((a - b).sup_norm() <= 1e-10 * b.sup_norm());
  }
}

TEST_CASE("integral") {
  TorusGrid g(64);
  CHECK(integral(TorusField(g, 1.0)) == 1.0);
  auto s = TorusField::from_function(g, [](Vec2 x) { return std::sin(2 * kPi * x[0]); });
  CHECK(std::abs(integral(s)) < 1e-14);
}

TEST_CASE("property: gradient and divergence are adjoint; divergence integrates to zero") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 40);
    TorusGrid g(n);
    auto f = random_field(g, rng);
    VectorField v(random_field(g, rng), random_field(g, rng));
    const double lhs = inner(periodic_gradient(f), v);
    const double rhs = -inner(f, periodic_divergence(v));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
    CHECK(std::abs(integral(periodic_divergence(v))) <= 1e-12 * (1.0 + v.sup_norm() * n));
  }
}

TEST_CASE("periodic displacement stays in the fundamental cell") {
  TorusGrid g(8);
  VectorField raw(TorusField(g, 0.75), TorusField(g, -1.6));
  PeriodicDisplacement d(raw);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(d.at(k)[0] == doctest::Approx(-0.25));
    CHECK(d.at(k)[1] == doctest::Approx(0.4));
  }
  CHECK(d.sup_norm() <= kHalfDiagonal);
  CHECK(wrap_half(0.5) == -0.5);
}

TEST_CASE("bilinear sampling reproduces cell values and wraps") {
  TorusGrid g(10);
  std::mt19937_64 rng(3);
  auto f = random_field(g, rng);
  CHECK(f.sample(g.center(3, 4)) == doctest::Approx(f(3, 4)));
  CHECK(f.sample(g.center(3, 4) + Vec2{2.0, -5.0}) == doctest::Approx(f(3, 4)));
  const Vec2 mid = 0.5 * (g.center(9, 0) + g.center(10, 0));
  CHECK(f.sample(mid) == doctest::Approx(0.5 * (f(9, 0) + f(0, 0))));
}

TEST_CASE("field serialization round trips") {
  TorusGrid g(6);
  std::mt19937_64 rng(11);
  auto f = random_field(g, rng);
  std::stringstream csv;
  io::write_csv(f, csv);
  CHECK(csv.str().rfind("i,j,value\n0,0,", 0) == 0);
  auto back = io::read_csv(csv);
  CHECK((back - f).sup_norm() == 0.0);

  std::stringstream bin;
  io::write_binary(f, bin);
  CHECK(bin.str().size() == 8 + 8 * g.size());
  CHECK(static_cast<unsigned char>(bin.str()[0]) == 6);
  auto back2 = io::read_binary(bin);
  CHECK((back2 - f).sup_norm() == 0.0);

  std::stringstream bad("i,j,value\n0,0,1\n0,1,2\n");
  CHECK_THROWS_AS(io::read_csv(bad), Error);
}
