#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "sglab/lma_solver.hpp"
#include "sglab/presets.hpp"

using namespace sglab;

namespace {

constexpr double kPi = 3.14159265358979323846;

const ConvexPotential& two_bump_potential(int n) {
  static std::map<int, ConvexPotential> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    TorusGrid g(n);
    it = cache.emplace(n, solve_ma_periodic(presets::two_bump(g), 0.5, 2.0, 0.0)).first;
  }
  return it->second;
}

TorusField smooth_field(TorusGrid g) {
  return TorusField::from_function(g, [](Vec2 x) {
    return std::sin(2 * kPi * x[0]) * std::cos(4 * kPi * x[1]) + 0.5 * std::cos(2 * kPi * (x[0] - x[1]));
  });
}

double max_asymmetry(const DivergenceFormOperator::Matrix& A) {
  const DivergenceFormOperator::Matrix At = A.transpose();
  return (A - At).norm();
}

}  // namespace

TEST_CASE("flux form reduces to the 5-point Laplacian at Phi = I") {
  TorusGrid g(32);
  const auto op = DivergenceFormOperator::periodic(CofactorField::identity(g));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<double> v(g.size());
  for (auto& x : v) x = nd(rng);
  const TorusField u(g, v);
  CHECK((op.apply(u) - laplacian_5pt(u)).sup_norm() <= 1e-12 * laplacian_5pt(u).sup_norm());
  // Matrix form agrees with apply.
  Eigen::Map<const Eigen::VectorXd> uv(v.data(), static_cast<Eigen::Index>(v.size()));
  const Eigen::VectorXd Au = op.matrix() * uv;
  const auto lap = laplacian_5pt(u);
  double diff = 0;
  for (std::size_t k = 0; k < g.size(); ++k) diff = std::max(diff, std::abs(Au[static_cast<Eigen::Index>(k)] + lap[k]));
  CHECK(diff <= 1e-10);
  CHECK(op.monotone());
}

TEST_CASE("assembled operators are symmetric with the right kernel and sign") {
  const auto& phi = two_bump_potential(64);
  const auto cof = cofactor(phi);
  const auto per = DivergenceFormOperator::periodic(cof);
  CHECK(max_asymmetry(per.matrix()) <= 1e-12 * per.matrix().norm());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(per.matrix().rows());
  CHECK((per.matrix() * ones).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(per.smallest_ritz_value(3) >= -1e-8);
  MESSAGE("two-bump cofactor operator monotone: " << per.monotone());

  const Section S = extract_section(phi, phi.grid().nearest_cell({0.4, 0.5}), 0.01);
  const auto dir = DivergenceFormOperator::dirichlet(cof, S);
  CHECK(dir.unknowns() == S.size());
  CHECK(max_asymmetry(dir.matrix()) <= 1e-12 * dir.matrix().norm());
  CHECK(dir.smallest_ritz_value(4) > 0.0);

  CofactorField bad = CofactorField::constant(phi.grid(), 1.0, 2.0, 1.0);
  CHECK_THROWS_AS(DivergenceFormOperator::periodic(bad), Error);
}

TEST_CASE("periodic LMA solves") {
  TorusGrid g(64);
  const auto I = CofactorField::identity(g);
  SUBCASE("zero forcing gives zero") {
    const auto u = solve_periodic_lma(I, VectorField(g));
    CHECK(u.sup_norm() == 0.0);
  }
  SUBCASE("Poisson oracle with the face gradient") {
    const auto op = DivergenceFormOperator::periodic(I);
    const auto f = smooth_field(g);
    LinearSolveInfo info;
    const auto u = solve_periodic(op, laplacian_5pt(f), 1e-12, &info);
    CHECK((u - subtract_mean(f)).sup_norm() <= 1e-8);
    CHECK(info.relative_residual <= 1e-10);
  }
  SUBCASE("Poisson with analytic F = grad f converges at second order") {
    std::vector<double> errs;
    for (int n : {32, 64, 128}) {
      TorusGrid gn(n);
      VectorField F(TorusField::from_function(gn, [](Vec2 x) {
                      return 2 * kPi * std::cos(2 * kPi * x[0]) * std::cos(4 * kPi * x[1]) -
                             kPi * std::sin(2 * kPi * (x[0] - x[1]));
                    }),
                    TorusField::from_function(gn, [](Vec2 x) {
                      return -4 * kPi * std::sin(2 * kPi * x[0]) * std::sin(4 * kPi * x[1]) +
                             kPi * std::sin(2 * kPi * (x[0] - x[1]));
                    }));
      const auto u = solve_periodic_lma(CofactorField::identity(gn), F);
      errs.push_back((u - subtract_mean(smooth_field(gn))).sup_norm());
    }
    MESSAGE("Poisson errors " << errs[0] << " " << errs[1] << " " << errs[2]);
    CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.25));
    CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.25));
  }
}

TEST_CASE("Dirichlet LMA solves") {
  TorusGrid g(64);
  const auto I = CofactorField::identity(g);
  const auto para = ConvexPotential::identity(g);
  const Section S = extract_section(para, {32, 32}, 0.03);
  SUBCASE("zero and divergence-free forcing give zero") {
    CHECK(solve_dirichlet_lma(I, VectorField(g), S).sup_norm() == 0.0);
    VectorField c(TorusField(g, 0.7), TorusField(g, -0.2));
    CHECK(solve_dirichlet_lma(I, c, S).sup_norm() <= 1e-12);
  }
  SUBCASE("self-refinement against a 4x finer solve") {
    const double h = 0.03;
    auto solve_at = [&](int n) {
      TorusGrid gn(n);
      const auto p = ConvexPotential::identity(gn);
      const Section Sn = extract_section(p, {n / 2, n / 2}, h);
      const auto mask = Sn.cell_mask();
      const Vec2 c = Sn.center_point();
      TorusField f1(gn);
      for (std::size_t k = 0; k < gn.size(); ++k)
        if (mask[k]) f1[k] = gn.center(k)[0] - c[0];
      return solve_dirichlet_lma(CofactorField::identity(gn), VectorField(f1, TorusField(gn)), Sn);
    };
    std::vector<double> disc;
    for (int n : {32, 64}) {
      const auto coarse = solve_at(n);
      const auto fine = solve_at(4 * n);
      TorusGrid gn(n);
      const Section Sn = extract_section(ConvexPotential::identity(gn), {n / 2, n / 2}, h);
      double d = 0.0;
      for (auto o : Sn.members()) {
        const Vec2 x = Sn.point(o);
        d = std::max(d, std::abs(coarse[Sn.cell_index(o)] - fine.sample(x)));
      }
      disc.push_back(d);
    }
    MESSAGE("coarse-to-fine discrepancy " << disc[0] << " (N=32) " << disc[1] << " (N=64), N*d = " << 32 * disc[0]
                                          << ", " << 64 * disc[1]);
    // First order: N * discrepancy does not grow.
    CHECK(64 * disc[1] <= 1.2 * 32 * disc[0]);
  }
}

TEST_CASE("property: discrete maximum principle for homogeneous Dirichlet problems") {
  const auto& phi = two_bump_potential(64);
  const auto cof = cofactor(phi);
  const auto& g = phi.grid();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> cell(0, g.n() - 1);
  for (int trial = 0; trial < 6; ++trial) {
    const Section S = extract_section(phi, {cell(rng), cell(rng)}, 0.003 + 0.006 * (uni(rng) + 1.0));
    const auto op = DivergenceFormOperator::dirichlet(cof, S);
    REQUIRE(op.monotone());
    TorusField b(g);
    for (auto& v : b.mutable_values()) v = uni(rng);
    const auto u = solve_dirichlet(op, TorusField(g), b, 1e-12);
    double bmin = 1e9, bmax = -1e9;
    for (auto o : S.outer_ring()) {
      bmin = std::min(bmin, b[S.cell_index(o)]);
      bmax = std::max(bmax, b[S.cell_index(o)]);
    }
    for (auto o : S.members()) {
      CHECK(u[S.cell_index(o)] >= bmin - 1e-9);
      CHECK(u[S.cell_index(o)] <= bmax + 1e-9);
    }
  }
}

TEST_CASE("Green's function of the Laplacian on a disc") {
  TorusGrid g(128);
  const auto para = ConvexPotential::identity(g);
  const double h = 0.02;
  const Section S = extract_section(para, {64, 64}, h);
  const auto G = green_function(CofactorField::identity(g), S, {0, 0});
  const double R = std::sqrt(2 * h);
  double err = 0.0, ref = 0.0;
  for (auto o : S.members()) {
    if (o == CellOffset{0, 0}) continue;
    const double r = norm(S.point(o) - S.center_point());
    const double exact = std::log(R / r) / (2 * kPi);
    err += std::abs(G.at(o) - exact);
    ref += exact;
  }
  MESSAGE("relative L1 error " << err / ref);
  CHECK(err / ref <= 0.05);
  CHECK(G.min_on_mask() >= 0.0);
  double integral_g = 0.0;
  for (auto o : S.members()) integral_g += G.at(o) * g.cell_area();
  CHECK(integral_g == doctest::Approx(R * R / 4).epsilon(0.05));
}

TEST_CASE("Green's function positivity and symmetry on a generic section") {
  const auto& phi = two_bump_potential(64);
  const auto cof = cofactor(phi);
  const Section S = extract_section(phi, phi.grid().nearest_cell({0.6, 0.4}), 0.015);
  const auto op = DivergenceFormOperator::dirichlet(cof, S);
  const double tol = 1e-12;
  const double defect = green_symmetry_defect(op, S, 4, 9, tol);
  MESSAGE("symmetry defect " << defect);
  CHECK(defect <= 10 * tol);
  for (int k = 0; k < 3; ++k) {
    const auto G = green_function(op, S, S.members()[S.size() * static_cast<std::size_t>(k) / 3], tol);
    CHECK(G.min_on_mask() >= 0.0);
  }
}

TEST_CASE("Green integrability ladder for the quadratic potential") {
  const std::vector<double> ps{1.0, 2.0};
  const std::vector<double> kappas{0.2};
  std::vector<double> grad_norm;
  for (int n : {64, 128}) {
    TorusGrid g(n);
    const auto report = green_integrability_report(ConvexPotential::identity(g), {n / 2, n / 2}, 0.02, 4, ps, kappas);
    CHECK(report.min_value >= 0.0);
    CHECK(report.symmetry_defect <= 1e-6);
    for (const auto& row : report.rows) {
      if (row.p == 1.0 || row.p == 2.0) {
        CHECK(row.slope == doctest::Approx(1.0).epsilon(0.25));
      } else {
        CHECK(std::isfinite(row.norm));
        CHECK(row.slope > 0.0);
      }
    }
    grad_norm.push_back(report.rows.back().norm);
    CHECK(report.decay.r2 >= 0.9);
    MESSAGE("N=" << n << " slope p=1 " << report.rows[0].slope << " tau0 " << report.decay.tau0 << " r2 "
                 << report.decay.r2 << " grad norm " << grad_norm.back());
  }
  CHECK(grad_norm[1] == doctest::Approx(grad_norm[0]).epsilon(0.10));
}

TEST_CASE("Sobolev ratio") {
  TorusGrid g(128);
  const auto I = DivergenceFormOperator::periodic(CofactorField::identity(g));
  CHECK(sobolev_ratio(I, TorusField(g), 4.0) == 0.0);
  CHECK_THROWS_AS(sobolev_ratio(I, TorusField(g, 1.0), 4.0), Error);
  const double r = 0.15;
  const auto w = bump_field(g, {{0.5, 0.5}, r});
  const double exact = std::pow(kPi * r * r / 9.0, 0.25) / std::sqrt(4.0 * kPi / 3.0);
  CHECK(sobolev_ratio(I, w, 4.0) == doctest::Approx(exact).epsilon(0.01));

  // Random bumps on a generic section, stable under refinement.
  std::vector<double> max_ratio;
  for (int n : {64, 128}) {
    const auto& phi = two_bump_potential(n);
    const auto op = DivergenceFormOperator::periodic(cofactor(phi));
    const Section S = extract_section(phi, phi.grid().nearest_cell({0.3, 0.3}), 0.02);
    const auto john = john_normalize(S);
    double m = 0.0;
    for (const auto& b : random_bumps(S, john.T, 100, 42)) m = std::max(m, sobolev_ratio(op, bump_field(phi.grid(), b), 4.0));
    max_ratio.push_back(m);
  }
  MESSAGE("max Sobolev ratio " << max_ratio[0] << " " << max_ratio[1]);
  CHECK(std::isfinite(max_ratio[0]));
  CHECK(max_ratio[1] == doctest::Approx(max_ratio[0]).epsilon(0.15));
}

TEST_CASE("global and interior bound shapes") {
  const auto& phi = two_bump_potential(128);
  const auto& g = phi.grid();
  VectorField F(TorusField::from_function(g, [](Vec2 x) { return std::sin(2 * kPi * x[0]); }),
                TorusField::from_function(g, [](Vec2 x) { return std::cos(2 * kPi * x[1]); }));
  const auto x0 = g.nearest_cell({0.5, 0.5});
  const auto ladder = global_bound_ladder(phi, x0, 0.02, 4, F);
  MESSAGE("global bound exponent " << ladder.fit.exponent);
  CHECK(ladder.fit.exponent > 0.0);
  for (std::size_t k = 1; k < ladder.values.size(); ++k) CHECK(ladder.values[k] < ladder.values[k - 1]);
  const double q = interior_quotient(phi, x0, 0.02, F, 4.0);
  MESSAGE("interior quotient " << q);
  CHECK(std::isfinite(q));
  CHECK(q > 0.0);
}
