#include "sglab/lma_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sglab {
namespace {

double edge_mean(double x, double y) {
  if (x > 0.0 && y > 0.0) return 2.0 * x * y / (x + y);
  if (x == 0.0 || y == 0.0) return 0.0;
  return 0.5 * (x + y);
}

std::vector<DivergenceFormOperator::Edge> build_edges(const CofactorField& phi) {
  if (!phi.positive_definite())
    throw Error(ErrorCode::IndefiniteOperator, "cofactor tensor is not positive definite");
  const auto& g = phi.grid();
  const std::size_t m = g.size();
  std::vector<double> a(m), b(m), c(m), d(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double off = 0.5 * (phi.phi12[k] + phi.phi21[k]);
    a[k] = phi.phi11[k] - std::abs(off);
    b[k] = phi.phi22[k] - std::abs(off);
    c[k] = std::max(off, 0.0);
    d[k] = std::max(-off, 0.0);
  }
  std::vector<DivergenceFormOperator::Edge> edges;
  edges.reserve(4 * m);
  const int n = g.n();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto k = g.index(i, j);
      const auto kx = g.index(i + 1, j), ky = g.index(i, j + 1);
      const auto kd = g.index(i + 1, j + 1), ka = g.index(i + 1, j - 1);
      edges.push_back({k, kx, edge_mean(a[k], a[kx])});
      edges.push_back({k, ky, edge_mean(b[k], b[ky])});
      if (c[k] > 0.0 || c[kd] > 0.0) edges.push_back({k, kd, edge_mean(c[k], c[kd])});
      if (d[k] > 0.0 || d[ka] > 0.0) edges.push_back({k, ka, edge_mean(d[k], d[ka])});
    }
  return edges;
}

Eigen::VectorXd gather(const DivergenceFormOperator& op, const TorusField& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(op.unknowns()));
  for (std::size_t u = 0; u < op.unknowns(); ++u) v[static_cast<Eigen::Index>(u)] = f[op.cells()[u]];
  return v;
}

Eigen::VectorXd cg_solve(const DivergenceFormOperator& op, const Eigen::VectorXd& rhs, double tol,
                         LinearSolveInfo* info) {
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    if (info) *info = {0, 0.0};
    return Eigen::VectorXd::Zero(rhs.size());
  }
  Eigen::ConjugateGradient<DivergenceFormOperator::Matrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(std::max<Eigen::Index>(2000, 4 * rhs.size()));
  cg.compute(op.matrix());
  Eigen::VectorXd x = cg.solve(rhs);
  const double rel = (op.matrix() * x - rhs).norm() / bnorm;
  if (info) *info = {static_cast<int>(cg.iterations()), rel};
  // CG's internal residual is the preconditioned one; accept a small margin.
  if (!(rel <= 100.0 * tol) || !x.allFinite())
    throw Error(ErrorCode::SolverStall, "conjugate gradients stalled at relative residual " + std::to_string(rel));
  return x;
}

}  // namespace

DivergenceFormOperator DivergenceFormOperator::periodic(const CofactorField& phi) {
  DivergenceFormOperator op;
  op.mode_ = DomainMode::Periodic;
  op.grid_ = phi.grid();
  op.edges_ = build_edges(phi);
  const std::size_t m = op.grid_.size();
  op.cells_.resize(m);
  op.unknown_of_.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    op.cells_[k] = k;
    op.unknown_of_[k] = static_cast<std::ptrdiff_t>(k);
  }
  const double inv = 1.0 / op.grid_.cell_area();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * op.edges_.size());
  for (const auto& e : op.edges_) {
    if (e.weight < 0.0) op.monotone_ = false;
    const auto a = static_cast<int>(e.a), b = static_cast<int>(e.b);
    const double w = e.weight * inv;
    trip.emplace_back(a, a, w);
    trip.emplace_back(b, b, w);
    trip.emplace_back(a, b, -w);
    trip.emplace_back(b, a, -w);
  }
  op.matrix_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  op.matrix_.setFromTriplets(trip.begin(), trip.end());
  op.matrix_.makeCompressed();
  return op;
}

DivergenceFormOperator DivergenceFormOperator::dirichlet(const CofactorField& phi, const Section& S) {
  require_same_grid(phi.grid(), S.grid(), "dirichlet operator");
  DivergenceFormOperator op;
  op.mode_ = DomainMode::Dirichlet;
  op.grid_ = phi.grid();
  op.edges_ = build_edges(phi);
  op.unknown_of_.assign(op.grid_.size(), -1);
  for (auto o : S.members()) {
    const auto k = S.cell_index(o);
    op.unknown_of_[k] = static_cast<std::ptrdiff_t>(op.cells_.size());
    op.cells_.push_back(k);
  }
  const double inv = 1.0 / op.grid_.cell_area();
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : op.edges_) {
    if (e.weight < 0.0) op.monotone_ = false;
    const auto ua = op.unknown_of_[e.a], ub = op.unknown_of_[e.b];
    const double w = e.weight * inv;
    if (ua >= 0) trip.emplace_back(ua, ua, w);
    if (ub >= 0) trip.emplace_back(ub, ub, w);
    if (ua >= 0 && ub >= 0) {
      trip.emplace_back(ua, ub, -w);
      trip.emplace_back(ub, ua, -w);
    }
  }
  const auto m = static_cast<Eigen::Index>(op.cells_.size());
  op.matrix_.resize(m, m);
  op.matrix_.setFromTriplets(trip.begin(), trip.end());
  op.matrix_.makeCompressed();
  return op;
}

TorusField DivergenceFormOperator::apply(const TorusField& u) const {
  require_same_grid(grid_, u.grid(), "operator apply");
  TorusField out(grid_);
  auto& v = out.mutable_values();
  const double inv = 1.0 / grid_.cell_area();
  for (const auto& e : edges_) {
    const double flux = e.weight * inv * (u[e.b] - u[e.a]);
    v[e.a] += flux;
    v[e.b] -= flux;
  }
  return out;
}

double DivergenceFormOperator::energy(const TorusField& u) const {
  require_same_grid(grid_, u.grid(), "operator energy");
  double s = 0.0;
  for (const auto& e : edges_) {
    const double du = u[e.b] - u[e.a];
    s += e.weight * du * du;
  }
  return s;
}

double DivergenceFormOperator::smallest_ritz_value(std::uint64_t seed, int steps) const {
  const auto m = static_cast<Eigen::Index>(unknowns());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd q(m);
  for (Eigen::Index k = 0; k < m; ++k) q[k] = nd(rng);
  q.normalize();
  const int k_max = static_cast<int>(std::min<Eigen::Index>(steps, m));
  Eigen::MatrixXd Q(m, k_max);
  std::vector<double> alpha, beta;
  for (int k = 0; k < k_max; ++k) {
    Q.col(k) = q;
    Eigen::VectorXd w = matrix_ * q;
    alpha.push_back(q.dot(w));
    for (int r = 0; r <= k; ++r) w -= Q.col(r).dot(w) * Q.col(r);  // full reorthogonalization
    const double b = w.norm();
    if (b < 1e-14 * std::abs(alpha.back()) || k + 1 == k_max) break;
    beta.push_back(b);
    q = w / b;
  }
  const int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int r = 0; r < k; ++r) {
    T(r, r) = alpha[static_cast<std::size_t>(r)];
    if (r + 1 < k) T(r, r + 1) = T(r + 1, r) = beta[static_cast<std::size_t>(r)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  return es.eigenvalues()[0];
}

// ---------------------------------------------------------------------------

TorusField solve_periodic(const DivergenceFormOperator& op, const TorusField& f, double tol,
                          LinearSolveInfo* info) {
  if (op.mode() != DomainMode::Periodic) throw Error(ErrorCode::InvalidArgument, "operator is not periodic");
  require_same_grid(op.grid(), f.grid(), "periodic solve");
  const TorusField fz = subtract_mean(f);
  const Eigen::VectorXd x = cg_solve(op, -gather(op, fz), tol, info);
  TorusField u(op.grid(), std::vector<double>(x.data(), x.data() + x.size()));
  return subtract_mean(std::move(u));
}

TorusField solve_dirichlet(const DivergenceFormOperator& op, const TorusField& f, const TorusField& boundary,
                           double tol, LinearSolveInfo* info) {
  if (op.mode() != DomainMode::Dirichlet) throw Error(ErrorCode::InvalidArgument, "operator is not Dirichlet");
  require_same_grid(op.grid(), f.grid(), "dirichlet solve");
  require_same_grid(op.grid(), boundary.grid(), "dirichlet boundary");
  Eigen::VectorXd rhs = -gather(op, f);
  const double inv = 1.0 / op.grid().cell_area();
  for (const auto& e : op.edges()) {
    const auto ua = op.unknown_of(e.a), ub = op.unknown_of(e.b);
    if (ua >= 0 && ub < 0) rhs[ua] += e.weight * inv * boundary[e.b];
    if (ub >= 0 && ua < 0) rhs[ub] += e.weight * inv * boundary[e.a];
  }
  const Eigen::VectorXd x = cg_solve(op, rhs, tol, info);
  TorusField u = boundary;
  for (std::size_t k = 0; k < op.unknowns(); ++k) u[op.cells()[k]] = x[static_cast<Eigen::Index>(k)];
  return u;
}

TorusField solve_periodic_lma(const CofactorField& phi, const VectorField& F, double tol, LinearSolveInfo* info) {
  return solve_periodic(DivergenceFormOperator::periodic(phi), periodic_divergence(F), tol, info);
}

TorusField solve_dirichlet_lma(const CofactorField& phi, const VectorField& F, const Section& S, double tol,
                               LinearSolveInfo* info) {
  john_normalize(S);  // rejects degenerate sections
  const auto op = DivergenceFormOperator::dirichlet(phi, S);
  return solve_dirichlet(op, periodic_divergence(F), TorusField(phi.grid()), tol, info);
}

// ---------------------------------------------------------------------------

double GreenFunction::min_on_mask() const {
  double m = std::numeric_limits<double>::infinity();
  for (auto o : section.members()) m = std::min(m, at(o));
  return m;
}

GreenFunction green_function(const DivergenceFormOperator& op, const Section& S, CellOffset pole, double tol) {
  if (!S.contains(pole)) throw Error(ErrorCode::InvalidArgument, "pole outside the section");
  const auto& g = op.grid();
  TorusField f(g);
  f[S.cell_index(pole)] = -1.0 / g.cell_area();  // div(Phi grad g) = -delta
  return GreenFunction{S, pole, solve_dirichlet(op, f, TorusField(g), tol)};
}

GreenFunction green_function(const CofactorField& phi, const Section& S, CellOffset pole, double tol) {
  return green_function(DivergenceFormOperator::dirichlet(phi, S), S, pole, tol);
}

double green_symmetry_defect(const DivergenceFormOperator& op, const Section& S, int pairs, std::uint64_t seed,
                             double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, S.size() - 1);
  double defect = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const CellOffset x = S.members()[pick(rng)], y = S.members()[pick(rng)];
    const auto gx = green_function(op, S, x, tol);
    const auto gy = green_function(op, S, y, tol);
    const double scale = std::max(gx.values.max(), gy.values.max());
    defect = std::max(defect, std::abs(gx.at(y) - gy.at(x)) / scale);
  }
  return defect;
}

double masked_lp_norm(const TorusField& u, const Section& S, double p) {
  return section_lq_norm(u, S, p);
}

double masked_gradient_norm(const TorusField& u, const Section& S, double p) {
  const auto& g = u.grid();
  const double inv_h = 1.0 / g.spacing();
  double s = 0.0;
  auto add = [&](CellOffset o) {
    const double v = u[S.cell_index(o)];
    const double dx = (u[S.cell_index({o.di + 1, o.dj})] - v) * inv_h;
    const double dy = (u[S.cell_index({o.di, o.dj + 1})] - v) * inv_h;
    s += std::pow(std::hypot(dx, dy), p);
  };
  for (auto o : S.members()) add(o);
  for (auto o : S.outer_ring()) add(o);
  return std::pow(s * g.cell_area(), 1.0 / p);
}

LevelSetDecay level_set_decay(const GreenFunction& g) {
  std::vector<double> vals;
  for (auto o : g.section.members()) vals.push_back(g.at(o));
  std::sort(vals.begin(), vals.end(), std::greater<>());
  const double cell = g.section.grid().cell_area();
  auto area_above = [&](double tau) {
    const auto count = std::upper_bound(vals.begin(), vals.end(), tau, std::greater<>()) - vals.begin();
    return static_cast<double>(count) * cell;
  };
  // Start from the median value and iterate the fit window to a fixed point.
  double tau0 = vals[vals.size() / 2];
  LineFit fit;
  double K = 0.0;
  for (int it = 0; it < 8; ++it) {
    std::vector<double> t, la;
    for (int k = 0; k <= 24; ++k) {
      const double tau = tau0 * (1.0 + 4.0 * k / 24.0);
      const double a = area_above(tau);
      if (a <= 0.0) break;
      t.push_back(tau);
      la.push_back(std::log2(a));
    }
    if (t.size() < 4) throw Error(ErrorCode::InsufficientSamples, "level sets vanish too quickly to fit");
    fit = fit_line(t, la);
    K = std::exp2(fit.intercept);
    if (!(fit.slope < 0.0)) throw Error(ErrorCode::InsufficientSamples, "level-set areas do not decay");
    const double next = -1.0 / fit.slope;
    if (std::abs(next - tau0) <= 1e-6 * tau0) {
      tau0 = next;
      break;
    }
    tau0 = next;
  }
  return {tau0, K, fit.r2};
}

GreenReport green_integrability_report(const ConvexPotential& phi, CellIndex x0, double h0, int rungs,
                                       std::span<const double> p_list, std::span<const double> kappa_list,
                                       std::uint64_t seed, double tol) {
  if (rungs < 2) throw Error(ErrorCode::InsufficientSamples, "ladder needs at least two heights");
  const CofactorField cof = cofactor(phi);
  GreenReport report;
  report.min_value = std::numeric_limits<double>::infinity();
  std::vector<double> hs;
  std::vector<std::vector<double>> integrals(p_list.size()), norms(p_list.size()), grads(kappa_list.size());
  double h = h0;
  for (int k = 0; k < rungs; ++k, h *= 0.5) {
    const Section S = extract_section(phi, x0, h);
    const auto op = DivergenceFormOperator::dirichlet(cof, S);
    const auto g = green_function(op, S, {0, 0}, tol);
    report.min_value = std::min(report.min_value, g.min_on_mask());
    if (k == 0) {
      report.decay = level_set_decay(g);
      report.symmetry_defect = green_symmetry_defect(op, S, 3, seed, tol);
    }
    hs.push_back(h);
    for (std::size_t a = 0; a < p_list.size(); ++a) {
      const double nrm = masked_lp_norm(g.values, S, p_list[a]);
      norms[a].push_back(nrm);
      integrals[a].push_back(std::pow(nrm, p_list[a]));
    }
    for (std::size_t a = 0; a < kappa_list.size(); ++a)
      grads[a].push_back(masked_gradient_norm(g.values, S, 1.0 + kappa_list[a]));
  }
  for (std::size_t a = 0; a < p_list.size(); ++a) {
    const auto fit = fit_power_law(hs, integrals[a]);
    for (std::size_t k = 0; k < hs.size(); ++k)
      report.rows.push_back({hs[k], p_list[a], 0.0, norms[a][k], integrals[a][k], fit.exponent, fit.r2});
  }
  for (std::size_t a = 0; a < kappa_list.size(); ++a) {
    const auto fit = fit_power_law(hs, grads[a]);
    for (std::size_t k = 0; k < hs.size(); ++k)
      report.rows.push_back({hs[k], 0.0, kappa_list[a], grads[a][k], 0.0, fit.exponent, fit.r2});
  }
  return report;
}

// ---------------------------------------------------------------------------

double sobolev_ratio(const DivergenceFormOperator& op, const TorusField& w, double p) {
  if (op.mode() != DomainMode::Periodic) throw Error(ErrorCode::InvalidArgument, "sobolev ratio needs the periodic operator");
  if (w.sup_norm() == 0.0) return 0.0;
  const double e = op.energy(w);
  if (!(e > 0.0)) throw Error(ErrorCode::ZeroEnergy, "test function has zero energy");
  return lp_norm(w, p) / std::sqrt(e);
}

TorusField bump_field(TorusGrid grid, const Bump& bump) {
  return TorusField::from_function(grid, [&](Vec2 x) {
    const Vec2 d{wrap_half(x[0] - bump.center[0]), wrap_half(x[1] - bump.center[1])};
    const double s = dot(d, d) / (bump.radius * bump.radius);
    return s < 1.0 ? (1.0 - s) * (1.0 - s) : 0.0;
  });
}

std::vector<Bump> random_bumps(const Section& S, const AffineMap& T, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double smin = T.singular_values()[1];
  std::vector<Bump> out;
  const auto& g = S.grid();
  const double h = g.spacing();
  auto inside = [&](const Bump& b) {
    // Every cell the bump touches must be a member.
    const int reach = static_cast<int>(std::ceil(b.radius / h)) + 1;
    const Vec2 rel = b.center - S.center_point();
    const int ci = static_cast<int>(std::lround(rel[0] / h)), cj = static_cast<int>(std::lround(rel[1] / h));
    for (int di = -reach; di <= reach; ++di)
      for (int dj = -reach; dj <= reach; ++dj) {
        const CellOffset o{ci + di, cj + dj};
        if (norm(S.point(o) - b.center) < b.radius && !S.contains(o)) return false;
      }
    return true;
  };
  for (int attempts = 0; static_cast<int>(out.size()) < count; ++attempts) {
    if (attempts > 100 * count) throw Error(ErrorCode::DegenerateSection, "section too small for test bumps");
    // Center in B_{1/2}, radius below 0.4 * smin: the disc stays inside T(B_{0.9}).
    const double rr = 0.5 * std::sqrt(unit(rng)), th = 6.283185307179586 * unit(rng);
    const Vec2 c = T.apply({rr * std::cos(th), rr * std::sin(th)});
    const Bump b{c, smin * (0.15 + 0.25 * unit(rng))};
    if (inside(b)) out.push_back(b);
  }
  return out;
}

BoundLadder global_bound_ladder(const ConvexPotential& phi, CellIndex x0, double h0, int rungs,
                                const VectorField& F, double tol) {
  const CofactorField cof = cofactor(phi);
  const double fsup = F.sup_norm();
  if (!(fsup > 0.0)) throw Error(ErrorCode::InvalidArgument, "F must be nonzero");
  BoundLadder out;
  double h = h0;
  for (int k = 0; k < rungs; ++k, h *= 0.5) {
    const Section S = extract_section(phi, x0, h);
    const auto u = solve_dirichlet_lma(cof, F, S, tol);
    out.heights.push_back(h);
    out.values.push_back(u.sup_norm() / fsup);
  }
  out.fit = fit_power_law(out.heights, out.values);
  return out;
}

double interior_quotient(const ConvexPotential& phi, CellIndex x0, double h, const VectorField& F, double p,
                         double tol) {
  const Section S = extract_section(phi, x0, h);
  const Section half = extract_section(phi, x0, 0.5 * h);
  const auto u = solve_dirichlet_lma(cofactor(phi), F, S, tol);
  double sup_half = 0.0;
  for (auto o : half.members()) sup_half = std::max(sup_half, std::abs(u[half.cell_index(o)]));
  const double denom = F.sup_norm() + std::pow(h, -1.0 / p) * masked_lp_norm(u, S, p);
  return denom > 0.0 ? sup_half / denom : 0.0;
}

}  // namespace sglab
