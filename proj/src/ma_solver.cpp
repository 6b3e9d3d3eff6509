#include "sglab/ma_solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sglab {
namespace {

struct Hessians {
  TorusField h11, h12, h22, det, measure;
};

/// Compact mixed difference at the vertex shared by cells (i..i+1, j..j+1).
double vertex_mixed(const TorusField& q, int i, int j, double inv_h2) {
  return (q(i + 1, j + 1) - q(i + 1, j) - q(i, j + 1) + q(i, j)) * inv_h2;
}

Hessians compute_hessians(const TorusField& q) {
  const auto& g = q.grid();
  const int n = g.n();
  const double inv_h2 = 1.0 / g.cell_area();
  TorusField vm(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) vm[g.index(i, j)] = vertex_mixed(q, i, j, inv_h2);

  Hessians h{TorusField(g), TorusField(g), TorusField(g), TorusField(g), TorusField(g)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto k = g.index(i, j);
      const double q11 = (q(i + 1, j) - 2.0 * q(i, j) + q(i - 1, j)) * inv_h2;
      const double q22 = (q(i, j + 1) - 2.0 * q(i, j) + q(i, j - 1)) * inv_h2;
      const double m0 = vm(i, j), m1 = vm(i - 1, j), m2 = vm(i, j - 1), m3 = vm(i - 1, j - 1);
      const double h12 = 0.25 * (m0 + m1 + m2 + m3);
      const double sq = 0.25 * (m0 * m0 + m1 * m1 + m2 * m2 + m3 * m3);
      h.h11[k] = 1.0 + q11;
      h.h22[k] = 1.0 + q22;
      h.h12[k] = h12;
      h.det[k] = h.h11[k] * h.h22[k] - h12 * h12;
      h.measure[k] = h.h11[k] * h.h22[k] - sq;
    }
  }
  return h;
}

using SpMat = Eigen::SparseMatrix<double>;

/// Linearization of the MA measure at q, with the equation at cell 0 replaced
/// by delta_0 = 0 (the rows sum to zero, so that equation is redundant).
SpMat assemble_jacobian(const TorusField& q, const Hessians& h) {
  const auto& g = q.grid();
  const int n = g.n();
  const double inv_h2 = 1.0 / g.cell_area();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.size() * 21);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto row = static_cast<int>(g.index(i, j));
      if (row == 0) {
        trip.emplace_back(0, 0, 1.0);
        continue;
      }
      const double a = h.h22[static_cast<std::size_t>(row)] * inv_h2;
      const double b = h.h11[static_cast<std::size_t>(row)] * inv_h2;
      auto add = [&](int ii, int jj, double v) {
        trip.emplace_back(row, static_cast<int>(g.index(ii, jj)), v);
      };
      add(i + 1, j, a);
      add(i - 1, j, a);
      add(i, j + 1, b);
      add(i, j - 1, b);
      add(i, j, -2.0 * (a + b));
      // -1/2 * sum_v m_v * D12_v, vertex v labelled by its lower-left cell.
      const int vi[4] = {i, i - 1, i, i - 1};
      const int vj[4] = {j, j, j - 1, j - 1};
      for (int v = 0; v < 4; ++v) {
        const double c = -0.5 * vertex_mixed(q, vi[v], vj[v], inv_h2) * inv_h2;
        add(vi[v] + 1, vj[v] + 1, c);
        add(vi[v] + 1, vj[v], -c);
        add(vi[v], vj[v] + 1, -c);
        add(vi[v], vj[v], c);
      }
    }
  }
  SpMat J(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  J.setFromTriplets(trip.begin(), trip.end());
  J.makeCompressed();
  return J;
}

double sup_diff(const TorusField& a, const TorusField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.grid().size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

ConvexPotential::ConvexPotential(SplitPotential split) : split_(std::move(split)) {
  gradient_offset_ = split_.gradient_offset();
  auto h = compute_hessians(split_.periodic);
  h11_ = std::move(h.h11);
  h12_ = std::move(h.h12);
  h22_ = std::move(h.h22);
  hessian_det_ = std::move(h.det);
  ma_measure_ = std::move(h.measure);
}

ConvexPotential ConvexPotential::from_periodic(TorusField q, Vec2 slope) {
  return ConvexPotential(SplitPotential{std::move(q), slope});
}

ConvexPotential ConvexPotential::identity(TorusGrid grid) { return from_periodic(TorusField(grid)); }

bool ConvexPotential::discretely_convex(double floor) const {
  for (std::size_t k = 0; k < grid().size(); ++k)
    if (!(h11_[k] > 0.0) || !(ma_measure_[k] > floor)) return false;
  return true;
}

TorusField ma_measure(const TorusField& q) { return compute_hessians(q).measure; }

double default_ma_tol(double Lambda) { return 1e-8 * std::max(1.0, Lambda); }

ConvexPotential solve_ma_periodic(const TorusField& rho, double lambda, double Lambda, double tol) {
  MaSolveOptions o;
  o.lambda = lambda;
  o.Lambda = Lambda;
  o.tol = tol;
  return solve_ma_periodic(rho, o);
}

ConvexPotential solve_ma_periodic(const TorusField& rho, const MaSolveOptions& opts) {
  const auto& g = rho.grid();
  if (!rho.all_finite() || rho.min() <= 0.0)
    throw Error(ErrorCode::BadDensity, "density must be positive and finite");
  const double mass = integral(rho);
  if (std::abs(mass - 1.0) > 1e-8)
    throw Error(ErrorCode::BadDensity, "density mass " + std::to_string(mass) + " is not 1");
  const double lambda = opts.lambda > 0.0 ? opts.lambda : rho.min();
  const double Lambda = opts.Lambda > 0.0 ? opts.Lambda : rho.max();
  const double slack = 1e-9 * std::max(1.0, Lambda);
  if (rho.min() < lambda - slack || rho.max() > Lambda + slack || lambda > Lambda)
    throw Error(ErrorCode::BadDensity, "density outside [lambda, Lambda]");
  const double tol = opts.tol > 0.0 ? opts.tol : default_ma_tol(Lambda);
  const double floor = std::max(1e-6, lambda / 10.0);

  // The discrete measure sums to exactly one; match the target to it.
  const TorusField target = (1.0 / mass) * rho;

  TorusField q(g);
  if (opts.initial != nullptr) {
    require_same_grid(g, opts.initial->grid(), "MA warm start");
    q = subtract_mean(*opts.initial);
  }
  Hessians h = compute_hessians(q);
  if (!(h.h11.min() > 0.0) || !(h.measure.min() > floor)) {
    q = TorusField(g);
    h = compute_hessians(q);
  }
  double res = sup_diff(h.measure, target);

  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  int iters = 0;
  while (res > tol) {
    if (iters >= opts.max_iters)
      throw Error(ErrorCode::NonConvergence,
                  "Newton iteration cap reached, residual " + std::to_string(res));
    SpMat J = assemble_jacobian(q, h);
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success)
      throw Error(ErrorCode::NonConvergence, "singular Newton system");
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k)
      rhs[static_cast<Eigen::Index>(k)] = target[k] - h.measure[k];
    rhs[0] = 0.0;
    const Eigen::VectorXd delta = lu.solve(rhs);

    double theta = 1.0;
    bool ever_admissible = false;
    for (;;) {
      TorusField trial = q;
      for (std::size_t k = 0; k < g.size(); ++k)
        trial[k] += theta * delta[static_cast<Eigen::Index>(k)];
      Hessians ht = compute_hessians(trial);
      const bool admissible = ht.h11.min() > 0.0 && ht.measure.min() > floor;
      ever_admissible = ever_admissible || admissible;
      if (admissible) {
        const double tr = sup_diff(ht.measure, target);
        if (tr < res) {
          q = subtract_mean(std::move(trial));
          h = compute_hessians(q);
          res = sup_diff(h.measure, target);
          break;
        }
      }
      theta *= 0.5;
      if (theta < std::ldexp(1.0, -20)) {
        if (!ever_admissible)
          throw Error(ErrorCode::LostConvexity, "no step keeps the potential convex");
        throw Error(ErrorCode::NonConvergence,
                    "Newton damping below floor, residual " + std::to_string(res));
      }
    }
    ++iters;
  }

  ConvexPotential out = ConvexPotential::from_periodic(std::move(q));
  out.lambda = lambda;
  out.Lambda = Lambda;
  out.residual = sup_diff(out.ma_measure(), rho);
  out.newton_iters = iters;
  return out;
}

// ---------------------------------------------------------------------------

CofactorField CofactorField::identity(TorusGrid grid) { return constant(grid, 1.0, 0.0, 1.0); }

CofactorField CofactorField::constant(TorusGrid grid, double a, double b, double c) {
  CofactorField f(grid);
  f.phi11 = TorusField(grid, a);
  f.phi12 = TorusField(grid, b);
  f.phi21 = TorusField(grid, b);
  f.phi22 = TorusField(grid, c);
  return f;
}

bool CofactorField::positive_definite() const {
  for (std::size_t k = 0; k < grid().size(); ++k) {
    const double tr = phi11[k] + phi22[k];
    const double det = phi11[k] * phi22[k] - phi12[k] * phi21[k];
    if (!(tr > 0.0) || !(det > 0.0)) return false;
  }
  return true;
}

CofactorField CofactorField::from_hessian(const TorusField& h11, const TorusField& h12,
                                          const TorusField& h22) {
  CofactorField f(h11.grid());
  f.phi11 = h22;
  f.phi22 = h11;
  f.phi12 = -1.0 * h12;
  f.phi21 = f.phi12;
  return f;
}

CofactorField cofactor(const ConvexPotential& p) {
  return CofactorField::from_hessian(p.h11(), p.h12(), p.h22());
}

// ---------------------------------------------------------------------------

LegendrePotential legendre(const ConvexPotential& pstar) {
  const auto& g = pstar.grid();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(pstar.h11()[k] > 0.0) || !(pstar.h22()[k] > 0.0) || !(pstar.hessian_det()[k] > 0.0))
      throw Error(ErrorCode::NonConvexInput, "Legendre transform needs a discretely convex potential");

  const int n = g.n();
  const double h = g.spacing();
  const Vec2 v = pstar.slope();
  const TorusField& q = pstar.periodic();
  const VectorField& off = pstar.gradient_offset();

  // P(x) = |z|^2/2 - min_y (|y - z|^2/2 + q(y)) with z = x - v; y runs over
  // lifted cell centers. Offsets are relative to the center nearest z.
  std::vector<double> pvals(g.size());
  VectorField grad_off(g);
  int oi = 0, oj = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto k = g.index(i, j);
      const Vec2 x = g.center(i, j);
      const Vec2 z = x - v;
      const double bi = std::floor(z[0] / h);
      const double bj = std::floor(z[1] / h);
      const int ci = static_cast<int>(std::fmod(bi, n));
      const int cj = static_cast<int>(std::fmod(bj, n));
      auto energy = [&](int di, int dj) {
        const Vec2 y{(bi + di + 0.5) * h, (bj + dj + 0.5) * h};
        const Vec2 e = y - z;
        return 0.5 * dot(e, e) + q(ci + di, cj + dj);
      };
      double best = energy(oi, oj);
      // Steepest descent over the 8-neighbourhood, then a wider check.
      for (int radius = 1; radius <= 3; radius += 2) {
        bool moved = true;
        while (moved) {
          moved = false;
          int bi_ = oi, bj_ = oj;
          for (int a = -radius; a <= radius; ++a)
            for (int b = -radius; b <= radius; ++b) {
              const double e = energy(oi + a, oj + b);
              if (e < best) {
                best = e;
                bi_ = oi + a;
                bj_ = oj + b;
              }
            }
          if (bi_ != oi || bj_ != oj) {
            oi = bi_;
            oj = bj_;
            moved = true;
          }
        }
      }
      const auto yk = g.index(ci + oi, cj + oj);
      const Vec2 y0{(bi + oi + 0.5) * h, (bj + oj + 0.5) * h};
      // One Newton step on y -> x.y - P*(y) from the lattice maximizer.
      const Vec2 grad = z - y0 - Vec2{off.c1[yk] - v[0], off.c2[yk] - v[1]};
      const double a11 = pstar.h11()[yk], a12 = pstar.h12()[yk], a22 = pstar.h22()[yk];
      const double det = a11 * a22 - a12 * a12;
      const Vec2 s{(a22 * grad[0] - a12 * grad[1]) / det, (a11 * grad[1] - a12 * grad[0]) / det};
      const Vec2 ystar = y0 + s;
      pvals[k] = 0.5 * dot(v, v) - best + 0.5 * dot(grad, s);
      grad_off.c1[k] = ystar[0] - x[0];
      grad_off.c2[k] = ystar[1] - x[1];
    }
  }
  TorusField p = subtract_mean(TorusField(g, std::move(pvals)));
  LegendrePotential out{ConvexPotential::from_periodic(std::move(p), Vec2{-v[0], -v[1]}),
                        std::move(grad_off)};
  return out;
}

double legendre_inversion_residual(const ConvexPotential& pstar, const LegendrePotential& p) {
  const auto& g = pstar.grid();
  require_same_grid(g, p.grid(), "Legendre inversion");
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.center(k);
    const Vec2 y = x + p.gradient_offset.at(k);
    worst = std::max(worst, periodic_distance(pstar.gradient_at(y), x));
  }
  return worst;
}

}  // namespace sglab
