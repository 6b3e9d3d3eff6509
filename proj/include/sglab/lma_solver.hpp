#pragma once

// Linearized Monge-Ampere operator div(Phi grad u) in flux form, periodic on
// the torus or with Dirichlet data on a section, plus Green's functions.
//
// The symmetric tensor Phi is split per cell into nonnegative weights on the
// axis and diagonal directions:
//   a = Phi11 - |Phi12|, b = Phi22 - |Phi12|, c = max(Phi12, 0), d = max(-Phi12, 0)
// and each grid edge carries the harmonic mean of its two end-cell weights.
// For Phi = I this is the 5-point Laplacian; for diagonally dominant Phi the
// matrix is an M-matrix.

#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <vector>

#include "sglab/fit.hpp"
#include "sglab/sections.hpp"

namespace sglab {

enum class DomainMode { Periodic, Dirichlet };

struct LinearSolveInfo {
  int iterations = 0;
  double relative_residual = 0.0;
};

class DivergenceFormOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double>;

  struct Edge {
    std::size_t a = 0;  // torus cell indices
    std::size_t b = 0;
    double weight = 0.0;
  };

  /// Throws IndefiniteOperator if Phi is not positive definite somewhere.
  static DivergenceFormOperator periodic(const CofactorField& phi);
  static DivergenceFormOperator dirichlet(const CofactorField& phi, const Section& S);

  DomainMode mode() const { return mode_; }
  const TorusGrid& grid() const { return grid_; }
  /// A = -div(Phi grad) restricted to the unknowns (positive semidefinite).
  const Matrix& matrix() const { return matrix_; }
  std::size_t unknowns() const { return cells_.size(); }
  /// Torus cell index of each unknown.
  const std::vector<std::size_t>& cells() const { return cells_; }
  /// Unknown index of a torus cell, or -1 outside the mask.
  std::ptrdiff_t unknown_of(std::size_t cell) const { return unknown_of_[cell]; }
  /// All torus edges (both modes keep the full list).
  const std::vector<Edge>& edges() const { return edges_; }
  /// Every edge weight is nonnegative.
  bool monotone() const { return monotone_; }

  /// div(Phi grad u) on the whole torus.
  TorusField apply(const TorusField& u) const;
  /// Sum over edges of weight * (u_a - u_b)^2, the discrete integral of Phi grad u . grad u.
  double energy(const TorusField& u) const;
  /// Smallest Ritz value of a short Lanczos run from a random start.
  double smallest_ritz_value(std::uint64_t seed, int steps = 40) const;

 private:
  DomainMode mode_ = DomainMode::Periodic;
  TorusGrid grid_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> cells_;
  std::vector<std::ptrdiff_t> unknown_of_;
  Matrix matrix_;
  bool monotone_ = true;
};

inline constexpr double kDefaultLmaTol = 1e-10;

/// Solves div(Phi grad u) = f (f is mean-projected), returns mean-zero u.
/// Throws SolverStall.
TorusField solve_periodic(const DivergenceFormOperator& op, const TorusField& f, double tol = kDefaultLmaTol,
                          LinearSolveInfo* info = nullptr);
/// Solves div(Phi grad u) = f on the mask with u = boundary outside it.
TorusField solve_dirichlet(const DivergenceFormOperator& op, const TorusField& f, const TorusField& boundary,
                           double tol = kDefaultLmaTol, LinearSolveInfo* info = nullptr);

/// div(Phi grad u) = div F on the torus, with the centered divergence of F.
TorusField solve_periodic_lma(const CofactorField& phi, const VectorField& F, double tol = kDefaultLmaTol,
                              LinearSolveInfo* info = nullptr);
/// Same on a section with u = 0 outside the mask. Throws DegenerateSection.
TorusField solve_dirichlet_lma(const CofactorField& phi, const VectorField& F, const Section& S,
                               double tol = kDefaultLmaTol, LinearSolveInfo* info = nullptr);

struct GreenFunction {
  Section section;
  CellOffset pole;
  /// Values on the torus, zero outside the mask.
  TorusField values;

  double at(CellOffset o) const { return values[section.cell_index(o)]; }
  double min_on_mask() const;
};

/// -div(Phi grad g) = delta_pole, delta = 1/spacing^2 at the pole cell.
GreenFunction green_function(const DivergenceFormOperator& dirichlet_op, const Section& S, CellOffset pole,
                             double tol = 1e-12);
GreenFunction green_function(const CofactorField& phi, const Section& S, CellOffset pole, double tol = 1e-12);

/// Max over sampled pole pairs of |g(x, y) - g(y, x)| / max g.
double green_symmetry_defect(const DivergenceFormOperator& dirichlet_op, const Section& S, int pairs,
                             std::uint64_t seed, double tol = 1e-12);

/// (integral over the mask of |u|^p)^(1/p).
double masked_lp_norm(const TorusField& u, const Section& S, double p);
/// L^p norm of the forward-difference gradient over the mask and its ring.
double masked_gradient_norm(const TorusField& u, const Section& S, double p);

/// area{g > tau} ~ K 2^(-tau / tau0), fitted over tau in [tau0, 5 tau0].
struct LevelSetDecay {
  double tau0 = 0.0;
  double K = 0.0;
  double r2 = 0.0;
};
LevelSetDecay level_set_decay(const GreenFunction& g);

struct GreenReportRow {
  double h = 0.0;
  double p = 0.0;      // 0 on gradient rows
  double kappa = 0.0;  // 0 on value rows
  double norm = 0.0;   // ||g||_{L^p} or ||grad g||_{L^{1+kappa}}
  double integral = 0.0;  // integral of g^p (value rows)
  double slope = 0.0;  // ladder exponent in h: of integral(g^p), or of the gradient norm
  double r2 = 0.0;
};

struct GreenReport {
  std::vector<GreenReportRow> rows;
  double symmetry_defect = 0.0;
  double min_value = 0.0;
  LevelSetDecay decay;  // at the largest height
};

/// Green's functions with pole x0 on S(x0, h0 / 2^k), k < rungs.
GreenReport green_integrability_report(const ConvexPotential& phi, CellIndex x0, double h0, int rungs,
                                       std::span<const double> p_list, std::span<const double> kappa_list,
                                       std::uint64_t seed = 1, double tol = 1e-12);

/// ||w||_{L^p} / (integral Phi grad w . grad w)^(1/2); 0 for w = 0, ZeroEnergy
/// for a nonzero constant.
double sobolev_ratio(const DivergenceFormOperator& periodic_op, const TorusField& w, double p);

struct Bump {
  Vec2 center;
  double radius = 0.0;
};
/// (1 - |x - c|^2 / r^2)^2 inside the disc, zero outside.
TorusField bump_field(TorusGrid grid, const Bump& bump);
/// Random discs inside T(B_{0.9}) for the John map of S, each supported on member cells.
std::vector<Bump> random_bumps(const Section& S, const AffineMap& T, int count, std::uint64_t seed);

struct BoundLadder {
  std::vector<double> heights;
  std::vector<double> values;  // sup |u| / ||F||_inf
  PowerFit fit;
};

/// Dirichlet solves on S(x0, h0 / 2^k) with fixed F.
BoundLadder global_bound_ladder(const ConvexPotential& phi, CellIndex x0, double h0, int rungs,
                                const VectorField& F, double tol = kDefaultLmaTol);

/// sup_{S(x0,h/2)} |u| / (||F||_inf + h^(-1/p) ||u||_{L^p(S(x0,h))}).
double interior_quotient(const ConvexPotential& phi, CellIndex x0, double h, const VectorField& F, double p,
                         double tol = kDefaultLmaTol);

}  // namespace sglab
