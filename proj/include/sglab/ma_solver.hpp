#pragma once

// Periodic Monge-Ampere solver for det D^2 P* = rho on the torus, with
// P* = |x|^2/2 + q and q mean-zero.
//
// Discretization: pure second derivatives use the 5-point stencil; the mixed
// derivative is evaluated at cell vertices with the compact 4-point stencil.
// The cell Hessian sample P*_12 is the average of the four surrounding vertex
// values (the classic 4-corner stencil). The Monge-Ampere measure of a cell is
//
//   (1 + q_11)(1 + q_22) - mean over the four vertices of (q_12)^2,
//
// whose grid sum is exactly N^2 for every periodic q, so the discrete problem
// is solvable for every unit-mass density.

#include <optional>
#include <string>

#include "sglab/torus.hpp"

namespace sglab {

/// Convex potential P*(x) = |x|^2/2 + slope.x + q(x) with cached derivatives.
class ConvexPotential {
 public:
  ConvexPotential() = default;
  explicit ConvexPotential(SplitPotential split);
  static ConvexPotential from_periodic(TorusField q, Vec2 slope = {0.0, 0.0});
  static ConvexPotential identity(TorusGrid grid);

  const TorusGrid& grid() const { return split_.grid(); }
  const SplitPotential& split() const { return split_; }
  const TorusField& periodic() const { return split_.periodic; }
  Vec2 slope() const { return split_.slope; }

  /// grad P* - x at the cell centers (periodic).
  const VectorField& gradient_offset() const { return gradient_offset_; }
  /// grad P* at an arbitrary point by bilinear interpolation of the offset.
  Vec2 gradient_at(Vec2 x) const { return x + gradient_offset_.sample(x); }

  const TorusField& h11() const { return h11_; }
  const TorusField& h12() const { return h12_; }
  const TorusField& h22() const { return h22_; }
  /// det of the stored Hessian samples.
  const TorusField& hessian_det() const { return hessian_det_; }
  /// Conservative discrete Monge-Ampere measure (what the solver drives to rho).
  const TorusField& ma_measure() const { return ma_measure_; }
  /// Trace of the Hessian samples (discrete Laplacian of P*).
  TorusField laplacian() const { return h11_ + h22_; }

  /// P*11 > 0 and MA measure > floor at every cell.
  bool discretely_convex(double floor = 0.0) const;

  // Solve metadata (zero for potentials built directly).
  double lambda = 0.0;
  double Lambda = 0.0;
  double residual = 0.0;
  int newton_iters = 0;

 private:
  SplitPotential split_;
  VectorField gradient_offset_{TorusGrid(1)};
  TorusField h11_, h12_, h22_, hessian_det_, ma_measure_;
};

/// Conservative MA measure of |x|^2/2 + q.
TorusField ma_measure(const TorusField& q);

struct MaSolveOptions {
  double lambda = 0.0;
  double Lambda = 0.0;
  /// <= 0 selects 1e-8 * max(1, Lambda).
  double tol = 0.0;
  int max_iters = 60;
  /// Warm start for q (must be on the same grid).
  const TorusField* initial = nullptr;
};

double default_ma_tol(double Lambda);

/// Damped Newton solve of det D^2 (|x|^2/2 + q) = rho.
/// Throws BadDensity, NonConvergence, LostConvexity.
ConvexPotential solve_ma_periodic(const TorusField& rho, const MaSolveOptions& opts);
ConvexPotential solve_ma_periodic(const TorusField& rho, double lambda, double Lambda, double tol);

/// Cofactor matrix (det D^2 P*)(D^2 P*)^{-1} of the stored Hessian samples.
struct CofactorField {
  TorusField phi11, phi12, phi21, phi22;

  explicit CofactorField(TorusGrid grid) : phi11(grid), phi12(grid), phi21(grid), phi22(grid) {}
  static CofactorField identity(TorusGrid grid);
  /// Constant symmetric tensor [[a, b], [b, c]].
  static CofactorField constant(TorusGrid grid, double a, double b, double c);
  /// Cofactor of the symmetric Hessian samples [[h11, h12], [h12, h22]].
  static CofactorField from_hessian(const TorusField& h11, const TorusField& h12,
                                    const TorusField& h22);

  const TorusGrid& grid() const { return phi11.grid(); }
  bool positive_definite() const;
};

CofactorField cofactor(const ConvexPotential& p);

/// Legendre transform P(x) = sup_y (x.y - P*(y)) with its gradient map.
struct LegendrePotential {
  ConvexPotential potential;
  /// grad P - x at cell centers, from the refined argmax.
  VectorField gradient_offset{TorusGrid(1)};

  const TorusGrid& grid() const { return potential.grid(); }
  Vec2 gradient_at(Vec2 x) const { return x + gradient_offset.sample(x); }
};

/// Throws NonConvexInput when P* is not discretely convex.
LegendrePotential legendre(const ConvexPotential& p);

/// max over cells of periodic-distance(grad P*(grad P(x)), x).
double legendre_inversion_residual(const ConvexPotential& pstar, const LegendrePotential& p);

}  // namespace sglab
