#pragma once

// Oscillation decay, Holder fits and Harnack quotients on sections.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sglab/lma_solver.hpp"

namespace sglab {

/// max - min of u over the mask.
double oscillation(const TorusField& u, const Section& S);

/// max over the mask of |div(Phi grad u)| relative to max(diag A) * max|u|.
double homogeneous_residual(const DivergenceFormOperator& op, const TorusField& u, const Section& S);

inline constexpr double kDefaultResidualTol = 1e-6;

struct DecayRung {
  double h = 0.0;
  double osc_h = 0.0;
  double osc_half = 0.0;
  double ratio = 0.0;  // osc_half / osc_h; 0 when osc_h = 0
};

struct OscillationDecay {
  std::vector<DecayRung> rungs;
  double beta_hat = 0.0;  // max ratio
  double residual = 0.0;
};

/// Ratios osc(S(x0, h/2)) / osc(S(x0, h)) for h = h0 / 2^k, k < rungs. u must
/// solve the homogeneous equation on S(x0, h0). Throws ResidualTooLarge.
OscillationDecay oscillation_decay(const TorusField& u, const ConvexPotential& phi, CellIndex x0, double h0,
                                   int rungs, double residual_tol = kDefaultResidualTol);

struct HolderFit {
  double gamma = 0.0;
  double C = 0.0;
  double r2 = 0.0;
  /// "constant" when every shell maximum vanishes, "low_r2" when r2 < 0.8, else "".
  std::string flag;
  std::vector<double> radii;  // distance at which each shell maximum is attained
  std::vector<double> m;
};

/// m(r) = max |u(x) - u(x0)| over cells at periodic distance in [r, r + spacing);
/// log-log least squares of m against the distance attaining it. A constant u
/// yields gamma = +inf with flag "constant". Throws InsufficientSamples.
HolderFit holder_fit(const TorusField& u, CellIndex x0, const std::vector<double>& radii);

/// Geometric radii from 4 spacings to 1/4.
std::vector<double> default_holder_radii(TorusGrid grid, int count = 8);

/// Geometric radii on [max(1/32, 2h), 1/8]: local relative to the unit period.
std::vector<double> local_holder_radii(TorusGrid grid, int count = 8);

/// `count` points drawn uniformly on the torus, snapped to the nearest cell.
std::vector<CellIndex> sample_centers(TorusGrid grid, int count, std::uint64_t seed);

struct EnvelopeHolder {
  std::vector<HolderFit> fits;  // one per center
  /// Fit of max over centers of m(r), abscissa from the maximizing center.
  HolderFit envelope;
};

/// holder_fit at every center plus the fit of their envelope.
EnvelopeHolder holder_fit_envelope(const TorusField& u, const std::vector<CellIndex>& centers,
                                   const std::vector<double>& radii);

/// sup / inf of u over S(x0, h); u >= 0 on S(x0, 2h) and homogeneous there.
/// Throws NegativeInput, ResidualTooLarge.
double harnack_quotient(const TorusField& u, const ConvexPotential& phi, CellIndex x0, double h,
                        double residual_tol = kDefaultResidualTol);

/// Dirichlet solution of div(Phi grad u) = 0 on S(x0, h) with u = b outside.
TorusField homogeneous_solution(const ConvexPotential& phi, const Section& S, const TorusField& boundary,
                                double tol = 1e-12);

}  // namespace sglab
