#pragma once

// Dual semi-geostrophic system on the torus:
//   d_t rho + div(rho U) = 0,  U = (x - grad P*)^perp,  det D^2 P* = rho.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sglab/lma_solver.hpp"
#include "sglab/regularity.hpp"

namespace sglab {

struct Certificates {
  double mass = 0.0;
  double min_rho = 0.0;
  double max_rho = 0.0;
  double u_inf = 0.0;
  double ma_residual = 0.0;
  /// Mass renormalization factor applied by the last transport step.
  double renorm_factor = 1.0;
  int newton_iters = 0;
};

struct SGOptions {
  /// Density bounds of the initial datum; <= 0 takes them from rho0.
  double lambda = 0.0;
  double Lambda = 0.0;
  /// MA tolerance; <= 0 selects the solver default.
  double tol = 0.0;
  double cfl = 0.5;
  /// Recompute the Legendre transform on every step.
  bool legendre = true;
  /// Throw on certificate violations; otherwise they are only recorded.
  bool strict = true;
};

struct SGState {
  int step = 0;
  double t = 0.0;
  TorusField rho;
  ConvexPotential pstar;
  std::optional<LegendrePotential> p;
  /// (x - grad P*)^perp with x - grad P* reduced to [-1/2, 1/2)^2.
  VectorField U{TorusGrid(1)};
  Certificates cert;
  /// Admissible density window including the renormalization envelope.
  double lambda = 0.0;
  double Lambda = 0.0;
};

inline constexpr double kRenormTolerance = 1e-6;

/// U = d^perp with d = x - grad P* as a periodic displacement.
VectorField velocity_from_potential(const ConvexPotential& pstar);

struct TransportResult {
  TorusField rho;
  double renorm_factor = 1.0;
  double pre_min = 0.0;
  double pre_max = 0.0;
};

/// Semi-Lagrangian step rho'(x) = rho(x - dt U(x)) with bilinear interpolation,
/// then one multiplicative mass renormalization. Throws CflViolation, and
/// InvariantViolation when the renormalization leaves 1 +- 1e-6.
TransportResult transport_step(const TorusField& rho, const VectorField& U, double dt, double cfl = 0.5);

SGState initial_state(const TorusField& rho0, const SGOptions& opts);
/// Transport, warm-started MA solve, Legendre, velocity, certificates.
SGState step(const SGState& s, double dt, const SGOptions& opts);

/// Certificate check; returns the name of the first violated certificate or "".
std::string violated_certificate(const SGState& s);

/// (q_next - q_prev) / (t_next - t_prev), mean-zero.
TorusField time_derivative_potential(const SGState& prev, const SGState& next);
/// Time difference of grad P* between two states.
VectorField time_derivative_gradient(const SGState& prev, const SGState& next);
/// d_t P(x) = -d_t P*(grad P(x)), mean-zero.
TorusField legendre_time_derivative(const TorusField& dt_pstar, const LegendrePotential& p);

/// d_t P* from the state alone: the mean-zero solution of div(Phi grad w) = div(-rho U).
TorusField lma_time_derivative(const SGState& s, double tol = kDefaultLmaTol);

/// ||div(Phi grad d_t P*) - div(-rho U)||_2 / ||div(-rho U)||_2 at a state.
double lma_residual(const SGState& s, const TorusField& dt_pstar);

struct EulerianFields {
  TorusField p;      // P - |x|^2/2, mean-zero
  VectorField u;     // physical velocity
  VectorField u_g;   // geostrophic wind (grad p)^perp
};

/// u = (d_t grad P*)(grad P) + D^2 P*(grad P) (grad P - x)^perp; requires s.p.
EulerianFields recover_eulerian(const SGState& s, const VectorField& dt_grad_pstar);

/// integral of rho |x - grad P*|^2.
double transport_cost(const SGState& s);

/// (integral |D^2 P*|_F^p)^(1/p) over the torus, Hessian including the identity.
double hessian_lp_norm(const ConvexPotential& pstar, double p);

/// integral rho |v|^(1+kappa).
double weighted_power_integral(const TorusField& rho, const VectorField& v, double kappa);

inline constexpr double kKappas[2] = {0.1, 0.2};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  Certificates cert;
  /// NaN when not evaluated on this step.
  double lma_residual = 0.0;
  double dt_pstar_l2 = 0.0;
  double dt_pstar_sup = 0.0;
  /// ||D^2 P*||_{L^{1+eps}}.
  double w21 = 0.0;
  /// integral rho |d_t grad P*|^(1+kappa) for kappa in kKappas.
  double dt_grad_power[2] = {0.0, 0.0};
};

struct TimeSeriesDiagnostics {
  TorusGrid grid;
  std::vector<StepRecord> records;
  /// d_t P* per record; empty unless fields were kept.
  std::vector<TorusField> dt_pstar;
};

struct RunOptions {
  SGOptions sg;
  double dt = 2e-3;
  int steps = 10;
  /// Every k-th step gets an LMA residual (0 disables).
  int lma_every = 1;
  bool keep_fields = true;
  /// Kept d_t P* fields: time differences, or the elliptic solve at each state.
  enum class DtSource { difference, elliptic } field_source = DtSource::elliptic;
  double w21_eps = 0.1;
  std::size_t queue_capacity = 4;
  /// Called on the diagnostics thread with each state, in step order.
  std::function<void(const SGState&)> on_state;
};

struct RunResult {
  SGState final_state;
  TimeSeriesDiagnostics diagnostics;
  /// First violated certificate in soft mode, "" otherwise.
  std::string violation;
  int violation_step = -1;
};

/// Time loop. d_t P* is centered in the interior and one-sided at the ends.
/// Diagnostics are computed on a separate thread fed through a bounded queue;
/// on_record is called from that thread, in step order.
RunResult run_sg(const TorusField& rho0, const RunOptions& opts,
                 const std::function<void(const StepRecord&)>& on_record = {});

struct HolderSample {
  int step = 0;
  double t = 0.0;
  CellIndex center;
  HolderFit fit;
};

struct HolderTimeReport {
  std::vector<HolderSample> samples;
  /// Per step: fit of the envelope max_centers m(r), one entry per record.
  std::vector<HolderFit> envelope;
  /// Min over time of the envelope exponent.
  double gamma_min = 0.0;
  /// Max over time of the envelope prefactor.
  double C_max = 0.0;
  /// Fraction of (step, center) fits with r2 >= 0.8.
  double good_fraction = 0.0;
  /// Max over time of the d_t grad P* power integrals, per kappa.
  double dt_grad_power_max[2] = {0.0, 0.0};
  /// "constant" when every sample is constant.
  std::string flag;
};

/// Samples `centers` points uniformly on the torus with the given seed and fits
/// holder_fit of d_t P* there on every recorded step. Radii default to
/// local_holder_radii. Needs >= 20 records
/// with kept fields; throws InsufficientSamples.
HolderTimeReport holder_in_time_report(const TimeSeriesDiagnostics& run, int centers, std::uint64_t seed,
                                       const std::vector<double>& radii = {});

}  // namespace sglab
