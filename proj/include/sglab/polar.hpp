#pragma once

// Polar factorization X = grad P o g of maps of the torus, and its time
// regularity along a series X_t.

#include <filesystem>
#include <string>
#include <vector>

#include "sglab/regularity.hpp"

namespace sglab {

/// Maps X_t(x) = x + d_t(x) sampled at the cell centers.
struct MapTimeSeries {
  TorusGrid grid;
  std::vector<double> times;
  std::vector<PeriodicDisplacement> maps;

  /// Throws InvalidArgument / GridMismatch on inconsistent data.
  void validate() const;
  /// d_t X by time differences: centered inside, one-sided at the ends.
  VectorField time_derivative(std::size_t t) const;

  /// Writes manifest.json {times, n} plus map_<k>.bin per timestamp.
  void save(const std::filesystem::path& dir) const;
  /// Reads a manifest written by save (or by hand); file names default to map_<k>.bin.
  static MapTimeSeries load(const std::filesystem::path& manifest);
};

inline constexpr int kPushforwardSubsamples = 4;

/// Cloud-in-cell deposition of the uniform measure through X: every source
/// cell puts mass spacing^2 at its image with bilinear weights, split over
/// subsamples^2 sub-cells (subsamples = 1 deposits at X(center) only). The
/// result is renormalized to unit mass; the factor goes to *normalization.
/// Throws DegenerateMap when a target cell receives no mass.
TorusField pushforward_density(const PeriodicDisplacement& X, double* normalization = nullptr,
                               int subsamples = kPushforwardSubsamples);

struct PolarFactorization {
  TorusField rho;
  ConvexPotential pstar;
  LegendrePotential p;
  /// g = grad P* o X.
  PeriodicDisplacement g{TorusGrid(1)};
  /// ||push(g) - 1||_1, the measure-preservation defect of g.
  double defect = 0.0;
  /// Median and max over cells of periodic-distance(grad P(g(x)), X(x)).
  double residual_median = 0.0;
  double residual_max = 0.0;
  double normalization = 1.0;
};

/// rho = push(X), P* solves det D^2 P* = rho, P = legendre(P*), g = grad P* o X.
/// tol <= 0 means 5 spacings. Throws FactorizationResidualTooLarge when the
/// median residual exceeds tol, plus solver errors.
PolarFactorization factorize(const PeriodicDisplacement& X, double lambda, double Lambda, double tol = 0.0);

struct PolarStep {
  double t = 0.0;
  double defect = 0.0;
  double residual = 0.0;  // median
  HolderFit holder;       // envelope fit of d_t P*
  double good_fraction = 0.0;
  double dt_grad_power[2] = {0.0, 0.0};  // integral rho |d_t grad P*|^(1+kappa), kappa = 0.1, 0.2
};

struct PolarReport {
  std::vector<PolarStep> steps;
  std::vector<TorusField> dt_pstar;
  double gamma_min = 0.0;
  double C_max = 0.0;
  /// "constant" when d_t P* vanishes at every t.
  std::string flag;
};

struct PolarOptions {
  double tol = 0.0;
  int centers = 16;
  std::uint64_t seed = 0;
  std::vector<double> radii;  // empty: local_holder_radii
};

/// Factorizes every X_t (in parallel), differentiates P* in time and fits the
/// spatial Holder regularity of d_t P* per t. Needs >= 3 timestamps.
PolarReport polar_time_regularity(const MapTimeSeries& series, double lambda, double Lambda,
                                  const PolarOptions& opts = {});

/// X_t = grad(|x|^2/2 + eps(t) cos(2 pi x1)) with eps = amplitude sin t, at
/// t = k dt for k < count. Convex while 4 pi^2 amplitude sin t < 1.
MapTimeSeries analytic_polar_family(TorusGrid grid, int count, double dt, double amplitude = 0.03);
/// Exact mean-zero d_t P* of that family at time t.
TorusField analytic_polar_dt_pstar(TorusGrid grid, double t, double amplitude = 0.03);

}  // namespace sglab
