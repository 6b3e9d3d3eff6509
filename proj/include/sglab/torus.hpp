#pragma once

// Periodic grid arithmetic on the unit torus [0,1)^2.
//
// Cell (i, j) has center ((i + 1/2)/N, (j + 1/2)/N); i runs along x1 and is
// the outer (row) index of the storage, j runs along x2.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sglab/error.hpp"

namespace sglab {

using Vec2 = std::array<double, 2>;

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a[0], s * a[1]}; }
inline double dot(Vec2 a, Vec2 b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(Vec2 a) { return std::hypot(a[0], a[1]); }
/// Rotation by +pi/2: (a1, a2) -> (-a2, a1).
inline Vec2 perp(Vec2 a) { return {-a[1], a[0]}; }

/// Representative of t modulo 1 in [-1/2, 1/2).
inline double wrap_half(double t) { return t - std::floor(t + 0.5); }
/// Representative of t modulo 1 in [0, 1).
inline double wrap_unit(double t) { return t - std::floor(t); }

double periodic_distance(Vec2 a, Vec2 b);

struct CellIndex {
  int i = 0;
  int j = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

class TorusGrid {
 public:
  TorusGrid() = default;
  explicit TorusGrid(int n_cells_per_side);

  int n() const { return n_; }
  double spacing() const { return spacing_; }
  double cell_area() const { return spacing_ * spacing_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }

  int wrap(int k) const {
    k %= n_;
    return k < 0 ? k + n_ : k;
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(wrap(i)) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(wrap(j));
  }
  CellIndex cell(std::size_t k) const {
    return {static_cast<int>(k / static_cast<std::size_t>(n_)),
            static_cast<int>(k % static_cast<std::size_t>(n_))};
  }
  double coord(int i) const { return (i + 0.5) * spacing_; }
  Vec2 center(int i, int j) const { return {coord(i), coord(j)}; }
  Vec2 center(std::size_t k) const {
    auto c = cell(k);
    return center(c.i, c.j);
  }
  /// Cell whose center is nearest to x (periodic).
  CellIndex nearest_cell(Vec2 x) const;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) { return a.n_ == b.n_; }

 private:
  int n_ = 1;
  double spacing_ = 1.0;
};

/// Scalar field sampled at cell centers.
class TorusField {
 public:
  TorusField() = default;
  explicit TorusField(TorusGrid grid, double fill = 0.0);
  TorusField(TorusGrid grid, std::vector<double> values);

  static TorusField from_function(TorusGrid grid, const std::function<double(Vec2)>& f);

  const TorusGrid& grid() const { return grid_; }
  int n() const { return grid_.n(); }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  double min() const;
  double max() const;
  double sup_norm() const;
  double mean() const;
  bool all_finite() const;

  /// Periodic bilinear interpolation at an arbitrary point of R^2.
  double sample(Vec2 x) const;

  TorusField& operator+=(const TorusField& o);
  TorusField& operator-=(const TorusField& o);
  TorusField& operator*=(double s);

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

TorusField operator+(TorusField a, const TorusField& b);
TorusField operator-(TorusField a, const TorusField& b);
TorusField operator*(double s, TorusField a);

struct VectorField {
  TorusField c1;
  TorusField c2;

  explicit VectorField(TorusGrid grid) : c1(grid), c2(grid) {}
  VectorField(TorusField a, TorusField b);

  const TorusGrid& grid() const { return c1.grid(); }
  Vec2 at(std::size_t k) const { return {c1[k], c2[k]}; }
  Vec2 sample(Vec2 x) const { return {c1.sample(x), c2.sample(x)}; }
  /// Largest Euclidean norm over cells.
  double sup_norm() const;
};

/// Per-cell displacement with both components reduced to [-1/2, 1/2).
class PeriodicDisplacement {
 public:
  explicit PeriodicDisplacement(TorusGrid grid);
  /// Reduces every component of raw into [-1/2, 1/2).
  explicit PeriodicDisplacement(const VectorField& raw);

  const TorusGrid& grid() const { return field_.grid(); }
  const VectorField& field() const { return field_; }
  Vec2 at(std::size_t k) const { return field_.at(k); }
  double sup_norm() const { return field_.sup_norm(); }

 private:
  VectorField field_;
};

inline constexpr double kHalfDiagonal = 0.70710678118654752440;

// ---- differential operators (second-order centered, periodic) ----

VectorField periodic_gradient(const TorusField& f);
TorusField periodic_divergence(const VectorField& v);
/// Standard 5-point Laplacian.
TorusField laplacian_5pt(const TorusField& f);
/// Wide-stencil Laplacian, (f(i+2) - 2 f(i) + f(i-2)) / (4 s^2) per axis; the
/// composition of periodic_divergence with periodic_gradient.
TorusField composed_laplacian(const TorusField& f);

// ---- quadrature ----

double integral(const TorusField& f);
/// Grid inner product sum(f g) * spacing^2.
double inner(const TorusField& f, const TorusField& g);
double inner(const VectorField& u, const VectorField& v);
double lp_norm(const TorusField& f, double p);
double l2_norm(const TorusField& f);

TorusField subtract_mean(TorusField f);

/// Potential |x|^2/2 + slope.x + periodic(x); only the periodic part is stored.
struct SplitPotential {
  TorusField periodic;
  Vec2 slope{0.0, 0.0};

  const TorusGrid& grid() const { return periodic.grid(); }
  /// Gradient minus identity at the cell centers: slope + grad(periodic).
  VectorField gradient_offset() const;
  /// Value at a cell center lifted by an integer translation `lift`.
  double value_at(std::size_t k, Vec2 lift = {0.0, 0.0}) const;
};

/// Gradient of a split potential at the cell centers (x + slope + grad q).
VectorField split_gradient(const SplitPotential& p);

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what);

}  // namespace sglab
