#include "sglab/torus.hpp"

#include <algorithm>
#include <numeric>

namespace sglab {

const char* error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::LostConvexity: return "LostConvexity";
    case ErrorCode::BadDensity: return "BadDensity";
    case ErrorCode::NonConvexInput: return "NonConvexInput";
    case ErrorCode::SolverStall: return "SolverStall";
    case ErrorCode::IndefiniteOperator: return "IndefiniteOperator";
    case ErrorCode::CflViolation: return "CFLViolation";
    case ErrorCode::DegenerateMap: return "DegenerateMap";
    case ErrorCode::FactorizationResidualTooLarge: return "FactorizationResidualTooLarge";
    case ErrorCode::SectionWrapsTorus: return "SectionWrapsTorus";
    case ErrorCode::EmptySection: return "EmptySection";
    case ErrorCode::DegenerateSection: return "DegenerateSection";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::ZeroEnergy: return "ZeroEnergy";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) noexcept {
  const int v = static_cast<int>(code);
  if (v == 0) return 0;
  if (v < 20) return 1;
  if (code == ErrorCode::InvariantViolation) return 3;
  return 2;
}

double periodic_distance(Vec2 a, Vec2 b) {
  return std::hypot(wrap_half(a[0] - b[0]), wrap_half(a[1] - b[1]));
}

TorusGrid::TorusGrid(int n_cells_per_side) : n_(n_cells_per_side) {
  if (n_cells_per_side <= 0) throw Error(ErrorCode::InvalidArgument, "grid size must be positive");
  spacing_ = 1.0 / n_cells_per_side;
}

CellIndex TorusGrid::nearest_cell(Vec2 x) const {
  const int i = static_cast<int>(std::floor(wrap_unit(x[0]) * n_));
  const int j = static_cast<int>(std::floor(wrap_unit(x[1]) * n_));
  return {wrap(i), wrap(j)};
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (!(a == b)) throw Error(ErrorCode::GridMismatch, what);
}

// ---------------------------------------------------------------------------

TorusField::TorusField(TorusGrid grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

TorusField::TorusField(TorusGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw Error(ErrorCode::InvalidArgument, "field size does not match grid");
}

TorusField TorusField::from_function(TorusGrid grid, const std::function<double(Vec2)>& f) {
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(grid.center(k));
  return TorusField(grid, std::move(v));
}

double TorusField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double TorusField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double TorusField::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double TorusField::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

bool TorusField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double TorusField::sample(Vec2 x) const {
  const int n = grid_.n();
  const double u = x[0] * n - 0.5;
  const double w = x[1] * n - 0.5;
  const double fu = std::floor(u);
  const double fw = std::floor(w);
  const double tu = u - fu;
  const double tw = w - fw;
  // Reduce the base index before converting so far-away lifts stay in range.
  const int i0 = grid_.wrap(static_cast<int>(std::fmod(fu, static_cast<double>(n))));
  const int j0 = grid_.wrap(static_cast<int>(std::fmod(fw, static_cast<double>(n))));
  const double f00 = (*this)(i0, j0);
  const double f10 = (*this)(i0 + 1, j0);
  const double f01 = (*this)(i0, j0 + 1);
  const double f11 = (*this)(i0 + 1, j0 + 1);
  return (1 - tu) * ((1 - tw) * f00 + tw * f01) + tu * ((1 - tw) * f10 + tw * f11);
}

TorusField& TorusField::operator+=(const TorusField& o) {
  require_same_grid(grid_, o.grid_, "field addition");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

TorusField& TorusField::operator-=(const TorusField& o) {
  require_same_grid(grid_, o.grid_, "field subtraction");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

TorusField& TorusField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

TorusField operator+(TorusField a, const TorusField& b) { return a += b; }
TorusField operator-(TorusField a, const TorusField& b) { return a -= b; }
TorusField operator*(double s, TorusField a) { return a *= s; }

VectorField::VectorField(TorusField a, TorusField b) : c1(std::move(a)), c2(std::move(b)) {
  require_same_grid(c1.grid(), c2.grid(), "vector field components");
}

double VectorField::sup_norm() const {
  double m = 0.0;
  for (std::size_t k = 0; k < c1.grid().size(); ++k) m = std::max(m, std::hypot(c1[k], c2[k]));
  return m;
}

PeriodicDisplacement::PeriodicDisplacement(TorusGrid grid) : field_(grid) {}

PeriodicDisplacement::PeriodicDisplacement(const VectorField& raw) : field_(raw.grid()) {
  for (std::size_t k = 0; k < raw.grid().size(); ++k) {
    field_.c1[k] = wrap_half(raw.c1[k]);
    field_.c2[k] = wrap_half(raw.c2[k]);
  }
  if (!(field_.sup_norm() <= kHalfDiagonal))
    throw Error(ErrorCode::InvariantViolation, "displacement exceeds sqrt(2)/2");
}

// ---------------------------------------------------------------------------

VectorField periodic_gradient(const TorusField& f) {
  const auto& g = f.grid();
  const int n = g.n();
  const double inv2h = 0.5 / g.spacing();
  VectorField out(g);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto k = g.index(i, j);
      out.c1[k] = (f(i + 1, j) - f(i - 1, j)) * inv2h;
      out.c2[k] = (f(i, j + 1) - f(i, j - 1)) * inv2h;
    }
  }
  return out;
}

TorusField periodic_divergence(const VectorField& v) {
  const auto& g = v.grid();
  const int n = g.n();
  const double inv2h = 0.5 / g.spacing();
  TorusField out(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[g.index(i, j)] =
          (v.c1(i + 1, j) - v.c1(i - 1, j) + v.c2(i, j + 1) - v.c2(i, j - 1)) * inv2h;
  return out;
}

TorusField laplacian_5pt(const TorusField& f) {
  const auto& g = f.grid();
  const int n = g.n();
  const double inv = 1.0 / g.cell_area();
  TorusField out(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[g.index(i, j)] =
          (f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1) - 4.0 * f(i, j)) * inv;
  return out;
}

TorusField composed_laplacian(const TorusField& f) {
  const auto& g = f.grid();
  const int n = g.n();
  const double inv = 0.25 / g.cell_area();
  TorusField out(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[g.index(i, j)] =
          (f(i + 2, j) + f(i - 2, j) + f(i, j + 2) + f(i, j - 2) - 4.0 * f(i, j)) * inv;
  return out;
}

double integral(const TorusField& f) {
  const auto v = f.values();
  return std::accumulate(v.begin(), v.end(), 0.0) * f.grid().cell_area();
}

double inner(const TorusField& f, const TorusField& g) {
  require_same_grid(f.grid(), g.grid(), "inner product");
  double s = 0.0;
  for (std::size_t k = 0; k < f.grid().size(); ++k) s += f[k] * g[k];
  return s * f.grid().cell_area();
}

double inner(const VectorField& u, const VectorField& v) { return inner(u.c1, v.c1) + inner(u.c2, v.c2); }

double lp_norm(const TorusField& f, double p) {
  double s = 0.0;
  for (double v : f.values()) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid().cell_area(), 1.0 / p);
}

double l2_norm(const TorusField& f) { return std::sqrt(inner(f, f)); }

TorusField subtract_mean(TorusField f) {
  const double m = f.mean();
  for (auto& v : f.mutable_values()) v -= m;
  return f;
}

VectorField SplitPotential::gradient_offset() const {
  auto g = periodic_gradient(periodic);
  for (auto& v : g.c1.mutable_values()) v += slope[0];
  for (auto& v : g.c2.mutable_values()) v += slope[1];
  return g;
}

double SplitPotential::value_at(std::size_t k, Vec2 lift) const {
  const Vec2 y = grid().center(k) + lift;
  return 0.5 * dot(y, y) + dot(slope, y) + periodic[k];
}

VectorField split_gradient(const SplitPotential& p) {
  auto g = p.gradient_offset();
  for (std::size_t k = 0; k < p.grid().size(); ++k) {
    const Vec2 x = p.grid().center(k);
    g.c1[k] += x[0];
    g.c2[k] += x[1];
  }
  return g;
}

}  // namespace sglab
