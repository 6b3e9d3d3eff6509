#pragma once

// Monge-Ampere sections S(x0, h) = {y : phi(y) < phi(x0) + grad phi(x0).(y - x0) + h}
// on the cell-center grid, their John normalization and rescaling.

#include <array>
#include <optional>
#include <vector>

#include "sglab/ma_solver.hpp"

namespace sglab {

struct CellOffset {
  int di = 0;
  int dj = 0;
  friend bool operator==(const CellOffset&, const CellOffset&) = default;
};

/// Affine map T z = A z + b, A stored row-major.
struct AffineMap {
  std::array<double, 4> A{1.0, 0.0, 0.0, 1.0};
  Vec2 b{0.0, 0.0};

  double det() const { return A[0] * A[3] - A[1] * A[2]; }
  Vec2 apply(Vec2 z) const { return {A[0] * z[0] + A[1] * z[1] + b[0], A[2] * z[0] + A[3] * z[1] + b[1]}; }
  Vec2 apply_linear(Vec2 z) const { return {A[0] * z[0] + A[1] * z[1], A[2] * z[0] + A[3] * z[1]}; }
  Vec2 inverse_apply(Vec2 y) const;
  Vec2 inverse_linear(Vec2 y) const;
  /// Singular values, largest first.
  std::array<double, 2> singular_values() const;
};

/// A section stored as cell offsets from its center cell. Positions are
/// unwrapped: member k sits at center_point() + spacing * offset.
class Section {
 public:
  Section(TorusGrid grid, CellIndex center, double height, std::vector<CellOffset> members);

  const TorusGrid& grid() const { return grid_; }
  CellIndex center() const { return center_; }
  Vec2 center_point() const { return grid_.center(center_.i, center_.j); }
  double height() const { return height_; }
  const std::vector<CellOffset>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  double area() const { return static_cast<double>(members_.size()) * grid_.cell_area(); }

  bool contains(CellOffset o) const;
  Vec2 point(CellOffset o) const;
  /// Torus storage index of a member (or any offset).
  std::size_t cell_index(CellOffset o) const;
  /// Offsets adjacent (8-neighbourhood) to the set but outside it.
  std::vector<CellOffset> outer_ring() const;
  /// Boolean N*N mask in torus storage order.
  std::vector<bool> cell_mask() const;
  /// Bounding box of offsets: {min_di, max_di, min_dj, max_dj}.
  std::array<int, 4> bounds() const { return {lo_i_, hi_i_, lo_j_, hi_j_}; }

 private:
  TorusGrid grid_;
  CellIndex center_;
  double height_;
  std::vector<CellOffset> members_;
  int lo_i_ = 0, hi_i_ = 0, lo_j_ = 0, hi_j_ = 0;
  std::vector<char> box_;  // dense membership over the bounding box
};

/// Height function phi(y) - phi(x0) - grad phi(x0).(y - x0) at a lifted offset.
double section_height(const ConvexPotential& phi, CellIndex x0, CellOffset o);

/// Throws SectionWrapsTorus (diameter >= 1/2) and EmptySection (h below one cell).
Section extract_section(const ConvexPotential& phi, CellIndex x0, double h);

struct JohnNormalization {
  AffineMap T;
  bool containment_ok = false;
  bool used_fallback = false;
};

/// Affine T with B_1 within T^{-1}(S) within B_2 up to one cell width.
/// Throws DegenerateSection, EmptySection.
JohnNormalization john_normalize(const Section& S);

/// Direct check of B_1 within T^{-1}(S) within B_2 on member and ring cells, with
/// tolerance `cells` grid cells mapped into normalized coordinates.
bool verify_john_sandwich(const Section& S, const AffineMap& T, double cells = 1.0);

/// Fields pulled back to a uniform m*m grid on [-2, 2]^2:
/// phi~ = (det A)^{-1} (phi - tangent - h)(Tz), u~ = u(Tz), F~ = det A A^{-1} F(Tz).
struct RescaledProblem {
  int m = 0;
  double step = 0.0;
  double det_A = 0.0;
  std::vector<double> phi, u, F1, F2;
  std::vector<char> mask;  // phi~ < 0
  /// NaN where the difference stencil leaves the mask; the stencil stride
  /// spans at least one source grid cell.
  std::vector<double> det_hessian;

  Vec2 point(int a, int b) const { return {-2.0 + (a + 0.5) * step, -2.0 + (b + 0.5) * step}; }
  std::size_t index(int a, int b) const { return static_cast<std::size_t>(a) * m + b; }
  double lq_norm_u(double q) const;
  double sup_F() const;
};

RescaledProblem rescale_problem(const ConvexPotential& phi, const TorusField& u, const VectorField& F,
                                const Section& S, const AffineMap& T, int samples = 96);

/// Masked L^q norm of a torus field over a section.
double section_lq_norm(const TorusField& u, const Section& S, double q);

/// ||Laplacian phi||_{L^{1+eps}(S)} with the 5-point Laplacian.
double section_w21_norm(const ConvexPotential& phi, const Section& S, double eps);

struct VolumeLadder {
  std::vector<double> heights;
  std::vector<double> area_over_h;
  double ratio = 0.0;  // max / min of area_over_h
};

/// area(S(x0, h0 / 2^k)) / h for k = 0..rungs-1.
VolumeLadder volume_ladder(const ConvexPotential& phi, CellIndex x0, double h0, int rungs);

}  // namespace sglab
