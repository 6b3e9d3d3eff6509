#include "sglab/sections.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace sglab {

Vec2 AffineMap::inverse_linear(Vec2 y) const {
  const double d = det();
  return {(A[3] * y[0] - A[1] * y[1]) / d, (-A[2] * y[0] + A[0] * y[1]) / d};
}

Vec2 AffineMap::inverse_apply(Vec2 y) const { return inverse_linear(y - b); }

std::array<double, 2> AffineMap::singular_values() const {
  Eigen::Matrix2d m;
  m << A[0], A[1], A[2], A[3];
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(m);
  return {svd.singularValues()[0], svd.singularValues()[1]};
}

// ---------------------------------------------------------------------------

Section::Section(TorusGrid grid, CellIndex center, double height, std::vector<CellOffset> members)
    : grid_(grid), center_(center), height_(height), members_(std::move(members)) {
  if (members_.empty()) throw Error(ErrorCode::EmptySection, "section has no cells");
  lo_i_ = hi_i_ = members_[0].di;
  lo_j_ = hi_j_ = members_[0].dj;
  for (auto o : members_) {
    lo_i_ = std::min(lo_i_, o.di);
    hi_i_ = std::max(hi_i_, o.di);
    lo_j_ = std::min(lo_j_, o.dj);
    hi_j_ = std::max(hi_j_, o.dj);
  }
  const int w = hi_j_ - lo_j_ + 1;
  box_.assign(static_cast<std::size_t>((hi_i_ - lo_i_ + 1) * w), 0);
  for (auto o : members_) box_[static_cast<std::size_t>((o.di - lo_i_) * w + (o.dj - lo_j_))] = 1;
}

bool Section::contains(CellOffset o) const {
  if (o.di < lo_i_ || o.di > hi_i_ || o.dj < lo_j_ || o.dj > hi_j_) return false;
  const int w = hi_j_ - lo_j_ + 1;
  return box_[static_cast<std::size_t>((o.di - lo_i_) * w + (o.dj - lo_j_))] != 0;
}

Vec2 Section::point(CellOffset o) const {
  return center_point() + grid_.spacing() * Vec2{double(o.di), double(o.dj)};
}

std::size_t Section::cell_index(CellOffset o) const {
  return grid_.index(center_.i + o.di, center_.j + o.dj);
}

std::vector<CellOffset> Section::outer_ring() const {
  std::vector<CellOffset> ring;
  for (int di = lo_i_ - 1; di <= hi_i_ + 1; ++di)
    for (int dj = lo_j_ - 1; dj <= hi_j_ + 1; ++dj) {
      const CellOffset o{di, dj};
      if (contains(o)) continue;
      bool adjacent = false;
      for (int a = -1; a <= 1 && !adjacent; ++a)
        for (int b = -1; b <= 1 && !adjacent; ++b) adjacent = contains({di + a, dj + b});
      if (adjacent) ring.push_back(o);
    }
  return ring;
}

std::vector<bool> Section::cell_mask() const {
  std::vector<bool> mask(grid_.size(), false);
  for (auto o : members_) mask[cell_index(o)] = true;
  return mask;
}

// ---------------------------------------------------------------------------

double section_height(const ConvexPotential& phi, CellIndex x0, CellOffset o) {
  const auto& g = phi.grid();
  const double h = g.spacing();
  const auto k0 = g.index(x0.i, x0.j);
  const Vec2 d{o.di * h, o.dj * h};
  const Vec2 grad_q = phi.gradient_offset().at(k0) - phi.slope();
  return 0.5 * dot(d, d) + phi.periodic()(x0.i + o.di, x0.j + o.dj) - phi.periodic()[k0] - dot(grad_q, d);
}

Section extract_section(const ConvexPotential& phi, CellIndex x0, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "section height must be positive");
  const auto& g = phi.grid();
  const int n = g.n();
  const int limit = n / 2;  // extent in cells that would reach diameter 1/2
  std::vector<CellOffset> members;
  std::vector<char> seen(static_cast<std::size_t>((2 * n + 1) * (2 * n + 1)), 0);
  auto key = [n](CellOffset o) { return static_cast<std::size_t>((o.di + n) * (2 * n + 1) + (o.dj + n)); };
  std::deque<CellOffset> queue{{0, 0}};
  seen[key({0, 0})] = 1;
  int lo_i = 0, hi_i = 0, lo_j = 0, hi_j = 0;
  while (!queue.empty()) {
    const CellOffset o = queue.front();
    queue.pop_front();
    if (!(section_height(phi, x0, o) < h)) continue;
    members.push_back(o);
    lo_i = std::min(lo_i, o.di);
    hi_i = std::max(hi_i, o.di);
    lo_j = std::min(lo_j, o.dj);
    hi_j = std::max(hi_j, o.dj);
    if (hi_i - lo_i + 1 >= limit || hi_j - lo_j + 1 >= limit)
      throw Error(ErrorCode::SectionWrapsTorus, "section diameter reaches 1/2; lower h");
    const CellOffset nb[4] = {{o.di + 1, o.dj}, {o.di - 1, o.dj}, {o.di, o.dj + 1}, {o.di, o.dj - 1}};
    for (auto c : nb) {
      if (std::abs(c.di) > n || std::abs(c.dj) > n) continue;
      auto& s = seen[key(c)];
      if (!s) {
        s = 1;
        queue.push_back(c);
      }
    }
  }
  if (members.size() <= 1)
    throw Error(ErrorCode::EmptySection, "section height below one-cell resolution");
  std::sort(members.begin(), members.end(),
            [](CellOffset a, CellOffset b) { return a.di != b.di ? a.di < b.di : a.dj < b.dj; });
  return Section(g, x0, h, std::move(members));
}

// ---------------------------------------------------------------------------

namespace {

/// Minimum-volume enclosing ellipse {y : (y - c)^T M (y - c) <= 1} by
/// Khachiyan's iteration.
std::pair<Eigen::Matrix2d, Eigen::Vector2d> min_volume_ellipse(const std::vector<Vec2>& pts) {
  const int m = static_cast<int>(pts.size());
  Eigen::MatrixXd Q(3, m);
  for (int k = 0; k < m; ++k) Q.col(k) << pts[static_cast<std::size_t>(k)][0], pts[static_cast<std::size_t>(k)][1], 1.0;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(m, 1.0 / m);
  for (int it = 0; it < 2000; ++it) {
    const Eigen::Matrix3d X = Q * u.asDiagonal() * Q.transpose();
    const Eigen::Matrix3d Xi = X.inverse();
    Eigen::Index j = 0;
    double best = -1.0;
    for (int k = 0; k < m; ++k) {
      const double v = Q.col(k).dot(Xi * Q.col(k));
      if (v > best) {
        best = v;
        j = k;
      }
    }
    const double step = (best - 3.0) / (3.0 * (best - 1.0));
    if (step < 1e-9) break;
    u *= (1.0 - step);
    u[j] += step;
  }
  Eigen::MatrixXd P = Q.topRows(2);
  const Eigen::Vector2d c = P * u;
  const Eigen::Matrix2d S = P * u.asDiagonal() * P.transpose() - c * c.transpose();
  return {S.inverse() / 2.0, c};
}

Eigen::Matrix2d sym_sqrt(const Eigen::Matrix2d& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

AffineMap to_affine(const Eigen::Matrix2d& A, Vec2 b) { return AffineMap{{A(0, 0), A(0, 1), A(1, 0), A(1, 1)}, b}; }

}  // namespace

bool verify_john_sandwich(const Section& S, const AffineMap& T, double cells) {
  const auto sv = T.singular_values();
  const double tol = cells * S.grid().spacing() / sv[1];
  for (auto o : S.members())
    if (norm(T.inverse_apply(S.point(o))) > 2.0 + tol) return false;
  for (auto o : S.outer_ring())
    if (norm(T.inverse_apply(S.point(o))) < 1.0 - tol) return false;
  return true;
}

JohnNormalization john_normalize(const Section& S) {
  const double h = S.grid().spacing();
  const auto n = static_cast<double>(S.size());
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (auto o : S.members()) {
    const Vec2 p = S.point(o);
    mean += Eigen::Vector2d(p[0], p[1]);
  }
  mean /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (auto o : S.members()) {
    const Vec2 p = S.point(o);
    const Eigen::Vector2d d = Eigen::Vector2d(p[0], p[1]) - mean;
    cov += d * d.transpose();
  }
  cov /= n;
  cov += Eigen::Matrix2d::Identity() * (h * h / 12.0);  // second moment of a unit cell

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  if (4.0 * std::sqrt(es.eigenvalues()[0]) < 3.0 * h)
    throw Error(ErrorCode::DegenerateSection, "section thinner than 3 cells");

  // Moment ellipse: A0 maps the unit disc onto {(y-m)^T cov^{-1} (y-m) <= 4}.
  const Eigen::Matrix2d A0 = 2.0 * sym_sqrt(cov);
  const Eigen::Matrix2d A0inv = A0.inverse();
  const Vec2 b{mean[0], mean[1]};
  auto zlen = [&](Vec2 y) { return (A0inv * Eigen::Vector2d(y[0] - b[0], y[1] - b[1])).norm(); };
  double r_out = 0.0;
  for (auto o : S.members()) r_out = std::max(r_out, zlen(S.point(o)));
  double r_in = std::numeric_limits<double>::infinity();
  for (auto o : S.outer_ring()) r_in = std::min(r_in, zlen(S.point(o)));

  JohnNormalization out;
  if (r_out <= 2.0 * r_in) {
    // Largest inner ball; the outer ball B_2 then still covers the set.
    out.T = to_affine(r_in * A0, b);
  } else {
    std::vector<Vec2> pts;
    for (auto o : S.members()) pts.push_back(S.point(o));
    auto [M, c] = min_volume_ellipse(pts);
    // Loewner ellipse E = A_L B_1 contains S and E/2 (n = 2) is inside it.
    const Eigen::Matrix2d AL = sym_sqrt(M.inverse());
    out.T = to_affine(0.5 * AL, Vec2{c[0], c[1]});
    out.used_fallback = true;
  }
  out.containment_ok = verify_john_sandwich(S, out.T);
  return out;
}

// ---------------------------------------------------------------------------

double RescaledProblem::lq_norm_u(double q) const {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (mask[k]) s += std::pow(std::abs(u[k]), q);
  return std::pow(s * step * step, 1.0 / q);
}

double RescaledProblem::sup_F() const {
  double s = 0.0;
  for (std::size_t k = 0; k < F1.size(); ++k)
    if (mask[k]) s = std::max(s, std::hypot(F1[k], F2[k]));
  return s;
}

RescaledProblem rescale_problem(const ConvexPotential& phi, const TorusField& u, const VectorField& F,
                                const Section& S, const AffineMap& T, int samples) {
  require_same_grid(phi.grid(), u.grid(), "rescale u");
  require_same_grid(phi.grid(), F.grid(), "rescale F");
  const auto& g = phi.grid();
  const auto k0 = g.index(S.center().i, S.center().j);
  const Vec2 x0 = S.center_point();
  const Vec2 grad_q = phi.gradient_offset().at(k0) - phi.slope();
  const double q0 = phi.periodic()[k0];
  const double detA = T.det();
  const double h = S.height();

  RescaledProblem r;
  r.m = samples;
  r.step = 4.0 / samples;
  r.det_A = detA;
  const auto total = static_cast<std::size_t>(samples) * static_cast<std::size_t>(samples);
  r.phi.resize(total);
  r.u.resize(total);
  r.F1.resize(total);
  r.F2.resize(total);
  r.mask.assign(total, 0);
  r.det_hessian.assign(total, std::numeric_limits<double>::quiet_NaN());
  for (int a = 0; a < samples; ++a)
    for (int b = 0; b < samples; ++b) {
      const auto k = r.index(a, b);
      const Vec2 y = T.apply(r.point(a, b));
      const Vec2 d = y - x0;
      const double height = 0.5 * dot(d, d) + phi.periodic().sample(y) - q0 - dot(grad_q, d) - h;
      r.phi[k] = height / detA;
      r.u[k] = u.sample(y);
      const Vec2 Fy = T.inverse_linear(F.sample(y));
      r.F1[k] = detA * Fy[0];
      r.F2[k] = detA * Fy[1];
      r.mask[k] = r.phi[k] < 0.0 ? 1 : 0;
    }
  // Second differences of a bilinear interpolant are only meaningful across at
  // least one source cell, so the stencil stride spans one grid spacing.
  const double sigma_min = T.singular_values()[1];
  const int w = std::max(1, static_cast<int>(std::ceil(g.spacing() / (r.step * sigma_min))));
  const double inv = 1.0 / (w * w * r.step * r.step);
  for (int a = w; a + w < samples; ++a)
    for (int b = w; b + w < samples; ++b) {
      bool inside = true;
      for (int da = -w; da <= w && inside; da += w)
        for (int db = -w; db <= w && inside; db += w) inside = r.mask[r.index(a + da, b + db)] != 0;
      if (!inside) continue;
      auto f = [&](int da, int db) { return r.phi[r.index(a + da * w, b + db * w)]; };
      const double p11 = (f(1, 0) - 2 * f(0, 0) + f(-1, 0)) * inv;
      const double p22 = (f(0, 1) - 2 * f(0, 0) + f(0, -1)) * inv;
      const double p12 = 0.25 * (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) * inv;
      r.det_hessian[r.index(a, b)] = p11 * p22 - p12 * p12;
    }
  return r;
}

double section_lq_norm(const TorusField& u, const Section& S, double q) {
  double s = 0.0;
  for (auto o : S.members()) s += std::pow(std::abs(u[S.cell_index(o)]), q);
  return std::pow(s * S.grid().cell_area(), 1.0 / q);
}

double section_w21_norm(const ConvexPotential& phi, const Section& S, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  const TorusField lap = phi.laplacian();
  return section_lq_norm(lap, S, 1.0 + eps);
}

VolumeLadder volume_ladder(const ConvexPotential& phi, CellIndex x0, double h0, int rungs) {
  VolumeLadder v;
  double h = h0;
  for (int k = 0; k < rungs; ++k, h *= 0.5) {
    const Section S = extract_section(phi, x0, h);
    v.heights.push_back(h);
    v.area_over_h.push_back(S.area() / h);
  }
  const auto [lo, hi] = std::minmax_element(v.area_over_h.begin(), v.area_over_h.end());
  v.ratio = *hi / *lo;
  return v;
}

}  // namespace sglab
