#include "sglab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sglab/fit.hpp"

namespace sglab {

double oscillation(const TorusField& u, const Section& S) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto o : S.members()) {
    const double v = u[S.cell_index(o)];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

double homogeneous_residual(const DivergenceFormOperator& op, const TorusField& u, const Section& S) {
  const TorusField Lu = op.apply(u);
  double diag = 0.0;
  const double inv = 1.0 / op.grid().cell_area();
  std::vector<double> d(op.grid().size(), 0.0);
  for (const auto& e : op.edges()) {
    d[e.a] += std::abs(e.weight) * inv;
    d[e.b] += std::abs(e.weight) * inv;
  }
  double res = 0.0, umax = 0.0;
  for (auto o : S.members()) {
    const auto k = S.cell_index(o);
    res = std::max(res, std::abs(Lu[k]));
    diag = std::max(diag, d[k]);
    umax = std::max(umax, std::abs(u[k]));
  }
  for (auto o : S.outer_ring()) umax = std::max(umax, std::abs(u[S.cell_index(o)]));
  const double scale = diag * umax;
  return scale > 0.0 ? res / scale : res;
}

OscillationDecay oscillation_decay(const TorusField& u, const ConvexPotential& phi, CellIndex x0, double h0,
                                   int rungs, double residual_tol) {
  require_same_grid(u.grid(), phi.grid(), "oscillation decay");
  const Section top = extract_section(phi, x0, h0);
  const auto op = DivergenceFormOperator::periodic(cofactor(phi));
  OscillationDecay out;
  out.residual = homogeneous_residual(op, u, top);
  if (out.residual > residual_tol)
    throw Error(ErrorCode::ResidualTooLarge,
                "input is not a homogeneous solution (residual " + std::to_string(out.residual) + ")");
  double h = h0;
  double osc_h = oscillation(u, top);
  for (int k = 0; k < rungs; ++k, h *= 0.5) {
    const double osc_half = oscillation(u, extract_section(phi, x0, 0.5 * h));
    const double ratio = osc_h > 0.0 ? osc_half / osc_h : 0.0;
    out.rungs.push_back({h, osc_h, osc_half, ratio});
    out.beta_hat = std::max(out.beta_hat, ratio);
    osc_h = osc_half;
  }
  return out;
}

std::vector<double> default_holder_radii(TorusGrid grid, int count) {
  const double lo = 4.0 * grid.spacing(), hi = 0.25;
  std::vector<double> r;
  for (int k = 0; k < count; ++k) r.push_back(lo * std::pow(hi / lo, k / double(count - 1)));
  return r;
}

HolderFit holder_fit(const TorusField& u, CellIndex x0, const std::vector<double>& radii) {
  if (radii.size() < 4) throw Error(ErrorCode::InsufficientSamples, "holder fit needs at least 4 radii");
  const auto& g = u.grid();
  const double h = g.spacing();
  const Vec2 c = g.center(x0.i, x0.j);
  const double u0 = u(x0.i, x0.j);
  std::vector<double> m(radii.size(), 0.0), where(radii.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.center(k);
    const double d = std::hypot(wrap_half(x[0] - c[0]), wrap_half(x[1] - c[1]));
    const double v = std::abs(u[k] - u0);
    for (std::size_t a = 0; a < radii.size(); ++a)
      if (d >= radii[a] && d < radii[a] + h && (where[a] == 0.0 || v > m[a])) {
        m[a] = v;
        where[a] = d;
      }
  }
  HolderFit fit;
  std::vector<double> xs, ys;
  for (std::size_t a = 0; a < radii.size(); ++a) {
    if (where[a] == 0.0) throw Error(ErrorCode::InsufficientSamples, "empty distance shell");
    if (m[a] > 0.0) {
      xs.push_back(where[a]);
      ys.push_back(m[a]);
    }
  }
  fit.radii = where;
  fit.m = m;
  if (xs.empty()) {
    fit.gamma = std::numeric_limits<double>::infinity();
    fit.C = 0.0;
    fit.r2 = 1.0;
    fit.flag = "constant";
    return fit;
  }
  if (xs.size() < 4) throw Error(ErrorCode::InsufficientSamples, "fewer than 4 nonzero shells");
  const PowerFit pf = fit_power_law(xs, ys);
  fit.gamma = pf.exponent;
  fit.C = pf.prefactor;
  fit.r2 = pf.r2;
  if (fit.r2 < 0.8) fit.flag = "low_r2";
  return fit;
}

std::vector<double> local_holder_radii(TorusGrid grid, int count) {
  const double lo = std::max(1.0 / 32.0, 2.0 * grid.spacing()), hi = std::max(0.125, 4.0 * lo);
  std::vector<double> r;
  for (int k = 0; k < count; ++k) r.push_back(lo * std::pow(hi / lo, k / double(count - 1)));
  return r;
}

std::vector<CellIndex> sample_centers(TorusGrid grid, int count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "need at least one center");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<CellIndex> cs;
  for (int c = 0; c < count; ++c) {
    const double a = U(rng), b = U(rng);
    cs.push_back(grid.nearest_cell({a, b}));
  }
  return cs;
}

EnvelopeHolder holder_fit_envelope(const TorusField& u, const std::vector<CellIndex>& centers,
                                   const std::vector<double>& radii) {
  EnvelopeHolder out;
  std::vector<double> env_m(radii.size(), 0.0), env_r(radii);
  for (auto c : centers) {
    out.fits.push_back(holder_fit(u, c, radii));
    const auto& f = out.fits.back();
    for (std::size_t a = 0; a < radii.size(); ++a)
      if (f.m[a] > env_m[a]) {
        env_m[a] = f.m[a];
        env_r[a] = f.radii[a];
      }
  }
  auto& env = out.envelope;
  env.radii = env_r;
  env.m = env_m;
  if (*std::max_element(env_m.begin(), env_m.end()) == 0.0) {
    env.gamma = std::numeric_limits<double>::infinity();
    env.r2 = 1.0;
    env.flag = "constant";
    return out;
  }
  const PowerFit pf = fit_power_law(env_r, env_m);
  env.gamma = pf.exponent;
  env.C = pf.prefactor;
  env.r2 = pf.r2;
  if (env.r2 < 0.8) env.flag = "low_r2";
  return out;
}

TorusField homogeneous_solution(const ConvexPotential& phi, const Section& S, const TorusField& boundary,
                                double tol) {
  const auto op = DivergenceFormOperator::dirichlet(cofactor(phi), S);
  return solve_dirichlet(op, TorusField(phi.grid()), boundary, tol);
}

double harnack_quotient(const TorusField& u, const ConvexPotential& phi, CellIndex x0, double h,
                        double residual_tol) {
  require_same_grid(u.grid(), phi.grid(), "harnack quotient");
  const Section outer = extract_section(phi, x0, 2.0 * h);
  for (auto o : outer.members())
    if (u[outer.cell_index(o)] < 0.0) throw Error(ErrorCode::NegativeInput, "u is negative on S(x0, 2h)");
  const auto op = DivergenceFormOperator::periodic(cofactor(phi));
  const double res = homogeneous_residual(op, u, outer);
  if (res > residual_tol)
    throw Error(ErrorCode::ResidualTooLarge, "input is not a homogeneous solution (residual " + std::to_string(res) + ")");
  const Section inner = extract_section(phi, x0, h);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (auto o : inner.members()) {
    const double v = u[inner.cell_index(o)];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo > 0.0)) throw Error(ErrorCode::NegativeInput, "u vanishes on S(x0, h)");
  return hi / lo;
}

}  // namespace sglab
