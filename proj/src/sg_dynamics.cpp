#include "sglab/sg_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <thread>

#include "sglab/bounded_queue.hpp"
#include "sglab/fit.hpp"

namespace sglab {

VectorField velocity_from_potential(const ConvexPotential& pstar) {
  const auto& off = pstar.gradient_offset();
  VectorField d(-1.0 * off.c1, -1.0 * off.c2);
  const PeriodicDisplacement disp(d);
  const auto& r = disp.field();
  return VectorField(-1.0 * r.c2, r.c1);
}

TransportResult transport_step(const TorusField& rho, const VectorField& U, double dt, double cfl) {
  require_same_grid(rho.grid(), U.grid(), "transport");
  const auto& g = rho.grid();
  const double umax = U.sup_norm();
  if (dt * umax > cfl * g.spacing())
    throw Error(ErrorCode::CflViolation, "dt * |U| = " + std::to_string(dt * umax) + " exceeds " +
                                             std::to_string(cfl) + " * spacing");
  TransportResult out;
  if (umax == 0.0) {
    out.rho = rho;
    out.pre_min = rho.min();
    out.pre_max = rho.max();
    return out;
  }
  TorusField next(g);
  auto& v = next.mutable_values();
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = rho.sample(g.center(k) - dt * U.at(k));
  out.pre_min = next.min();
  out.pre_max = next.max();
  const double lo = rho.min(), hi = rho.max();
  const double slack = 1e-13 * hi;
  if (out.pre_min < lo - slack || out.pre_max > hi + slack)
    throw Error(ErrorCode::InvariantViolation, "monotone transport produced a new extremum");
  const double mass0 = integral(rho);
  const double mass1 = integral(next);
  out.renorm_factor = mass0 / mass1;
  if (std::abs(out.renorm_factor - 1.0) > kRenormTolerance)
    throw Error(ErrorCode::InvariantViolation,
                "mass renormalization factor " + std::to_string(out.renorm_factor) + " outside 1 +- 1e-6");
  next *= out.renorm_factor;
  out.rho = std::move(next);
  return out;
}

namespace {

void fill_certificates(SGState& s) {
  s.cert.mass = integral(s.rho);
  s.cert.min_rho = s.rho.min();
  s.cert.max_rho = s.rho.max();
  s.cert.u_inf = s.U.sup_norm();
  s.cert.ma_residual = s.pstar.residual;
  s.cert.newton_iters = s.pstar.newton_iters;
}

double ma_tol(const SGOptions& o, double Lambda) { return o.tol > 0.0 ? o.tol : default_ma_tol(Lambda); }

// Soft runs solve on the actual density range so that violations surface as
// certificates instead of solver errors.
MaSolveOptions solver_window(const TorusField& rho, double lambda, double Lambda, const SGOptions& o) {
  MaSolveOptions mo;
  mo.lambda = o.strict ? lambda : std::min(lambda, rho.min());
  mo.Lambda = o.strict ? Lambda : std::max(Lambda, rho.max());
  mo.tol = ma_tol(o, mo.Lambda);
  return mo;
}

}  // namespace

std::string violated_certificate(const SGState& s) {
  if (std::abs(s.cert.mass - 1.0) > 1e-8) return "mass";
  if (s.cert.min_rho < s.lambda) return "min_rho";
  if (s.cert.max_rho > s.Lambda) return "max_rho";
  if (s.cert.u_inf > kHalfDiagonal) return "u_inf";
  if (!s.rho.all_finite()) return "finite_rho";
  return "";
}

SGState initial_state(const TorusField& rho0, const SGOptions& opts) {
  SGState s;
  s.lambda = opts.lambda > 0.0 ? opts.lambda : rho0.min();
  s.Lambda = opts.Lambda > 0.0 ? opts.Lambda : rho0.max();
  s.rho = rho0;
  s.pstar = solve_ma_periodic(rho0, solver_window(s.rho, s.lambda, s.Lambda, opts));
  if (opts.legendre) s.p = legendre(s.pstar);
  s.U = velocity_from_potential(s.pstar);
  fill_certificates(s);
  if (opts.strict) {
    const auto bad = violated_certificate(s);
    if (!bad.empty()) throw Error(ErrorCode::InvariantViolation, "certificate violated: " + bad);
  }
  return s;
}

SGState step(const SGState& s, double dt, const SGOptions& opts) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  SGState n;
  n.step = s.step + 1;
  n.t = s.t + dt;
  auto tr = transport_step(s.rho, s.U, dt, opts.cfl);
  n.rho = std::move(tr.rho);
  // The density window widens by the renormalization drift only.
  n.lambda = s.lambda * std::min(1.0, tr.renorm_factor);
  n.Lambda = s.Lambda * std::max(1.0, tr.renorm_factor);
  auto mo = solver_window(n.rho, n.lambda, n.Lambda, opts);
  mo.initial = &s.pstar.periodic();
  n.pstar = solve_ma_periodic(n.rho, mo);
  if (opts.legendre) n.p = legendre(n.pstar);
  n.U = velocity_from_potential(n.pstar);
  fill_certificates(n);
  n.cert.renorm_factor = tr.renorm_factor;
  if (opts.strict) {
    const auto bad = violated_certificate(n);
    if (!bad.empty()) throw Error(ErrorCode::InvariantViolation, "certificate violated: " + bad);
  }
  return n;
}

TorusField time_derivative_potential(const SGState& prev, const SGState& next) {
  require_same_grid(prev.rho.grid(), next.rho.grid(), "time derivative");
  const double dt = next.t - prev.t;
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "states are not in time order");
  return subtract_mean((1.0 / dt) * (next.pstar.periodic() - prev.pstar.periodic()));
}

VectorField time_derivative_gradient(const SGState& prev, const SGState& next) {
  require_same_grid(prev.rho.grid(), next.rho.grid(), "time derivative");
  const double dt = next.t - prev.t;
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "states are not in time order");
  const auto& a = prev.pstar.gradient_offset();
  const auto& b = next.pstar.gradient_offset();
  return VectorField((1.0 / dt) * (b.c1 - a.c1), (1.0 / dt) * (b.c2 - a.c2));
}

TorusField legendre_time_derivative(const TorusField& dt_pstar, const LegendrePotential& p) {
  require_same_grid(dt_pstar.grid(), p.grid(), "legendre time derivative");
  const auto& g = p.grid();
  TorusField out(g);
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = -dt_pstar.sample(p.gradient_at(g.center(k)));
  return subtract_mean(std::move(out));
}

namespace {

VectorField negative_flux(const SGState& s) {
  TorusField f1(s.rho.grid()), f2(s.rho.grid());
  for (std::size_t k = 0; k < f1.grid().size(); ++k) {
    f1[k] = -s.rho[k] * s.U.c1[k];
    f2[k] = -s.rho[k] * s.U.c2[k];
  }
  return VectorField(std::move(f1), std::move(f2));
}

}  // namespace

TorusField lma_time_derivative(const SGState& s, double tol) {
  return solve_periodic_lma(cofactor(s.pstar), negative_flux(s), tol);
}

double lma_residual(const SGState& s, const TorusField& dt_pstar) {
  const auto op = DivergenceFormOperator::periodic(cofactor(s.pstar));
  const auto lhs = op.apply(dt_pstar);
  const auto rhs = periodic_divergence(negative_flux(s));
  const double denom = l2_norm(rhs);
  const double num = l2_norm(lhs - rhs);
  if (denom == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / denom;
}

EulerianFields recover_eulerian(const SGState& s, const VectorField& dt_grad_pstar) {
  if (!s.p) throw Error(ErrorCode::InvalidArgument, "state has no Legendre transform");
  require_same_grid(s.rho.grid(), dt_grad_pstar.grid(), "eulerian recovery");
  const auto& g = s.rho.grid();
  const auto& P = *s.p;
  EulerianFields e{subtract_mean(P.potential.periodic()), VectorField(g), VectorField(g)};
  const auto& H = s.pstar;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.center(k);
    const Vec2 y = P.gradient_at(x);
    const Vec2 d = perp(y - x);
    const Vec2 a = dt_grad_pstar.sample(y);
    const double h11 = H.h11().sample(y), h12 = H.h12().sample(y), h22 = H.h22().sample(y);
    e.u.c1[k] = a[0] + h11 * d[0] + h12 * d[1];
    e.u.c2[k] = a[1] + h12 * d[0] + h22 * d[1];
  }
  const auto grad_p = periodic_gradient(e.p);
  e.u_g = VectorField(-1.0 * grad_p.c2, grad_p.c1);
  return e;
}

double transport_cost(const SGState& s) {
  const auto& off = s.pstar.gradient_offset();
  TorusField c(s.rho.grid());
  for (std::size_t k = 0; k < c.grid().size(); ++k) c[k] = s.rho[k] * dot(off.at(k), off.at(k));
  return integral(c);
}

}  // namespace sglab

namespace sglab {

double hessian_lp_norm(const ConvexPotential& pstar, double p) {
  const auto& g = pstar.grid();
  TorusField f(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double a = pstar.h11()[k], b = pstar.h12()[k], c = pstar.h22()[k];
    f[k] = std::sqrt(a * a + 2 * b * b + c * c);
  }
  return lp_norm(f, p);
}

double weighted_power_integral(const TorusField& rho, const VectorField& v, double kappa) {
  require_same_grid(rho.grid(), v.grid(), "weighted power integral");
  TorusField f(rho.grid());
  for (std::size_t k = 0; k < f.grid().size(); ++k) f[k] = rho[k] * std::pow(norm(v.at(k)), 1.0 + kappa);
  return integral(f);
}

namespace {

using Snapshot = std::shared_ptr<const SGState>;

StepRecord make_record(const SGState& prev, const SGState& cur, const SGState& next, const RunOptions& o,
                       TorusField* field_out) {
  StepRecord r;
  r.step = cur.step;
  r.t = cur.t;
  r.cert = cur.cert;
  const TorusField dP = time_derivative_potential(prev, next);
  r.dt_pstar_l2 = l2_norm(dP);
  r.dt_pstar_sup = dP.sup_norm();
  r.w21 = hessian_lp_norm(cur.pstar, 1.0 + o.w21_eps);
  const VectorField dG = time_derivative_gradient(prev, next);
  for (int k = 0; k < 2; ++k) r.dt_grad_power[k] = weighted_power_integral(cur.rho, dG, kKappas[k]);
  r.lma_residual = (o.lma_every > 0 && cur.step % o.lma_every == 0) ? lma_residual(cur, dP)
                                                                     : std::numeric_limits<double>::quiet_NaN();
  if (field_out) *field_out = o.field_source == RunOptions::DtSource::elliptic ? lma_time_derivative(cur) : dP;
  return r;
}

}  // namespace

RunResult run_sg(const TorusField& rho0, const RunOptions& opts,
                 const std::function<void(const StepRecord&)>& on_record) {
  if (!(opts.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (opts.steps < 1) throw Error(ErrorCode::InvalidArgument, "need at least one step");
  RunResult out;
  out.diagnostics.grid = rho0.grid();
  SGOptions so = opts.sg;
  const bool strict = so.strict;
  so.strict = false;

  BoundedQueue<Snapshot> queue(opts.queue_capacity);
  std::exception_ptr consumer_error;
  std::thread consumer([&] {
    try {
      std::vector<Snapshot> w;  // sliding window of at most three states
      auto emit = [&](const SGState& a, const SGState& b, const SGState& c) {
        TorusField f;
        auto r = make_record(a, b, c, opts, opts.keep_fields ? &f : nullptr);
        if (opts.keep_fields) out.diagnostics.dt_pstar.push_back(std::move(f));
        out.diagnostics.records.push_back(r);
        if (on_record) on_record(r);
        if (opts.on_state) opts.on_state(b);
      };
      while (auto s = queue.pop()) {
        w.push_back(std::move(*s));
        if (w.size() == 2) emit(*w[0], *w[0], *w[1]);
        if (w.size() == 3) {
          emit(*w[0], *w[1], *w[2]);
          w.erase(w.begin());
        }
      }
      if (w.size() == 2) emit(*w[0], *w[1], *w[1]);
    } catch (...) {
      consumer_error = std::current_exception();
      queue.abort();
    }
  });

  try {
    auto cur = std::make_shared<const SGState>(initial_state(rho0, so));
    auto check = [&](const SGState& s) {
      const auto bad = violated_certificate(s);
      if (bad.empty() || !out.violation.empty()) return;
      if (strict)
        throw Error(ErrorCode::InvariantViolation,
                    "certificate violated at step " + std::to_string(s.step) + ": " + bad);
      out.violation = bad;
      out.violation_step = s.step;
    };
    check(*cur);
    queue.push(cur);
    for (int k = 0; k < opts.steps; ++k) {
      auto next = std::make_shared<const SGState>(step(*cur, opts.dt, so));
      check(*next);
      if (!queue.push(next)) break;
      cur = std::move(next);
    }
    queue.close();
    consumer.join();
    if (consumer_error) std::rethrow_exception(consumer_error);
    out.final_state = *cur;
  } catch (...) {
    queue.abort();
    if (consumer.joinable()) consumer.join();
    throw;
  }
  return out;
}

HolderTimeReport holder_in_time_report(const TimeSeriesDiagnostics& run, int centers, std::uint64_t seed,
                                       const std::vector<double>& radii_in) {
  if (run.records.size() < 20 || run.dt_pstar.size() != run.records.size())
    throw Error(ErrorCode::InsufficientSamples, "holder-in-time report needs at least 20 recorded steps with fields");
  const auto radii = radii_in.empty() ? local_holder_radii(run.grid) : radii_in;
  const auto cs = sample_centers(run.grid, centers, seed);
  HolderTimeReport rep;
  rep.gamma_min = std::numeric_limits<double>::infinity();
  int good = 0, constant = 0;
  for (std::size_t s = 0; s < run.records.size(); ++s) {
    for (int k = 0; k < 2; ++k)
      rep.dt_grad_power_max[k] = std::max(rep.dt_grad_power_max[k], run.records[s].dt_grad_power[k]);
    auto eh = holder_fit_envelope(run.dt_pstar[s], cs, radii);
    for (std::size_t c = 0; c < cs.size(); ++c) {
      if (eh.fits[c].flag == "constant")
        ++constant;
      else if (eh.fits[c].r2 >= 0.8)
        ++good;
      rep.samples.push_back({run.records[s].step, run.records[s].t, cs[c], std::move(eh.fits[c])});
    }
    if (eh.envelope.flag != "constant") {
      rep.gamma_min = std::min(rep.gamma_min, eh.envelope.gamma);
      rep.C_max = std::max(rep.C_max, eh.envelope.C);
    }
    rep.envelope.push_back(std::move(eh.envelope));
  }
  const int total = static_cast<int>(rep.samples.size());
  if (constant == total) {
    rep.flag = "constant";
    rep.good_fraction = 1.0;
  } else {
    rep.good_fraction = double(good) / double(total - constant);
  }
  return rep;
}

}  // namespace sglab
