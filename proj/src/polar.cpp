#include "sglab/polar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>

#include "json.hpp"
#include "sglab/field_io.hpp"
#include "sglab/fit.hpp"

namespace sglab {

namespace {

// Unnormalized CIC histogram (mass per cell / cell area). With s > 1 every
// source cell is split into s x s sub-cells whose images come from bilinear
// interpolation of the displacement (unwrapped around the cell's own value).
TorusField deposit(const PeriodicDisplacement& X, int s) {
  const auto& g = X.grid();
  const int n = g.n();
  TorusField out(g);
  auto& v = out.mutable_values();
  const double w = 1.0 / (s * s);
  auto put = [&](Vec2 y) {
    // Cell centers sit at (i + 1/2) h.
    const double a = wrap_unit(y[0]) * n - 0.5, b = wrap_unit(y[1]) * n - 0.5;
    const double fa = std::floor(a), fb = std::floor(b);
    const double wa = a - fa, wb = b - fb;
    const int i = static_cast<int>(fa), j = static_cast<int>(fb);
    v[g.index(i, j)] += w * (1 - wa) * (1 - wb);
    v[g.index(i + 1, j)] += w * wa * (1 - wb);
    v[g.index(i, j + 1)] += w * (1 - wa) * wb;
    v[g.index(i + 1, j + 1)] += w * wa * wb;
  };
  const auto& d = X.field();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.center(k);
    if (s == 1) {
      put(x + X.at(k));
      continue;
    }
    const auto c = g.cell(k);
    const Vec2 dk = X.at(k);
    auto near = [&](int i, int j) {
      const Vec2 e = d.at(g.index(i, j));
      return Vec2{dk[0] + wrap_half(e[0] - dk[0]), dk[1] + wrap_half(e[1] - dk[1])};
    };
    for (int p = 0; p < s; ++p)
      for (int q = 0; q < s; ++q) {
        // Offset of the sub-cell center from the cell center, in cells.
        const double oa = (p + 0.5) / s - 0.5, ob = (q + 0.5) / s - 0.5;
        const int si = oa < 0 ? -1 : 1, sj = ob < 0 ? -1 : 1;
        const double ta = std::abs(oa), tb = std::abs(ob);
        const Vec2 d00 = dk, d10 = near(c.i + si, c.j), d01 = near(c.i, c.j + sj), d11 = near(c.i + si, c.j + sj);
        Vec2 di;
        for (int r = 0; r < 2; ++r)
          di[r] = (1 - ta) * (1 - tb) * d00[r] + ta * (1 - tb) * d10[r] + (1 - ta) * tb * d01[r] + ta * tb * d11[r];
        put(x + Vec2{oa * g.spacing(), ob * g.spacing()} + di);
      }
  }
  return out;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

void MapTimeSeries::validate() const {
  if (times.size() != maps.size()) throw Error(ErrorCode::InvalidArgument, "times and maps differ in length");
  for (std::size_t t = 1; t < times.size(); ++t)
    if (!(times[t] > times[t - 1])) throw Error(ErrorCode::InvalidArgument, "timestamps must increase strictly");
  for (const auto& m : maps) require_same_grid(m.grid(), grid, "map series");
}

VectorField MapTimeSeries::time_derivative(std::size_t t) const {
  if (times.size() < 2) throw Error(ErrorCode::InsufficientSamples, "time derivative needs two maps");
  if (t >= times.size()) throw Error(ErrorCode::InvalidArgument, "time index out of range");
  const std::size_t a = t == 0 ? 0 : t - 1, b = t + 1 == times.size() ? t : t + 1;
  const double inv = 1.0 / (times[b] - times[a]);
  VectorField d(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec2 x = maps[b].at(k) - maps[a].at(k);
    d.c1[k] = inv * wrap_half(x[0]);
    d.c2[k] = inv * wrap_half(x[1]);
  }
  return d;
}

void MapTimeSeries::save(const std::filesystem::path& dir) const {
  validate();
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["n"] = grid.n();
  m["times"] = times;
  std::vector<std::string> files;
  for (std::size_t t = 0; t < maps.size(); ++t) {
    files.push_back("map_" + std::to_string(t) + ".bin");
    io::write_binary(maps[t].field(), dir / files.back());
  }
  m["files"] = files;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << "\n";
}

MapTimeSeries MapTimeSeries::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + manifest.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, "manifest: " + std::string(e.what()));
  }
  if (!m.contains("n") || !m.contains("times")) throw Error(ErrorCode::Config, "manifest needs n and times");
  MapTimeSeries s;
  s.grid = TorusGrid(m["n"].get<int>());
  s.times = m["times"].get<std::vector<double>>();
  const auto dir = manifest.parent_path();
  for (std::size_t t = 0; t < s.times.size(); ++t) {
    const std::string name =
        m.contains("files") ? m["files"][t].get<std::string>() : "map_" + std::to_string(t) + ".bin";
    s.maps.emplace_back(io::read_vector_binary(dir / name));
  }
  s.validate();
  return s;
}

TorusField pushforward_density(const PeriodicDisplacement& X, double* normalization, int subsamples) {
  if (subsamples < 1) throw Error(ErrorCode::InvalidArgument, "subsamples must be positive");
  TorusField rho = deposit(X, subsamples);
  if (rho.min() <= 0.0) throw Error(ErrorCode::DegenerateMap, "a target cell receives no mass");
  // Each source cell carries mass h^2 and the target cell has area h^2, so the
  // raw counts already are densities; rounding is the only drift.
  const double f = 1.0 / integral(rho);
  rho *= f;
  if (normalization) *normalization = f;
  return rho;
}

PolarFactorization factorize(const PeriodicDisplacement& X, double lambda, double Lambda, double tol) {
  const auto& grid = X.grid();
  if (tol <= 0.0) tol = 5.0 * grid.spacing();
  PolarFactorization f;
  f.rho = pushforward_density(X, &f.normalization);
  f.pstar = solve_ma_periodic(f.rho, lambda, Lambda, 0.0);
  f.p = legendre(f.pstar);
  const auto& off = f.pstar.gradient_offset();
  VectorField gd(grid);
  std::vector<double> res(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec2 x = grid.center(k), y = x + X.at(k);
    const Vec2 d = X.at(k) + off.sample(y);
    gd.c1[k] = d[0];
    gd.c2[k] = d[1];
    res[k] = periodic_distance(f.p.gradient_at(x + d), y);
  }
  f.g = PeriodicDisplacement(gd);
  f.residual_max = *std::max_element(res.begin(), res.end());
  f.residual_median = median(std::move(res));
  const TorusField pushed = deposit(f.g, kPushforwardSubsamples);
  f.defect = lp_norm(pushed - TorusField(grid, 1.0), 1.0);
  if (f.residual_median > tol)
    throw Error(ErrorCode::FactorizationResidualTooLarge,
                "median residual " + std::to_string(f.residual_median) + " exceeds " + std::to_string(tol));
  return f;
}

PolarReport polar_time_regularity(const MapTimeSeries& series, double lambda, double Lambda,
                                  const PolarOptions& opts) {
  series.validate();
  const std::size_t T = series.times.size();
  if (T < 3) throw Error(ErrorCode::InsufficientSamples, "polar time regularity needs at least 3 timestamps");
  std::vector<std::future<PolarFactorization>> jobs;
  for (std::size_t t = 0; t < T; ++t)
    jobs.push_back(std::async(std::launch::async, [&, t] { return factorize(series.maps[t], lambda, Lambda, opts.tol); }));
  std::vector<PolarFactorization> fs;
  for (auto& j : jobs) fs.push_back(j.get());

  const auto& grid = series.grid;
  const auto radii = opts.radii.empty() ? local_holder_radii(grid) : opts.radii;
  const auto centers = sample_centers(grid, opts.centers, opts.seed);
  PolarReport rep;
  rep.gamma_min = std::numeric_limits<double>::infinity();
  bool all_constant = true;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t a = t == 0 ? 0 : t - 1, b = t + 1 == T ? t : t + 1;
    const double inv = 1.0 / (series.times[b] - series.times[a]);
    TorusField dP = subtract_mean(inv * (fs[b].pstar.periodic() - fs[a].pstar.periodic()));
    const auto& ga = fs[a].pstar.gradient_offset();
    const auto& gb = fs[b].pstar.gradient_offset();
    const VectorField dG(inv * (gb.c1 - ga.c1), inv * (gb.c2 - ga.c2));
    PolarStep s;
    s.t = series.times[t];
    s.defect = fs[t].defect;
    s.residual = fs[t].residual_median;
    const auto eh = holder_fit_envelope(dP, centers, radii);
    s.holder = eh.envelope;
    int good = 0;
    for (const auto& f : eh.fits) good += f.flag != "constant" && f.r2 >= 0.8;
    s.good_fraction = double(good) / double(eh.fits.size());
    for (int k = 0; k < 2; ++k) {
      const double kappa = 0.1 * (k + 1);
      TorusField w(grid);
      for (std::size_t c = 0; c < grid.size(); ++c) w[c] = fs[t].rho[c] * std::pow(norm(dG.at(c)), 1.0 + kappa);
      s.dt_grad_power[k] = integral(w);
    }
    if (s.holder.flag != "constant") {
      all_constant = false;
      rep.gamma_min = std::min(rep.gamma_min, s.holder.gamma);
      rep.C_max = std::max(rep.C_max, s.holder.C);
    }
    rep.steps.push_back(std::move(s));
    rep.dt_pstar.push_back(std::move(dP));
  }
  if (all_constant) rep.flag = "constant";
  return rep;
}

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// x1 with x1 - 2 pi eps sin(2 pi x1) = y1.
double invert_profile(double y, double eps) {
  double x = y;
  for (int it = 0; it < 60; ++it)
    x -= (x - kTwoPi * eps * std::sin(kTwoPi * x) - y) / (1 - kTwoPi * kTwoPi * eps * std::cos(kTwoPi * x));
  return x;
}

}  // namespace

MapTimeSeries analytic_polar_family(TorusGrid grid, int count, double dt, double amplitude) {
  MapTimeSeries s;
  s.grid = grid;
  for (int k = 0; k < count; ++k) {
    const double t = dt * k, eps = amplitude * std::sin(t);
    VectorField d(grid);
    for (std::size_t q = 0; q < grid.size(); ++q) d.c1[q] = -kTwoPi * eps * std::sin(kTwoPi * grid.center(q)[0]);
    s.times.push_back(t);
    s.maps.emplace_back(d);
  }
  return s;
}

TorusField analytic_polar_dt_pstar(TorusGrid grid, double t, double amplitude) {
  // d_t P*(y) = -d_t Phat(grad Phat*(y)).
  const double eps = amplitude * std::sin(t), deps = amplitude * std::cos(t);
  return subtract_mean(TorusField::from_function(
      grid, [&](Vec2 y) { return -deps * std::cos(kTwoPi * invert_profile(y[0], eps)); }));
}

}  // namespace sglab
