#include "sglab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "sglab/acceptance.hpp"
#include "sglab/field_io.hpp"
#include "sglab/polar.hpp"
#include "sglab/presets.hpp"
#include "sglab/sg_dynamics.hpp"

namespace sglab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::set<std::string> kCommonKeys{"n", "seed", "out", "soft", "quick", "tol", "config"};

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_keys(const RunConfig& cfg, std::set<std::string> keys) {
  keys.insert(kCommonKeys.begin(), kCommonKeys.end());
  cfg.require_known(keys);
}

struct Run {
  const RunConfig& cfg;
  std::ostream& out;
  std::ostream& err;
  fs::path dir;

  void write_json(const std::string& name, const json& j) const {
    std::ofstream f(dir / name);
    f << j.dump(2) << '\n';
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
  }
  std::ofstream open(const std::string& name) const {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
    return f;
  }
  bool soft() const { return cfg.get_bool("soft", false); }
  std::uint64_t seed() const { return cfg.get_seed("seed", 1); }
};

// Density from a preset name or a field file; n must agree with the file if given.
TorusField load_density(const RunConfig& cfg, const std::string& key, const std::string& fallback) {
  const std::string spec = cfg.get(key, fallback);
  const int n = cfg.get_positive_int("n", 64);
  for (const auto& name : presets::density_names())
    if (spec == name) return presets::density(name, TorusGrid(n));
  if (spec == "quadratic") return presets::uniform(TorusGrid(n));
  if (!fs::exists(spec)) throw Error(ErrorCode::Config, key + ": '" + spec + "' is neither a preset nor a file");
  auto f = io::read_field(spec);
  if (cfg.has("n") && f.grid().n() != n)
    throw Error(ErrorCode::Config, key + ": file has n = " + std::to_string(f.grid().n()) + ", config says " +
                                       std::to_string(n));
  return f;
}

std::pair<double, double> bounds_for(const RunConfig& cfg, const std::string& key, const std::string& fallback,
                                     const TorusField& rho) {
  std::pair<double, double> b{rho.min(), rho.max()};
  const std::string spec = cfg.get(key, fallback);
  for (const auto& name : presets::density_names())
    if (spec == name) b = presets::density_bounds(name);
  b.first = cfg.get_positive("lambda", b.first);
  b.second = cfg.get_positive("Lambda", b.second);
  if (b.first > b.second) throw Error(ErrorCode::Config, "lambda exceeds Lambda");
  return b;
}

ConvexPotential load_potential(const RunConfig& cfg, const std::string& fallback) {
  const auto rho = load_density(cfg, "potential", fallback);
  const auto [lo, hi] = bounds_for(cfg, "potential", fallback, rho);
  return solve_ma_periodic(rho, lo, hi, cfg.get_positive("tol", default_ma_tol(hi)));
}

CellIndex center_of(const RunConfig& cfg, TorusGrid g, std::pair<double, double> fallback) {
  const auto [x, y] = cfg.get_point("center", fallback);
  return g.nearest_cell({x, y});
}

json cell_json(TorusGrid g, CellIndex c) {
  const Vec2 x = g.center(c.i, c.j);
  return json{{"i", c.i}, {"j", c.j}, {"x", x[0]}, {"y", x[1]}};
}

json fit_json(const HolderFit& f) {
  json j{{"gamma_hat", std::isfinite(f.gamma) ? json(f.gamma) : json(nullptr)}, {"C_hat", f.C}, {"r2", f.r2}};
  if (!f.flag.empty()) j["flag"] = f.flag;
  return j;
}

// ---------------------------------------------------------------------------

int ma_solve(const Run& r) {
  require_keys(r.cfg, {"rho0", "lambda", "Lambda"});
  const auto rho = load_density(r.cfg, "rho0", "perturbed");
  const auto [lo, hi] = bounds_for(r.cfg, "rho0", "perturbed", rho);
  const auto p = solve_ma_periodic(rho, lo, hi, r.cfg.get_positive("tol", default_ma_tol(hi)));
  io::write_binary(p.periodic(), r.dir / "q.bin");
  r.write_json("ma_report.json", json{{"n", p.grid().n()},
                                      {"lambda", lo},
                                      {"Lambda", hi},
                                      {"residual", p.residual},
                                      {"newton_iters", p.newton_iters}});
  r.out << "ma-solve: n=" << p.grid().n() << " residual=" << num(p.residual) << " newton_iters=" << p.newton_iters
        << '\n';
  return 0;
}

int sg_run(const Run& r) {
  require_keys(r.cfg, {"rho0", "lambda", "Lambda", "dt", "t_end", "steps", "report_every", "lma_every", "legendre",
                       "holder_centers"});
  const auto rho0 = load_density(r.cfg, "rho0", "perturbed");
  RunOptions o;
  o.dt = r.cfg.get_positive("dt", 2e-3);
  o.steps = r.cfg.has("t_end") ? static_cast<int>(std::lround(r.cfg.get_positive("t_end", 1.0) / o.dt))
                               : r.cfg.get_positive_int("steps", 100);
  if (o.steps < 1) throw Error(ErrorCode::Config, "t_end is shorter than one step");
  if (r.cfg.has("lambda")) o.sg.lambda = r.cfg.get_positive("lambda", 1.0);
  if (r.cfg.has("Lambda")) o.sg.Lambda = r.cfg.get_positive("Lambda", 1.0);
  if (r.cfg.has("tol")) o.sg.tol = r.cfg.get_positive("tol", 1.0);
  o.sg.legendre = r.cfg.get_bool("legendre", false);
  o.sg.strict = !r.soft();
  o.lma_every = r.cfg.has("lma_every") ? r.cfg.get_positive_int("lma_every", 1) : 10;
  const int report_every = r.cfg.get_positive_int("report_every", o.steps);
  const int centers = r.cfg.get_positive_int("holder_centers", 16);
  o.keep_fields = o.steps + 1 >= 20;

  auto csv = r.open("certificates.csv");
  csv << "t,mass,min_rho,max_rho,u_inf,ma_residual,lma_residual\n";
  fs::create_directories(r.dir / "snapshots");
  auto dump = [&](const char* stem, int step, const TorusField& f) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%06d.bin", stem, step);
    io::write_binary(f, r.dir / "snapshots" / name);
  };
  o.on_state = [&](const SGState& s) {
    if (s.step % report_every == 0 || s.step == o.steps) dump("rho", s.step, s.rho);
  };
  const auto run = run_sg(rho0, o, [&](const StepRecord& rec) {
    const auto& c = rec.cert;
    csv << num(rec.t) << ',' << num(c.mass) << ',' << num(c.min_rho) << ',' << num(c.max_rho) << ','
        << num(c.u_inf) << ',' << num(c.ma_residual) << ',' << num(rec.lma_residual) << '\n';
  });
  csv.close();
  const auto& diag = run.diagnostics;
  for (std::size_t k = 0; k < diag.dt_pstar.size(); ++k)
    if (diag.records[k].step % report_every == 0 || diag.records[k].step == o.steps)
      dump("dt_pstar", diag.records[k].step, diag.dt_pstar[k]);

  json summary{{"n", rho0.grid().n()}, {"dt", o.dt}, {"steps", o.steps}};
  double w21 = 0.0, dP = 0.0, lma = 0.0;
  for (const auto& rec : diag.records) {
    w21 = std::max(w21, rec.w21);
    dP = std::max(dP, rec.dt_pstar_sup);
    if (!std::isnan(rec.lma_residual)) lma = std::max(lma, rec.lma_residual);
  }
  summary["w21_max"] = w21;
  summary["dt_pstar_sup_max"] = dP;
  summary["lma_residual_max"] = lma;
  if (o.keep_fields) {
    const auto rep = holder_in_time_report(diag, centers, r.seed());
    summary["holder"] = json{{"centers", centers},
                             {"gamma_min", std::isfinite(rep.gamma_min) ? json(rep.gamma_min) : json(nullptr)},
                             {"C_max", rep.C_max},
                             {"good_fraction", rep.good_fraction},
                             {"dt_grad_power_max", {rep.dt_grad_power_max[0], rep.dt_grad_power_max[1]}},
                             {"flag", rep.flag}};
  } else {
    summary["holder"] = json{{"flag", "insufficient_samples"}};
  }
  summary["violation"] = run.violation.empty() ? json(nullptr) : json(run.violation);
  r.write_json("regularity_summary.json", summary);

  if (!run.violation.empty())
    r.err << "warning: certificate " << run.violation << " violated at step " << run.violation_step << '\n';
  r.out << "sg-run: " << o.steps << " steps, max |d_t P*| = " << num(dP) << '\n';
  return 0;
}

int lma_dirichlet(const Run& r) {
  require_keys(r.cfg, {"potential", "lambda", "Lambda", "center", "h0"});
  const auto phi = load_potential(r.cfg, "two_bump");
  const TorusGrid g = phi.grid();
  const auto x0 = center_of(r.cfg, g, {0.45, 0.5});
  const double h = r.cfg.get_positive("h0", 0.02);
  const Section S = extract_section(phi, x0, h);
  VectorField F(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.center(k);
    F.c1[k] = std::cos(2 * kPi * x[0]);
    F.c2[k] = std::sin(2 * kPi * (x[0] + x[1]));
  }
  LinearSolveInfo info;
  const auto u = solve_dirichlet_lma(cofactor(phi), F, S, kDefaultLmaTol, &info);
  io::write_binary(u, r.dir / "u.bin");
  r.write_json("lma_report.json", json{{"n", g.n()},
                                       {"center", cell_json(g, x0)},
                                       {"h", h},
                                       {"cells", S.size()},
                                       {"sup_u", u.sup_norm()},
                                       {"sup_F", std::max(F.c1.sup_norm(), F.c2.sup_norm())},
                                       {"iterations", info.iterations},
                                       {"relative_residual", info.relative_residual}});
  r.out << "lma-dirichlet: " << S.size() << " cells, sup|u| = " << num(u.sup_norm()) << '\n';
  return 0;
}

int green_report(const Run& r) {
  require_keys(r.cfg, {"potential", "lambda", "Lambda", "center", "h0", "rungs", "p", "kappa"});
  const auto phi = load_potential(r.cfg, "quadratic");
  const TorusGrid g = phi.grid();
  const auto x0 = center_of(r.cfg, g, {0.5, 0.5});
  const auto ps = r.cfg.get_positive_list("p", {1.0, 2.0});
  const auto ks = r.cfg.get_positive_list("kappa", {0.1, 0.2});
  const auto rep = green_integrability_report(phi, x0, r.cfg.get_positive("h0", 0.02),
                                              r.cfg.get_positive_int("rungs", 4), ps, ks, r.seed());
  auto csv = r.open("green_rows.csv");
  csv << "h,p,kappa,norm,slope,r2\n";
  json rows = json::array();
  for (const auto& row : rep.rows) {
    csv << num(row.h) << ',' << num(row.p) << ',' << num(row.kappa) << ',' << num(row.norm) << ','
        << num(row.slope) << ',' << num(row.r2) << '\n';
    rows.push_back(json{{"h", row.h}, {"p", row.p}, {"kappa", row.kappa}, {"norm", row.norm}, {"slope", row.slope},
                        {"r2", row.r2}});
  }
  r.write_json("green_report.json",
               json{{"n", g.n()},
                    {"center", cell_json(g, x0)},
                    {"rows", rows},
                    {"symmetry_defect", rep.symmetry_defect},
                    {"min_value", rep.min_value},
                    {"level_set_decay", {{"tau0", rep.decay.tau0}, {"K", rep.decay.K}, {"r2", rep.decay.r2}}}});
  r.out << "green-report: " << rep.rows.size() << " rows, symmetry defect " << num(rep.symmetry_defect) << '\n';
  return 0;
}

int sections_report(const Run& r) {
  require_keys(r.cfg, {"potential", "lambda", "Lambda", "centers", "h0", "rungs", "eps"});
  const auto phi = load_potential(r.cfg, "perturbed");
  const TorusGrid g = phi.grid();
  const double h0 = r.cfg.get_positive("h0", 0.02), eps = r.cfg.get_positive("eps", 0.1);
  const int rungs = r.cfg.get_positive_int("rungs", 4);
  json list = json::array();
  double worst = 0.0;
  for (auto x0 : sample_centers(g, r.cfg.get_positive_int("centers", 5), r.seed())) {
    double h = h0;
    for (int k = 0; k < rungs; ++k, h *= 0.5) {
      const Section S = extract_section(phi, x0, h);
      const auto J = john_normalize(S);
      list.push_back(json{{"center", cell_json(g, x0)},
                          {"h", h},
                          {"area", S.area()},
                          {"det_A", J.T.det()},
                          {"containment_ok", J.containment_ok},
                          {"w21_norm", section_w21_norm(phi, S, eps)}});
    }
    worst = std::max(worst, volume_ladder(phi, x0, h0, rungs).ratio);
  }
  r.write_json("sections_report.json", json{{"n", g.n()}, {"sections", list}, {"area_over_h_ratio_max", worst}});
  r.out << "sections-report: " << list.size() << " sections, area/h max/min = " << num(worst) << '\n';
  return 0;
}

int regularity_report(const Run& r) {
  require_keys(r.cfg, {"potential", "lambda", "Lambda", "center", "h0", "rungs"});
  const auto phi = load_potential(r.cfg, "two_bump");
  const TorusGrid g = phi.grid();
  const auto x0 = center_of(r.cfg, g, {0.45, 0.5});
  const double h0 = r.cfg.get_positive("h0", 0.02);
  const Section S = extract_section(phi, x0, h0);
  const auto b = TorusField::from_function(g, [](Vec2 x) {
    return std::sin(2 * kPi * x[0]) + 0.5 * std::cos(2 * kPi * (x[1] + 0.3 * x[0]));
  });
  const auto u = homogeneous_solution(phi, S, b);
  const auto d = oscillation_decay(u, phi, x0, h0, r.cfg.get_positive_int("rungs", 3));

  // Radii inside the section: from two cells to half its inradius.
  double inradius = 1.0;
  for (auto o : S.outer_ring()) inradius = std::min(inradius, norm(S.point(o) - S.center_point()));
  const double lo = 2 * g.spacing(), hi = std::max(0.5 * inradius, 4 * lo);
  std::vector<double> radii;
  for (int k = 0; k < 6; ++k) radii.push_back(lo * std::pow(hi / lo, k / 5.0));
  const auto fit = holder_fit(u, x0, radii);

  auto osc = r.open("oscillation.csv");
  osc << "h,osc_h,osc_half,ratio\n";
  for (const auto& rung : d.rungs)
    osc << num(rung.h) << ',' << num(rung.osc_h) << ',' << num(rung.osc_half) << ',' << num(rung.ratio) << '\n';
  auto mr = r.open("holder_profile.csv");
  mr << "r,m_r\n";
  for (std::size_t k = 0; k < fit.radii.size(); ++k) mr << num(fit.radii[k]) << ',' << num(fit.m[k]) << '\n';
  json summary = fit_json(fit);
  summary["beta_hat_max"] = d.beta_hat;
  r.write_json("regularity_report.json", summary);
  r.out << "regularity-report: beta_hat = " << num(d.beta_hat) << ", gamma_hat = " << num(fit.gamma) << '\n';
  return 0;
}

int polar_run(const Run& r) {
  require_keys(r.cfg, {"manifest", "frames", "dt", "lambda", "Lambda", "centers"});
  const int n = r.cfg.get_positive_int("n", 64);
  const bool builtin = !r.cfg.has("manifest");
  const auto series = builtin ? analytic_polar_family(TorusGrid(n), r.cfg.get_positive_int("frames", 11),
                                                      r.cfg.get_positive("dt", 0.05))
                              : MapTimeSeries::load(r.cfg.get("manifest", ""));
  PolarOptions po;
  po.seed = r.seed();
  po.centers = r.cfg.get_positive_int("centers", 16);
  if (r.cfg.has("tol")) po.tol = r.cfg.get_positive("tol", 1.0);
  const auto rep =
      polar_time_regularity(series, r.cfg.get_positive("lambda", 0.4), r.cfg.get_positive("Lambda", 2.6), po);

  auto csv = r.open("polar_summary.csv");
  csv << "t,defect,residual,gamma_hat,C_hat,r2,good_fraction" << (builtin ? ",exact_rel_l2" : "") << '\n';
  double worst = 0.0;
  for (std::size_t k = 0; k < rep.steps.size(); ++k) {
    const auto& s = rep.steps[k];
    json j{{"t", s.t}, {"defect", s.defect}, {"residual", s.residual}};
    j.update(fit_json(s.holder));
    csv << num(s.t) << ',' << num(s.defect) << ',' << num(s.residual) << ','
        << (std::isfinite(s.holder.gamma) ? num(s.holder.gamma) : "") << ',' << num(s.holder.C) << ','
        << num(s.holder.r2) << ',' << num(s.good_fraction);
    if (builtin) {
      const auto exact = analytic_polar_dt_pstar(series.grid, s.t);
      const double rel = l2_norm(rep.dt_pstar[k] - exact) / l2_norm(exact);
      worst = std::max(worst, rel);
      j["exact_rel_l2"] = rel;
      csv << ',' << num(rel);
    }
    csv << '\n';
    char name[32];
    std::snprintf(name, sizeof name, "polar_t%04zu.json", k);
    r.write_json(name, j);
  }
  json summary{{"n", series.grid.n()},
               {"frames", series.times.size()},
               {"gamma_min", std::isfinite(rep.gamma_min) ? json(rep.gamma_min) : json(nullptr)},
               {"C_max", rep.C_max},
               {"flag", rep.flag}};
  if (builtin) summary["exact_rel_l2_max"] = worst;
  r.write_json("polar_summary.json", summary);
  r.out << "polar-run: " << rep.steps.size() << " frames, gamma_min = " << num(rep.gamma_min) << '\n';
  return 0;
}

int verify(const Run& r, json& meta) {
  require_keys(r.cfg, {"only"});
  AcceptanceOptions o;
  o.quick = r.cfg.get_bool("quick", false);
  o.seed = r.seed();
  for (double id : r.cfg.get_positive_list("only", {})) o.only.push_back(static_cast<int>(id));
  o.on_result = [&](const CriterionResult& c) { r.out << format_result(c) << std::endl; };
  const auto results = run_acceptance(o);
  json list = json::array(), timing = json::object();
  int failed = 0;
  for (const auto& c : results) {
    json metrics = json::object();
    for (const auto& [k, v] : c.metrics) metrics[k] = v;
    list.push_back(json{{"id", c.id}, {"name", c.name}, {"status", c.status}, {"metrics", metrics}});
    timing[std::to_string(c.id)] = json{{"seconds", c.seconds}, {"budget_seconds", c.budget_seconds}};
    if (c.status == "FAIL") {
      ++failed;
      r.err << "criterion " << c.id << " (" << c.name << ") failed: " << c.detail << '\n';
    }
  }
  meta["criterion_seconds"] = timing;
  r.write_json("verify_summary.json", json{{"quick", o.quick}, {"failed", failed}, {"criteria", list}});
  return failed ? exit_status(ErrorCode::InvariantViolation) : 0;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"ma-solve",        "sg-run",           "lma-dirichlet",
                                              "green-report",    "sections-report",  "regularity-report",
                                              "polar-run",       "verify"};
  return names;
}

int run_subcommand(const std::string& subcommand, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  json meta{{"subcommand", subcommand}, {"started", utc_timestamp()}};
  const auto t0 = std::chrono::steady_clock::now();
  int status = 0;
  try {
    Run r{cfg, out, err, fs::path(cfg.get("out", "sglab_out"))};
    std::error_code ec;
    fs::create_directories(r.dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + r.dir.string() + ": " + ec.message());
    json echo = json::object();
    for (const auto& [k, v] : cfg.entries()) echo[k] = v;
    meta["config"] = echo;

    if (subcommand == "ma-solve") status = ma_solve(r);
    else if (subcommand == "sg-run") status = sg_run(r);
    else if (subcommand == "lma-dirichlet") status = lma_dirichlet(r);
    else if (subcommand == "green-report") status = green_report(r);
    else if (subcommand == "sections-report") status = sections_report(r);
    else if (subcommand == "regularity-report") status = regularity_report(r);
    else if (subcommand == "polar-run") status = polar_run(r);
    else if (subcommand == "verify") status = verify(r, meta);
    else throw Error(ErrorCode::Config, "unknown subcommand '" + subcommand + "'");

    meta["exit_status"] = status;
    meta["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.write_json("meta.json", meta);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_status(ErrorCode::NonConvergence);
  }
  return status;
}

}  // namespace sglab
