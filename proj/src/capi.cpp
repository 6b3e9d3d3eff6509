#include "sglab.h"

#include <iostream>
#include <string>

#include "sglab/config.hpp"
#include "sglab/field_io.hpp"
#include "sglab/ma_solver.hpp"
#include "sglab/presets.hpp"
#include "sglab/runner.hpp"

struct sgl_config {
  sglab::RunConfig cfg;
};
struct sgl_field {
  sglab::TorusField f;
};
struct sgl_potential {
  sglab::ConvexPotential p;
};

namespace {

thread_local std::string g_last_error;

template <class F>
sgl_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return SGL_OK;
  } catch (const sglab::Error& e) {
    g_last_error = e.what();
    return static_cast<sgl_status>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SGL_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return SGL_INTERNAL;
  }
}

sgl_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return SGL_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* sgl_last_error(void) { return g_last_error.c_str(); }

const char* sgl_status_name(sgl_status s) {
  if (s == SGL_INTERNAL) return "Internal";
  return sglab::error_name(static_cast<sglab::ErrorCode>(s));
}

int sgl_exit_status(sgl_status s) {
  if (s == SGL_INTERNAL) return 2;
  return sglab::exit_status(static_cast<sglab::ErrorCode>(s));
}

sgl_config* sgl_config_new(void) { return new (std::nothrow) sgl_config; }
void sgl_config_free(sgl_config* cfg) { delete cfg; }

sgl_status sgl_config_load(sgl_config* cfg, const char* path) {
  if (!cfg || !path) return null_arg("config or path");
  return guard([&] {
    const auto loaded = sglab::RunConfig::from_file(path);
    for (const auto& [k, v] : loaded.entries()) cfg->cfg.set(k, v);
  });
}

sgl_status sgl_config_parse(sgl_config* cfg, const char* text) {
  if (!cfg || !text) return null_arg("config or text");
  return guard([&] {
    const auto parsed = sglab::RunConfig::from_text(text);
    for (const auto& [k, v] : parsed.entries()) cfg->cfg.set(k, v);
  });
}

sgl_status sgl_config_set(sgl_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return null_arg("config, key or value");
  return guard([&] { cfg->cfg.set(key, value); });
}

int sgl_run(const char* subcommand, const sgl_config* cfg) {
  if (!subcommand || !cfg) return sgl_exit_status(null_arg("subcommand or config"));
  try {
    return sglab::run_subcommand(subcommand, cfg->cfg, std::cout, std::cerr);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

const char* const* sgl_subcommands(void) {
  static const auto table = [] {
    std::vector<const char*> t;
    for (const auto& s : sglab::subcommand_names()) t.push_back(s.c_str());
    t.push_back(nullptr);
    return t;
  }();
  return table.data();
}

sgl_status sgl_field_preset(const char* name, int n, sgl_field** out) {
  if (!name || !out) return null_arg("name or out");
  return guard([&] { *out = new sgl_field{sglab::presets::density(name, sglab::TorusGrid(n))}; });
}

sgl_status sgl_field_read(const char* path, sgl_field** out) {
  if (!path || !out) return null_arg("path or out");
  return guard([&] { *out = new sgl_field{sglab::io::read_field(path)}; });
}

sgl_status sgl_field_write(const sgl_field* f, const char* path) {
  if (!f || !path) return null_arg("field or path");
  return guard([&] {
    const std::string p(path);
    if (p.size() >= 4 && p.compare(p.size() - 4, 4, ".csv") == 0)
      sglab::io::write_csv(f->f, p);
    else
      sglab::io::write_binary(f->f, p);
  });
}

int sgl_field_n(const sgl_field* f) { return f ? f->f.grid().n() : 0; }

sgl_status sgl_field_values(const sgl_field* f, double* dst, size_t count) {
  if (!f || !dst) return null_arg("field or destination");
  return guard([&] {
    const auto& v = f->f.values();
    if (count < v.size())
      throw sglab::Error(sglab::ErrorCode::InvalidArgument, "destination holds fewer than n*n values");
    std::copy(v.begin(), v.end(), dst);
  });
}

void sgl_field_free(sgl_field* f) { delete f; }

sgl_status sgl_ma_solve(const sgl_field* rho, double lambda, double Lambda, double tol, sgl_potential** out) {
  if (!rho || !out) return null_arg("density or out");
  return guard([&] { *out = new sgl_potential{sglab::solve_ma_periodic(rho->f, lambda, Lambda, tol)}; });
}

sgl_status sgl_potential_periodic(const sgl_potential* p, sgl_field** out) {
  if (!p || !out) return null_arg("potential or out");
  return guard([&] { *out = new sgl_field{p->p.periodic()}; });
}

double sgl_potential_residual(const sgl_potential* p) { return p ? p->p.residual : -1.0; }
int sgl_potential_newton_iters(const sgl_potential* p) { return p ? p->p.newton_iters : -1; }
void sgl_potential_free(sgl_potential* p) { delete p; }

}  // extern "C"
