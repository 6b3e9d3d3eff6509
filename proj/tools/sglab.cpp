// Command-line front end over the C interface.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sglab.h"

namespace {

int fail_config(const sgl_status s) {
  std::fprintf(stderr, "error: %s\n", sgl_last_error());
  return sgl_exit_status(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual semigeostrophic numerical lab"};
  app.require_subcommand(1);
  app.allow_extras();

  std::string config, out;
  int n = 0;
  double dt = 0.0;
  long long seed = -1;
  bool soft = false, quick = false;

  std::vector<CLI::App*> subs;
  for (const char* const* name = sgl_subcommands(); *name; ++name) {
    auto* sub = app.add_subcommand(*name);
    sub->allow_extras();
    sub->add_option("--config", config, "key=value configuration file");
    sub->add_option("--n", n, "grid cells per side")->check(CLI::PositiveNumber);
    sub->add_option("--dt", dt, "time step")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "RNG seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out, "output directory");
    sub->add_flag("--soft", soft, "downgrade invariant violations to warnings");
    sub->add_flag("--quick", quick, "verify: skip the long criteria");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  sgl_config* cfg = sgl_config_new();
  if (!cfg) return 2;
  struct Free {
    sgl_config* c;
    ~Free() { sgl_config_free(c); }
  } guard{cfg};

  if (!config.empty())
    if (auto s = sgl_config_load(cfg, config.c_str()); s != SGL_OK) return fail_config(s);
  if (!config.empty()) sgl_config_set(cfg, "config", config.c_str());

  // Remaining `--key value` pairs override the file.
  const auto extras = sub->remaining();
  for (std::size_t k = 0; k < extras.size(); ++k) {
    const std::string& a = extras[k];
    if (a.rfind("--", 0) != 0 || a.size() == 2) {
      std::fprintf(stderr, "error: unexpected argument '%s'\n", a.c_str());
      return 1;
    }
    std::string key = a.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else if (k + 1 < extras.size()) {
      value = extras[++k];
    } else {
      std::fprintf(stderr, "error: --%s needs a value\n", key.c_str());
      return 1;
    }
    if (auto s = sgl_config_set(cfg, key.c_str(), value.c_str()); s != SGL_OK) return fail_config(s);
  }

  auto set = [&](const char* key, const std::string& v) { return sgl_config_set(cfg, key, v.c_str()); };
  char buf[64];
  if (n > 0) set("n", std::to_string(n));
  if (dt > 0.0) {
    std::snprintf(buf, sizeof buf, "%.17g", dt);
    set("dt", buf);
  }
  if (seed >= 0) set("seed", std::to_string(seed));
  if (!out.empty()) set("out", out);
  if (soft) set("soft", "true");
  if (quick) set("quick", "true");

  return sgl_run(sub->get_name().c_str(), cfg);
}
