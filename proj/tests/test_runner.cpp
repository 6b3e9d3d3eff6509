#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sglab/config.hpp"
#include "sglab/error.hpp"
#include "sglab/runner.hpp"

using namespace sglab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("sglab_runner_" + name);
  fs::remove_all(d);
  return d;
}

struct Outcome {
  int status;
  std::string out, err;
};

Outcome run(const std::string& sub, const std::string& text) {
  std::ostringstream out, err;
  const int s = run_subcommand(sub, RunConfig::from_text(text), out, err);
  return {s, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = RunConfig::from_text("# comment\n n = 64 \n\ndt=0.002  # trailing\nrho0 = perturbed\np = 1, 2.5\n"
                                      "center = 0.25,0.5\nsoft = yes\nseed = 18446744073709551615\n");
  CHECK(c.get_positive_int("n", 1) == 64);
  CHECK(c.get_positive("dt", 1.0) == 0.002);
  CHECK(c.get("rho0", "") == "perturbed");
  CHECK(c.get_positive_list("p", {}) == std::vector<double>{1.0, 2.5});
  CHECK(c.get_point("center", {0, 0}) == std::pair<double, double>{0.25, 0.5});
  CHECK(c.get_bool("soft", false));
  CHECK(c.get_seed("seed", 0) == 18446744073709551615ull);
  CHECK(c.get_positive("missing", 3.0) == 3.0);

  auto bad = [](const char* text, const char* key) {
    const auto cfg = RunConfig::from_text(text);
    CHECK_THROWS_AS((void)cfg.get_positive(key, 1.0), Error);
  };
  bad("dt = -1", "dt");
  bad("dt = 0", "dt");
  bad("dt = nan", "dt");
  bad("dt = 1e-3x", "dt");
  CHECK_THROWS_AS((void)RunConfig::from_text("n = 2.5").get_positive_int("n", 1), Error);
  CHECK_THROWS_AS((void)RunConfig::from_text("center = 1.0,0.2").get_point("center", {}), Error);
  CHECK_THROWS_AS(RunConfig::from_text("no equals sign"), Error);
  CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/sglab.cfg"), Error);
  CHECK_THROWS_AS(RunConfig::from_text("typo = 1").require_known({"n"}), Error);

  auto c2 = RunConfig::from_text("n = 64");
  c2.set("n", "32");
  CHECK(c2.get_positive_int("n", 1) == 32);
}

TEST_CASE("exit codes") {
  const auto d = scratch("codes");
  const std::string out = "out = " + d.string() + "\n";
  CHECK(run("nope", out).status == 1);
  CHECK(run("ma-solve", out + "typo = 3\n").status == 1);
  CHECK(run("ma-solve", out + "n = -4\n").status == 1);
  CHECK(run("ma-solve", out + "rho0 = not_a_preset\n").status == 1);
  // Solver error: the window excludes the density.
  const auto s = run("ma-solve", out + "n = 32\nrho0 = perturbed\nlambda = 0.9\n");
  CHECK(s.status == 2);
  CHECK(s.err.find("BadDensity") != std::string::npos);
  // Invariant violation names the certificate.
  const auto v = run("sg-run", out + "n = 32\nrho0 = perturbed\nlambda = 0.75\nsteps = 2\n");
  CHECK(v.status == 3);
  CHECK(v.err.find("min_rho") != std::string::npos);
  const auto w = run("sg-run", out + "n = 32\nrho0 = perturbed\nlambda = 0.75\nsteps = 2\nsoft = true\n");
  CHECK(w.status == 0);
  CHECK(w.err.find("warning: certificate min_rho") != std::string::npos);
  fs::remove_all(d);
}

TEST_CASE("sg-run on the uniform state") {
  const auto d = scratch("uniform");
  const auto r = run("sg-run", "n = 32\nrho0 = uniform\nsteps = 25\nout = " + d.string());
  REQUIRE(r.status == 0);
  std::istringstream csv(slurp(d / "certificates.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,mass,min_rho,max_rho,u_inf,ma_residual,lma_residual");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.find(",1,1,1,0,0,") != std::string::npos);
  }
  CHECK(rows == 26);
  const auto j = nlohmann::json::parse(slurp(d / "regularity_summary.json"));
  CHECK(j["dt_pstar_sup_max"].get<double>() == 0.0);
  CHECK(j["holder"]["flag"] == "constant");
  CHECK(fs::exists(d / "snapshots" / "rho_000025.bin"));
  CHECK(fs::exists(d / "meta.json"));
  fs::remove_all(d);
}

TEST_CASE("reports are reproducible apart from the metadata file") {
  for (const std::string sub : {"sg-run", "sections-report", "polar-run"}) {
    const auto a = scratch("repro_a"), b = scratch("repro_b");
    const std::string cfg = "n = 32\nsteps = 20\nseed = 5\n";
    const std::string keys = sub == "sg-run" ? cfg : "n = 32\nseed = 5\n";
    REQUIRE(run(sub, keys + "out = " + a.string()).status == 0);
    REQUIRE(run(sub, keys + "out = " + b.string()).status == 0);
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file() || e.path().filename() == "meta.json") continue;
      ++files;
      CAPTURE(e.path().string());
      CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
    }
    CHECK(files > 0);
    // Different seed, different centers.
    if (sub == "sections-report") {
      const auto c = scratch("repro_c");
      REQUIRE(run(sub, "n = 32\nseed = 6\nout = " + c.string()).status == 0);
      CHECK(slurp(a / "sections_report.json") != slurp(c / "sections_report.json"));
      fs::remove_all(c);
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }
}

TEST_CASE("green-report on the quadratic potential") {
  const auto d = scratch("green");
  REQUIRE(run("green-report", "n = 64\npotential = quadratic\nh0 = 0.02\nrungs = 4\np = 1\nkappa = 0.2\nout = " +
                                  d.string())
              .status == 0);
  const auto j = nlohmann::json::parse(slurp(d / "green_report.json"));
  const double slope = j["rows"][0]["slope"].get<double>();
  CHECK(slope == doctest::Approx(1.0).epsilon(0.25));
  CHECK(j["symmetry_defect"].get<double>() <= 1e-6);
  fs::remove_all(d);
}

TEST_CASE("remaining subcommands write their reports") {
  const auto d = scratch("misc");
  const std::string out = "n = 32\nout = " + d.string() + "\n";
  CHECK(run("ma-solve", out).status == 0);
  CHECK(fs::exists(d / "q.bin"));
  CHECK(run("lma-dirichlet", "n = 64\nout = " + d.string()).status == 0);
  CHECK(nlohmann::json::parse(slurp(d / "lma_report.json"))["sup_u"].get<double>() > 0.0);
  CHECK(run("regularity-report", "n = 64\nout = " + d.string()).status == 0);
  const auto j = nlohmann::json::parse(slurp(d / "regularity_report.json"));
  CHECK(j["beta_hat_max"].get<double>() < 1.0);
  CHECK(fs::exists(d / "oscillation.csv"));
  CHECK(fs::exists(d / "holder_profile.csv"));
  CHECK(run("verify", "only = 8\nout = " + d.string()).status == 0);
  const auto v = nlohmann::json::parse(slurp(d / "verify_summary.json"));
  CHECK(v["failed"] == 0);
  CHECK(v["criteria"].size() == 1);
  fs::remove_all(d);
}
