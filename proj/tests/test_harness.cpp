#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "entdyn/errors.hpp"
#include "entdyn/field_dynamics.hpp"
#include "entdyn/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace entdyn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "entdyn_test_harness" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

ExperimentConfig small_ensemble(const fs::path& out, std::uint64_t seed) {
  ExperimentConfig c = default_config(Scenario::Ensemble);
  c.ensemble.particles = 20000;
  c.ensemble.threads = 3;
  c.ensemble.tolerance = 1.0;
  c.run.steps = 10;
  c.seed = seed;
  c.output_dir = out.string();
  return c;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "entdyn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("compare_fields") {
  const Grid g(-5.0, 5.0, 100);
  SUBCASE("identical fields") {
    const MadelungState s = gaussian_state(g, 0.0, 1.0, 0.0);
    for (Metric m : {Metric::L1, Metric::L2, Metric::Sup}) CHECK(compare_fields(s.rho, s.rho, m) == 0.0);
  }
  SUBCASE("deltas one cell apart") {
    DensityField a(g, 0.0), b(g, 0.0);
    a[40] = 1.0 / g.dx();
    b[41] = 1.0 / g.dx();
    CHECK(compare_fields(a, b, Metric::L1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(compare_fields(a, b, Metric::Sup) == doctest::Approx(1.0 / g.dx()));
    CHECK(compare_fields(a, b, Metric::L2) == doctest::Approx(std::sqrt(2.0 / g.dx())));
  }
  SUBCASE("Gaussian against itself with 1% amplitude noise") {
    const MadelungState s = gaussian_state(g, 0.0, 1.0, 0.0);
    DensityField noisy = s.rho;
    std::mt19937_64 gen(4);
    std::normal_distribution<double> normal;
    for (double& v : noisy.values) v *= 1.0 + 0.01 * normal(gen);
    double l1 = 0.0, l2 = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double d = std::abs(noisy[i] - s.rho[i]);
      l1 += d * g.dx();
      l2 += d * d * g.dx();
      sup = std::max(sup, d);
    }
    CHECK(compare_fields(noisy, s.rho, Metric::L1) == doctest::Approx(l1).epsilon(1e-13));
    CHECK(compare_fields(noisy, s.rho, Metric::L2) == doctest::Approx(std::sqrt(l2)).epsilon(1e-13));
    CHECK(compare_fields(noisy, s.rho, Metric::Sup) == doctest::Approx(sup).epsilon(1e-15));
  }
  SUBCASE("grid mismatch") {
    CHECK_THROWS_AS(compare_fields(DensityField(g, 0.1), DensityField(Grid(-5.0, 5.0, 50), 0.1), Metric::L1), DomainError);
  }
}

TEST_CASE("comparison report pass flag follows value <= tolerance") {
  CHECK(make_report("x", "L1", 1e-3, 1e-3, 0.0).pass);
  CHECK_FALSE(make_report("x", "L1", 2e-3, 1e-3, 0.0).pass);
  CHECK_FALSE(make_report("x", "L1", std::nan(""), 1e-3, 0.0).pass);
  const nlohmann::json j = make_report("fields", "L2", 0.5, 1.0, 2.5).to_json();
  CHECK(j.at("scenario") == "fields");
  CHECK(j.at("metric") == "L2");
  CHECK(j.at("pass") == true);
}

TEST_CASE("config round trip") {
  for (Scenario s : {Scenario::MaxentVerify, Scenario::Ensemble, Scenario::Fields, Scenario::Schrodinger,
                     Scenario::Compare, Scenario::Measure, Scenario::ClassicalLimit}) {
    ExperimentConfig c = default_config(s);
    c.seed = 42;
    const nlohmann::json once = serialize_config(c);
    const ExperimentConfig back = parse_config(once);
    CHECK(back == c);
    CHECK(serialize_config(back) == once);
  }
  ExperimentConfig c = default_config(Scenario::Fields);
  c.potential.kind = PotentialSpec::Kind::Table;
  c.potential.values.assign(c.grid.cells, 0.25);
  c.initial.kind = InitialStateSpec::Kind::Eigenstate;
  c.initial.n = 2;
  c.physics = {2.0, 0.5, 1e-4};
  c.compare.metric = Metric::Sup;
  c.ensemble.drift.kind = DriftSpec::Kind::Constant;
  c.ensemble.boundary = BoundaryPolicy::Reflecting;
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(scenario_from_string("warp-drive"), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"scenario", "fields"}, {"colour", "blue"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"grid", {{"cells", "many"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json::array()), ConfigError);
  ExperimentConfig c = default_config(Scenario::Ensemble);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.seed = 1;
  CHECK_NOTHROW(c.validate());
  c.grid.cells = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/entdyn.json"), ConfigError);
}

TEST_CASE("run: maxent-verify default passes and writes its table") {
  ExperimentConfig c = default_config(Scenario::MaxentVerify);
  c.output_dir = scratch_dir("maxent").string();
  const RunResult r = run(c);
  CHECK(r.exit_code == kExitPass);
  REQUIRE(r.reports.size() >= 1);
  CHECK(r.reports[0].value < 1e-6);
  CHECK(fs::exists(fs::path(c.output_dir) / "maxent.csv"));
  CHECK(fs::exists(fs::path(c.output_dir) / "report.json"));
}

TEST_CASE("run: missing seed and invalid settings exit with 2") {
  ExperimentConfig c = small_ensemble(scratch_dir("noseed"), 0);
  c.seed.reset();
  CHECK(run(c).exit_code == kExitConfigError);
  c.seed = 1;
  c.physics.dt = -1.0;
  CHECK(run(c).exit_code == kExitConfigError);
}

TEST_CASE("run: an unstable step exits with 3") {
  ExperimentConfig c = default_config(Scenario::Fields);
  c.grid.cells = 256;
  c.physics.dt = 0.5;
  c.output_dir = scratch_dir("unstable").string();
  CHECK(run(c).exit_code == kExitNumericalError);
}

TEST_CASE("run: a missed tolerance exits with 1") {
  ExperimentConfig c = small_ensemble(scratch_dir("tight"), 3);
  c.ensemble.tolerance = 1e-9;
  CHECK(run(c).exit_code == kExitComparisonFail);
}

TEST_CASE("run: identical config and seed give byte-identical output") {
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b"), d = scratch_dir("det_d");
  REQUIRE(run(small_ensemble(a, 11)).exit_code == kExitPass);
  REQUIRE(run(small_ensemble(b, 11)).exit_code == kExitPass);
  REQUIRE(run(small_ensemble(d, 12)).exit_code == kExitPass);
  for (const char* f : {"trajectory.csv", "histogram.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) != slurp(d / f));
    CHECK_FALSE(slurp(a / f).empty());
  }
  ExperimentConfig m = default_config(Scenario::Measure);
  m.measure.samples = 20000;
  m.seed = 5;
  m.output_dir = scratch_dir("meas_a").string();
  REQUIRE(run(m).exit_code == kExitPass);
  const std::string first = slurp(fs::path(m.output_dir) / "frequencies.csv");
  m.output_dir = scratch_dir("meas_b").string();
  REQUIRE(run(m).exit_code == kExitPass);
  CHECK(first == slurp(fs::path(m.output_dir) / "frequencies.csv"));
}

TEST_CASE("csv numbers carry 17 significant digits") {
  const fs::path dir = scratch_dir("digits");
  REQUIRE(run(small_ensemble(dir, 2)).exit_code == kExitPass);
  std::ifstream in(dir / "trajectory.csv");
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  const std::string last = line.substr(line.rfind(',') + 1);
  // round trips exactly
  const double x = std::stod(last);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  CHECK(last == buf);
}

TEST_CASE("command line") {
  std::string out, err;
  SUBCASE("help") {
    CHECK(cli({"--help"}, &out) == kExitPass);
    CHECK(out.find("maxent-verify") != std::string::npos);
  }
  SUBCASE("unknown subcommand or flag") {
    CHECK(cli({"teleport"}) == kExitConfigError);
    CHECK(cli({"fields", "--bogus"}) == kExitConfigError);
    CHECK(cli({}) == kExitConfigError);
  }
  SUBCASE("ensemble without a seed") {
    CHECK(cli({"ensemble", "--out", scratch_dir("cli_noseed").string()}, nullptr, &err) == kExitConfigError);
    CHECK(err.find("seed") != std::string::npos);
  }
  SUBCASE("config file plus seed flag") {
    const fs::path dir = scratch_dir("cli_cfg");
    ExperimentConfig c = small_ensemble(dir / "out", 0);
    c.seed.reset();
    write_file(dir / "cfg.json", serialize_config(c).dump(2));
    CHECK(cli({"ensemble", "--config", (dir / "cfg.json").string(), "--seed", "9", "--quiet"}, &out) == kExitPass);
    CHECK(out.empty());
    CHECK(fs::exists(dir / "out" / "histogram.csv"));
  }
  SUBCASE("config for another scenario") {
    const fs::path dir = scratch_dir("cli_mismatch");
    write_file(dir / "cfg.json", serialize_config(default_config(Scenario::Fields)).dump());
    CHECK(cli({"maxent-verify", "--config", (dir / "cfg.json").string()}) == kExitConfigError);
  }
  SUBCASE("malformed config file") {
    const fs::path dir = scratch_dir("cli_bad");
    write_file(dir / "cfg.json", "{ not json");
    CHECK(cli({"fields", "--config", (dir / "cfg.json").string()}) == kExitConfigError);
  }
  SUBCASE("maxent-verify prints its report") {
    CHECK(cli({"maxent-verify", "--out", scratch_dir("cli_maxent").string()}, &out) == kExitPass);
    CHECK(out.find("PASS") != std::string::npos);
  }
}
