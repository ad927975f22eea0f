#include "entdyn/config.hpp"

#include "entdyn/errors.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace entdyn {

using nlohmann::json;

namespace {

struct ScenarioName {
  Scenario s;
  const char* name;
};
constexpr ScenarioName kScenarios[] = {
    {Scenario::MaxentVerify, "maxent-verify"}, {Scenario::Ensemble, "ensemble"},
    {Scenario::Fields, "fields"},              {Scenario::Schrodinger, "schrodinger"},
    {Scenario::Compare, "compare"},            {Scenario::Measure, "measure"},
    {Scenario::ClassicalLimit, "classical-limit"},
};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where.empty() ? what : where + ": " + what);
}

// Typed, strict view of one JSON object.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> keys) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
    for (const auto& item : j.items()) {
      if (!keys.count(item.key())) fail(path_, "unknown key '" + item.key() + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number()) fail(where(key), "expected a number");
    out = v.get<double>();
  }
  template <class U>
  void unsigned_int(const char* key, U& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail(where(key), "expected a non-negative integer");
    out = static_cast<U>(v.get<std::uint64_t>());
  }
  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    out = v.get<std::string>();
  }
  void numbers(const char* key, std::vector<double>& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_array()) fail(where(key), "expected an array of numbers");
    out.clear();
    for (const json& e : v) {
      if (!e.is_number()) fail(where(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
  }

 private:
  const json& j_;
  std::string path_;
};

const char* boundary_name(BoundaryPolicy b) {
  switch (b) {
    case BoundaryPolicy::Periodic: return "periodic";
    case BoundaryPolicy::Reflecting: return "reflecting";
    case BoundaryPolicy::Open: return "open";
  }
  return "periodic";
}

BoundaryPolicy boundary_from(const std::string& s, const std::string& where) {
  if (s == "periodic") return BoundaryPolicy::Periodic;
  if (s == "reflecting") return BoundaryPolicy::Reflecting;
  if (s == "open") return BoundaryPolicy::Open;
  fail(where, "unknown boundary '" + s + "'");
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::L1: return "L1";
    case Metric::L2: return "L2";
    case Metric::Sup: return "sup";
  }
  return "L2";
}

Metric metric_from(const std::string& s, const std::string& where) {
  if (s == "L1") return Metric::L1;
  if (s == "L2") return Metric::L2;
  if (s == "sup") return Metric::Sup;
  fail(where, "unknown metric '" + s + "'");
}

void require(bool ok, const char* where, const char* what) {
  if (!ok) fail(where, what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::string to_string(Scenario s) {
  for (const auto& e : kScenarios) {
    if (e.s == s) return e.name;
  }
  return "fields";
}

Scenario scenario_from_string(const std::string& name) {
  for (const auto& e : kScenarios) {
    if (name == e.name) return e.s;
  }
  fail("scenario", "unknown scenario '" + name + "'");
}

bool is_stochastic(Scenario s) {
  return s == Scenario::Ensemble || s == Scenario::Measure || s == Scenario::ClassicalLimit;
}

Grid GridSpec::make() const { return Grid(x_min, x_max, cells); }

Potential PotentialSpec::make(const Grid& grid, double mass) const {
  switch (kind) {
    case Kind::None: return Potential::none();
    case Kind::Harmonic: return Potential::harmonic(mass, omega, center);
    case Kind::Table: return Potential::table(grid, values);
  }
  return Potential::none();
}

void ExperimentConfig::validate() const {
  require(std::isfinite(grid.x_min) && std::isfinite(grid.x_max) && grid.x_min < grid.x_max, "grid",
          "x_min < x_max must be finite");
  require(grid.cells >= Grid::kMinCells, "grid.cells", "need at least 8 cells");
  require(finite_positive(physics.mass) && finite_positive(physics.hbar) && finite_positive(physics.dt), "physics",
          "mass, hbar and dt must be positive");
  switch (potential.kind) {
    case PotentialSpec::Kind::None: break;
    case PotentialSpec::Kind::Harmonic:
      require(finite_positive(potential.omega), "potential.omega", "must be positive");
      require(std::isfinite(potential.center), "potential.center", "must be finite");
      break;
    case PotentialSpec::Kind::Table:
      require(potential.values.size() == grid.cells, "potential.values", "need one value per grid cell");
      for (double v : potential.values) require(std::isfinite(v), "potential.values", "must be finite");
      break;
  }
  require(std::isfinite(initial.mu) && std::isfinite(initial.k), "initial", "mu and k must be finite");
  require(finite_positive(initial.sigma), "initial.sigma", "must be positive");
  if (initial.kind == InitialStateSpec::Kind::Eigenstate) {
    require(potential.kind == PotentialSpec::Kind::Harmonic, "initial", "eigenstates need a harmonic potential");
  }
  require(finite_positive(run.t_final), "run.t_final", "must be positive");
  require(run.steps >= 1, "run.steps", "must be at least 1");

  require(ensemble.particles >= 1, "ensemble.particles", "must be at least 1");
  require(ensemble.threads >= 1, "ensemble.threads", "must be at least 1");
  require(ensemble.histogram_cells >= Grid::kMinCells, "ensemble.histogram_cells", "need at least 8 cells");
  require(finite_positive(ensemble.tolerance), "ensemble.tolerance", "must be positive");
  require(std::isfinite(ensemble.drift.value) && std::isfinite(ensemble.drift.amplitude) &&
              std::isfinite(ensemble.drift.periods),
          "ensemble.drift", "parameters must be finite");
  if (scenario == Scenario::Ensemble) {
    require(grid.cells % ensemble.histogram_cells == 0, "ensemble.histogram_cells",
            "must divide grid.cells so the PDE density can be block averaged onto the histogram");
  }

  require(finite_positive(maxent.alpha), "maxent.alpha", "must be positive");
  require(std::isfinite(maxent.drift_gradient), "maxent.drift_gradient", "must be finite");
  require(maxent.cells >= Grid::kMinCells, "maxent.cells", "need at least 8 cells");
  require(finite_positive(maxent.tolerance), "maxent.tolerance", "must be positive");

  require(measure.lattice >= 1, "measure.lattice", "must be at least 1");
  require(measure.setup == "fourier" || measure.setup == "identity", "measure.setup",
          "must be 'fourier' or 'identity'");
  require(measure.amplifier_noise >= 0.0 && measure.amplifier_noise < 1.0, "measure.amplifier_noise",
          "must be in [0, 1)");
  require(measure.significance > 0.0 && measure.significance < 1.0, "measure.significance", "must be in (0, 1)");
  if (scenario == Scenario::Measure) {
    require(grid.cells % measure.lattice == 0, "measure.lattice", "must divide grid.cells");
  }

  require(classical.hbar_over_m.size() >= 2, "classical.hbar_over_m", "need at least two values");
  for (double h : classical.hbar_over_m) require(finite_positive(h), "classical.hbar_over_m", "must be positive");
  require(finite_positive(classical.omega), "classical.omega", "must be positive");
  require(std::isfinite(classical.x0), "classical.x0", "must be finite");
  require(classical.particles >= 2, "classical.particles", "need at least two particles");
  require(finite_positive(classical.slope_tolerance) && finite_positive(classical.variance_tolerance), "classical",
          "tolerances must be positive");

  require(finite_positive(compare.tolerance), "compare.tolerance", "must be positive");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  if (is_stochastic(scenario) && !seed) {
    fail("seed", "a seed is required for the stochastic scenario '" + to_string(scenario) + "'");
  }
}

ExperimentConfig default_config(Scenario s) {
  ExperimentConfig c;
  c.scenario = s;
  switch (s) {
    case Scenario::Ensemble:
      c.grid = {-10.0, 10.0, 512};
      c.physics.dt = 0.01;
      break;
    case Scenario::Measure:
      c.initial.k = 1.0;
      break;
    case Scenario::ClassicalLimit:
      c.grid = {-4.0, 4.0, 2048};
      c.physics.dt = 2e-3;
      c.potential.kind = PotentialSpec::Kind::Harmonic;
      c.run.t_final = 2.0 * std::numbers::pi;
      break;
    default:
      break;
  }
  return c;
}

ExperimentConfig parse_config(const json& j, Scenario fallback) {
  const Section top(j, "",
                    {"scenario", "grid", "physics", "potential", "initial_state", "run", "ensemble", "maxent", "measure",
                     "classical", "compare", "seed", "output_dir"});
  Scenario scenario = fallback;
  if (top.has("scenario")) {
    std::string name;
    top.string("scenario", name);
    scenario = scenario_from_string(name);
  }
  ExperimentConfig c = default_config(scenario);

  if (top.has("grid")) {
    const Section s(top.at("grid"), "grid", {"x_min", "x_max", "cells"});
    s.number("x_min", c.grid.x_min);
    s.number("x_max", c.grid.x_max);
    s.unsigned_int("cells", c.grid.cells);
  }
  if (top.has("physics")) {
    const Section s(top.at("physics"), "physics", {"mass", "hbar", "dt"});
    s.number("mass", c.physics.mass);
    s.number("hbar", c.physics.hbar);
    s.number("dt", c.physics.dt);
  }
  if (top.has("potential")) {
    const Section s(top.at("potential"), "potential", {"type", "omega", "center", "values"});
    std::string type = "none";
    s.string("type", type);
    if (type == "none") {
      c.potential.kind = PotentialSpec::Kind::None;
    } else if (type == "harmonic") {
      c.potential.kind = PotentialSpec::Kind::Harmonic;
    } else if (type == "table") {
      c.potential.kind = PotentialSpec::Kind::Table;
    } else {
      fail("potential.type", "unknown potential '" + type + "'");
    }
    s.number("omega", c.potential.omega);
    s.number("center", c.potential.center);
    s.numbers("values", c.potential.values);
  }
  if (top.has("initial_state")) {
    const Section s(top.at("initial_state"), "initial_state", {"type", "mu", "sigma", "k", "n"});
    std::string type = "gaussian";
    s.string("type", type);
    if (type == "gaussian") {
      c.initial.kind = InitialStateSpec::Kind::Gaussian;
    } else if (type == "eigenstate") {
      c.initial.kind = InitialStateSpec::Kind::Eigenstate;
    } else {
      fail("initial_state.type", "unknown initial state '" + type + "'");
    }
    s.number("mu", c.initial.mu);
    s.number("sigma", c.initial.sigma);
    s.number("k", c.initial.k);
    s.unsigned_int("n", c.initial.n);
  }
  if (top.has("run")) {
    const Section s(top.at("run"), "run", {"t_final", "steps", "snapshot_every"});
    s.number("t_final", c.run.t_final);
    s.unsigned_int("steps", c.run.steps);
    s.unsigned_int("snapshot_every", c.run.snapshot_every);
  }
  if (top.has("ensemble")) {
    const Section s(top.at("ensemble"), "ensemble",
                    {"particles", "threads", "boundary", "histogram_cells", "record_particles", "drift", "tolerance"});
    s.unsigned_int("particles", c.ensemble.particles);
    s.unsigned_int("threads", c.ensemble.threads);
    if (s.has("boundary")) {
      std::string b;
      s.string("boundary", b);
      c.ensemble.boundary = boundary_from(b, "ensemble.boundary");
    }
    s.unsigned_int("histogram_cells", c.ensemble.histogram_cells);
    s.unsigned_int("record_particles", c.ensemble.record_particles);
    s.number("tolerance", c.ensemble.tolerance);
    if (s.has("drift")) {
      const Section d(s.at("drift"), "ensemble.drift", {"type", "value", "amplitude", "periods"});
      std::string type = "sine";
      d.string("type", type);
      if (type == "state") {
        c.ensemble.drift.kind = DriftSpec::Kind::State;
      } else if (type == "constant") {
        c.ensemble.drift.kind = DriftSpec::Kind::Constant;
      } else if (type == "sine") {
        c.ensemble.drift.kind = DriftSpec::Kind::Sine;
      } else {
        fail("ensemble.drift.type", "unknown drift '" + type + "'");
      }
      d.number("value", c.ensemble.drift.value);
      d.number("amplitude", c.ensemble.drift.amplitude);
      d.number("periods", c.ensemble.drift.periods);
    }
  }
  if (top.has("maxent")) {
    const Section s(top.at("maxent"), "maxent", {"alpha", "drift_gradient", "cells", "tolerance"});
    s.number("alpha", c.maxent.alpha);
    s.number("drift_gradient", c.maxent.drift_gradient);
    s.unsigned_int("cells", c.maxent.cells);
    s.number("tolerance", c.maxent.tolerance);
  }
  if (top.has("measure")) {
    const Section s(top.at("measure"), "measure", {"lattice", "setup", "amplifier_noise", "samples", "significance"});
    s.unsigned_int("lattice", c.measure.lattice);
    s.string("setup", c.measure.setup);
    s.number("amplifier_noise", c.measure.amplifier_noise);
    s.unsigned_int("samples", c.measure.samples);
    s.number("significance", c.measure.significance);
  }
  if (top.has("classical")) {
    const Section s(top.at("classical"), "classical",
                    {"hbar_over_m", "omega", "x0", "particles", "slope_tolerance", "variance_tolerance"});
    s.numbers("hbar_over_m", c.classical.hbar_over_m);
    s.number("omega", c.classical.omega);
    s.number("x0", c.classical.x0);
    s.unsigned_int("particles", c.classical.particles);
    s.number("slope_tolerance", c.classical.slope_tolerance);
    s.number("variance_tolerance", c.classical.variance_tolerance);
  }
  if (top.has("compare")) {
    const Section s(top.at("compare"), "compare", {"metric", "tolerance"});
    if (s.has("metric")) {
      std::string m;
      s.string("metric", m);
      c.compare.metric = metric_from(m, "compare.metric");
    }
    s.number("tolerance", c.compare.tolerance);
  }
  if (top.has("seed")) {
    std::uint64_t seed = 0;
    top.unsigned_int("seed", seed);
    c.seed = seed;
  }
  top.string("output_dir", c.output_dir);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, Scenario fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, fallback);
}

json serialize_config(const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["grid"] = {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"cells", c.grid.cells}};
  j["physics"] = {{"mass", c.physics.mass}, {"hbar", c.physics.hbar}, {"dt", c.physics.dt}};
  const char* pot = c.potential.kind == PotentialSpec::Kind::None       ? "none"
                    : c.potential.kind == PotentialSpec::Kind::Harmonic ? "harmonic"
                                                                        : "table";
  j["potential"] = {{"type", pot}, {"omega", c.potential.omega}, {"center", c.potential.center},
                    {"values", c.potential.values}};
  j["initial_state"] = {{"type", c.initial.kind == InitialStateSpec::Kind::Gaussian ? "gaussian" : "eigenstate"},
                        {"mu", c.initial.mu},
                        {"sigma", c.initial.sigma},
                        {"k", c.initial.k},
                        {"n", c.initial.n}};
  j["run"] = {{"t_final", c.run.t_final}, {"steps", c.run.steps}, {"snapshot_every", c.run.snapshot_every}};
  const char* drift = c.ensemble.drift.kind == DriftSpec::Kind::State      ? "state"
                      : c.ensemble.drift.kind == DriftSpec::Kind::Constant ? "constant"
                                                                           : "sine";
  j["ensemble"] = {{"particles", c.ensemble.particles},
                   {"threads", c.ensemble.threads},
                   {"boundary", boundary_name(c.ensemble.boundary)},
                   {"histogram_cells", c.ensemble.histogram_cells},
                   {"record_particles", c.ensemble.record_particles},
                   {"tolerance", c.ensemble.tolerance},
                   {"drift",
                    {{"type", drift},
                     {"value", c.ensemble.drift.value},
                     {"amplitude", c.ensemble.drift.amplitude},
                     {"periods", c.ensemble.drift.periods}}}};
  j["maxent"] = {{"alpha", c.maxent.alpha},
                 {"drift_gradient", c.maxent.drift_gradient},
                 {"cells", c.maxent.cells},
                 {"tolerance", c.maxent.tolerance}};
  j["measure"] = {{"lattice", c.measure.lattice},
                  {"setup", c.measure.setup},
                  {"amplifier_noise", c.measure.amplifier_noise},
                  {"samples", c.measure.samples},
                  {"significance", c.measure.significance}};
  j["classical"] = {{"hbar_over_m", c.classical.hbar_over_m},
                    {"omega", c.classical.omega},
                    {"x0", c.classical.x0},
                    {"particles", c.classical.particles},
                    {"slope_tolerance", c.classical.slope_tolerance},
                    {"variance_tolerance", c.classical.variance_tolerance}};
  j["compare"] = {{"metric", metric_name(c.compare.metric)}, {"tolerance", c.compare.tolerance}};
  if (c.seed) j["seed"] = *c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace entdyn
