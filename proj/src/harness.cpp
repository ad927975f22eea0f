#include "entdyn/harness.hpp"

#include "entdyn/csv.hpp"
#include "entdyn/errors.hpp"
#include "entdyn/experiments.hpp"
#include "entdyn/measurement.hpp"

#include <CLI11.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <sstream>

namespace entdyn {

using nlohmann::json;
namespace fs = std::filesystem;

json ComparisonReport::to_json() const {
  return {{"scenario", scenario}, {"metric", metric},  {"value", value},
          {"tolerance", tolerance}, {"pass", pass}, {"runtime_seconds", runtime_seconds}};
}

ComparisonReport make_report(std::string scenario, std::string metric, double value, double tolerance,
                             double runtime_seconds) {
  return {std::move(scenario), std::move(metric), value, tolerance, value <= tolerance, runtime_seconds};
}

double compare_fields(const DensityField& a, const DensityField& b, Metric metric) {
  return field_distance(a, b, metric);
}

namespace {

const char* metric_label(Metric m) {
  switch (m) {
    case Metric::L1: return "L1";
    case Metric::L2: return "L2";
    case Metric::Sup: return "sup";
  }
  return "L2";
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Context {
  const ExperimentConfig& config;
  fs::path dir;
  Stopwatch clock;
  std::vector<ComparisonReport> reports;
  json extra = json::object();

  void report(const std::string& metric, double value, double tolerance) {
    reports.push_back(make_report(to_string(config.scenario), metric, value, tolerance, clock.seconds()));
  }
};

PotentialField potential_field(const ExperimentConfig& c, const Grid& g) {
  return c.potential.make(g, c.physics.mass).sample(g);
}

MadelungState initial_state(const ExperimentConfig& c, const Grid& g) {
  if (c.initial.kind == InitialStateSpec::Kind::Gaussian) return gaussian_state(g, c.initial.mu, c.initial.sigma, c.initial.k);
  const WaveFunction psi =
      harmonic_eigenstate(g, c.initial.n, c.physics.mass, c.potential.omega, c.physics.hbar, c.potential.center);
  MadelungDecomposition m = from_wavefunction(psi);
  return {std::move(m.rho), std::move(m.phi)};
}

void run_maxent(Context& ctx) {
  const auto& m = ctx.config.maxent;
  const MaxentVerification v = verify_maxent(m.alpha, m.drift_gradient, m.cells);
  CsvWriter csv(ctx.dir / "maxent.csv", {"displacement", "closed_form", "oracle"});
  const Grid& s = v.oracle.kernel.support;
  for (std::size_t i = 0; i < s.size(); ++i) {
    csv.row({s.center(i), v.closed_form_discrete.probabilities[i], v.oracle.kernel.probabilities[i]});
  }
  ctx.extra = {{"kappa", v.spec.kappa},
               {"closed_form_alpha", v.closed_form.alpha},
               {"oracle_alpha", v.oracle.alpha},
               {"oracle_alpha_prime", v.oracle.alpha_prime},
               {"oracle_iterations", v.oracle.iterations},
               {"oracle_residual", v.oracle.residual}};
  ctx.report("total_variation", v.total_variation, m.tolerance);
}

VelocityField ensemble_drift(const ExperimentConfig& c, const Grid& g) {
  VelocityField b(g);
  const DriftSpec& d = c.ensemble.drift;
  switch (d.kind) {
    case DriftSpec::Kind::Constant:
      for (auto& v : b.values) v = d.value;
      break;
    case DriftSpec::Kind::Sine:
      for (std::size_t i = 0; i < g.size(); ++i) {
        b[i] = d.amplitude * std::sin(2.0 * std::numbers::pi * d.periods * (g.center(i) - g.x_min()) / g.length());
      }
      break;
    case DriftSpec::Kind::State: {
      const MadelungState st = initial_state(c, g);
      const VelocityField v = current_velocity(st.phi, c.physics);
      const FlaggedVelocity u = osmotic_velocity(st.rho, c.physics);
      for (std::size_t i = 0; i < g.size(); ++i) b[i] = v[i] - u.velocity[i];
      break;
    }
  }
  return b;
}

void run_ensemble(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  if (c.initial.kind != InitialStateSpec::Kind::Gaussian) {
    throw ConfigError("initial_state: the ensemble scenario needs a gaussian initial state");
  }
  const Grid g = c.grid.make();
  EnsembleComparisonOptions o;
  o.drift = ensemble_drift(c, g);
  o.histogram_cells = c.ensemble.histogram_cells;
  o.particles = c.ensemble.particles;
  o.steps = c.run.steps;
  o.physics = c.physics;
  o.mu = c.initial.mu;
  o.sigma = c.initial.sigma;
  o.seed = *c.seed;
  o.threads = c.ensemble.threads;
  o.boundary = c.ensemble.boundary;
  o.record_particles = c.ensemble.record_particles;
  const EnsembleComparison r = compare_ensemble_with_pde(o);
  write_trajectory_csv(ctx.dir / "trajectory.csv", r.records);
  write_histogram_csv(ctx.dir / "histogram.csv", r.histogram.density,
                      {{"rho_fokker_planck", &r.pde}, {"rho_kernel", &r.kernel}});
  ctx.extra = {{"l1_kernel", r.l1_kernel}, {"out_of_range", r.histogram.out_of_range}, {"steps", o.steps}};
  ctx.report("L1_fokker_planck", r.l1_pde, c.ensemble.tolerance);
}

void run_fields(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const Grid g = c.grid.make();
  const PotentialField V = potential_field(c, g);
  const MadelungState st = initial_state(c, g);
  EvolveOptions options;
  options.t_final = c.run.t_final;
  options.snapshot_every = c.run.snapshot_every;
  const FieldTrajectory tr = evolve_coupled(st.rho, st.phi, V, c.physics, options);
  write_field_snapshots_csv(ctx.dir / "snapshots.csv", tr.snapshots, V, c.physics, tr.floor);
  const double drift = energy_drift(tr);
  write_json(ctx.dir / "energy.json", {{"initial", to_json(tr.snapshots.front().energy)},
                                       {"final", to_json(tr.snapshots.back().energy)},
                                       {"energy_drift", drift},
                                       {"max_mass_drift", tr.max_mass_drift},
                                       {"steps", tr.steps},
                                       {"dt", tr.dt},
                                       {"floor", tr.floor},
                                       {"max_flagged_cells", tr.max_flagged}});
  ctx.extra = {{"energy_drift", drift}, {"steps", tr.steps}, {"dt", tr.dt}};
  ctx.report("mass_drift", tr.max_mass_drift, 1e-9);
}

void run_schrodinger(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const Grid g = c.grid.make();
  const PotentialField V = potential_field(c, g);
  const MadelungState st = initial_state(c, g);
  const SchrodingerRun r = evolve_schrodinger(to_wavefunction(st.rho, st.phi), V, c.physics, c.run.t_final,
                                              c.run.snapshot_every);
  write_wavefunction_snapshots_csv(ctx.dir / "snapshots.csv", r.times, r.snapshots, V, c.physics);
  ctx.extra = {{"steps", r.steps}, {"dt", r.dt}};
  // tolerance scaled from 1e-9 per 1e4 steps
  ctx.report("norm_drift", r.max_norm_drift, 1e-9 * std::max(1.0, static_cast<double>(r.steps) / 1e4));
}

void run_compare(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const Grid g = c.grid.make();
  const PotentialField V = potential_field(c, g);
  const MadelungState st = initial_state(c, g);
  const SolverComparison r =
      compare_with_schrodinger(st.rho, st.phi, V, c.physics, c.run.t_final, c.compare.metric, c.run.snapshot_every);
  const DensityField& rho_fields = r.fields.snapshots.back().rho;
  write_histogram_csv(ctx.dir / "comparison.csv", rho_fields, {{"rho_schrodinger", &r.reference.rho}});
  ctx.extra = {{"steps", r.fields.steps},
               {"dt", r.fields.dt},
               {"energy_drift", energy_drift(r.fields)},
               {"max_mass_drift", r.fields.max_mass_drift},
               {"max_norm_drift", r.schrodinger.max_norm_drift}};
  ctx.report(metric_label(c.compare.metric), r.distance, c.compare.tolerance);
  if (c.potential.kind == PotentialSpec::Kind::None && c.initial.kind == InitialStateSpec::Kind::Gaussian) {
    const double exact = free_packet_variance(c.initial.sigma, c.run.t_final, c.physics);
    const double width_error = std::abs(std::sqrt(density_variance(rho_fields) / exact) - 1.0);
    ctx.report("width_relative_error", width_error, 1e-3);
  }
}

AmplifierModel amplifier(std::size_t n, double noise) {
  if (noise == 0.0) return AmplifierModel::ideal(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    l(col, col) += 1.0 - noise;
    l(static_cast<Eigen::Index>((i + 1) % n), col) += 0.5 * noise;
    l(static_cast<Eigen::Index>((i + n - 1) % n), col) += 0.5 * noise;
  }
  return {l};
}

void run_measure(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const MeasureSpec& m = c.measure;
  const Grid g = c.grid.make();
  const MadelungState st = initial_state(c, g);
  const auto n = static_cast<Eigen::Index>(m.lattice);
  const SetupUnitary setup = m.setup == "fourier" ? SetupUnitary::fourier(n) : SetupUnitary::identity(n);
  const AmplifierModel amp = amplifier(m.lattice, m.amplifier_noise);
  const MeasurementRun r = end_to_end_measurement(st.rho, st.phi, setup, amp, m.samples, *c.seed);

  CsvWriter csv(ctx.dir / "frequencies.csv", {"outcome", "probability", "count", "frequency"});
  for (std::size_t i = 0; i < r.position_counts.size(); ++i) {
    const auto count = static_cast<double>(r.position_counts[i]);
    csv.row({static_cast<double>(i), r.position_probabilities[i], count,
             m.samples > 0 ? count / static_cast<double>(m.samples) : 0.0});
  }
  json posteriors = json::array();
  for (std::size_t k = 0; k < r.observed_readings.size(); ++k) {
    posteriors.push_back({{"reading", r.observed_readings[k]}, {"posterior", r.posteriors[k]}});
  }
  json doc = {{"setup", {{"name", setup.name}, {"lattice", m.lattice}}},
              {"amplifier_noise", m.amplifier_noise},
              {"samples", m.samples},
              {"outcome_counts", r.position_counts},
              {"reading_counts", r.reading_counts},
              {"posteriors", posteriors}};
  if (m.samples > 0) {
    const ChiSquareResult chi = chi_square_test(r.position_counts, r.position_probabilities);
    const double critical =
        chi.dof > 0 ? 2.0 * boost::math::gamma_q_inv(0.5 * static_cast<double>(chi.dof), m.significance) : 0.0;
    doc["chi_square"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}, {"critical", critical}};
    ctx.report("chi_square", chi.statistic, critical);
  }
  if (m.amplifier_noise == 0.0) {
    double err = 0.0;
    for (std::size_t k = 0; k < r.observed_readings.size(); ++k) {
      const auto& post = r.posteriors[k];
      for (std::size_t i = 0; i < post.size(); ++i) {
        const double target = static_cast<Eigen::Index>(i) == r.observed_readings[k] ? 1.0 : 0.0;
        err = std::max(err, std::abs(post[i] - target));
      }
    }
    ctx.report("posterior_point_mass_error", err, 1e-12);
  }
  write_json(ctx.dir / "measurement.json", doc);
}

void run_classical(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  ClassicalLimitOptions o;
  o.grid = c.grid.make();
  o.mass = c.physics.mass;
  o.omega = c.classical.omega;
  o.x0 = c.classical.x0;
  o.dt = c.physics.dt;
  o.t_final = c.run.t_final;
  o.hbar_over_m = c.classical.hbar_over_m;
  o.particles = c.classical.particles;
  o.seed = *c.seed;
  o.threads = c.ensemble.threads;
  const ClassicalLimitStudy s = classical_limit_study(o);
  CsvWriter csv(ctx.dir / "classical_limit.csv",
                {"hbar_over_m", "mean_sq_deviation", "mean_deviation", "fluctuation_variance", "expected_variance"});
  for (const auto& p : s.points) {
    csv.row({p.hbar_over_m, p.mean_sq_deviation, p.mean_deviation, p.fluctuation_variance, p.expected_variance});
  }
  ctx.extra = {{"slope", s.slope}, {"classical_energy_drift", s.classical_energy_drift}};
  ctx.report("slope_error", std::abs(s.slope - 1.0), c.classical.slope_tolerance);
  ctx.report("fluctuation_variance_error", s.max_variance_error, c.classical.variance_tolerance);
}

}  // namespace

RunResult run(const ExperimentConfig& config, std::ostream* log) {
  RunResult result;
  const std::string name = to_string(config.scenario);
  try {
    config.validate();
    Context ctx{config, fs::path(config.output_dir), {}, {}, json::object()};
    fs::create_directories(ctx.dir);
    switch (config.scenario) {
      case Scenario::MaxentVerify: run_maxent(ctx); break;
      case Scenario::Ensemble: run_ensemble(ctx); break;
      case Scenario::Fields: run_fields(ctx); break;
      case Scenario::Schrodinger: run_schrodinger(ctx); break;
      case Scenario::Compare: run_compare(ctx); break;
      case Scenario::Measure: run_measure(ctx); break;
      case Scenario::ClassicalLimit: run_classical(ctx); break;
    }
    json reports = json::array();
    for (const auto& r : ctx.reports) reports.push_back(r.to_json());
    write_json(ctx.dir / "report.json",
               {{"scenario", name}, {"config", serialize_config(config)}, {"reports", reports}, {"details", ctx.extra}});
    result.reports = std::move(ctx.reports);
    for (const auto& r : result.reports) {
      if (!r.pass) result.exit_code = kExitComparisonFail;
      if (log) {
        *log << name << ": " << r.metric << " = " << format_double(r.value) << " (tolerance "
             << format_double(r.tolerance) << ") " << (r.pass ? "PASS" : "FAIL") << '\n';
      }
    }
    if (result.exit_code != kExitPass) result.message = name + ": a comparison exceeded its tolerance";
  } catch (const ConfigError& e) {
    result = {kExitConfigError, {}, std::string("config error: ") + e.what()};
  } catch (const DomainError& e) {
    result = {kExitConfigError, {}, std::string("invalid input: ") + e.what()};
  } catch (const fs::filesystem_error& e) {
    result = {kExitConfigError, {}, std::string("output error: ") + e.what()};
  } catch (const CflError& e) {
    std::ostringstream os;
    os << "numerical error: " << e.what() << " (suggested dt " << e.suggested_dt() << ")";
    result = {kExitNumericalError, {}, os.str()};
  } catch (const std::exception& e) {
    result = {kExitNumericalError, {}, std::string("numerical error: ") + e.what()};
  }
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropic dynamics experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  std::vector<std::pair<CLI::App*, Scenario>> subs;
  const std::pair<const char*, const char*> commands[] = {
      {"maxent-verify", "closed-form kernel against the brute-force entropy maximiser"},
      {"ensemble", "Wiener-process particles against the Fokker-Planck density"},
      {"fields", "coupled density and phase evolution"},
      {"schrodinger", "Crank-Nicolson reference evolution"},
      {"compare", "coupled fields against the Schrodinger reference"},
      {"measure", "Born-rule sampling through a setup and amplifier"},
      {"classical-limit", "ensemble spread against the classical orbit as hbar/m shrinks"},
  };
  std::vector<CLI::Option*> seed_options;
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(cmd, help);
    sub->add_option("--config", config_path, "JSON experiment config");
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    seed_options.push_back(sub->add_option("--seed", seed, "RNG seed (overrides seed)"));
    sub->add_flag("--quiet", quiet, "suppress the per-report summary");
    subs.emplace_back(sub, scenario_from_string(cmd));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitConfigError;
  }
  Scenario scenario = Scenario::Fields;
  bool seed_given = false;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i].first->parsed()) {
      scenario = subs[i].second;
      seed_given = seed_options[i]->count() > 0;
    }
  }
  ExperimentConfig config;
  try {
    config = config_path.empty() ? default_config(scenario) : load_config(config_path, scenario);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  if (config.scenario != scenario) {
    err << "config error: config file is for scenario '" << to_string(config.scenario) << "', not '"
        << to_string(scenario) << "'\n";
    return kExitConfigError;
  }
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (seed_given) config.seed = seed;
  const RunResult r = run(config, quiet ? nullptr : &out);
  if (!r.message.empty()) err << r.message << '\n';
  return r.exit_code;
}

}  // namespace entdyn
