#pragma once

#include "entdyn/ensemble.hpp"
#include "entdyn/grid.hpp"
#include "entdyn/physics.hpp"
#include "entdyn/potential.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace entdyn {

enum class Scenario { MaxentVerify, Ensemble, Fields, Schrodinger, Compare, Measure, ClassicalLimit };

std::string to_string(Scenario s);
/// Throws ConfigError for an unknown name.
Scenario scenario_from_string(const std::string& name);
bool is_stochastic(Scenario s);

struct GridSpec {
  double x_min = -15.0;
  double x_max = 15.0;
  std::size_t cells = 1024;

  Grid make() const;
  bool operator==(const GridSpec&) const = default;
};

struct PotentialSpec {
  enum class Kind { None, Harmonic, Table };
  Kind kind = Kind::None;
  double omega = 1.0;
  double center = 0.0;
  std::vector<double> values;  ///< table values at the config grid's cell centres

  Potential make(const Grid& grid, double mass) const;
  bool operator==(const PotentialSpec&) const = default;
};

struct InitialStateSpec {
  enum class Kind { Gaussian, Eigenstate };
  Kind kind = Kind::Gaussian;
  double mu = 0.0;
  double sigma = 1.0;
  double k = 0.0;
  unsigned n = 0;

  bool operator==(const InitialStateSpec&) const = default;
};

struct RunSpec {
  double t_final = 1.0;
  std::size_t steps = 100;  ///< ensemble steps of length physics.dt
  std::size_t snapshot_every = 0;

  bool operator==(const RunSpec&) const = default;
};

struct DriftSpec {
  enum class Kind { State, Constant, Sine };
  Kind kind = Kind::Sine;
  double value = 0.0;      ///< constant drift
  double amplitude = 0.5;  ///< sine drift amplitude
  double periods = 1.0;    ///< sine periods across the domain

  bool operator==(const DriftSpec&) const = default;
};

struct EnsembleSpec {
  std::size_t particles = 1000000;
  unsigned threads = 1;
  BoundaryPolicy boundary = BoundaryPolicy::Periodic;
  std::size_t histogram_cells = 32;
  std::size_t record_particles = 16;
  DriftSpec drift;
  double tolerance = 5e-3;  ///< L1 gate against the Fokker-Planck density

  bool operator==(const EnsembleSpec&) const = default;
};

struct MaxentSpec {
  double alpha = 2.0;
  double drift_gradient = 1.0;
  std::size_t cells = 4096;
  double tolerance = 1e-6;

  bool operator==(const MaxentSpec&) const = default;
};

struct MeasureSpec {
  std::size_t lattice = 64;
  std::string setup = "fourier";  ///< "fourier" or "identity"
  double amplifier_noise = 0.0;   ///< 0 is the ideal amplifier
  std::uint64_t samples = 1000000;
  double significance = 1e-3;

  bool operator==(const MeasureSpec&) const = default;
};

struct ClassicalSpec {
  std::vector<double> hbar_over_m{1e-1, 3.1622776601683794e-2, 1e-2, 3.1622776601683794e-3, 1e-3};
  double omega = 1.0;
  double x0 = 1.0;
  std::size_t particles = 20000;
  double slope_tolerance = 0.1;
  double variance_tolerance = 0.02;

  bool operator==(const ClassicalSpec&) const = default;
};

struct CompareSpec {
  Metric metric = Metric::L2;
  double tolerance = 1e-4;

  bool operator==(const CompareSpec&) const = default;
};

/// Everything a scenario run needs. Units default to hbar = m = 1.
struct ExperimentConfig {
  Scenario scenario = Scenario::Fields;
  GridSpec grid;
  PhysicalParams physics;
  PotentialSpec potential;
  InitialStateSpec initial;
  RunSpec run;
  EnsembleSpec ensemble;
  MaxentSpec maxent;
  MeasureSpec measure;
  ClassicalSpec classical;
  CompareSpec compare;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";

  /// Throws ConfigError on any inconsistent or missing setting.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Defaults tuned so each scenario passes its gate out of the box.
ExperimentConfig default_config(Scenario s);

/// Starts from default_config of the scenario named in the document (or
/// `fallback` when absent) and overrides the fields present. Unknown keys and
/// wrong types throw ConfigError. Call validate() once overrides such as a
/// command-line seed are applied.
ExperimentConfig parse_config(const nlohmann::json& j, Scenario fallback = Scenario::Fields);
ExperimentConfig load_config(const std::filesystem::path& path, Scenario fallback = Scenario::Fields);

/// Complete document; parse_config(serialize_config(c)) == c.
nlohmann::json serialize_config(const ExperimentConfig& c);

}  // namespace entdyn
