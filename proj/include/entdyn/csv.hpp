#pragma once

#include "entdyn/field_dynamics.hpp"
#include "entdyn/schrodinger.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace entdyn {

/// Decimal with 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

/// Minimal CSV writer: a header line, then rows of numbers.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header);

  void row(std::initializer_list<double> values);
  void row(std::span<const double> values);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

/// One recorded particle position.
struct TrajectoryRecord {
  std::uint64_t step = 0;
  double time = 0.0;
  std::uint64_t particle_id = 0;
  double x = 0.0;
};

/// Columns step, time, particle_id, x.
void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryRecord> records);

/// Columns x_center, rho, then any extra named columns of the same length.
void write_histogram_csv(const std::filesystem::path& path, const GridField& rho,
                         const std::vector<std::pair<std::string, const GridField*>>& extra = {});

/// Columns t, x, rho, Phi, v, u, eps_local for every snapshot.
void write_field_snapshots_csv(const std::filesystem::path& path, std::span<const FieldSnapshot> snapshots,
                               const PotentialField& V, const PhysicalParams& p, double floor);

/// Field snapshot columns plus re, im of the wave function.
void write_wavefunction_snapshots_csv(const std::filesystem::path& path, std::span<const double> times,
                                      std::span<const WaveFunction> states, const PotentialField& V,
                                      const PhysicalParams& p);

nlohmann::json to_json(const EnergyReport& report);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace entdyn
