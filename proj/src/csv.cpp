#include "entdyn/csv.hpp"

#include "entdyn/errors.hpp"

#include <cstdio>

namespace entdyn {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  bool first = true;
  for (const auto& h : header) {
    if (!first) out_ << ',';
    out_ << h;
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != columns_) throw DomainError("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
}

void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryRecord> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "step,time,particle_id,x\n";
  for (const auto& r : records) {
    out << r.step << ',' << format_double(r.time) << ',' << r.particle_id << ',' << format_double(r.x) << '\n';
  }
}

void write_histogram_csv(const std::filesystem::path& path, const GridField& rho,
                         const std::vector<std::pair<std::string, const GridField*>>& extra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "x_center,rho";
  for (const auto& [name, field] : extra) {
    require_same_grid(rho.grid, field->grid, "write_histogram_csv");
    out << ',' << name;
  }
  out << '\n';
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out << format_double(rho.grid.center(i)) << ',' << format_double(rho[i]);
    for (const auto& e : extra) out << ',' << format_double((*e.second)[i]);
    out << '\n';
  }
}

void write_field_snapshots_csv(const std::filesystem::path& path, std::span<const FieldSnapshot> snapshots,
                               const PotentialField& V, const PhysicalParams& p, double floor) {
  CsvWriter csv(path, {"t", "x", "rho", "Phi", "v", "u", "eps_local"});
  for (const auto& s : snapshots) {
    const VelocityField v = current_velocity(s.phi, p);
    const FlaggedVelocity u = osmotic_velocity(s.rho, p, floor);
    const EnergyReport e = total_energy(s.rho, s.phi, V, p, floor);
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
      csv.row({s.t, s.rho.grid.center(i), s.rho[i], s.phi[i], v[i], u.velocity[i], e.local_energy[i]});
    }
  }
}

void write_wavefunction_snapshots_csv(const std::filesystem::path& path, std::span<const double> times,
                                      std::span<const WaveFunction> states, const PotentialField& V,
                                      const PhysicalParams& p) {
  if (times.size() != states.size()) throw DomainError("write_wavefunction_snapshots_csv: size mismatch");
  CsvWriter csv(path, {"t", "x", "rho", "Phi", "v", "u", "eps_local", "re", "im"});
  for (std::size_t k = 0; k < states.size(); ++k) {
    const WaveFunction& psi = states[k];
    const MadelungDecomposition m = from_wavefunction(psi);
    const VelocityField v = current_velocity(m.phi, p);
    const FlaggedVelocity u = osmotic_velocity(m.rho, p);
    const EnergyReport e = total_energy(m.rho, m.phi, V, p);
    for (std::size_t i = 0; i < psi.size(); ++i) {
      csv.row({times[k], psi.grid.center(i), m.rho[i], m.phi[i], v[i], u.velocity[i], e.local_energy[i],
               psi.values[i].real(), psi.values[i].imag()});
    }
  }
}

nlohmann::json to_json(const EnergyReport& report) {
  return {{"total", report.total},
          {"kinetic_current", report.kinetic_current},
          {"osmotic", report.osmotic},
          {"potential", report.potential},
          {"flagged_cells", report.flagged_count}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace entdyn
