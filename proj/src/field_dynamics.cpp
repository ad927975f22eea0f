#include "entdyn/field_dynamics.hpp"

#include "entdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace entdyn {

namespace {

double resolve_floor(const DensityField& rho, double floor) { return floor >= 0.0 ? floor : density_floor(rho); }

std::vector<double> regularised_amplitude(const DensityField& rho, double eps) {
  std::vector<double> r(rho.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sqrt(std::max(rho[i], 0.0) + eps);
  return r;
}

std::size_t flag_cells(const DensityField& rho, double eps, std::vector<char>& flagged) {
  flagged.assign(rho.size(), 0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < eps) {
      flagged[i] = 1;
      ++count;
    }
  }
  return count;
}

// Kinetic weight max(rho, 0) + eps. Keeping it positive in the tails keeps the
// linearised dispersion at hbar k^2 / 2m even where rho undershoots zero.
double weight(double rho, double eps) { return std::max(rho, 0.0) + eps; }

// Flux F_{i+1/2} = (hbar/m) wbar (Phi_{i+1} - Phi_i)/dx and its divergence.
void continuity_rate(const std::vector<double>& rho, const PhaseField& phi, double diff, double eps, double dx,
                     std::vector<double>& out) {
  const std::size_t n = rho.size();
  const Grid& g = phi.grid;
  std::vector<double> flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = g.next(i);
    flux[i] = diff * 0.5 * (weight(rho[i], eps) + weight(rho[j], eps)) * phi.forward_difference(i) / dx;
  }
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = -(flux[i] - flux[g.prev(i)]) / dx;
}

// hbar dPhi/dt = -(dE/drho_i)/dx
void phase_rate(const std::vector<double>& rho, const PhaseField& phi, const std::vector<double>& v_pot,
                double hbar, double mass, double eps, double dx, std::vector<double>& out) {
  const std::size_t n = rho.size();
  const Grid& g = phi.grid;
  const double c = hbar * hbar / (2.0 * mass);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = std::sqrt(std::max(rho[i], 0.0) + eps);
  std::vector<double> grad2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = phi.forward_difference(i) / dx;
    grad2[i] = d * d;
  }
  out.resize(n);
  const double idx2 = 1.0 / (dx * dx);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = g.next(i), im = g.prev(i);
    const double kinetic = rho[i] > 0.0 ? 0.5 * (grad2[i] + grad2[im]) : 0.0;
    const double quantum = (r[ip] - 2.0 * r[i] + r[im]) * idx2 / r[i];
    // Below the floor the quantum pressure is gone and Phi would obey the
    // inviscid Hamilton-Jacobi equation, which steepens into shocks. A phase
    // viscosity switched on by eps / (rho + eps) keeps that tail regular.
    const double nu = 0.5 * hbar / mass * eps / weight(rho[i], eps);
    const double lap = (phi.forward_difference(i) - phi.forward_difference(im)) * idx2;
    out[i] = -(c * kinetic + v_pot[i] - c * quantum) / hbar + nu * lap;
  }
}

}  // namespace

double density_floor(const DensityField& rho) {
  double m = 0.0;
  for (double v : rho.values) m = std::max(m, v);
  return 1e-12 * m;
}

FlaggedVelocity osmotic_velocity(const DensityField& rho, const PhysicalParams& p, double floor) {
  p.validate();
  const double eps = resolve_floor(rho, floor);
  FlaggedVelocity out{VelocityField(rho.grid), {}, 0};
  out.flagged_count = flag_cells(rho, eps, out.flagged);
  const Grid& g = rho.grid;
  std::vector<double> logr(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) logr[i] = std::log(std::max(rho[i], 0.0) + eps);
  const double scale = -p.diffusion() * 0.5 / (2.0 * g.dx());
  for (std::size_t i = 0; i < rho.size(); ++i) out.velocity[i] = scale * (logr[g.next(i)] - logr[g.prev(i)]);
  return out;
}

VelocityField current_velocity(const PhaseField& phi, const PhysicalParams& p) {
  p.validate();
  const Grid& g = phi.grid;
  VelocityField v(g);
  const double scale = p.diffusion() / (2.0 * g.dx());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    v[i] = scale * (phi.forward_difference(i) + phi.forward_difference(g.prev(i)));
  }
  return v;
}

double advective_dt_limit(const VelocityField& v, double cfl) {
  double vmax = 0.0;
  for (double x : v.values) vmax = std::max(vmax, std::abs(x));
  return vmax > 0.0 ? cfl * v.grid.dx() / vmax : std::numeric_limits<double>::infinity();
}

namespace {

template <class Rate>
std::vector<double> rk4(const std::vector<double>& y0, double dt, Rate&& rate) {
  const std::size_t n = y0.size();
  std::vector<double> k1, k2, k3, k4, tmp(n);
  rate(y0, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + 0.5 * dt * k1[i];
  rate(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + 0.5 * dt * k2[i];
  rate(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + dt * k3[i];
  rate(tmp, k4);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return y;
}

}  // namespace

DensityField fp_step(const DensityField& rho, const VelocityField& v, double dt) {
  require_same_grid(rho.grid, v.grid, "fp_step");
  if (!(dt > 0.0)) throw DomainError("fp_step: dt must be positive");
  const double limit = advective_dt_limit(v);
  if (dt > limit) {
    std::ostringstream os;
    os << "fp_step: CFL violated (dt = " << dt << ", limit " << limit << ")";
    throw CflError(os.str(), limit);
  }
  const Grid& g = rho.grid;
  const double dx = g.dx();
  std::vector<double> vface(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) vface[i] = 0.5 * (v[i] + v[g.next(i)]);
  auto rate = [&](const std::vector<double>& y, std::vector<double>& out) {
    const std::size_t n = y.size();
    std::vector<double> flux(n);
    for (std::size_t i = 0; i < n; ++i) flux[i] = 0.5 * (y[i] + y[g.next(i)]) * vface[i];
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = -(flux[i] - flux[g.prev(i)]) / dx;
  };
  return DensityField(g, rk4(rho.values, dt, rate));
}

DensityField fokker_planck_step(const DensityField& rho, const VelocityField& drift, const PhysicalParams& p,
                                double dt) {
  require_same_grid(rho.grid, drift.grid, "fokker_planck_step");
  p.validate();
  if (!(dt > 0.0)) throw DomainError("fokker_planck_step: dt must be positive");
  const Grid& g = rho.grid;
  const double dx = g.dx();
  const double diffusion = 0.5 * p.diffusion();
  // RK4 reaches 2.78 on the negative real axis
  const double limit = std::min(advective_dt_limit(drift), 2.5 * dx * dx / (4.0 * diffusion));
  if (dt > limit) {
    std::ostringstream os;
    os << "fokker_planck_step: unstable step (dt = " << dt << ", limit " << limit << ")";
    throw CflError(os.str(), limit);
  }
  std::vector<double> bface(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) bface[i] = 0.5 * (drift[i] + drift[g.next(i)]);
  auto rate = [&](const std::vector<double>& y, std::vector<double>& out) {
    const std::size_t n = y.size();
    std::vector<double> flux(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = g.next(i);
      flux[i] = 0.5 * (y[i] + y[j]) * bface[i] - diffusion * (y[j] - y[i]) / dx;
    }
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = -(flux[i] - flux[g.prev(i)]) / dx;
  };
  return DensityField(g, rk4(rho.values, dt, rate));
}

PhaseRate qhj_rhs(const DensityField& rho, const PhaseField& phi, const PotentialField& V, const PhysicalParams& p,
                  double floor) {
  require_same_grid(rho.grid, phi.grid, "qhj_rhs");
  require_same_grid(rho.grid, V.grid, "qhj_rhs");
  p.validate();
  const double eps = resolve_floor(rho, floor);
  PhaseRate out{GridField(rho.grid), {}, 0};
  out.flagged_count = flag_cells(rho, eps, out.flagged);
  phase_rate(rho.values, phi, V.values, p.hbar, p.mass, eps, rho.grid.dx(), out.values.values);
  return out;
}

GridField continuity_rhs(const DensityField& rho, const PhaseField& phi, const PhysicalParams& p, double floor) {
  require_same_grid(rho.grid, phi.grid, "continuity_rhs");
  p.validate();
  GridField out(rho.grid);
  continuity_rate(rho.values, phi, p.diffusion(), resolve_floor(rho, floor), rho.grid.dx(), out.values);
  return out;
}

EnergyReport total_energy(const DensityField& rho, const PhaseField& phi, const PotentialField& V,
                          const PhysicalParams& p, double floor) {
  require_same_grid(rho.grid, phi.grid, "total_energy");
  require_same_grid(rho.grid, V.grid, "total_energy");
  p.validate();
  const Grid& g = rho.grid;
  const double dx = g.dx();
  const double eps = resolve_floor(rho, floor);
  const double c = p.hbar * p.hbar / (2.0 * p.mass);
  const auto r = regularised_amplitude(rho, eps);

  EnergyReport rep;
  double kin = 0.0, osm = 0.0, pot = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t j = g.next(i);
    const double dphi = phi.forward_difference(i) / dx;
    const double dr = (r[j] - r[i]) / dx;
    kin += 0.5 * (weight(rho[i], eps) + weight(rho[j], eps)) * dphi * dphi;
    osm += dr * dr;
    pot += V[i] * rho[i];
  }
  rep.kinetic_current = c * kin * dx;
  rep.osmotic = c * osm * dx;
  rep.potential = pot * dx;
  rep.total = rep.kinetic_current + rep.osmotic + rep.potential;

  const VelocityField v = current_velocity(phi, p);
  const FlaggedVelocity u = osmotic_velocity(rho, p, eps);
  rep.flagged_count = u.flagged_count;
  rep.local_energy = GridField(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    rep.local_energy[i] = 0.5 * p.mass * (v[i] * v[i] + u.velocity[i] * u.velocity[i]) + V[i];
  }
  return rep;
}

EnergyGradient energy_gradient(const DensityField& rho, const PhaseField& phi, const PotentialField& V,
                               const PhysicalParams& p, double floor) {
  require_same_grid(rho.grid, phi.grid, "energy_gradient");
  require_same_grid(rho.grid, V.grid, "energy_gradient");
  p.validate();
  const double dx = rho.grid.dx();
  const double eps = resolve_floor(rho, floor);
  EnergyGradient grad;
  std::vector<double> rate;
  continuity_rate(rho.values, phi, p.diffusion(), eps, dx, rate);
  grad.d_phi.resize(rate.size());
  for (std::size_t i = 0; i < rate.size(); ++i) grad.d_phi[i] = p.hbar * dx * rate[i];
  phase_rate(rho.values, phi, V.values, p.hbar, p.mass, eps, dx, rate);
  grad.d_rho.resize(rate.size());
  for (std::size_t i = 0; i < rate.size(); ++i) grad.d_rho[i] = -p.hbar * dx * rate[i];
  return grad;
}

GridField hj_residual(const DensityField& rho, const PhaseField& phi, const GridField& dphi_dt,
                      const PotentialField& V, const PhysicalParams& p, double floor) {
  require_same_grid(rho.grid, phi.grid, "hj_residual");
  require_same_grid(rho.grid, dphi_dt.grid, "hj_residual");
  require_same_grid(rho.grid, V.grid, "hj_residual");
  const Grid& g = rho.grid;
  const double dx = g.dx();
  const double eps = resolve_floor(rho, floor);
  const double c = p.hbar * p.hbar / (2.0 * p.mass);
  const auto r = regularised_amplitude(rho, eps);
  GridField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t ip = g.next(i), im = g.prev(i);
    const double grad = 0.5 * (phi.forward_difference(i) + phi.forward_difference(im)) / dx;
    const double quantum = (r[ip] - 2.0 * r[i] + r[im]) / (dx * dx * r[i]);
    out[i] = p.hbar * dphi_dt[i] + c * grad * grad + V[i] - c * quantum;
  }
  return out;
}

namespace {

double max_bulk_velocity(const DensityField& rho, const PhaseField& phi, const PhysicalParams& p, double eps) {
  const VelocityField v = current_velocity(phi, p);
  double vmax = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (rho[i] >= eps) vmax = std::max(vmax, std::abs(v[i]));
  }
  return vmax;
}

}  // namespace

double stable_time_step(const DensityField& rho, const PhaseField& phi, const PhysicalParams& p) {
  const double dx = rho.grid.dx();
  const double vmax = max_bulk_velocity(rho, phi, p, density_floor(rho));
  const double dispersive = 2.0 * std::sqrt(2.0) / (2.0 * p.diffusion() / (dx * dx) + vmax / dx);
  const double advective = vmax > 0.0 ? 0.5 * dx / vmax : std::numeric_limits<double>::infinity();
  return std::min(dispersive, advective);
}

FieldTrajectory evolve_coupled(const DensityField& rho, const PhaseField& phi, const PotentialField& V,
                               const PhysicalParams& p, const EvolveOptions& options) {
  require_same_grid(rho.grid, phi.grid, "evolve_coupled");
  require_same_grid(rho.grid, V.grid, "evolve_coupled");
  p.validate();
  if (!(options.t_final > 0.0)) throw DomainError("evolve_coupled: t_final must be positive");
  const double dt_limit = stable_time_step(rho, phi, p);
  if (p.dt > dt_limit) {
    std::ostringstream os;
    os << "evolve_coupled: dt = " << p.dt << " exceeds the stable step " << dt_limit;
    throw CflError(os.str(), dt_limit);
  }

  const Grid& g = rho.grid;
  const std::size_t n = g.size();
  const double dx = g.dx();
  const auto steps = static_cast<std::size_t>(std::ceil(options.t_final / p.dt - 1e-9));
  const double dt = options.t_final / static_cast<double>(steps);
  const double eps = density_floor(rho);
  const double diff = p.diffusion();

  FieldTrajectory traj;
  traj.dt = dt;
  traj.floor = eps;
  const double mass0 = rho.integral();

  // state vector: rho in [0, n), Phi in [n, 2n)
  std::vector<double> y(2 * n);
  std::copy(rho.values.begin(), rho.values.end(), y.begin());
  std::copy(phi.values.begin(), phi.values.end(), y.begin() + static_cast<std::ptrdiff_t>(n));
  PhaseField work_phi(g, std::vector<double>(n), phi.winding);
  std::vector<double> work_rho(n), drho, dphi;

  auto rate = [&](const std::vector<double>& s, std::vector<double>& out) {
    std::copy(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n), work_rho.begin());
    std::copy(s.begin() + static_cast<std::ptrdiff_t>(n), s.end(), work_phi.values.begin());
    continuity_rate(work_rho, work_phi, diff, eps, dx, drho);
    phase_rate(work_rho, work_phi, V.values, p.hbar, p.mass, eps, dx, dphi);
    out.resize(2 * n);
    std::copy(drho.begin(), drho.end(), out.begin());
    std::copy(dphi.begin(), dphi.end(), out.begin() + static_cast<std::ptrdiff_t>(n));
  };

  auto snapshot = [&](double t) {
    FieldSnapshot s;
    s.t = t;
    s.rho = DensityField(g, std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)));
    s.phi = PhaseField(g, std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(n), y.end()), phi.winding);
    s.energy = total_energy(s.rho, s.phi, V, p, eps);
    traj.max_flagged = std::max(traj.max_flagged, s.energy.flagged_count);
    traj.snapshots.push_back(std::move(s));
  };

  snapshot(0.0);
  for (std::size_t step = 1; step <= steps; ++step) {
    y = rk4(y, dt, rate);
    const bool last = step == steps;
    if (last || (options.check_every > 0 && step % options.check_every == 0)) {
      double mass = 0.0;
      bool finite = true;
      for (double v : y) finite = finite && std::isfinite(v);
      for (std::size_t i = 0; i < n; ++i) mass += y[i];
      mass *= dx;
      const double drift = std::abs(mass - mass0);
      traj.max_mass_drift = std::max(traj.max_mass_drift, drift);
      if (!finite || drift > options.mass_tolerance) {
        std::ostringstream os;
        os << "evolve_coupled: instability at step " << step << " (t = " << static_cast<double>(step) * dt
           << "): " << (finite ? "" : "non-finite values, ") << "mass drift " << drift;
        throw NumericalError(os.str());
      }
    }
    if (last || (options.snapshot_every > 0 && step % options.snapshot_every == 0)) {
      snapshot(last ? options.t_final : static_cast<double>(step) * dt);
    }
  }
  traj.steps = steps;
  return traj;
}

double energy_drift(const FieldTrajectory& trajectory) {
  if (trajectory.snapshots.empty()) return 0.0;
  const double e0 = trajectory.snapshots.front().energy.total;
  double worst = 0.0;
  for (const auto& s : trajectory.snapshots) worst = std::max(worst, std::abs(s.energy.total - e0));
  return e0 == 0.0 ? worst : worst / std::abs(e0);
}

MadelungState gaussian_state(const Grid& grid, double mu, double sigma, double k) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_state: sigma must be positive");
  MadelungState s{DensityField(grid), PhaseField(grid)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = grid.center(i) - mu;
    s.rho[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    s.phi[i] = k * d;
  }
  const double mass = s.rho.integral();
  for (double& v : s.rho.values) v /= mass;
  s.phi.winding = k * grid.length();
  return s;
}

double density_mean(const DensityField& rho) {
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    m0 += rho[i];
    m1 += rho[i] * rho.grid.center(i);
  }
  return m1 / m0;
}

double density_variance(const DensityField& rho) {
  const double mu = density_mean(rho);
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double d = rho.grid.center(i) - mu;
    m0 += rho[i];
    m2 += rho[i] * d * d;
  }
  return m2 / m0;
}

}  // namespace entdyn
