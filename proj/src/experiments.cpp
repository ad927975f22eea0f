#include "entdyn/experiments.hpp"

#include "entdyn/errors.hpp"
#include "entdyn/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace entdyn {

MaxentVerification verify_maxent(double alpha, double gradient, std::size_t cells) {
  MaxentVerification out;
  out.spec = constraints_for(alpha, {gradient});
  out.closed_form = build_kernel(out.spec, alpha);
  const double s = out.closed_form.sigma();
  const double mean = out.closed_form.mean[0];
  const Grid support(mean - 12.0 * s, mean + 12.0 * s, cells);
  out.closed_form_discrete = discretize(out.closed_form, support);
  out.oracle = maximize_entropy_oracle(out.spec, support);
  out.total_variation = total_variation(out.closed_form_discrete, out.oracle.kernel);
  return out;
}

DensityField gaussian_cell_averages(const Grid& grid, double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_cell_averages: sigma must be positive");
  DensityField rho(grid);
  const double scale = 1.0 / (std::sqrt(2.0) * sigma);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = grid.x_min() + static_cast<double>(i) * grid.dx() - mu;
    const double b = a + grid.dx();
    rho[i] = 0.5 * (std::erf(b * scale) - std::erf(a * scale)) / grid.dx();
  }
  return rho;
}

DensityField block_average(const DensityField& fine, const Grid& coarse) {
  const Grid& g = fine.grid;
  if (coarse.size() == 0 || g.size() % coarse.size() != 0 || g.x_min() != coarse.x_min() ||
      g.x_max() != coarse.x_max()) {
    throw DomainError("block_average: coarse grid must cover the same interval with a divisor of the cell count");
  }
  const std::size_t block = g.size() / coarse.size();
  DensityField out(coarse);
  for (std::size_t j = 0; j < coarse.size(); ++j) {
    double s = 0.0;
    for (std::size_t b = 0; b < block; ++b) s += fine[j * block + b];
    out[j] = s / static_cast<double>(block);
  }
  return out;
}

DensityField evolve_fokker_planck(const DensityField& rho, const VelocityField& drift, const PhysicalParams& p,
                                  std::size_t steps) {
  const double dx = rho.grid.dx();
  const double limit = 0.9 * std::min(advective_dt_limit(drift), 2.5 * dx * dx / (4.0 * 0.5 * p.diffusion()));
  const auto sub = static_cast<std::size_t>(std::ceil(p.dt / limit));
  const double h = p.dt / static_cast<double>(sub);
  DensityField out = rho;
  for (std::size_t k = 0; k < steps * sub; ++k) out = fokker_planck_step(out, drift, p, h);
  return out;
}

EnsembleComparison compare_ensemble_with_pde(const EnsembleComparisonOptions& o) {
  const Grid& grid = o.drift.grid;
  const Grid coarse(grid.x_min(), grid.x_max(), o.histogram_cells);
  EnsembleComparison out;

  Ensemble e = make_gaussian_ensemble(o.particles, o.mu, o.sigma, o.seed);
  const StepOptions step_options{o.boundary, o.threads};
  const std::size_t record = std::min(o.record_particles, o.particles);
  auto keep = [&](const Ensemble& en) {
    for (std::size_t i = 0; i < record; ++i) out.records.push_back({en.step, en.time, i, en.positions[i]});
  };
  keep(e);
  for (std::size_t k = 0; k < o.steps; ++k) {
    e = step_ensemble(e, o.drift, o.physics, step_options);
    keep(e);
  }
  out.histogram = histogram(e, coarse);
  out.final_ensemble = std::move(e);

  const DensityField rho0 = gaussian_cell_averages(grid, o.mu, o.sigma);
  out.pde = block_average(evolve_fokker_planck(rho0, o.drift, o.physics, o.steps), coarse);

  const auto kernels = wiener_kernels(o.drift, o.physics);
  const TransitionMatrix t = transition_matrix(grid, kernels, o.boundary);
  DensityField rho = rho0;
  for (std::size_t k = 0; k < o.steps; ++k) rho = propagate_density(rho, t);
  out.kernel = block_average(rho, coarse);

  out.l1_pde = field_distance(out.histogram.density, out.pde, Metric::L1);
  out.l1_kernel = field_distance(out.histogram.density, out.kernel, Metric::L1);
  return out;
}

SolverComparison compare_with_schrodinger(const DensityField& rho, const PhaseField& phi, const PotentialField& V,
                                          const PhysicalParams& p, double t_final, Metric metric,
                                          std::size_t snapshot_every) {
  SolverComparison out;
  EvolveOptions options;
  options.t_final = t_final;
  options.snapshot_every = snapshot_every;
  out.fields = evolve_coupled(rho, phi, V, p, options);
  out.schrodinger = evolve_schrodinger(to_wavefunction(rho, phi), V, p, t_final, snapshot_every);
  out.reference = from_wavefunction(out.schrodinger.snapshots.back());
  out.distance = field_distance(out.fields.snapshots.back().rho, out.reference.rho, metric);
  return out;
}

double free_packet_variance(double sigma0, double t, const PhysicalParams& p) {
  const double spread = p.hbar * t / (2.0 * p.mass * sigma0);
  return sigma0 * sigma0 + spread * spread;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_slope: need two or more matching points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_slope: x values are all equal");
  return sxy / sxx;
}

ClassicalLimitStudy classical_limit_study(const ClassicalLimitOptions& o) {
  ClassicalLimitStudy study;
  const Potential pot = Potential::harmonic(o.mass, o.omega);
  std::vector<double> log_h, log_msd;
  for (std::size_t idx = 0; idx < o.hbar_over_m.size(); ++idx) {
    const double h = o.hbar_over_m[idx];
    const PhysicalParams p{o.mass, h * o.mass, o.dt};
    const ClassicalTrajectory cl = classical_trajectory({o.x0, 0.0, 0.0}, pot, p, o.t_final, &o.grid);
    if (cl.left_domain) throw DomainError("classical_limit_study: classical orbit leaves the grid");
    for (double en : cl.energies) {
      study.classical_energy_drift =
          std::max(study.classical_energy_drift, std::abs(en - cl.energies.front()) / std::abs(cl.energies.front()));
    }
    const double sigma = std::sqrt(p.hbar / (2.0 * o.mass * o.omega));
    const double dt = o.t_final / static_cast<double>(cl.states.size() - 1);
    const PhysicalParams step_p{o.mass, p.hbar, dt};

    Ensemble e = make_gaussian_ensemble(o.particles, o.x0, sigma, o.seed + idx);
    ClassicalLimitPoint pt;
    pt.hbar_over_m = h;
    pt.expected_variance = h * dt;
    double fluct_sum = 0.0, fluct_sq = 0.0;
    std::size_t fluct_n = 0;
    const std::size_t steps = cl.states.size() - 1;
    for (std::size_t k = 0; k < steps; ++k) {
      const ClassicalState& c = cl.states[k];
      const MadelungState st = gaussian_state(o.grid, c.x, sigma, c.p / p.hbar);
      const VelocityField v = current_velocity(st.phi, p);
      const FlaggedVelocity u = osmotic_velocity(st.rho, p);
      VelocityField b(o.grid);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] = v[i] - u.velocity[i];

      const Ensemble next = step_ensemble(e, b, step_p, {BoundaryPolicy::Periodic, o.threads});
      const double x_cl = cl.states[k + 1].x;
      double msd = 0.0, mean = 0.0;
      for (std::size_t i = 0; i < e.size(); ++i) {
        const double w = next.positions[i] - e.positions[i] - interpolate_periodic(b, e.positions[i]) * dt;
        fluct_sum += w;
        fluct_sq += w * w;
        const double d = next.positions[i] - x_cl;
        msd += d * d;
        mean += next.positions[i];
      }
      fluct_n += e.size();
      pt.mean_sq_deviation += msd / static_cast<double>(e.size());
      pt.mean_deviation += std::abs(mean / static_cast<double>(e.size()) - x_cl);
      e = next;
    }
    pt.mean_sq_deviation /= static_cast<double>(steps);
    pt.mean_deviation /= static_cast<double>(steps);
    const double fm = fluct_sum / static_cast<double>(fluct_n);
    pt.fluctuation_variance = fluct_sq / static_cast<double>(fluct_n) - fm * fm;
    study.max_variance_error =
        std::max(study.max_variance_error, std::abs(pt.fluctuation_variance / pt.expected_variance - 1.0));
    log_h.push_back(std::log(h));
    log_msd.push_back(std::log(pt.mean_sq_deviation));
    study.points.push_back(pt);
  }
  study.slope = fit_slope(log_h, log_msd);
  return study;
}

}  // namespace entdyn
