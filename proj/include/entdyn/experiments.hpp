#pragma once

#include "entdyn/csv.hpp"
#include "entdyn/ensemble.hpp"
#include "entdyn/field_dynamics.hpp"
#include "entdyn/maxent_kernel.hpp"
#include "entdyn/schrodinger.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace entdyn {

/// Closed-form kernel against the brute-force entropy maximiser for the
/// constraints implied by (alpha, gradient), on `cells` cells spanning
/// +-12 sigma around the mean displacement.
struct MaxentVerification {
  ConstraintSpec spec;
  GaussianKernel closed_form;
  DiscretizedKernel closed_form_discrete;
  OracleSolution oracle;
  double total_variation = 0.0;
};

MaxentVerification verify_maxent(double alpha, double gradient, std::size_t cells);

/// Cell averages of Normal(mu, sigma^2) over the grid (erf differences, no
/// periodic images).
DensityField gaussian_cell_averages(const Grid& grid, double mu, double sigma);

/// Sum of each group of cells (fine.size()/coarse cells) times the fine dx,
/// divided by the coarse dx: the block average onto the coarse grid.
DensityField block_average(const DensityField& fine, const Grid& coarse);

/// Fokker-Planck evolution over `steps` steps of p.dt, each split into as many
/// equal substeps as stability requires.
DensityField evolve_fokker_planck(const DensityField& rho, const VelocityField& drift, const PhysicalParams& p,
                                  std::size_t steps);

struct EnsembleComparisonOptions {
  VelocityField drift;            ///< on the PDE grid, which is also the particle domain
  std::size_t histogram_cells = 32;
  std::size_t particles = 1000000;
  std::size_t steps = 100;
  PhysicalParams physics;
  double mu = 0.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  BoundaryPolicy boundary = BoundaryPolicy::Periodic;
  std::size_t record_particles = 0;
};

struct EnsembleComparison {
  Ensemble final_ensemble;
  Histogram histogram;
  DensityField pde;      ///< Fokker-Planck density block-averaged onto the histogram grid
  DensityField kernel;   ///< iterated transition matrix, block averaged
  double l1_pde = 0.0;
  double l1_kernel = 0.0;
  std::vector<TrajectoryRecord> records;
};

/// Euler-Maruyama particles from Normal(mu, sigma^2) against the
/// Fokker-Planck and the transition-matrix propagation of the same initial
/// density, compared as L1 distances on the histogram grid.
EnsembleComparison compare_ensemble_with_pde(const EnsembleComparisonOptions& options);

struct SolverComparison {
  FieldTrajectory fields;
  SchrodingerRun schrodinger;
  MadelungDecomposition reference;  ///< decomposition of the final wave function
  double distance = 0.0;            ///< between the final densities
};

/// Coupled (rho, Phi) flow against Crank-Nicolson from the same initial state
/// with the same step, compared by `metric` at t_final.
SolverComparison compare_with_schrodinger(const DensityField& rho, const PhaseField& phi, const PotentialField& V,
                                          const PhysicalParams& p, double t_final, Metric metric,
                                          std::size_t snapshot_every = 0);

/// sigma0^2 + (hbar t / 2 m sigma0)^2.
double free_packet_variance(double sigma0, double t, const PhysicalParams& p);

struct ClassicalLimitPoint {
  double hbar_over_m = 0.0;
  double mean_sq_deviation = 0.0;     ///< <(x - x_cl)^2>, averaged over particles and steps
  double mean_deviation = 0.0;        ///< |<x> - x_cl|, averaged over steps
  double fluctuation_variance = 0.0;  ///< variance of dx - b(x) dt over particles and steps
  double expected_variance = 0.0;     ///< (hbar/m) dt
};

struct ClassicalLimitStudy {
  std::vector<ClassicalLimitPoint> points;
  double slope = 0.0;  ///< least-squares slope of log msd against log (hbar/m)
  double max_variance_error = 0.0;
  double classical_energy_drift = 0.0;
};

struct ClassicalLimitOptions {
  Grid grid{-4.0, 4.0, 2048};
  double mass = 1.0;
  double omega = 1.0;
  double x0 = 1.0;
  double dt = 2e-3;
  double t_final = 6.283185307179586;
  std::vector<double> hbar_over_m{1e-1, 1e-2, 1e-3};
  std::size_t particles = 20000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Particles of a harmonic coherent state moved by the drift b = v - u of the
/// exact state, measured against the symplectic classical trajectory with the
/// same initial point, for each hbar/m.
ClassicalLimitStudy classical_limit_study(const ClassicalLimitOptions& options);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace entdyn
