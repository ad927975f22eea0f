#pragma once

#include "entdyn/grid.hpp"
#include "entdyn/physics.hpp"

#include <cstddef>
#include <vector>

namespace entdyn {

/// Regularisation scale for the quantum potential: 1e-12 max(rho). Cells with
/// rho below it are flagged; sqrt(rho) is evaluated as sqrt(max(rho,0) + floor).
double density_floor(const DensityField& rho);

struct FlaggedVelocity {
  VelocityField velocity;
  std::vector<char> flagged;
  std::size_t flagged_count = 0;
};

/// u = -(hbar/m) grad log rho^(1/2), central differences of log(rho + floor).
FlaggedVelocity osmotic_velocity(const DensityField& rho, const PhysicalParams& p, double floor = -1.0);

/// v = (hbar/m) grad Phi, central differences.
VelocityField current_velocity(const PhaseField& phi, const PhysicalParams& p);

/// Largest dt with max|v| dt/dx <= cfl.
double advective_dt_limit(const VelocityField& v, double cfl = 0.5);

/// One step of d(rho)/dt = -div(rho v) for a frozen cell-centred velocity,
/// flux form with face velocities averaged from the cells, classical RK4.
/// Throws CflError when max|v| dt/dx > 0.5.
DensityField fp_step(const DensityField& rho, const VelocityField& v, double dt);

/// One step of d(rho)/dt = -div(rho b) + (hbar/2m) lap(rho), flux form, RK4.
DensityField fokker_planck_step(const DensityField& rho, const VelocityField& drift, const PhysicalParams& p,
                                double dt);

struct PhaseRate {
  GridField values;  ///< d(Phi)/dt
  std::vector<char> flagged;
  std::size_t flagged_count = 0;
};

/// hbar dPhi/dt = -[(hbar^2/2m)(grad Phi)^2 + V - (hbar^2/2m) lap(sqrt rho)/sqrt rho].
/// (grad Phi)^2 is the mean of the two adjacent face gradients squared, which
/// makes this the exact variational derivative of total_energy.
PhaseRate qhj_rhs(const DensityField& rho, const PhaseField& phi, const PotentialField& V, const PhysicalParams& p,
                  double floor = -1.0);

/// d(rho)/dt = -(hbar/m) div(rho grad Phi) in flux form. The face density is
/// the mean of max(rho, 0) + floor over the two cells.
GridField continuity_rhs(const DensityField& rho, const PhaseField& phi, const PhysicalParams& p,
                         double floor = -1.0);

struct EnergyReport {
  double total = 0.0;
  double kinetic_current = 0.0;  ///< integral of rho (hbar^2/2m)(grad Phi)^2
  double osmotic = 0.0;          ///< integral of rho (hbar^2/2m)(grad log rho^(1/2))^2
  double potential = 0.0;        ///< integral of rho V
  GridField local_energy;        ///< m v^2/2 + m u^2/2 + V per cell
  std::size_t flagged_count = 0;
};

/// Discrete energy functional; the coupled dynamics is its Hamiltonian flow.
EnergyReport total_energy(const DensityField& rho, const PhaseField& phi, const PotentialField& V,
                          const PhysicalParams& p, double floor = -1.0);

struct EnergyGradient {
  std::vector<double> d_rho;  ///< dE/d rho_i
  std::vector<double> d_phi;  ///< dE/d Phi_i
};

EnergyGradient energy_gradient(const DensityField& rho, const PhaseField& phi, const PotentialField& V,
                               const PhysicalParams& p, double floor = -1.0);

/// hbar dPhi/dt + (hbar^2/2m)(grad Phi)^2 + V - (hbar^2/2m) lap(sqrt rho)/sqrt rho per cell,
/// with cell-centred gradients. Vanishes up to discretisation error on a
/// trajectory that obeys the quantum Hamilton-Jacobi equation.
GridField hj_residual(const DensityField& rho, const PhaseField& phi, const GridField& dphi_dt,
                      const PotentialField& V, const PhysicalParams& p, double floor = -1.0);

/// Largest stable RK4 step for the coupled system: the dispersive limit
/// 2 sqrt(2) / (2 hbar/(m dx^2) + max|v|/dx), capped by the advective CFL.
double stable_time_step(const DensityField& rho, const PhaseField& phi, const PhysicalParams& p);

struct FieldSnapshot {
  double t = 0.0;
  DensityField rho;
  PhaseField phi;
  EnergyReport energy;
};

struct EvolveOptions {
  double t_final = 1.0;
  /// Snapshot every this many steps; 0 keeps only the first and last state.
  std::size_t snapshot_every = 0;
  double mass_tolerance = 1e-6;
  /// Check NaN and mass drift every this many steps.
  std::size_t check_every = 16;
};

struct FieldTrajectory {
  std::vector<FieldSnapshot> snapshots;
  std::size_t steps = 0;
  double dt = 0.0;
  double floor = 0.0;
  double max_mass_drift = 0.0;
  std::size_t max_flagged = 0;
};

/// Integrates the coupled continuity / quantum Hamilton-Jacobi system with the
/// classical fourth-order Runge-Kutta scheme. p.dt is the requested step; it is
/// shortened so that a whole number of steps reaches t_final. Aborts with
/// NumericalError on NaN or mass drift above the tolerance and with CflError
/// if the requested step is above stable_time_step.
FieldTrajectory evolve_coupled(const DensityField& rho, const PhaseField& phi, const PotentialField& V,
                               const PhysicalParams& p, const EvolveOptions& options);

/// max over snapshots of |E(t) - E(0)| / |E(0)|, or absolute when E(0) = 0.
double energy_drift(const FieldTrajectory& trajectory);

struct MadelungState {
  DensityField rho;
  PhaseField phi;
};

/// Gaussian density N(mu, sigma^2) sampled at cell centres and renormalised,
/// with phase Phi = k (x - mu); the winding is k L so Phi is a plane wave.
MadelungState gaussian_state(const Grid& grid, double mu, double sigma, double k);

/// Second moment about the mean of a density.
double density_variance(const DensityField& rho);
double density_mean(const DensityField& rho);

}  // namespace entdyn
