#pragma once

#include "entdyn/field_dynamics.hpp"
#include "entdyn/grid.hpp"
#include "entdyn/physics.hpp"
#include "entdyn/potential.hpp"

#include <complex>
#include <vector>

namespace entdyn {

using Complex = std::complex<double>;

struct WaveFunction {
  Grid grid;
  std::vector<Complex> values;

  WaveFunction() = default;
  WaveFunction(Grid g, std::vector<Complex> v);

  std::size_t size() const noexcept { return values.size(); }
  /// sum |psi|^2 dx
  double norm() const noexcept;
  void validate(double tol = 1e-10) const;
};

/// psi = rho^(1/2) exp(i Phi) cellwise.
WaveFunction to_wavefunction(const DensityField& rho, const PhaseField& phi);

struct MadelungDecomposition {
  DensityField rho;
  PhaseField phi;
  std::vector<char> flagged;  ///< node cells, phase interpolated
  std::size_t flagged_count = 0;
};

/// rho = |psi|^2 and Phi from 1-D cumulative unwrapping starting at the
/// leftmost cell with rho >= threshold * max(rho). Cells below the threshold
/// are bridged by linear interpolation (constant beyond the outermost valid
/// cells). The reference cell keeps its principal argument in (-pi, pi].
MadelungDecomposition from_wavefunction(const WaveFunction& psi, double relative_threshold = 1e-12);

/// Crank-Nicolson propagator for i hbar dpsi/dt = -(hbar^2/2m) lap psi + V psi on
/// the periodic grid with the three-point Laplacian. The Cayley form makes each
/// step unitary in the discrete norm.
class CrankNicolson {
 public:
  CrankNicolson(const PotentialField& V, const PhysicalParams& p, double dt);

  void step(std::vector<Complex>& psi) const;
  WaveFunction step(const WaveFunction& psi) const;
  double dt() const noexcept { return dt_; }

 private:
  void solve(std::vector<Complex>& rhs) const;

  Grid grid_;
  double dt_;
  Complex off_;                  // off-diagonal of the implicit matrix
  std::vector<Complex> diag_;    // its diagonal
  Complex off_rhs_;              // explicit side
  std::vector<Complex> diag_rhs_;
  // Thomas factorisation of the Sherman-Morrison modified matrix
  std::vector<Complex> c_prime_;
  std::vector<Complex> denom_;
  std::vector<Complex> z_;       // solution for the rank-one correction
  Complex gamma_;
  Complex z_dot_factor_;
};

struct SchrodingerRun {
  std::vector<double> times;
  std::vector<WaveFunction> snapshots;
  std::size_t steps = 0;
  double dt = 0.0;
  double max_norm_drift = 0.0;  ///< max |norm(t) - norm(0)| over all steps
};

/// Crank-Nicolson evolution to t_final with the step shortened from p.dt so a
/// whole number of steps fits. Snapshots every `snapshot_every` steps (0 keeps
/// the first and last state).
SchrodingerRun evolve_schrodinger(const WaveFunction& psi0, const PotentialField& V, const PhysicalParams& p,
                                  double t_final, std::size_t snapshot_every = 0);

/// One Crank-Nicolson step; convenience wrapper that factors per call.
WaveFunction se_step(const WaveFunction& psi, const PotentialField& V, const PhysicalParams& p, double dt);

/// Normalised harmonic oscillator eigenstate n on the grid (Hermite functions).
WaveFunction harmonic_eigenstate(const Grid& grid, unsigned n, double mass, double omega, double hbar,
                                 double center = 0.0);

/// Position, momentum and the action S = hbar Phi carried along a characteristic.
struct ClassicalState {
  double x = 0.0;
  double p = 0.0;
  double S = 0.0;
};

struct ClassicalTrajectory {
  std::vector<double> times;
  std::vector<ClassicalState> states;
  std::vector<double> energies;
  bool left_domain = false;
};

/// Characteristics of the classical Hamilton-Jacobi equation, x' = p/m and
/// p' = -grad V, with S' = p^2/2m - V. Fourth-order symplectic composition
/// (Yoshida) of the velocity Verlet step, fixed step p.dt. When `domain` is
/// non-empty the integration stops at the first state outside it.
ClassicalTrajectory classical_trajectory(const ClassicalState& s0, const Potential& V, const PhysicalParams& p,
                                         double t_final, const Grid* domain = nullptr);

/// (hbar/m) Im(psi* grad psi) / |psi|^2 with central differences; the
/// current velocity read directly from the wave function.
VelocityField wavefunction_velocity(const WaveFunction& psi, const PhysicalParams& p);

}  // namespace entdyn
