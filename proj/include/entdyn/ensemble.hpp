#pragma once

#include "entdyn/grid.hpp"
#include "entdyn/maxent_kernel.hpp"
#include "entdyn/physics.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace entdyn {

enum class BoundaryPolicy {
  Periodic,    ///< positions and kernel mass wrap around the domain
  Reflecting,  ///< mirror at x_min and x_max
  Open,        ///< leaving the domain is an error
};

/// N particle positions at entropic time `time`, with the seed that drives
/// every fluctuation. `step` counts completed steps and selects the RNG
/// counter, so (seed, N, step) fully determines the next update.
struct Ensemble {
  std::vector<double> positions;
  std::uint64_t seed = 0;
  double time = 0.0;
  std::uint64_t step = 0;

  std::size_t size() const noexcept { return positions.size(); }
  void validate() const;
};

struct StepOptions {
  BoundaryPolicy boundary = BoundaryPolicy::Periodic;
  unsigned threads = 1;
};

/// Positions drawn from Normal(mean, sigma^2).
Ensemble make_gaussian_ensemble(std::size_t n, double mean, double sigma, std::uint64_t seed);

/// Positions drawn from a piecewise-constant density (uniform within cells).
Ensemble sample_ensemble(const DensityField& rho, std::size_t n, std::uint64_t seed);

/// Linear interpolation between cell centres, periodic across the seam.
double interpolate_periodic(const GridField& f, double x);

/// One Euler-Maruyama step: dx = b(x) dt + dw with dw ~ Normal(0, (hbar/m) dt).
/// The drift is sampled on its grid and interpolated linearly; the grid also
/// defines the domain the boundary policy acts on.
Ensemble step_ensemble(const Ensemble& e, const VelocityField& drift, const PhysicalParams& p,
                       const StepOptions& options = {});

/// The maximum-entropy kernel at every cell for drift b: grad phi = (m/hbar) b,
/// alpha = m/(hbar dt), so the mean displacement is b dt.
std::vector<GaussianKernel> wiener_kernels(const VelocityField& drift, const PhysicalParams& p);

/// Column-stochastic matrix of cell-to-cell transition masses.
/// mass(i, j) = P(x' in cell i | x = centre of cell j).
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  TransitionMatrix(Grid grid, std::vector<double> masses);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  double operator()(std::size_t dest, std::size_t source) const noexcept { return m_[dest * grid_.size() + source]; }
  std::span<const double> data() const noexcept { return m_; }

 private:
  Grid grid_;
  std::vector<double> m_;
};

/// Cell-integrated Gaussian masses for the per-cell kernels. Periodic and
/// reflecting policies fold the tails back in via image sums. With Open, a
/// column that loses more than `leak_tol` of its mass raises BoundaryError.
TransitionMatrix transition_matrix(const Grid& grid, std::span<const GaussianKernel> per_cell,
                                   BoundaryPolicy boundary = BoundaryPolicy::Periodic, double leak_tol = 1e-9);

/// rho(x', t') = sum_x P(x'|x) rho(x, t) dx.
DensityField propagate_density(const DensityField& rho, const TransitionMatrix& kernel);

/// Bayes-reversed kernel P(x|x') = P(x) P(x'|x) / P(x'). mass(j, i) is the
/// probability of past cell j given present cell i; columns sum to one except
/// where the present density vanishes (flagged undefined).
struct ReverseKernel {
  Grid grid;
  std::vector<double> masses;
  std::vector<char> undefined;

  double operator()(std::size_t past, std::size_t present) const noexcept {
    return masses[past * grid.size() + present];
  }
  std::size_t undefined_count() const noexcept;
};

ReverseKernel reverse_kernel(const TransitionMatrix& forward, const DensityField& rho_t,
                             const DensityField& rho_t_next, double consistency_tol = 1e-6);

/// rho(x, t) = sum_x' P(x|x') rho(x', t').
DensityField apply_reverse(const ReverseKernel& reverse, const DensityField& rho_t_next);

/// sup over defined entries of |P(x_j|x'_i) - P_forward(x'=x_j | x=x_i)|: how far
/// the reversed kernel is from simply swapping the forward kernel's arguments.
double swap_asymmetry(const ReverseKernel& reverse, const TransitionMatrix& forward);

struct Histogram {
  DensityField density;
  std::size_t out_of_range = 0;
};

/// Bin counts / (N dx). Particles outside the grid are counted, not binned.
Histogram histogram(const Ensemble& e, const Grid& g);

}  // namespace entdyn
