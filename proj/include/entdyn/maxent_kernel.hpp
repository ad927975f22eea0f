#pragma once

#include "entdyn/grid.hpp"
#include "entdyn/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace entdyn {

/// Information defining a short step: expected squared displacement kappa and
/// the gradient of the drift potential phi at the current point. The second
/// multiplier is absorbed into phi, so the drift constraint carries no field
/// of its own; its value kappa' is implied by (alpha, gradient).
struct ConstraintSpec {
  double kappa = 1.0;
  std::size_t dimension = 1;
  std::vector<double> drift_gradient{0.0};

  void validate() const;
};

/// Isotropic Gaussian transition probability P(x'|x) written in terms of the
/// displacement dx = x' - x: mean gradient/alpha, covariance identity/alpha.
struct GaussianKernel {
  double alpha = 1.0;
  std::vector<double> mean;
  double covariance_scale = 1.0;

  std::size_t dimension() const noexcept { return mean.size(); }
  double sigma() const noexcept;
  /// Density of the displacement (all components).
  double pdf(std::span<const double> displacement) const;
};

struct KernelMoments {
  double expected_sq_displacement = 0.0;  ///< <dx . dx>, i.e. kappa
  double drift_projection = 0.0;          ///< <dx> . grad phi, i.e. kappa'
};

/// Probability masses over a 1-D displacement grid.
struct DiscretizedKernel {
  Grid support;
  std::vector<double> probabilities;

  void validate(double mass_tol = 1e-12) const;
  double mean() const;
  double second_moment() const;
};

/// Result of the brute-force maximiser: the distribution plus the two
/// multipliers of the discrete exponential family it was solved in.
struct OracleSolution {
  DiscretizedKernel kernel;
  double alpha = 0.0;
  double alpha_prime = 1.0;
  int iterations = 0;
  double residual = 0.0;
};

struct OracleOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
};

/// Closed form maximum-entropy kernel for multiplier alpha.
GaussianKernel build_kernel(const ConstraintSpec& spec, double alpha);

/// kappa = d/alpha + |grad phi|^2/alpha^2 and kappa' = |grad phi|^2/alpha.
KernelMoments kernel_moments(const GaussianKernel& k);

/// Constraint values for which `alpha` and the given gradient satisfy the
/// multiplier conditions.
ConstraintSpec constraints_for(double alpha, std::vector<double> drift_gradient);

/// S[p, q] = -sum p log(p/q) in nats. Terms with p = 0 contribute nothing.
double relative_entropy(const DiscretizedKernel& p, const DiscretizedKernel& q);

/// Half the L1 distance between two mass vectors on the same support.
double total_variation(const DiscretizedKernel& p, const DiscretizedKernel& q);

/// Cell-centre sampling of a 1-D kernel, renormalised to unit mass.
DiscretizedKernel discretize(const GaussianKernel& k, const Grid& support);

/// Uniform prior masses on a support.
DiscretizedKernel uniform_kernel(const Grid& support);

/// Grid with at least `min_per_sigma` cells per standard deviation and an
/// extent of +-`half_width_sigmas` standard deviations around the mean.
Grid oracle_grid(const GaussianKernel& k, std::size_t min_cells = 0, double min_per_sigma = 8.0,
                 double half_width_sigmas = 8.0);

/// Maximises relative entropy against the uniform prior on `support` subject
/// to normalisation, <dx^2> = kappa and <dx> g = kappa', by damped Newton
/// iteration on the two multipliers. One dimensional constraints only.
OracleSolution maximize_entropy_oracle(const ConstraintSpec& spec, const Grid& support,
                                       const OracleOptions& options = {});

/// One displacement draw, a pure function of (rng seed, stream, counter).
void sample_displacement(const GaussianKernel& k, const CounterRng& rng, std::uint64_t stream,
                         std::uint64_t counter, std::span<double> out);

}  // namespace entdyn
