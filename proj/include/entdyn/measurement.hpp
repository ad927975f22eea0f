#pragma once

#include "entdyn/schrodinger.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace entdyn {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Amplitudes c_i on the discrete position basis.
struct StateVector {
  CVector amplitudes;

  StateVector() = default;
  explicit StateVector(CVector c) : amplitudes(std::move(c)) {}

  Eigen::Index size() const noexcept { return amplitudes.size(); }
  /// Throws DomainError unless sum |c_i|^2 = 1 within tol.
  void validate(double tol = 1e-12) const;
  /// Rescales c to unit norm; throws DomainError for the zero vector.
  static StateVector normalized(CVector c);
  /// Position basis state |x_i>.
  static StateVector basis(Eigen::Index n, Eigen::Index i);
};

/// Apparatus evolution mapping observable eigenvectors onto position states.
struct SetupUnitary {
  CMatrix matrix;
  std::string name = "custom";

  void validate(double tol = 1e-10) const;
  Eigen::Index size() const noexcept { return matrix.rows(); }

  static SetupUnitary identity(Eigen::Index n);
  /// F_jk = exp(-2 pi i jk/n)/sqrt(n).
  static SetupUnitary fourier(Eigen::Index n);
};

/// A = sum_i lambda_i |s_i><s_i| with orthonormal |s_i> (the columns of
/// eigenvectors). The eigenvalues may be complex.
struct ObservableSpec {
  CVector eigenvalues;
  CMatrix eigenvectors;

  /// Throws DomainError if the eigenvectors are not orthonormal within tol or
  /// the Hermitian and anti-Hermitian parts of the assembled operator fail to
  /// commute.
  void validate(double tol = 1e-10) const;
  CMatrix matrix() const;
  /// Observable measured by a setup: its eigenvectors are U^dagger |x_i>.
  static ObservableSpec from_setup(const SetupUnitary& setup, CVector eigenvalues);
};

/// Likelihood P(alpha_r | x_i): rows are pointer readings, columns positions.
struct AmplifierModel {
  Eigen::MatrixXd likelihood;

  void validate(double tol = 1e-12) const;
  Eigen::Index readings() const noexcept { return likelihood.rows(); }
  Eigen::Index positions() const noexcept { return likelihood.cols(); }

  /// P(alpha_r | x_i) = delta_ri.
  static AmplifierModel ideal(Eigen::Index n);
};

/// p_i = |c_i|^2. Throws DomainError for an unnormalised state.
std::vector<double> born_probabilities(const StateVector& psi);

/// |<x_i| U |psi>|^2.
std::vector<double> measure_through_setup(const StateVector& psi, const SetupUnitary& setup);

/// Multinomial counts of `count` draws from p by inverse-CDF sampling on the
/// counter generator (stream 0, counter = draw index).
std::vector<std::uint64_t> sample_outcomes(std::span<const double> p, std::uint64_t count, std::uint64_t seed);

/// sum_i lambda_i |<s_i|psi>|^2.
Complex observable_expectation(const ObservableSpec& obs, const StateVector& psi);

/// True when H = (A + A^dagger)/2 and K = (A - A^dagger)/2i commute within tol
/// (Frobenius norm of [H, K] relative to |A|^2).
bool hermitian_parts_commute(const CMatrix& a, double tol = 1e-10);

/// Throws DomainError unless a is normal, i.e. its Hermitian and
/// anti-Hermitian parts commute.
void validate_observable_matrix(const CMatrix& a, double tol = 1e-10);

/// Bayes posterior P(x_i | alpha_r). Throws DomainError for zero evidence.
std::vector<double> amplify_posterior(std::span<const double> prior, const AmplifierModel& amp, Eigen::Index r);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Pearson chi-square of counts against p. Outcomes expecting fewer than
/// min_expected draws are pooled into one bin; a draw of a zero-probability
/// outcome makes the statistic infinite.
ChiSquareResult chi_square_test(std::span<const std::uint64_t> counts, std::span<const double> p,
                                double min_expected = 5.0);

/// Block average of psi over groups of grid.size()/lattice cells, renormalised.
/// Throws DomainError unless lattice divides the grid size.
StateVector coarse_grain(const WaveFunction& psi, std::size_t lattice);

struct MeasurementRun {
  std::vector<double> position_probabilities;
  std::vector<std::uint64_t> position_counts;
  std::vector<std::uint64_t> reading_counts;
  /// Readings observed at least once, in increasing order, with the Bayes
  /// posterior over positions for each.
  std::vector<Eigen::Index> observed_readings;
  std::vector<std::vector<double>> posteriors;
};

/// Coarse-grains (rho, Phi) to the setup lattice, applies the setup, samples
/// `count` positions and one pointer reading per position, then inverts each
/// observed reading with Bayes' rule against the position distribution.
MeasurementRun end_to_end_measurement(const DensityField& rho, const PhaseField& phi, const SetupUnitary& setup,
                                      const AmplifierModel& amp, std::uint64_t count, std::uint64_t seed);

}  // namespace entdyn
