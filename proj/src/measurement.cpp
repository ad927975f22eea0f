#include "entdyn/measurement.hpp"

#include "entdyn/errors.hpp"
#include "entdyn/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace entdyn {

namespace {

std::string describe(const char* what, double value) {
  std::ostringstream os;
  os << what << " (" << value << ")";
  return os.str();
}

std::vector<double> cumulative(std::span<const double> p) {
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  return cdf;
}

std::size_t draw(const std::vector<double>& cdf, double u) {
  const double target = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  // u < 1 keeps target below the total, but rounding can still land past the end
  std::size_t k = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
  while (k > 0 && cdf[k] == cdf[k - 1]) --k;
  return k;
}

void validate_distribution(std::span<const double> p, const char* who) {
  if (p.empty()) throw DomainError(std::string(who) + ": empty distribution");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(who) + ": negative or non-finite probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError(describe((std::string(who) + ": probabilities do not sum to 1").c_str(), total));
}

}  // namespace

void StateVector::validate(double tol) const {
  if (amplitudes.size() == 0) throw DomainError("StateVector: empty");
  const double n2 = amplitudes.squaredNorm();
  if (!(std::abs(n2 - 1.0) <= tol)) throw DomainError(describe("StateVector: not normalised", n2));
}

StateVector StateVector::normalized(CVector c) {
  const double n = c.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("StateVector: cannot normalise a zero or non-finite vector");
  return StateVector(c / n);
}

StateVector StateVector::basis(Eigen::Index n, Eigen::Index i) {
  if (i < 0 || i >= n) throw DomainError("StateVector::basis: index out of range");
  CVector c = CVector::Zero(n);
  c(i) = 1.0;
  return StateVector(std::move(c));
}

void SetupUnitary::validate(double tol) const {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) throw DomainError("SetupUnitary: matrix must be square");
  const double err = (matrix.adjoint() * matrix - CMatrix::Identity(matrix.rows(), matrix.cols())).cwiseAbs().maxCoeff();
  if (!(err <= tol)) throw DomainError(describe("SetupUnitary: U^dagger U differs from identity", err));
}

SetupUnitary SetupUnitary::identity(Eigen::Index n) { return {CMatrix::Identity(n, n), "identity"}; }

SetupUnitary SetupUnitary::fourier(Eigen::Index n) {
  CMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      // reduce jk mod n before forming the angle so large n stays accurate
      const auto jk = static_cast<double>((j * k) % n);
      f(j, k) = std::polar(scale, -2.0 * std::numbers::pi * jk / static_cast<double>(n));
    }
  }
  return {f, "fourier"};
}

void ObservableSpec::validate(double tol) const {
  const Eigen::Index n = eigenvectors.rows();
  if (n == 0 || eigenvectors.cols() != n || eigenvalues.size() != n) {
    throw DomainError("ObservableSpec: need n eigenvalues and an n x n eigenvector matrix");
  }
  const double err = (eigenvectors.adjoint() * eigenvectors - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(err <= tol)) throw DomainError(describe("ObservableSpec: eigenvectors are not orthonormal", err));
  validate_observable_matrix(matrix(), tol);
}

CMatrix ObservableSpec::matrix() const { return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint(); }

ObservableSpec ObservableSpec::from_setup(const SetupUnitary& setup, CVector eigenvalues) {
  setup.validate();
  return {std::move(eigenvalues), setup.matrix.adjoint()};
}

void AmplifierModel::validate(double tol) const {
  if (likelihood.size() == 0) throw DomainError("AmplifierModel: empty likelihood");
  if ((likelihood.array() < 0.0).any() || !likelihood.allFinite()) {
    throw DomainError("AmplifierModel: likelihood entries must be finite and non-negative");
  }
  const double err = (likelihood.colwise().sum().array() - 1.0).abs().maxCoeff();
  if (!(err <= tol)) throw DomainError(describe("AmplifierModel: columns do not sum to 1", err));
}

AmplifierModel AmplifierModel::ideal(Eigen::Index n) { return {Eigen::MatrixXd::Identity(n, n)}; }

std::vector<double> born_probabilities(const StateVector& psi) {
  psi.validate();
  std::vector<double> p(static_cast<std::size_t>(psi.size()));
  for (Eigen::Index i = 0; i < psi.size(); ++i) p[static_cast<std::size_t>(i)] = std::norm(psi.amplitudes(i));
  return p;
}

std::vector<double> measure_through_setup(const StateVector& psi, const SetupUnitary& setup) {
  setup.validate();
  psi.validate();
  if (setup.size() != psi.size()) throw DomainError("measure_through_setup: dimension mismatch");
  // the product is unitary only to rounding, so renormalise the image
  return born_probabilities(StateVector::normalized(setup.matrix * psi.amplitudes));
}

std::vector<std::uint64_t> sample_outcomes(std::span<const double> p, std::uint64_t count, std::uint64_t seed) {
  validate_distribution(p, "sample_outcomes");
  const auto cdf = cumulative(p);
  const CounterRng rng(seed);
  std::vector<std::uint64_t> counts(p.size(), 0);
  for (std::uint64_t k = 0; k < count; ++k) ++counts[draw(cdf, rng.uniform(0, k))];
  return counts;
}

Complex observable_expectation(const ObservableSpec& obs, const StateVector& psi) {
  obs.validate();
  psi.validate();
  if (obs.eigenvectors.rows() != psi.size()) throw DomainError("observable_expectation: dimension mismatch");
  const CVector overlaps = obs.eigenvectors.adjoint() * psi.amplitudes;
  Complex sum = 0.0;
  for (Eigen::Index i = 0; i < overlaps.size(); ++i) sum += obs.eigenvalues(i) * std::norm(overlaps(i));
  return sum;
}

bool hermitian_parts_commute(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) throw DomainError("hermitian_parts_commute: matrix must be square");
  const CMatrix h = 0.5 * (a + a.adjoint());
  const CMatrix k = (a - a.adjoint()) / Complex(0.0, 2.0);
  const double scale = std::max(a.squaredNorm(), std::numeric_limits<double>::min());
  return (h * k - k * h).norm() / scale <= tol;
}

void validate_observable_matrix(const CMatrix& a, double tol) {
  if (!hermitian_parts_commute(a, tol)) {
    throw DomainError("observable: Hermitian and anti-Hermitian parts do not commute");
  }
}

std::vector<double> amplify_posterior(std::span<const double> prior, const AmplifierModel& amp, Eigen::Index r) {
  amp.validate();
  validate_distribution(prior, "amplify_posterior");
  if (static_cast<Eigen::Index>(prior.size()) != amp.positions()) throw DomainError("amplify_posterior: dimension mismatch");
  if (r < 0 || r >= amp.readings()) throw DomainError("amplify_posterior: reading out of range");
  std::vector<double> post(prior.size());
  double evidence = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    post[i] = prior[i] * amp.likelihood(r, static_cast<Eigen::Index>(i));
    evidence += post[i];
  }
  if (!(evidence > 0.0)) throw DomainError("amplify_posterior: reading has zero evidence");
  for (double& v : post) v /= evidence;
  return post;
}

ChiSquareResult chi_square_test(std::span<const std::uint64_t> counts, std::span<const double> p,
                                double min_expected) {
  if (counts.size() != p.size()) throw DomainError("chi_square_test: size mismatch");
  validate_distribution(p, "chi_square_test");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0,
                                       [](double s, std::uint64_t c) { return s + static_cast<double>(c); });
  if (!(total > 0.0)) throw DomainError("chi_square_test: no samples");
  ChiSquareResult out;
  std::size_t used = 0;
  double pooled_expected = 0.0, pooled_observed = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = total * p[i];
    const auto observed = static_cast<double>(counts[i]);
    if (expected == 0.0 && observed > 0.0) out.statistic = std::numeric_limits<double>::infinity();
    if (expected < min_expected) {
      pooled_expected += expected;
      pooled_observed += observed;
      continue;
    }
    out.statistic += (observed - expected) * (observed - expected) / expected;
    ++used;
  }
  if (pooled_expected > 0.0) {
    out.statistic += (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) / pooled_expected;
    ++used;
  }
  out.dof = used > 0 ? used - 1 : 0;
  if (std::isinf(out.statistic)) {
    out.p_value = 0.0;
  } else if (out.dof == 0) {
    out.p_value = 1.0;
  } else {
    out.p_value = boost::math::gamma_q(0.5 * static_cast<double>(out.dof), 0.5 * out.statistic);
  }
  return out;
}

StateVector coarse_grain(const WaveFunction& psi, std::size_t lattice) {
  const std::size_t n = psi.size();
  if (lattice == 0 || n % lattice != 0) throw DomainError("coarse_grain: lattice size must divide the grid size");
  const std::size_t block = n / lattice;
  CVector c(static_cast<Eigen::Index>(lattice));
  for (std::size_t j = 0; j < lattice; ++j) {
    Complex s = 0.0;
    for (std::size_t b = 0; b < block; ++b) s += psi.values[j * block + b];
    c(static_cast<Eigen::Index>(j)) = s / static_cast<double>(block);
  }
  return StateVector::normalized(std::move(c));
}

MeasurementRun end_to_end_measurement(const DensityField& rho, const PhaseField& phi, const SetupUnitary& setup,
                                      const AmplifierModel& amp, std::uint64_t count, std::uint64_t seed) {
  setup.validate();
  amp.validate();
  if (amp.positions() != setup.size()) throw DomainError("end_to_end_measurement: amplifier and setup sizes differ");
  const StateVector lattice_state = coarse_grain(to_wavefunction(rho, phi), static_cast<std::size_t>(setup.size()));

  MeasurementRun run;
  run.position_probabilities = measure_through_setup(lattice_state, setup);
  run.position_counts.assign(run.position_probabilities.size(), 0);
  run.reading_counts.assign(static_cast<std::size_t>(amp.readings()), 0);
  if (count == 0) return run;

  const auto cdf = cumulative(run.position_probabilities);
  std::vector<std::vector<double>> reading_cdf(static_cast<std::size_t>(amp.positions()));
  for (Eigen::Index i = 0; i < amp.positions(); ++i) {
    const Eigen::VectorXd col = amp.likelihood.col(i);
    reading_cdf[static_cast<std::size_t>(i)] = cumulative(std::span<const double>(col.data(), col.size()));
  }
  const CounterRng rng(seed);
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::size_t i = draw(cdf, rng.uniform(0, k));
    ++run.position_counts[i];
    ++run.reading_counts[draw(reading_cdf[i], rng.uniform(1, k))];
  }
  for (std::size_t r = 0; r < run.reading_counts.size(); ++r) {
    if (run.reading_counts[r] == 0) continue;
    run.observed_readings.push_back(static_cast<Eigen::Index>(r));
    run.posteriors.push_back(amplify_posterior(run.position_probabilities, amp, static_cast<Eigen::Index>(r)));
  }
  return run;
}

}  // namespace entdyn
