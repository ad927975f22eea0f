#include "entdyn/maxent_kernel.hpp"

#include "entdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace entdyn {

void ConstraintSpec::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("ConstraintSpec: kappa must be positive");
  if (dimension < 1) throw DomainError("ConstraintSpec: dimension must be >= 1");
  if (drift_gradient.size() != dimension) {
    throw DomainError("ConstraintSpec: drift_gradient must have `dimension` components");
  }
  for (double g : drift_gradient) {
    if (!std::isfinite(g)) throw DomainError("ConstraintSpec: drift_gradient must be finite");
  }
}

double GaussianKernel::sigma() const noexcept { return std::sqrt(covariance_scale); }

double GaussianKernel::pdf(std::span<const double> displacement) const {
  if (displacement.size() != mean.size()) throw DomainError("GaussianKernel::pdf: dimension mismatch");
  double q = 0.0;
  for (std::size_t a = 0; a < mean.size(); ++a) {
    const double d = displacement[a] - mean[a];
    q += d * d;
  }
  const double norm = std::pow(alpha / (2.0 * std::numbers::pi), 0.5 * static_cast<double>(mean.size()));
  return norm * std::exp(-0.5 * alpha * q);
}

GaussianKernel build_kernel(const ConstraintSpec& spec, double alpha) {
  spec.validate();
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("build_kernel: alpha must be positive");
  GaussianKernel k;
  k.alpha = alpha;
  k.covariance_scale = 1.0 / alpha;
  k.mean.resize(spec.dimension);
  for (std::size_t a = 0; a < spec.dimension; ++a) k.mean[a] = spec.drift_gradient[a] / alpha;
  return k;
}

KernelMoments kernel_moments(const GaussianKernel& k) {
  double g2 = 0.0;
  for (double m : k.mean) g2 += (m * k.alpha) * (m * k.alpha);
  const double d = static_cast<double>(k.dimension());
  return {d / k.alpha + g2 / (k.alpha * k.alpha), g2 / k.alpha};
}

ConstraintSpec constraints_for(double alpha, std::vector<double> drift_gradient) {
  ConstraintSpec spec;
  spec.dimension = drift_gradient.size();
  spec.drift_gradient = std::move(drift_gradient);
  spec.kappa = 1.0;
  spec.kappa = kernel_moments(build_kernel(spec, alpha)).expected_sq_displacement;
  return spec;
}

void DiscretizedKernel::validate(double mass_tol) const {
  if (probabilities.size() != support.size()) throw DomainError("DiscretizedKernel: size mismatch");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw DomainError("DiscretizedKernel: negative mass");
    total += p;
  }
  if (std::abs(total - 1.0) > mass_tol) throw DomainError("DiscretizedKernel: mass is not 1");
}

double DiscretizedKernel::mean() const {
  double m = 0.0;
  for (std::size_t j = 0; j < probabilities.size(); ++j) m += probabilities[j] * support.center(j);
  return m;
}

double DiscretizedKernel::second_moment() const {
  double m = 0.0;
  for (std::size_t j = 0; j < probabilities.size(); ++j) {
    const double x = support.center(j);
    m += probabilities[j] * x * x;
  }
  return m;
}

namespace {

void require_comparable(const DiscretizedKernel& p, const DiscretizedKernel& q, const char* what) {
  require_same_grid(p.support, q.support, what);
  if (p.probabilities.size() != q.probabilities.size() || p.probabilities.size() != p.support.size()) {
    throw DomainError(std::string(what) + ": support mismatch");
  }
}

}  // namespace

double relative_entropy(const DiscretizedKernel& p, const DiscretizedKernel& q) {
  require_comparable(p, q, "relative_entropy");
  double s = 0.0;
  for (std::size_t j = 0; j < p.probabilities.size(); ++j) {
    const double pj = p.probabilities[j];
    if (pj <= 0.0) continue;
    const double qj = q.probabilities[j];
    if (!(qj > 0.0)) throw DomainError("relative_entropy: p > 0 where q = 0");
    s -= pj * std::log(pj / qj);
  }
  return s;
}

double total_variation(const DiscretizedKernel& p, const DiscretizedKernel& q) {
  require_comparable(p, q, "total_variation");
  double s = 0.0;
  for (std::size_t j = 0; j < p.probabilities.size(); ++j) s += std::abs(p.probabilities[j] - q.probabilities[j]);
  return 0.5 * s;
}

DiscretizedKernel discretize(const GaussianKernel& k, const Grid& support) {
  if (k.dimension() != 1) throw DomainError("discretize: one dimensional kernels only");
  DiscretizedKernel out{support, std::vector<double>(support.size())};
  double total = 0.0;
  for (std::size_t j = 0; j < support.size(); ++j) {
    const double d = support.center(j) - k.mean[0];
    out.probabilities[j] = std::exp(-0.5 * k.alpha * d * d);
    total += out.probabilities[j];
  }
  for (double& p : out.probabilities) p /= total;
  return out;
}

DiscretizedKernel uniform_kernel(const Grid& support) {
  return {support, std::vector<double>(support.size(), 1.0 / static_cast<double>(support.size()))};
}

Grid oracle_grid(const GaussianKernel& k, std::size_t min_cells, double min_per_sigma, double half_width_sigmas) {
  if (k.dimension() != 1) throw DomainError("oracle_grid: one dimensional kernels only");
  const double s = k.sigma();
  const double width = 2.0 * half_width_sigmas * s;
  const auto n = std::max<std::size_t>(min_cells, static_cast<std::size_t>(std::ceil(2.0 * half_width_sigmas * min_per_sigma)));
  return Grid(k.mean[0] - 0.5 * width, k.mean[0] + 0.5 * width, n);
}

namespace {

// Exponential family p_j ~ exp(-a x_j^2 / 2 + b g x_j) on the support grid.
struct FamilyState {
  std::vector<double> p;
  double log_z = 0.0;
  double ex2 = 0.0;  // <x^2>
  double ex = 0.0;   // <x>
  double var_f1 = 0.0, var_f2 = 0.0, cov = 0.0;
};

FamilyState evaluate_family(const Grid& support, double g, double a, double b) {
  const std::size_t n = support.size();
  FamilyState st;
  st.p.resize(n);
  double emax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double x = support.center(j);
    st.p[j] = -0.5 * a * x * x + b * g * x;
    emax = std::max(emax, st.p[j]);
  }
  double z = 0.0;
  for (double& e : st.p) {
    e = std::exp(e - emax);
    z += e;
  }
  st.log_z = emax + std::log(z);
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    st.p[j] /= z;
    const double x = support.center(j);
    const double x2 = x * x;
    m1 += st.p[j] * x;
    m2 += st.p[j] * x2;
    m3 += st.p[j] * x2 * x;
    m4 += st.p[j] * x2 * x2;
  }
  st.ex = m1;
  st.ex2 = m2;
  // features f1 = -x^2/2, f2 = g x
  st.var_f1 = 0.25 * (m4 - m2 * m2);
  st.var_f2 = g * g * (m2 - m1 * m1);
  st.cov = -0.5 * g * (m3 - m2 * m1);
  return st;
}

double gaussian_mass_inside(double mean, double sigma, double lo, double hi) {
  const double s = sigma * std::numbers::sqrt2;
  return 0.5 * (std::erf((hi - mean) / s) - std::erf((lo - mean) / s));
}

}  // namespace

OracleSolution maximize_entropy_oracle(const ConstraintSpec& spec, const Grid& support, const OracleOptions& options) {
  spec.validate();
  if (spec.dimension != 1) throw DomainError("maximize_entropy_oracle: one dimensional constraints only");
  const double g = spec.drift_gradient[0];
  const double kappa = spec.kappa;

  // kappa' implied by the kernel family, and the starting point.
  double kappa_p = 0.0;
  double a = 0.0, b = 1.0;
  double mean0 = 0.0;
  if (g != 0.0) {
    // With alpha' = 1: mean = g/alpha and kappa = 1/alpha + g^2/alpha^2, so
    // alpha solves kappa alpha^2 - alpha - g^2 = 0.
    a = (1.0 + std::sqrt(1.0 + 4.0 * kappa * g * g)) / (2.0 * kappa);
    mean0 = g / a;
    kappa_p = g * g / a;
  } else {
    a = 1.0 / kappa;
  }
  const double sigma0 = 1.0 / std::sqrt(a);
  if (gaussian_mass_inside(mean0, sigma0, support.x_min(), support.x_max()) < 1.0 - 1e-9) {
    throw DomainError("maximize_entropy_oracle: support holds less than 1 - 1e-9 of the Gaussian mass");
  }
  // Start slightly off the analytic answer so the solve is a real solve.
  a *= 0.9;
  b = g != 0.0 ? 1.1 : 1.0;

  const double scale = std::max(1.0, kappa);
  auto residuals = [&](const FamilyState& st) {
    return std::pair{st.ex2 - kappa, g != 0.0 ? g * st.ex - kappa_p : 0.0};
  };
  auto dual = [&](const FamilyState& st, double aa, double bb) {
    return st.log_z - aa * (-0.5 * kappa) - bb * kappa_p;
  };

  FamilyState st = evaluate_family(support, g, a, b);
  int it = 0;
  double res = 0.0;
  for (;; ++it) {
    const auto [r1, r2] = residuals(st);
    res = std::max(std::abs(r1), std::abs(r2));
    if (res < options.tolerance * scale) break;
    if (it >= options.max_iterations) {
      std::ostringstream os;
      os << "maximize_entropy_oracle: no convergence after " << it << " iterations, residual " << res;
      throw NumericalError(os.str());
    }
    // gradient of the dual in (a, b) is <f> - target = (-r1/2, r2)
    const double ga = -0.5 * r1;
    const double gb = r2;
    double da = 0.0, db = 0.0;
    if (g != 0.0) {
      double h11 = st.var_f1, h22 = st.var_f2, h12 = st.cov;
      double det = h11 * h22 - h12 * h12;
      const double cond_floor = 1e-14 * (h11 * h22);
      if (!(det > cond_floor)) {
        // Levenberg damping when the covariance is close to singular
        const double lm = 1e-6 * (h11 + h22);
        h11 += lm;
        h22 += lm;
        det = h11 * h22 - h12 * h12;
      }
      da = -(h22 * ga - h12 * gb) / det;
      db = -(-h12 * ga + h11 * gb) / det;
    } else {
      da = -ga / st.var_f1;
    }
    // backtracking on the (convex) dual
    const double f0 = dual(st, a, b);
    double t = 1.0;
    FamilyState trial;
    bool accepted = false;
    for (int ls = 0; ls < 60 && !accepted; ++ls, t *= 0.5) {
      const double an = a + t * da;
      const double bn = b + t * db;
      if (an <= 0.0) continue;
      trial = evaluate_family(support, g, an, bn);
      if (dual(trial, an, bn) <= f0 + 1e-4 * t * (ga * da + gb * db) + 1e-15 * std::abs(f0)) {
        a = an;
        b = bn;
        accepted = true;
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "maximize_entropy_oracle: line search stalled at iteration " << it << ", residual " << res;
      throw NumericalError(os.str());
    }
    st = std::move(trial);
  }

  OracleSolution sol;
  sol.kernel = DiscretizedKernel{support, std::move(st.p)};
  sol.alpha = a;
  sol.alpha_prime = b;
  sol.iterations = it;
  sol.residual = res;
  return sol;
}

void sample_displacement(const GaussianKernel& k, const CounterRng& rng, std::uint64_t stream, std::uint64_t counter,
                         std::span<double> out) {
  const std::size_t d = k.dimension();
  if (out.size() != d) throw DomainError("sample_displacement: output size mismatch");
  const double s = k.sigma();
  for (std::size_t a = 0; a < d; ++a) out[a] = k.mean[a] + s * rng.normal(stream, counter * d + a);
}

}  // namespace entdyn
