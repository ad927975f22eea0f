#include "entdyn/ensemble.hpp"

#include "entdyn/errors.hpp"
#include "entdyn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <exception>
#include <mutex>
#include <thread>

namespace entdyn {

namespace {

// Counter reserved for initial sampling so it never collides with step draws.
constexpr std::uint64_t kInitCounter = std::numeric_limits<std::uint64_t>::max() / 4;

}  // namespace

void Ensemble::validate() const {
  if (positions.empty()) throw DomainError("Ensemble: need at least one particle");
  for (double x : positions) {
    if (!std::isfinite(x)) throw DomainError("Ensemble: non-finite position");
  }
}

Ensemble make_gaussian_ensemble(std::size_t n, double mean, double sigma, std::uint64_t seed) {
  if (n == 0) throw DomainError("make_gaussian_ensemble: n must be >= 1");
  if (!(sigma >= 0.0)) throw DomainError("make_gaussian_ensemble: sigma must be >= 0");
  const CounterRng rng(seed);
  Ensemble e;
  e.seed = seed;
  e.positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) e.positions[i] = mean + sigma * rng.normal(i, kInitCounter);
  return e;
}

Ensemble sample_ensemble(const DensityField& rho, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample_ensemble: n must be >= 1");
  const Grid& g = rho.grid;
  std::vector<double> cdf(g.size() + 1, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (rho[i] < 0.0) throw DomainError("sample_ensemble: negative density");
    cdf[i + 1] = cdf[i] + rho[i];
  }
  const double total = cdf.back();
  if (!(total > 0.0)) throw DomainError("sample_ensemble: zero density");
  const CounterRng rng(seed);
  Ensemble e;
  e.seed = seed;
  e.positions.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform(k, kInitCounter) * total;
    auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
    auto cell = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin() - 1, g.size() - 1));
    const double w = rho[cell] > 0.0 ? (u - cdf[cell]) / rho[cell] : 0.5;
    e.positions[k] = g.x_min() + (static_cast<double>(cell) + std::clamp(w, 0.0, 1.0)) * g.dx();
  }
  return e;
}

double interpolate_periodic(const GridField& f, double x) {
  const Grid& g = f.grid;
  double s = (g.wrap(x) - g.x_min()) / g.dx() - 0.5;
  const auto n = static_cast<double>(g.size());
  if (s < 0.0) s += n;
  auto i = static_cast<std::size_t>(s);
  if (i >= g.size()) i = g.size() - 1;
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * f[i] + w * f[g.next(i)];
}

namespace {

double apply_boundary(double x, const Grid& g, BoundaryPolicy policy) {
  switch (policy) {
    case BoundaryPolicy::Periodic: return g.wrap(x);
    case BoundaryPolicy::Reflecting: {
      // fold onto [x_min, x_max] with period 2L
      const double len = g.length();
      double y = std::fmod(x - g.x_min(), 2.0 * len);
      if (y < 0.0) y += 2.0 * len;
      if (y > len) y = 2.0 * len - y;
      return std::min(g.x_min() + y, std::nextafter(g.x_max(), g.x_min()));
    }
    case BoundaryPolicy::Open:
      if (x < g.x_min() || x >= g.x_max()) {
        std::ostringstream os;
        os << "step_ensemble: particle left the open domain at x = " << x;
        throw BoundaryError(os.str());
      }
      return x;
  }
  return x;
}

}  // namespace

Ensemble step_ensemble(const Ensemble& e, const VelocityField& drift, const PhysicalParams& p,
                       const StepOptions& options) {
  e.validate();
  p.validate();
  for (double b : drift.values) {
    if (!std::isfinite(b)) throw DomainError("step_ensemble: drift field is not finite");
  }
  const CounterRng rng(e.seed);
  const double noise = std::sqrt(p.diffusion() * p.dt);
  const Grid& g = drift.grid;

  Ensemble out;
  out.seed = e.seed;
  out.time = e.time + p.dt;
  out.step = e.step + 1;
  out.positions.resize(e.size());

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double x = e.positions[i];
      const double b = interpolate_periodic(drift, x);
      const double dw = noise * rng.normal(i, e.step);
      out.positions[i] = apply_boundary(x + b * p.dt + dw, g, options.boundary);
    }
  };

  const unsigned threads = std::max(1u, options.threads);
  if (threads == 1 || e.size() < 4096) {
    work(0, e.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (e.size() + threads - 1) / threads;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(e.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

std::vector<GaussianKernel> wiener_kernels(const VelocityField& drift, const PhysicalParams& p) {
  p.validate();
  const double alpha = p.alpha();
  std::vector<GaussianKernel> out;
  out.reserve(drift.size());
  ConstraintSpec spec;
  for (double b : drift.values) {
    spec.drift_gradient = {b / p.diffusion()};
    spec.kappa = 1.0;  // unused by build_kernel beyond validation
    out.push_back(build_kernel(spec, alpha));
  }
  return out;
}

TransitionMatrix::TransitionMatrix(Grid grid, std::vector<double> masses) : grid_(std::move(grid)), m_(std::move(masses)) {
  if (m_.size() != grid_.size() * grid_.size()) throw DomainError("TransitionMatrix: size mismatch");
}

namespace {

// Mass of Normal(mu, sigma^2) on [lo, hi).
double normal_mass(double mu, double sigma, double lo, double hi) {
  const double s = sigma * std::numbers::sqrt2;
  const double a = (lo - mu) / s;
  const double b = (hi - mu) / s;
  // use the tail that keeps precision
  if (a > 0.0) return 0.5 * (std::erfc(a) - std::erfc(b));
  if (b < 0.0) return 0.5 * (std::erfc(-b) - std::erfc(-a));
  return 0.5 * (std::erf(b) - std::erf(a));
}

}  // namespace

TransitionMatrix transition_matrix(const Grid& grid, std::span<const GaussianKernel> per_cell, BoundaryPolicy boundary,
                                   double leak_tol) {
  const std::size_t n = grid.size();
  if (per_cell.size() != n) throw DomainError("transition_matrix: need one kernel per source cell");
  const double len = grid.length();
  const double dx = grid.dx();
  std::vector<double> m(n * n, 0.0);

  for (std::size_t j = 0; j < n; ++j) {
    const GaussianKernel& k = per_cell[j];
    if (k.dimension() != 1) throw DomainError("transition_matrix: one dimensional kernels only");
    const double mu = grid.center(j) + k.mean[0];
    const double sigma = k.sigma();
    // images needed to cover +-40 sigma beyond the domain
    const auto images = static_cast<long>(std::ceil((40.0 * sigma + std::abs(k.mean[0])) / len)) + 1;

    auto add_source = [&](double centre) {
      for (std::size_t i = 0; i < n; ++i) {
        const double lo = grid.x_min() + static_cast<double>(i) * dx;
        m[i * n + j] += normal_mass(centre, sigma, lo, lo + dx);
      }
    };

    switch (boundary) {
      case BoundaryPolicy::Open: add_source(mu); break;
      case BoundaryPolicy::Periodic:
        for (long r = -images; r <= images; ++r) add_source(mu + static_cast<double>(r) * len);
        break;
      case BoundaryPolicy::Reflecting:
        for (long r = -images; r <= images; ++r) {
          const double shift = 2.0 * static_cast<double>(r) * len;
          add_source(mu + shift);
          add_source(2.0 * grid.x_min() - mu + shift);
        }
        break;
    }

    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += m[i * n + j];
    if (boundary == BoundaryPolicy::Open && 1.0 - col > leak_tol) {
      std::ostringstream os;
      os << "transition_matrix: kernel from cell " << j << " leaks " << 1.0 - col << " past the grid edges";
      throw BoundaryError(os.str());
    }
    if (!(col > 0.0)) throw NumericalError("transition_matrix: empty column");
    for (std::size_t i = 0; i < n; ++i) m[i * n + j] /= col;
  }
  return TransitionMatrix(grid, std::move(m));
}

DensityField propagate_density(const DensityField& rho, const TransitionMatrix& kernel) {
  require_same_grid(rho.grid, kernel.grid(), "propagate_density");
  const std::size_t n = rho.size();
  DensityField out(rho.grid);
  const auto data = kernel.data();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = data.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * rho[j];
    out[i] = s;
  }
  return out;
}

std::size_t ReverseKernel::undefined_count() const noexcept {
  return static_cast<std::size_t>(std::count(undefined.begin(), undefined.end(), 1));
}

ReverseKernel reverse_kernel(const TransitionMatrix& forward, const DensityField& rho_t, const DensityField& rho_t_next,
                             double consistency_tol) {
  require_same_grid(rho_t.grid, forward.grid(), "reverse_kernel");
  require_same_grid(rho_t_next.grid, forward.grid(), "reverse_kernel");
  const std::size_t n = forward.size();

  const DensityField predicted = propagate_density(rho_t, forward);
  const double mismatch = field_distance(predicted, rho_t_next, Metric::Sup);
  double scale = 1.0;
  for (double v : rho_t_next.values) scale = std::max(scale, std::abs(v));
  if (mismatch > consistency_tol * scale) {
    std::ostringstream os;
    os << "reverse_kernel: rho(t') differs from the propagated rho(t) by " << mismatch;
    throw DomainError(os.str());
  }

  ReverseKernel r{forward.grid(), std::vector<double>(n * n, 0.0), std::vector<char>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    // P(x'_i) from the forward identity itself, so each column normalises exactly
    double evidence = 0.0;
    for (std::size_t j = 0; j < n; ++j) evidence += forward(i, j) * rho_t[j];
    if (!(evidence > 0.0)) {
      r.undefined[i] = 1;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) r.masses[j * n + i] = rho_t[j] * forward(i, j) / evidence;
  }
  return r;
}

DensityField apply_reverse(const ReverseKernel& reverse, const DensityField& rho_t_next) {
  require_same_grid(reverse.grid, rho_t_next.grid, "apply_reverse");
  const std::size_t n = reverse.grid.size();
  DensityField out(reverse.grid);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += reverse(j, i) * rho_t_next[i];
    out[j] = s;
  }
  return out;
}

double swap_asymmetry(const ReverseKernel& reverse, const TransitionMatrix& forward) {
  require_same_grid(reverse.grid, forward.grid(), "swap_asymmetry");
  const std::size_t n = forward.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (reverse.undefined[i]) continue;
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(reverse(j, i) - forward(j, i)));
  }
  return worst;
}

Histogram histogram(const Ensemble& e, const Grid& g) {
  e.validate();
  Histogram h{DensityField(g), 0};
  std::vector<std::uint64_t> counts(g.size(), 0);
  for (double x : e.positions) {
    const long c = g.cell_of(x);
    if (c < 0) {
      ++h.out_of_range;
    } else {
      ++counts[static_cast<std::size_t>(c)];
    }
  }
  if (h.out_of_range == e.size()) throw DomainError("histogram: no particle lies inside the grid range");
  const double norm = 1.0 / (static_cast<double>(e.size()) * g.dx());
  for (std::size_t i = 0; i < g.size(); ++i) h.density[i] = static_cast<double>(counts[i]) * norm;
  return h;
}

}  // namespace entdyn
