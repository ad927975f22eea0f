#include "entdyn/schrodinger.hpp"

#include "entdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace entdyn {

WaveFunction::WaveFunction(Grid g, std::vector<Complex> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) throw DomainError("WaveFunction: value count does not match grid");
}

double WaveFunction::norm() const noexcept {
  double s = 0.0;
  for (const Complex& c : values) s += std::norm(c);
  return s * grid.dx();
}

void WaveFunction::validate(double tol) const {
  const double nrm = norm();
  if (!(std::abs(nrm - 1.0) <= tol)) {
    std::ostringstream os;
    os << "WaveFunction: norm " << nrm << " is not 1";
    throw DomainError(os.str());
  }
}

WaveFunction to_wavefunction(const DensityField& rho, const PhaseField& phi) {
  require_same_grid(rho.grid, phi.grid, "to_wavefunction");
  WaveFunction psi(rho.grid, std::vector<Complex>(rho.size()));
  for (std::size_t i = 0; i < rho.size(); ++i) psi.values[i] = std::polar(std::sqrt(std::max(rho[i], 0.0)), phi[i]);
  return psi;
}

namespace {

// principal value in (-pi, pi]
double principal(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

}  // namespace

MadelungDecomposition from_wavefunction(const WaveFunction& psi, double relative_threshold) {
  const Grid& g = psi.grid;
  const std::size_t n = psi.size();
  MadelungDecomposition out{DensityField(g), PhaseField(g), std::vector<char>(n, 0), 0};
  double rmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.rho[i] = std::norm(psi.values[i]);
    rmax = std::max(rmax, out.rho[i]);
  }
  if (!(rmax > 0.0)) throw DomainError("from_wavefunction: wave function is identically zero");
  const double threshold = relative_threshold * rmax;

  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.rho[i] >= threshold) {
      valid.push_back(i);
    } else {
      out.flagged[i] = 1;
      ++out.flagged_count;
    }
  }
  // unwrap along the valid cells
  std::vector<double> unwrapped(valid.size());
  unwrapped[0] = std::arg(psi.values[valid[0]]);
  for (std::size_t k = 1; k < valid.size(); ++k) {
    const double step = principal(std::arg(psi.values[valid[k]]) - std::arg(psi.values[valid[k - 1]]));
    unwrapped[k] = unwrapped[k - 1] + step;
  }
  for (std::size_t k = 0; k < valid.size(); ++k) out.phi[valid[k]] = unwrapped[k];
  // bridge flagged cells
  for (std::size_t i = 0; i < valid.front(); ++i) out.phi[i] = unwrapped.front();
  for (std::size_t i = valid.back() + 1; i < n; ++i) out.phi[i] = unwrapped.back();
  for (std::size_t k = 1; k < valid.size(); ++k) {
    const std::size_t a = valid[k - 1], b = valid[k];
    for (std::size_t i = a + 1; i < b; ++i) {
      const double w = static_cast<double>(i - a) / static_cast<double>(b - a);
      out.phi[i] = (1.0 - w) * unwrapped[k - 1] + w * unwrapped[k];
    }
  }
  if (!out.flagged[0] && !out.flagged[n - 1]) {
    const double seam = principal(std::arg(psi.values[0]) - std::arg(psi.values[n - 1]));
    out.phi.winding = out.phi[n - 1] + seam - out.phi[0];
  } else {
    out.phi.winding = out.phi[n - 1] - out.phi[0];
  }
  return out;
}

CrankNicolson::CrankNicolson(const PotentialField& V, const PhysicalParams& p, double dt)
    : grid_(V.grid), dt_(dt) {
  p.validate();
  if (!(dt > 0.0)) throw DomainError("CrankNicolson: dt must be positive");
  const std::size_t n = grid_.size();
  const double dx = grid_.dx();
  const double kin = p.hbar * p.hbar / (2.0 * p.mass * dx * dx);
  const Complex half(0.0, 0.5 * dt / p.hbar);  // i dt / (2 hbar)

  // H = kin * (2 on diagonal, -1 off diagonal) + V
  diag_.resize(n);
  diag_rhs_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 2.0 * kin + V[i];
    diag_[i] = 1.0 + half * h;
    diag_rhs_[i] = 1.0 - half * h;
  }
  off_ = half * (-kin);
  off_rhs_ = -half * (-kin);

  // Cyclic system A x = r with corners A(0,n-1) = A(n-1,0) = off_. Sherman-Morrison:
  // A = T + u v^T with u = (gamma, 0.., off), v = (1, 0.., off/gamma).
  gamma_ = -diag_[0];
  std::vector<Complex> b = diag_;
  b[0] = diag_[0] - gamma_;
  b[n - 1] = diag_[n - 1] - off_ * off_ / gamma_;
  c_prime_.assign(n, 0.0);
  denom_.assign(n, 0.0);
  denom_[0] = b[0];
  for (std::size_t i = 1; i < n; ++i) {
    c_prime_[i - 1] = off_ / denom_[i - 1];
    denom_[i] = b[i] - off_ * c_prime_[i - 1];
  }
  // z = T^{-1} u
  std::vector<Complex> u(n, 0.0);
  u[0] = gamma_;
  u[n - 1] = off_;
  z_ = u;
  z_[0] /= denom_[0];
  for (std::size_t i = 1; i < n; ++i) z_[i] = (z_[i] - off_ * z_[i - 1]) / denom_[i];
  for (std::size_t i = n - 1; i-- > 0;) z_[i] -= c_prime_[i] * z_[i + 1];
  z_dot_factor_ = 1.0 + z_[0] + off_ / gamma_ * z_[n - 1];
}

void CrankNicolson::solve(std::vector<Complex>& r) const {
  const std::size_t n = r.size();
  r[0] /= denom_[0];
  for (std::size_t i = 1; i < n; ++i) r[i] = (r[i] - off_ * r[i - 1]) / denom_[i];
  for (std::size_t i = n - 1; i-- > 0;) r[i] -= c_prime_[i] * r[i + 1];
  const Complex factor = (r[0] + off_ / gamma_ * r[n - 1]) / z_dot_factor_;
  for (std::size_t i = 0; i < n; ++i) r[i] -= factor * z_[i];
}

void CrankNicolson::step(std::vector<Complex>& psi) const {
  const std::size_t n = psi.size();
  if (n != grid_.size()) throw DomainError("CrankNicolson::step: size mismatch");
  std::vector<Complex> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i] = diag_rhs_[i] * psi[i] + off_rhs_ * (psi[grid_.prev(i)] + psi[grid_.next(i)]);
  }
  solve(rhs);
  for (const Complex& c : rhs) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw NumericalError("CrankNicolson: linear solve produced non-finite values");
    }
  }
  psi.swap(rhs);
}

WaveFunction CrankNicolson::step(const WaveFunction& psi) const {
  require_same_grid(psi.grid, grid_, "CrankNicolson::step");
  WaveFunction out = psi;
  step(out.values);
  return out;
}

SchrodingerRun evolve_schrodinger(const WaveFunction& psi0, const PotentialField& V, const PhysicalParams& p,
                                  double t_final, std::size_t snapshot_every) {
  require_same_grid(psi0.grid, V.grid, "evolve_schrodinger");
  p.validate();
  if (!(t_final > 0.0)) throw DomainError("evolve_schrodinger: t_final must be positive");
  SchrodingerRun run;
  run.steps = static_cast<std::size_t>(std::ceil(t_final / p.dt - 1e-9));
  run.dt = t_final / static_cast<double>(run.steps);
  const CrankNicolson cn(V, p, run.dt);
  const double norm0 = psi0.norm();
  WaveFunction psi = psi0;
  run.times.push_back(0.0);
  run.snapshots.push_back(psi);
  for (std::size_t k = 1; k <= run.steps; ++k) {
    cn.step(psi.values);
    run.max_norm_drift = std::max(run.max_norm_drift, std::abs(psi.norm() - norm0));
    if (k == run.steps || (snapshot_every > 0 && k % snapshot_every == 0)) {
      run.times.push_back(k == run.steps ? t_final : static_cast<double>(k) * run.dt);
      run.snapshots.push_back(psi);
    }
  }
  return run;
}

WaveFunction se_step(const WaveFunction& psi, const PotentialField& V, const PhysicalParams& p, double dt) {
  require_same_grid(psi.grid, V.grid, "se_step");
  return CrankNicolson(V, p, dt).step(psi);
}

WaveFunction harmonic_eigenstate(const Grid& grid, unsigned n, double mass, double omega, double hbar, double center) {
  if (!(mass > 0.0) || !(omega > 0.0) || !(hbar > 0.0)) throw DomainError("harmonic_eigenstate: bad parameters");
  const double scale = std::sqrt(mass * omega / hbar);
  WaveFunction psi(grid, std::vector<Complex>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double xi = scale * (grid.center(i) - center);
    // normalised Hermite functions by the stable three-term recurrence
    double h_prev = 0.0;
    double h = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * xi * xi);
    for (unsigned k = 1; k <= n; ++k) {
      const double next = std::sqrt(2.0 / k) * xi * h - std::sqrt((k - 1.0) / k) * h_prev;
      h_prev = h;
      h = next;
    }
    psi.values[i] = std::sqrt(scale) * h;
  }
  const double nrm = std::sqrt(psi.norm());
  for (auto& c : psi.values) c /= nrm;
  return psi;
}

ClassicalTrajectory classical_trajectory(const ClassicalState& s0, const Potential& V, const PhysicalParams& p,
                                         double t_final, const Grid* domain) {
  p.validate();
  if (!(t_final >= 0.0)) throw DomainError("classical_trajectory: t_final must be >= 0");
  // Yoshida triple-jump coefficients
  const double cbrt2 = std::cbrt(2.0);
  const double w1 = 1.0 / (2.0 - cbrt2);
  const double w0 = -cbrt2 / (2.0 - cbrt2);
  const double weights[3] = {w1, w0, w1};

  const auto steps = static_cast<std::size_t>(std::ceil(t_final / p.dt - 1e-9));
  const double h = steps > 0 ? t_final / static_cast<double>(steps) : 0.0;
  const double m = p.mass;

  ClassicalTrajectory traj;
  ClassicalState s = s0;
  auto energy = [&](const ClassicalState& st) { return st.p * st.p / (2.0 * m) + V.value(st.x); };
  auto outside = [&](double x) { return domain && (x < domain->x_min() || x >= domain->x_max()); };
  traj.times.push_back(0.0);
  traj.states.push_back(s);
  traj.energies.push_back(energy(s));

  for (std::size_t k = 1; k <= steps; ++k) {
    for (double w : weights) {
      const double tau = w * h;
      // kick-drift-kick; S accumulates its discrete Lagrangian
      const double v0 = V.value(s.x);
      s.p -= 0.5 * tau * V.gradient(s.x);
      const double kinetic = s.p * s.p / (2.0 * m);
      s.x += tau * s.p / m;
      const double v1 = V.value(s.x);
      s.p -= 0.5 * tau * V.gradient(s.x);
      s.S += tau * (kinetic - 0.5 * (v0 + v1));
    }
    if (outside(s.x)) {
      traj.left_domain = true;
      break;
    }
    traj.times.push_back(static_cast<double>(k) * h);
    traj.states.push_back(s);
    traj.energies.push_back(energy(s));
  }
  return traj;
}

VelocityField wavefunction_velocity(const WaveFunction& psi, const PhysicalParams& p) {
  const Grid& g = psi.grid;
  VelocityField v(g);
  const double scale = p.diffusion() / (2.0 * g.dx());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const Complex d = psi.values[g.next(i)] - psi.values[g.prev(i)];
    const double r = std::norm(psi.values[i]);
    v[i] = r > 0.0 ? scale * std::imag(std::conj(psi.values[i]) * d) / r : 0.0;
  }
  return v;
}

}  // namespace entdyn
