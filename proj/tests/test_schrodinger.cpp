#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "entdyn/errors.hpp"
#include "entdyn/schrodinger.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace entdyn;

namespace {

constexpr double kPi = std::numbers::pi;

WaveFunction packet(const Grid& g, double mu, double sigma, double k) {
  const MadelungState s = gaussian_state(g, mu, sigma, k);
  return to_wavefunction(s.rho, s.phi);
}

double density_sup_distance(const WaveFunction& a, const WaveFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(std::norm(a.values[i]) - std::norm(b.values[i])));
  return m;
}

Complex overlap(const WaveFunction& a, const WaveFunction& b) {
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a.values[i]) * b.values[i] * a.grid.dx();
  return s;
}

}  // namespace

TEST_CASE("to_wavefunction") {
  const Grid g(-8.0, 8.0, 256);
  SUBCASE("zero phase gives a real non-negative amplitude") {
    const MadelungState s = gaussian_state(g, 0.5, 1.0, 0.0);
    const WaveFunction psi = to_wavefunction(s.rho, s.phi);
    for (const Complex& z : psi.values) {
      CHECK(z.imag() == 0.0);
      CHECK(z.real() >= 0.0);
    }
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("Gaussian with Phi = kx carries momentum hbar k") {
    const double hbar = 0.7, k = 2.0;
    const Grid fine(-10.0, 10.0, 4000);
    const WaveFunction psi = packet(fine, 0.0, 1.0, k);
    Complex p = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      const Complex grad = (psi.values[fine.next(i)] - psi.values[fine.prev(i)]) / (2.0 * fine.dx());
      p += std::conj(psi.values[i]) * Complex(0.0, -hbar) * grad * fine.dx();
    }
    CHECK(p.real() == doctest::Approx(hbar * k).epsilon(1e-4));
    CHECK(std::abs(p.imag()) <= 1e-12);
  }
}

TEST_CASE("from_wavefunction") {
  const Grid g(-5.0, 5.0, 200);
  SUBCASE("round trip recovers rho and Phi up to a whole number of turns") {
    MadelungState s = gaussian_state(g, 0.3, 1.4, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) s.phi[i] = 4.0 + 2.5 * std::sin(g.center(i)) + 0.8 * g.center(i);
    const MadelungDecomposition d = from_wavefunction(to_wavefunction(s.rho, s.phi));
    const double turns = (s.phi[0] - d.phi[0]) / (2.0 * kPi);
    CHECK(turns == doctest::Approx(std::round(turns)).epsilon(1e-12));
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(d.rho[i] == doctest::Approx(s.rho[i]).epsilon(1e-14));
      if (!d.flagged[i]) CHECK(d.phi[i] + 2.0 * kPi * std::round(turns) == doctest::Approx(s.phi[i]).epsilon(1e-12));
    }
    CHECK(d.phi[0] > -kPi);
    CHECK(d.phi[0] <= kPi);
  }
  SUBCASE("plane wave unwraps to a straight line") {
    const double k = 2.0 * kPi * 9.0 / g.length();
    std::vector<Complex> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::polar(1.0 / std::sqrt(g.length()), k * g.center(i));
    const MadelungDecomposition d = from_wavefunction(WaveFunction(g, v));
    CHECK(d.flagged_count == 0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(d.phi[i] - d.phi[0] == doctest::Approx(k * (g.center(i) - g.center(0))).epsilon(1e-12));
  }
  SUBCASE("real positive amplitude has zero phase") {
    const MadelungDecomposition d = from_wavefunction(packet(g, 0.0, 1.0, 0.0));
    for (double v : d.phi.values) CHECK(v == 0.0);
  }
  SUBCASE("first excited state: the node is flagged, the phase stays finite") {
    const Grid odd(-6.0, 6.0, 241);  // a cell centre sits on x = 0
    const WaveFunction psi = harmonic_eigenstate(odd, 1, 1.0, 1.0, 1.0);
    const MadelungDecomposition d = from_wavefunction(psi);
    CHECK(d.flagged[120]);
    CHECK(d.flagged_count >= 1);
    for (double v : d.phi.values) CHECK(std::isfinite(v));
    // the sign flip shows up as a jump of pi across the node
    CHECK(std::abs(std::abs(d.phi[125] - d.phi[115]) - kPi) <= 1e-9);
  }
  SUBCASE("an all-zero wave function is rejected") {
    CHECK_THROWS_AS(from_wavefunction(WaveFunction(g, std::vector<Complex>(g.size()))), DomainError);
  }
}

TEST_CASE("harmonic eigenstates are orthonormal on a fine grid") {
  const Grid g(-10.0, 10.0, 1000);
  std::vector<WaveFunction> states;
  for (unsigned n = 0; n < 4; ++n) states.push_back(harmonic_eigenstate(g, n, 1.0, 1.0, 1.0));
  for (unsigned a = 0; a < 4; ++a) {
    for (unsigned b = 0; b < 4; ++b) {
      CHECK(std::abs(overlap(states[a], states[b]) - (a == b ? 1.0 : 0.0)) <= 1e-10);
    }
  }
}

TEST_CASE("Crank-Nicolson is unitary") {
  const Grid g(-10.0, 10.0, 256);
  const PhysicalParams p{1.0, 1.0, 0.01};
  const PotentialField V = Potential::harmonic(p.mass, 0.7).sample(g);
  WaveFunction psi = packet(g, -2.0, 0.8, 3.0);
  const CrankNicolson cn(V, p, p.dt);
  double worst = 0.0;
  const double n0 = psi.norm();
  for (int k = 0; k < 10000; ++k) {
    const double before = psi.norm();
    cn.step(psi.values);
    worst = std::max(worst, std::abs(psi.norm() - before));
  }
  CHECK(worst < 1e-12);
  CHECK(std::abs(psi.norm() - n0) < 1e-9);
}

TEST_CASE("se_step: discrete ground state is stationary and its phase turns at the eigenvalue") {
  const PhysicalParams p{1.0, 1.0, 1e-3};
  const double omega = 1.0;
  const Grid g(-10.0, 10.0, 1024);
  const PotentialField V = Potential::harmonic(p.mass, omega).sample(g);
  const std::vector<double> ground = testing::discrete_ground_state(g, V.values, p, 0.4);
  const double energy = testing::discrete_energy(g, V.values, p, ground);
  CHECK(energy == doctest::Approx(0.5 * omega).epsilon(1e-4));
  WaveFunction psi0(g, std::vector<Complex>(ground.begin(), ground.end()));
  const SchrodingerRun run = evolve_schrodinger(psi0, V, p, 1.0, 100);
  for (const WaveFunction& s : run.snapshots) CHECK(density_sup_distance(s, psi0) < 1e-8);
  // Cayley phase per step: -2 atan(E dt / 2 hbar)
  const double phase = std::arg(overlap(psi0, run.snapshots.back()));
  const double expected = -2.0 * std::atan(energy * run.dt / (2.0 * p.hbar)) * static_cast<double>(run.steps);
  CHECK(phase == doctest::Approx(expected).epsilon(1e-9));
  CHECK(phase == doctest::Approx(-0.5 * omega * 1.0).epsilon(1e-4));
}

TEST_CASE("se_step: free Gaussian follows the spreading law") {
  const PhysicalParams p{1.0, 1.0, 1e-3};
  const Grid g(-15.0, 15.0, 1024);
  const double sigma0 = 1.0;
  const SchrodingerRun run = evolve_schrodinger(packet(g, 0.0, sigma0, 0.0), PotentialField(g), p, 1.0);
  const MadelungDecomposition d = from_wavefunction(run.snapshots.back());
  const double spread = p.hbar * 1.0 / (2.0 * p.mass * sigma0);
  CHECK(density_variance(d.rho) == doctest::Approx(sigma0 * sigma0 + spread * spread).epsilon(1e-3));
}

TEST_CASE("se_step: a constant wave function with V = 0 is unchanged") {
  const Grid g(0.0, 1.0, 64);
  const WaveFunction psi(g, std::vector<Complex>(g.size(), Complex(1.0, 0.0)));
  const WaveFunction out = se_step(psi, PotentialField(g), {1.0, 1.0, 0.1}, 0.1);
  for (const Complex& z : out.values) CHECK(std::abs(z - 1.0) <= 1e-13);
}

TEST_CASE("Schrodinger evolution is time reversible") {
  const Grid g(-8.0, 8.0, 256);
  const PhysicalParams p{1.0, 1.0, 5e-3};
  const PotentialField V = Potential::harmonic(p.mass, 1.3).sample(g);
  const WaveFunction psi0 = packet(g, 1.0, 0.7, -2.0);
  const CrankNicolson cn(V, p, p.dt);
  std::vector<Complex> psi = psi0.values;
  for (int k = 0; k < 400; ++k) cn.step(psi);
  for (Complex& z : psi) z = std::conj(z);
  for (int k = 0; k < 400; ++k) cn.step(psi);
  for (Complex& z : psi) z = std::conj(z);
  double err = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) err = std::max(err, std::abs(psi[i] - psi0.values[i]));
  CHECK(err < 1e-10);
}

TEST_CASE("wavefunction_velocity of a plane wave") {
  const Grid g(0.0, 10.0, 500);
  const PhysicalParams p{2.0, 1.0, 1e-3};
  const double k = 2.0 * kPi * 3.0 / g.length();
  std::vector<Complex> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::polar(1.0 / std::sqrt(g.length()), k * g.center(i));
  const VelocityField u = wavefunction_velocity(WaveFunction(g, v), p);
  for (double x : u.values) CHECK(x == doctest::Approx(p.hbar * k / p.mass).epsilon(k * k * g.dx() * g.dx()));
}

TEST_CASE("classical trajectory") {
  SUBCASE("free motion is a straight line and S grows as p^2 t / 2m") {
    const PhysicalParams p{2.0, 1.0, 0.01};
    const ClassicalTrajectory tr = classical_trajectory({1.0, 3.0, 0.0}, Potential::none(), p, 2.0);
    const ClassicalState& last = tr.states.back();
    CHECK(last.x == doctest::Approx(1.0 + 3.0 / 2.0 * 2.0).epsilon(1e-12));
    CHECK(last.p == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(last.S == doctest::Approx(9.0 / 4.0 * 2.0).epsilon(1e-12));
    CHECK(tr.times.back() == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("harmonic oscillator matches the analytic solution") {
    const double m = 1.5, w = 2.0, x0 = 0.7, p0 = -0.4;
    const PhysicalParams p{m, 1.0, 1e-3};
    const ClassicalTrajectory tr = classical_trajectory({x0, p0, 0.0}, Potential::harmonic(m, w), p, 10.0);
    for (std::size_t k = 0; k < tr.states.size(); k += 500) {
      const double t = tr.times[k];
      CHECK(tr.states[k].x == doctest::Approx(x0 * std::cos(w * t) + p0 / (m * w) * std::sin(w * t)).epsilon(1e-9));
    }
    const auto [lo, hi] = std::minmax_element(tr.energies.begin(), tr.energies.end());
    CHECK((*hi - *lo) / tr.energies.front() < 1e-10);
  }
  SUBCASE("fourth-order convergence") {
    const double m = 1.0, w = 1.0;
    auto error = [&](double dt) {
      const ClassicalTrajectory tr = classical_trajectory({1.0, 0.0, 0.0}, Potential::harmonic(m, w), {m, 1.0, dt}, 5.0);
      return std::abs(tr.states.back().x - std::cos(5.0));
    };
    const double ratio = error(0.1) / error(0.05);
    CHECK(ratio > 13.0);
    CHECK(ratio < 19.0);
  }
  SUBCASE("leaving the grid truncates the trajectory") {
    const Grid g(-1.0, 1.0, 16);
    const ClassicalTrajectory tr = classical_trajectory({0.0, 1.0, 0.0}, Potential::none(), {1.0, 1.0, 0.01}, 5.0, &g);
    CHECK(tr.left_domain);
    CHECK(tr.times.back() < 1.1);
  }
}
