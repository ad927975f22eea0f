#pragma once

namespace entdyn {

/// Mass, action unit and entropic time step. The maximum-entropy multiplier
/// follows as alpha = m / (hbar dt).
struct PhysicalParams {
  double mass = 1.0;
  double hbar = 1.0;
  double dt = 1e-3;

  void validate() const;
  double alpha() const noexcept { return mass / (hbar * dt); }
  /// hbar / m, the diffusion scale of the Wiener fluctuations.
  double diffusion() const noexcept { return hbar / mass; }

  bool operator==(const PhysicalParams&) const = default;
};

}  // namespace entdyn
