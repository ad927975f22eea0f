#pragma once

#include "entdyn/grid.hpp"

#include <vector>

namespace entdyn {

/// External potential V(x). Harmonic potentials are evaluated analytically;
/// tabulated ones by linear interpolation of values and of central-difference
/// gradients.
class Potential {
 public:
  enum class Kind { None, Harmonic, Table };

  static Potential none();
  static Potential harmonic(double mass, double omega, double center = 0.0);
  static Potential table(Grid grid, std::vector<double> values);

  Kind kind() const noexcept { return kind_; }
  double omega() const noexcept { return omega_; }

  double value(double x) const;
  double gradient(double x) const;

  PotentialField sample(const Grid& grid) const;

 private:
  Kind kind_ = Kind::None;
  double mass_ = 1.0;
  double omega_ = 0.0;
  double center_ = 0.0;
  Grid table_grid_;
  std::vector<double> table_values_;
  std::vector<double> table_gradient_;
};

}  // namespace entdyn
