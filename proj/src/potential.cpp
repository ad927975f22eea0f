#include "entdyn/potential.hpp"

#include "entdyn/errors.hpp"
#include "entdyn/physics.hpp"

#include <cmath>

namespace entdyn {

void PhysicalParams::validate() const {
  if (!(mass > 0.0) || !(hbar > 0.0) || !(dt > 0.0) || !std::isfinite(alpha())) {
    throw DomainError("PhysicalParams: mass, hbar and dt must be positive with finite alpha");
  }
}

Potential Potential::none() { return Potential{}; }

Potential Potential::harmonic(double mass, double omega, double center) {
  if (!(mass > 0.0) || !(omega > 0.0)) throw DomainError("harmonic potential needs m > 0, omega > 0");
  Potential p;
  p.kind_ = Kind::Harmonic;
  p.mass_ = mass;
  p.omega_ = omega;
  p.center_ = center;
  return p;
}

Potential Potential::table(Grid grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw DomainError("potential table size does not match grid");
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("potential table has non-finite values");
  }
  Potential p;
  p.kind_ = Kind::Table;
  p.table_grid_ = grid;
  p.table_values_ = std::move(values);
  const std::size_t n = grid.size();
  p.table_gradient_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // one-sided at the table ends, central inside
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    p.table_gradient_[i] =
        (p.table_values_[hi] - p.table_values_[lo]) / (static_cast<double>(hi - lo) * grid.dx());
  }
  return p;
}

namespace {

double interpolate_clamped(const Grid& g, const std::vector<double>& v, double x) {
  const double s = (x - g.x_min()) / g.dx() - 0.5;
  if (s <= 0.0) return v.front();
  const auto last = static_cast<double>(g.size() - 1);
  if (s >= last) return v.back();
  const auto i = static_cast<std::size_t>(s);
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * v[i] + w * v[i + 1];
}

}  // namespace

double Potential::value(double x) const {
  switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::Harmonic: {
      const double d = x - center_;
      return 0.5 * mass_ * omega_ * omega_ * d * d;
    }
    case Kind::Table: return interpolate_clamped(table_grid_, table_values_, x);
  }
  return 0.0;
}

double Potential::gradient(double x) const {
  switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::Harmonic: return mass_ * omega_ * omega_ * (x - center_);
    case Kind::Table: return interpolate_clamped(table_grid_, table_gradient_, x);
  }
  return 0.0;
}

PotentialField Potential::sample(const Grid& grid) const {
  PotentialField f(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = value(grid.center(i));
  return f;
}

}  // namespace entdyn
