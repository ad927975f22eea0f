#pragma once

#include <cstddef>
#include <vector>

namespace entdyn {

/// Uniform 1-D cell-centred grid on [x_min, x_max). Fields are periodic unless
/// an operation says otherwise, so cell n-1 neighbours cell 0.
class Grid {
 public:
  Grid() = default;
  Grid(double x_min, double x_max, std::size_t n_cells);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  double length() const noexcept { return x_max_ - x_min_; }

  double center(std::size_t i) const noexcept {
    return x_min_ + (static_cast<double>(i) + 0.5) * dx_;
  }
  std::vector<double> centers() const;

  /// Index of the cell containing x, or -1 outside [x_min, x_max).
  long cell_of(double x) const noexcept;

  /// Maps x into [x_min, x_max) by periodic translation.
  double wrap(double x) const noexcept;

  std::size_t next(std::size_t i) const noexcept { return i + 1 == n_ ? 0 : i + 1; }
  std::size_t prev(std::size_t i) const noexcept { return i == 0 ? n_ - 1 : i - 1; }

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_ == b.n_;
  }

  static constexpr std::size_t kMinCells = 8;

 private:
  double x_min_ = 0.0;
  double x_max_ = 1.0;
  std::size_t n_ = kMinCells;
  double dx_ = 1.0 / kMinCells;
};

/// Throws DomainError unless the two grids are identical.
void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Sampled scalar on a grid. Base for density, phase, potential and velocity.
struct GridField {
  Grid grid;
  std::vector<double> values;

  GridField() = default;
  GridField(Grid g, std::vector<double> v);
  explicit GridField(Grid g, double fill = 0.0);

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const noexcept { return values[i]; }
  double& operator[](std::size_t i) noexcept { return values[i]; }

  /// Sum of values times dx.
  double integral() const noexcept;
};

/// rho(x,t); invariants: rho >= 0 and unit mass, checked by validate().
struct DensityField : GridField {
  using GridField::GridField;
  void validate(double mass_tol = 1e-9) const;
};

/// Phi(x,t), real valued and not reduced modulo 2 pi. On the periodic grid
/// Phi is quasi-periodic, Phi(x + L) = Phi(x) + winding.
struct PhaseField : GridField {
  double winding = 0.0;

  PhaseField() = default;
  PhaseField(Grid g, std::vector<double> v, double w = 0.0)
      : GridField(std::move(g), std::move(v)), winding(w) {}
  explicit PhaseField(Grid g, double fill = 0.0) : GridField(std::move(g), fill) {}

  /// Phi[i+1] - Phi[i] with the seam difference corrected by the winding.
  double forward_difference(std::size_t i) const noexcept;
};

struct PotentialField : GridField {
  using GridField::GridField;
};

struct VelocityField : GridField {
  using GridField::GridField;
};

enum class Metric { L1, L2, Sup };

/// L1 = sum|a-b|dx, L2 = (sum (a-b)^2 dx)^(1/2), Sup = max|a-b|.
double field_distance(const GridField& a, const GridField& b, Metric metric);

}  // namespace entdyn
