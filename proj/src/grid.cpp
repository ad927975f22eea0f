#include "entdyn/grid.hpp"

#include "entdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace entdyn {

Grid::Grid(double x_min, double x_max, std::size_t n_cells)
    : x_min_(x_min), x_max_(x_max), n_(n_cells) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
    throw DomainError("Grid: need finite x_min < x_max");
  }
  if (n_cells < kMinCells) {
    throw DomainError("Grid: need at least 8 cells, got " + std::to_string(n_cells));
  }
  dx_ = (x_max - x_min) / static_cast<double>(n_cells);
}

std::vector<double> Grid::centers() const {
  std::vector<double> xs(n_);
  for (std::size_t i = 0; i < n_; ++i) xs[i] = center(i);
  return xs;
}

long Grid::cell_of(double x) const noexcept {
  if (!(x >= x_min_) || !(x < x_max_)) return -1;
  auto i = static_cast<long>(std::floor((x - x_min_) / dx_));
  return std::min<long>(i, static_cast<long>(n_) - 1);
}

double Grid::wrap(double x) const noexcept {
  const double len = length();
  double y = std::fmod(x - x_min_, len);
  if (y < 0.0) y += len;
  if (y >= len) y = 0.0;
  return x_min_ + y;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw DomainError(std::string(what) + ": grid mismatch");
}

GridField::GridField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw DomainError("GridField: value count does not match grid");
  }
}

GridField::GridField(Grid g, double fill) : grid(std::move(g)), values(grid.size(), fill) {}

double GridField::integral() const noexcept {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.dx();
}

void DensityField::validate(double mass_tol) const {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError("DensityField: negative or non-finite value");
  }
  const double mass = integral();
  if (std::abs(mass - 1.0) > mass_tol) {
    throw DomainError("DensityField: mass " + std::to_string(mass) + " is not 1");
  }
}

double PhaseField::forward_difference(std::size_t i) const noexcept {
  const std::size_t j = grid.next(i);
  return j == 0 ? values[0] + winding - values[i] : values[j] - values[i];
}

double field_distance(const GridField& a, const GridField& b, Metric metric) {
  require_same_grid(a.grid, b.grid, "field_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    switch (metric) {
      case Metric::L1: acc += d; break;
      case Metric::L2: acc += d * d; break;
      case Metric::Sup: acc = std::max(acc, d); break;
    }
  }
  switch (metric) {
    case Metric::L1: return acc * a.grid.dx();
    case Metric::L2: return std::sqrt(acc * a.grid.dx());
    case Metric::Sup: return acc;
  }
  return acc;
}

}  // namespace entdyn
