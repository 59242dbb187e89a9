#include "mfda/grid.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mfda/error.hpp"

namespace mfda {

std::vector<double> trapezoid_weights(std::span<const double> points) {
  const std::size_t m = points.size();
  if (m < 2) {
    throw Error(Errc::invalid_grid, "a grid needs at least two points, got " + std::to_string(m));
  }
  for (std::size_t j = 1; j < m; ++j) {
    if (!(points[j] > points[j - 1])) {
      throw Error(Errc::invalid_grid,
                  "grid points must be strictly increasing (index " + std::to_string(j) + ")");
    }
  }
  std::vector<double> w(m);
  w.front() = (points[1] - points[0]) / 2.0;
  w.back() = (points[m - 1] - points[m - 2]) / 2.0;
  for (std::size_t j = 1; j + 1 < m; ++j) {
    w[j] = (points[j + 1] - points[j - 1]) / 2.0;
  }
  return w;
}

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  weights_ = trapezoid_weights(points_);
  validate();
}

Grid::Grid(std::vector<double> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.size() != weights_.size()) {
    throw Error(Errc::invalid_grid, "grid points and weights differ in length");
  }
  // Reuse the ordering checks.
  (void)trapezoid_weights(points_);
  validate();
}

void Grid::validate() const {
  for (double p : points_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(Errc::invalid_grid, "grid points must lie in [0,1]");
    }
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(Errc::invalid_grid, "quadrature weights must be finite and nonnegative");
    }
    total += w;
  }
  const double span_len = length();
  if (std::abs(total - span_len) > 1e-12 * std::max(1.0, span_len)) {
    throw Error(Errc::invalid_grid, "quadrature weights must sum to the grid length");
  }
}

std::shared_ptr<const Grid> Grid::uniform(std::size_t m) {
  if (m < 2) {
    throw Error(Errc::invalid_grid, "a grid needs at least two points, got " + std::to_string(m));
  }
  std::vector<double> pts(m);
  for (std::size_t j = 0; j < m; ++j) {
    pts[j] = static_cast<double>(j) / static_cast<double>(m - 1);
  }
  return std::make_shared<const Grid>(std::move(pts));
}

std::shared_ptr<const Grid> Grid::from_points(std::vector<double> points) {
  return std::make_shared<const Grid>(std::move(points));
}

bool same_grid(const GridPtr& a, const GridPtr& b) noexcept {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

void require_same_grid(const GridPtr& a, const GridPtr& b) {
  if (!same_grid(a, b)) {
    throw Error(Errc::grid_mismatch, "curves are defined on different grids");
  }
}

}  // namespace mfda
