#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mfda {

/// Trapezoid-rule quadrature weights for a strictly increasing set of points.
/// Throws Error(invalid_grid) when the points are not strictly increasing or
/// fewer than two are given.
std::vector<double> trapezoid_weights(std::span<const double> points);

/// Evaluation grid on [0,1] together with its quadrature weights. Immutable;
/// curve containers share it through GridPtr.
class Grid {
 public:
  /// Trapezoid weights are derived from the points.
  explicit Grid(std::vector<double> points);
  Grid(std::vector<double> points, std::vector<double> weights);

  static std::shared_ptr<const Grid> uniform(std::size_t m);
  static std::shared_ptr<const Grid> from_points(std::vector<double> points);

  std::size_t size() const noexcept { return points_.size(); }
  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double point(std::size_t j) const { return points_[j]; }
  double weight(std::size_t j) const { return weights_[j]; }
  double length() const noexcept { return points_.back() - points_.front(); }

  Eigen::Map<const Eigen::VectorXd> points_vector() const {
    return {points_.data(), static_cast<Eigen::Index>(points_.size())};
  }
  Eigen::Map<const Eigen::VectorXd> weights_vector() const {
    return {weights_.data(), static_cast<Eigen::Index>(weights_.size())};
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.points_ == b.points_ && a.weights_ == b.weights_;
  }

 private:
  void validate() const;

  std::vector<double> points_;
  std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// True when both pointers refer to the same grid or to grids with identical
/// points and weights.
bool same_grid(const GridPtr& a, const GridPtr& b) noexcept;

/// Throws Error(grid_mismatch) unless same_grid(a, b).
void require_same_grid(const GridPtr& a, const GridPtr& b);

}  // namespace mfda
