#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfda/curves.hpp"
#include "mfda/grid.hpp"

namespace mfda {

/// Eigenpairs of one covariance operator. Eigenfunctions are stored as the
/// columns of an m x K matrix and are orthonormal under the grid quadrature;
/// the largest-magnitude entry of every eigenfunction is positive.
struct EigenSystem {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenfunctions;
  /// Cumulative share of `total_variance` explained by the first a+1 pairs.
  Eigen::VectorXd pve;
  /// Sum of every nonnegative eigenvalue before truncation.
  double total_variance = 0.0;
  /// Eigenpairs dropped because their eigenvalue was negative.
  std::size_t trimmed = 0;

  std::size_t components() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
  double eigenvalue_sum() const { return eigenvalues.sum(); }
};

/// Keeps the leading `k` pairs.
EigenSystem truncate(const EigenSystem& eig, std::size_t k);

Curve mean_curve(const CurveSet& x);

/// (1/n) sum of outer products of the mean-centred rows. Requires n >= 2.
Eigen::MatrixXd empirical_covariance(const CurveSet& x, const Curve& mean);

/// Two-dimensional Nadaraya-Watson smooth of a covariance surface with a
/// Gaussian product kernel. Diagonal entries are left out of the fit, so the
/// returned diagonal is the limit of the off-diagonal surface.
Eigen::MatrixXd smooth_covariance(const Eigen::MatrixXd& surface, const Grid& grid, double bandwidth);

/// Mean spacing of the grid; the default bandwidth for diagonal-limit
/// smoothing used by noise estimation.
double diagonal_bandwidth(const Grid& grid);

/// max(0, mean_t [raw(t,t) - smoothed(t,t)]).
double estimate_noise(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& smoothed, const Grid& grid);

/// Replaces the diagonal of `raw` by the diagonal of `smoothed`.
Eigen::MatrixXd with_diagonal_of(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& smoothed);

/// Eigendecomposition of the integral operator with kernel `surface`.
/// Solves the symmetric problem W^{1/2} S W^{1/2} and maps vectors back with
/// W^{-1/2}, so eigenvalues are operator eigenvalues and eigenfunctions are
/// L2-orthonormal. Pairs with negative eigenvalues are trimmed.
EigenSystem eigendecompose(const Eigen::MatrixXd& surface, const Grid& grid);

/// Sum over components of lambda_a e_a(s) e_a(t).
Eigen::MatrixXd reassemble(const EigenSystem& eig);

/// Relative cutoff below which eigenvalues count as zero in component selection.
inline constexpr double kEigenvalueCutoff = 1e-12;

/// Smallest K whose cumulative share reaches `pve_threshold`. Eigenvalues
/// below kEigenvalueCutoff * lambda_1 are ignored. Throws
/// degenerate_spectrum when no eigenvalue is positive.
std::size_t select_k(const EigenSystem& eig, double pve_threshold);

/// score(i, a) = <X_i - mean, e_a>.
Eigen::MatrixXd project_scores(const CurveSet& x, const Curve& mean, const EigenSystem& eig);

struct SmoothingOptions {
  bool enabled = false;
  double bandwidth = 0.05;
};

struct FpcaConfig {
  double pve = 0.9;
  SmoothingOptions smoothing;
  /// Diagonal-gap noise estimation; off means noise_variance = 0.
  bool estimate_noise = false;
  /// <= 0 selects diagonal_bandwidth(grid).
  double noise_bandwidth = 0.0;
};

/// Single-level fit (independent curves).
struct FpcaFit {
  Curve mean;
  EigenSystem eig;
  Eigen::MatrixXd scores;
  double noise_variance = 0.0;
  FpcaConfig config;
  std::vector<NestedIndex> units;
  std::vector<std::string> subject_ids;
  std::vector<std::string> measure_ids;
};

FpcaFit fit_fpca(const CurveSet& x, const FpcaConfig& config = {});

/// mean + sum_{a<k} score(i,a) e_a for each row of the fit.
CurveSet reconstruct(const FpcaFit& fit, std::size_t k);

}  // namespace mfda
