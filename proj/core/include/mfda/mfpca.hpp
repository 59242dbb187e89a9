#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfda/curves.hpp"
#include "mfda/fpca.hpp"

namespace mfda {

/// Grand mean and per-measure deviations. With `estimate_measure_effects`
/// false every deviation is zero (one-way model).
MeanModel measure_means(const CurveSet& x, bool estimate_measure_effects = true);

/// Total covariance of a balanced two-level set: 1/(nJ) sum of outer products
/// of the rows centred by grand mean and measure deviation.
Eigen::MatrixXd sigma_T_hat(const CurveSet& x, const MeanModel& means);

/// Between-subject covariance: average cross-product of the centred rows of
/// distinct measures within a subject, 1/(nJ(J-1)) normalisation.
Eigen::MatrixXd sigma_B_hat(const CurveSet& x, const MeanModel& means);

/// sigma_T - sigma_B. May be indefinite; eigendecompose() trims it.
Eigen::MatrixXd sigma_W_hat(const Eigen::MatrixXd& sigma_t, const Eigen::MatrixXd& sigma_b);

/// data' * design * data for an (N x m) row-stacked data matrix and an
/// (N x N) design matrix.
Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& data, const Eigen::MatrixXd& design);

/// Design matrix of the total covariance, (1/N)(I - 11'/N); with it the
/// sandwich form is the grand-mean centred covariance.
Eigen::MatrixXd total_design_matrix(std::size_t rows);

/// Covariance surfaces of a nested fit. Two-level fits fill sigma_t,
/// sigma_b, sigma_w; three-level fits fill the cross-product surfaces
/// h1 (distinct measures), h2 (distinct replicates), h3 (same row) and the
/// level surfaces k1 = h1, k2 = h2 - h1, k3 = h3 - h2 (diagonal replaced by
/// its off-diagonal limit).
struct LevelCovariances {
  int levels = 2;
  Eigen::MatrixXd sigma_t, sigma_b, sigma_w;
  Eigen::MatrixXd h1, h2, h3;
  Eigen::MatrixXd k1, k2, k3;
  double noise_variance = 0.0;
};

/// sigma_T, sigma_B, sigma_W and the diagonal-gap noise estimate.
/// `noise_bandwidth` <= 0 selects diagonal_bandwidth(grid).
LevelCovariances two_level_covariances(const CurveSet& x, const MeanModel& means, double noise_bandwidth = 0.0);

/// Moment estimators for the three-level nested model. Requires a balanced
/// design with at least two measures per subject and two replicates per
/// (subject, measure).
LevelCovariances three_level_covariances(const CurveSet& x, const MeanModel& means,
                                         double noise_bandwidth = 0.0);

/// Score matrices of a BLUP solve. Level 1 units are subjects, level 2 units
/// are (subject, measure) cells, level 3 units are single curves; rows are
/// in ascending NestedIndex order.
struct BlupScores {
  std::vector<Eigen::MatrixXd> scores;
  std::vector<std::vector<NestedIndex>> units;
};

/// Best linear unbiased predictors of the level scores, solved one subject
/// at a time. With Lambda the diagonal of level eigenvalues and the
/// curve-level noise taken as sigma^2 * (mean weight) / w_t at grid point t,
/// the estimate is (B'WB + sigma^2 wbar Lambda^{-1})^{-1} B'W y, which is the
/// usual Lambda B'(B Lambda B' + sigma^2 I)^{-1} y in quadrature-weighted
/// coordinates. sigma^2 = 0 gives the weighted least-squares limit; a
/// singular system then raises singular_system naming the subject.
BlupScores blup_scores(const CurveSet& x, const MeanModel& means, std::span<const EigenSystem> levels,
                       double noise_variance);

struct NestedConfig {
  int levels = 2;
  double pve = 0.9;
  SmoothingOptions smoothing;
  /// False forces the measure deviations to zero (one-way model).
  bool measure_means = true;
  /// <= 0 selects diagonal_bandwidth(grid).
  double noise_bandwidth = 0.0;
};

struct LevelFit {
  EigenSystem eig;
  Eigen::MatrixXd scores;
  std::vector<NestedIndex> units;
};

struct MultilevelFit {
  GridPtr grid;
  Eigen::VectorXd global_mean;
  std::vector<Eigen::VectorXd> measure_means;
  /// levels[0] is the subject level.
  std::vector<LevelFit> levels;
  double noise_variance = 0.0;
  NestedConfig config;
  std::vector<std::string> subject_ids;
  std::vector<std::string> measure_ids;

  MeanModel mean_model() const { return {global_mean, measure_means}; }
};

/// Absolute floor (relative to the trace of the total covariance) under
/// which a level's eigenvalues are treated as round-off.
inline constexpr double kRoundoffFloor = 1e-10;

/// Means, covariances, per-level eigensystems and component selection,
/// noise, then BLUP scores.
MultilevelFit fit_nested(const CurveSet& x, const NestedConfig& config = {});

}  // namespace mfda
