#include "mfda/mfpca.hpp"

#include <algorithm>
#include <string>

#include "mfda/error.hpp"

namespace mfda {

namespace {

// Per-design sums of centred rows.
struct CentredSums {
  Eigen::MatrixXd rows;          // N x m
  Eigen::MatrixXd subject_sums;  // n x m
  Eigen::MatrixXd cell_sums;     // (n*J) x m, cell (i, j) at i*J + j
};

CentredSums centred_sums(const CurveSet& x, const MeanModel& means, const DesignLayout& layout) {
  CentredSums out;
  out.rows = center_rows(x, means).values();
  const auto m = static_cast<Eigen::Index>(x.grid_size());
  const auto n = static_cast<Eigen::Index>(layout.n_subjects);
  const auto J = static_cast<Eigen::Index>(layout.n_measures);
  out.subject_sums = Eigen::MatrixXd::Zero(n, m);
  out.cell_sums = Eigen::MatrixXd::Zero(n * J, m);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto& idx = x.index()[r];
    const auto i = static_cast<Eigen::Index>(idx.subject);
    const auto j = static_cast<Eigen::Index>(idx.measure);
    out.subject_sums.row(i) += out.rows.row(static_cast<Eigen::Index>(r));
    out.cell_sums.row(i * J + j) += out.rows.row(static_cast<Eigen::Index>(r));
  }
  return out;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd g = rows.transpose() * rows;
  return (g + g.transpose()) / 2.0;
}

DesignLayout require_two_level(const CurveSet& x) {
  const DesignLayout layout = x.layout();
  if (!layout.balanced || layout.replicates_per_cell != 1) {
    throw Error(Errc::unbalanced_design,
                "two-level estimators need exactly one curve per (subject, measure):\n" + layout.describe());
  }
  return layout;
}

double operator_trace(const Eigen::MatrixXd& surface, const Grid& grid) {
  return (surface.diagonal().array() * grid.weights_vector().array()).sum();
}

std::size_t choose_components(const EigenSystem& eig, double pve, double floor) {
  if (eig.components() == 0 || !(eig.eigenvalues(0) > floor)) return 0;
  EigenSystem usable = eig;
  Eigen::Index keep = 0;
  while (keep < eig.eigenvalues.size() && eig.eigenvalues(keep) > floor) ++keep;
  usable.eigenvalues = eig.eigenvalues.head(keep);
  return std::min<std::size_t>(select_k(usable, pve), static_cast<std::size_t>(keep));
}

}  // namespace

MeanModel measure_means(const CurveSet& x, bool estimate_measure_effects) {
  if (x.empty()) throw Error(Errc::empty_input, "measure means of an empty curve set");
  const auto m = static_cast<Eigen::Index>(x.grid_size());
  const std::size_t J = x.measure_ids().size();
  MeanModel out;
  out.global = x.values().colwise().mean().transpose();
  out.measure_deviation.assign(J, Eigen::VectorXd::Zero(m));
  if (!estimate_measure_effects) return out;

  std::vector<std::size_t> counts(J, 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t j = x.index()[r].measure;
    out.measure_deviation[j] += x.values().row(static_cast<Eigen::Index>(r)).transpose();
    ++counts[j];
  }
  for (std::size_t j = 0; j < J; ++j) {
    if (counts[j] == 0) {
      throw Error(Errc::empty_group, "measure '" + x.measure_ids()[j] + "' has no curves");
    }
    out.measure_deviation[j] = out.measure_deviation[j] / static_cast<double>(counts[j]) - out.global;
  }
  return out;
}

Eigen::MatrixXd sigma_T_hat(const CurveSet& x, const MeanModel& means) {
  const DesignLayout layout = require_two_level(x);
  if (x.rows() < 2) throw Error(Errc::insufficient_data, "total covariance needs at least two curves");
  const Eigen::MatrixXd rows = center_rows(x, means).values();
  (void)layout;
  return gram(rows) / static_cast<double>(x.rows());
}

Eigen::MatrixXd sigma_B_hat(const CurveSet& x, const MeanModel& means) {
  const DesignLayout layout = require_two_level(x);
  const std::size_t J = layout.n_measures;
  if (J < 2) {
    throw Error(Errc::insufficient_replication, "between-subject covariance needs at least two measures per subject");
  }
  const CentredSums sums = centred_sums(x, means, layout);
  // sum_i sum_{j != j'} r_ij r_ij'^T = sum_i S_i S_i^T - sum_ij r_ij r_ij^T
  const Eigen::MatrixXd cross = gram(sums.subject_sums) - gram(sums.rows);
  const double norm = static_cast<double>(layout.n_subjects * J * (J - 1));
  return cross / norm;
}

Eigen::MatrixXd sigma_W_hat(const Eigen::MatrixXd& sigma_t, const Eigen::MatrixXd& sigma_b) {
  if (sigma_t.rows() != sigma_b.rows() || sigma_t.cols() != sigma_b.cols()) {
    throw Error(Errc::dimension_mismatch, "total and between surfaces differ in size");
  }
  return sigma_t - sigma_b;
}

Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& data, const Eigen::MatrixXd& design) {
  if (design.rows() != data.rows() || design.cols() != data.rows()) {
    throw Error(Errc::dimension_mismatch, "design matrix is " + std::to_string(design.rows()) + "x" +
                                              std::to_string(design.cols()) + " but the data has " +
                                              std::to_string(data.rows()) + " rows");
  }
  return data.transpose() * design * data;
}

Eigen::MatrixXd total_design_matrix(std::size_t rows) {
  if (rows == 0) throw Error(Errc::invalid_parameter, "design matrix needs at least one row");
  const auto n = static_cast<Eigen::Index>(rows);
  const double N = static_cast<double>(rows);
  const Eigen::MatrixXd centring = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / N);
  return centring / N;
}

LevelCovariances two_level_covariances(const CurveSet& x, const MeanModel& means, double noise_bandwidth) {
  LevelCovariances out;
  out.levels = 2;
  out.sigma_t = sigma_T_hat(x, means);
  out.sigma_b = sigma_B_hat(x, means);
  out.sigma_w = sigma_W_hat(out.sigma_t, out.sigma_b);
  const Grid& grid = *x.grid();
  const double bw = noise_bandwidth > 0.0 ? noise_bandwidth : diagonal_bandwidth(grid);
  out.noise_variance = estimate_noise(out.sigma_w, smooth_covariance(out.sigma_w, grid, bw), grid);
  return out;
}

LevelCovariances three_level_covariances(const CurveSet& x, const MeanModel& means, double noise_bandwidth) {
  const DesignLayout layout = x.layout();
  if (!layout.balanced) {
    throw Error(Errc::unbalanced_design, "three-level estimators need a balanced design:\n" + layout.describe());
  }
  const std::size_t n = layout.n_subjects;
  const std::size_t J = layout.n_measures;
  const std::size_t K = layout.replicates_per_cell;
  if (J < 2 || K < 2) {
    throw Error(Errc::insufficient_replication,
                "three-level estimators need >= 2 measures per subject and >= 2 replicates per measure (got J=" +
                    std::to_string(J) + ", K=" + std::to_string(K) + ")");
  }
  const CentredSums sums = centred_sums(x, means, layout);
  const Eigen::MatrixXd same_row = gram(sums.rows);
  const Eigen::MatrixXd same_cell = gram(sums.cell_sums);
  const Eigen::MatrixXd same_subject = gram(sums.subject_sums);
  const double dn = static_cast<double>(n), dJ = static_cast<double>(J), dK = static_cast<double>(K);

  LevelCovariances out;
  out.levels = 3;
  out.h1 = (same_subject - same_cell) / (dn * dJ * (dJ - 1.0) * dK * dK);
  out.h2 = (same_cell - same_row) / (dn * dJ * dK * (dK - 1.0));
  out.h3 = same_row / (dn * dJ * dK);
  out.k1 = out.h1;
  out.k2 = out.h2 - out.h1;

  const Grid& grid = *x.grid();
  const double bw = noise_bandwidth > 0.0 ? noise_bandwidth : diagonal_bandwidth(grid);
  const Eigen::MatrixXd raw_k3 = out.h3 - out.h2;
  const Eigen::MatrixXd limit = smooth_covariance(raw_k3, grid, bw);
  out.noise_variance = estimate_noise(raw_k3, limit, grid);
  out.k3 = with_diagonal_of(raw_k3, limit);
  return out;
}

MultilevelFit fit_nested(const CurveSet& x, const NestedConfig& config) {
  if (config.levels != 2 && config.levels != 3) {
    throw Error(Errc::invalid_parameter, "nested fits support 2 or 3 levels, got " + std::to_string(config.levels));
  }
  if (!(config.pve > 0.0 && config.pve <= 1.0)) {
    throw Error(Errc::invalid_parameter, "pve threshold must lie in (0, 1]");
  }
  if (x.empty()) throw Error(Errc::empty_input, "nothing to fit");
  const DesignLayout layout = x.layout();
  if (!layout.balanced) {
    throw Error(Errc::unbalanced_design, "nested fits need a balanced design:\n" + layout.describe());
  }
  if (config.levels == 2 && layout.replicates_per_cell != 1) {
    throw Error(Errc::unbalanced_design, "a two-level fit needs one curve per (subject, measure); found " +
                                             std::to_string(layout.replicates_per_cell) +
                                             " per cell (use three levels)");
  }

  const Grid& grid = *x.grid();
  const double bw = config.noise_bandwidth > 0.0 ? config.noise_bandwidth : diagonal_bandwidth(grid);
  const MeanModel means = measure_means(x, config.measure_means);

  std::vector<Eigen::MatrixXd> surfaces;
  double noise = 0.0;
  double scale = 0.0;
  if (config.levels == 2) {
    const LevelCovariances cov = two_level_covariances(x, means, bw);
    noise = cov.noise_variance;
    scale = operator_trace(cov.sigma_t, grid);
    surfaces.push_back(cov.sigma_b);
    surfaces.push_back(with_diagonal_of(cov.sigma_w, smooth_covariance(cov.sigma_w, grid, bw)));
  } else {
    const LevelCovariances cov = three_level_covariances(x, means, bw);
    noise = cov.noise_variance;
    scale = operator_trace(cov.h3, grid);
    surfaces = {cov.k1, cov.k2, cov.k3};
  }
  if (config.smoothing.enabled) {
    for (auto& s : surfaces) s = smooth_covariance(s, grid, config.smoothing.bandwidth);
  }

  const double floor = kRoundoffFloor * std::max(scale, 0.0);
  std::vector<EigenSystem> eigs;
  for (const auto& s : surfaces) {
    const EigenSystem full = eigendecompose(s, grid);
    eigs.push_back(truncate(full, choose_components(full, config.pve, floor)));
  }

  BlupScores blup = blup_scores(x, means, eigs, noise);

  MultilevelFit fit;
  fit.grid = x.grid();
  fit.global_mean = means.global;
  fit.measure_means = means.measure_deviation;
  fit.noise_variance = noise;
  fit.config = config;
  fit.subject_ids = x.subject_ids();
  fit.measure_ids = x.measure_ids();
  for (std::size_t l = 0; l < eigs.size(); ++l) {
    fit.levels.push_back({std::move(eigs[l]), std::move(blup.scores[l]), std::move(blup.units[l])});
  }
  return fit;
}

}  // namespace mfda
