#include "mfda/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "mfda/error.hpp"

namespace mfda {

namespace {

void require_square(const Eigen::MatrixXd& s, const Grid& grid, const char* what) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (s.rows() != m || s.cols() != m) {
    throw Error(Errc::dimension_mismatch, std::string(what) + ": surface is " + std::to_string(s.rows()) +
                                              "x" + std::to_string(s.cols()) + ", grid has " +
                                              std::to_string(m) + " points");
  }
}

// Flip each column so its largest-magnitude entry is positive (first on ties).
void apply_sign_convention(Eigen::MatrixXd& vectors) {
  for (Eigen::Index a = 0; a < vectors.cols(); ++a) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index j = 0; j < vectors.rows(); ++j) {
      const double v = std::abs(vectors(j, a));
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    if (vectors(arg, a) < 0.0) vectors.col(a) *= -1.0;
  }
}

}  // namespace

EigenSystem truncate(const EigenSystem& eig, std::size_t k) {
  if (k > eig.components()) {
    throw Error(Errc::invalid_parameter, "cannot keep " + std::to_string(k) + " of " +
                                             std::to_string(eig.components()) + " components");
  }
  const auto kk = static_cast<Eigen::Index>(k);
  EigenSystem out;
  out.eigenvalues = eig.eigenvalues.head(kk);
  out.eigenfunctions = eig.eigenfunctions.leftCols(kk);
  out.pve = eig.pve.head(kk);
  out.total_variance = eig.total_variance;
  out.trimmed = eig.trimmed;
  return out;
}

Curve mean_curve(const CurveSet& x) {
  if (x.empty()) throw Error(Errc::empty_input, "mean of an empty curve set");
  return Curve(x.grid(), x.values().colwise().mean().transpose());
}

Eigen::MatrixXd empirical_covariance(const CurveSet& x, const Curve& mean) {
  require_same_grid(x.grid(), mean.grid);
  if (x.rows() < 2) {
    throw Error(Errc::insufficient_data, "covariance needs at least two curves, got " + std::to_string(x.rows()));
  }
  const Eigen::MatrixXd centred = x.values().rowwise() - mean.values.transpose();
  Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(x.rows());
  return (cov + cov.transpose()) / 2.0;
}

Eigen::MatrixXd smooth_covariance(const Eigen::MatrixXd& surface, const Grid& grid, double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw Error(Errc::invalid_parameter, "smoothing bandwidth must be positive");
  }
  require_square(surface, grid, "smooth_covariance");
  const auto m = static_cast<Eigen::Index>(grid.size());

  Eigen::MatrixXd kernel(m, m);
  for (Eigen::Index s = 0; s < m; ++s) {
    for (Eigen::Index a = 0; a < m; ++a) {
      const double u = (grid.point(s) - grid.point(a)) / bandwidth;
      kernel(s, a) = std::exp(-0.5 * u * u);
    }
  }
  Eigen::MatrixXd off_diagonal = surface;
  off_diagonal.diagonal().setZero();

  // sum_{a != b} K(s,a) K(t,b) S(a,b) over sum_{a != b} K(s,a) K(t,b).
  const Eigen::MatrixXd numerator = kernel * off_diagonal * kernel.transpose();
  const Eigen::VectorXd row_mass = kernel.rowwise().sum();
  const Eigen::MatrixXd denominator = row_mass * row_mass.transpose() - kernel * kernel.transpose();
  if ((denominator.array() <= 1e-300).any()) {
    throw Error(Errc::invalid_parameter, "smoothing bandwidth too small for the grid spacing");
  }
  Eigen::MatrixXd out = numerator.cwiseQuotient(denominator);
  return (out + out.transpose()) / 2.0;
}

double diagonal_bandwidth(const Grid& grid) {
  return grid.length() / static_cast<double>(grid.size() - 1);
}

double estimate_noise(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& smoothed, const Grid& grid) {
  require_square(raw, grid, "estimate_noise");
  require_square(smoothed, grid, "estimate_noise");
  const double gap = (raw.diagonal() - smoothed.diagonal()).mean();
  return std::max(0.0, gap);
}

Eigen::MatrixXd with_diagonal_of(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& smoothed) {
  if (raw.rows() != smoothed.rows() || raw.cols() != smoothed.cols()) {
    throw Error(Errc::dimension_mismatch, "surfaces differ in size");
  }
  Eigen::MatrixXd out = raw;
  out.diagonal() = smoothed.diagonal();
  return out;
}

EigenSystem eigendecompose(const Eigen::MatrixXd& surface, const Grid& grid) {
  require_square(surface, grid, "eigendecompose");
  const double scale = std::max(1.0, surface.cwiseAbs().maxCoeff());
  const double asymmetry = (surface - surface.transpose()).cwiseAbs().maxCoeff();
  if (!(asymmetry <= 1e-8 * scale)) {
    throw Error(Errc::asymmetric_matrix, "surface is not symmetric (max |S - S'| = " + std::to_string(asymmetry) + ")");
  }
  const Eigen::VectorXd w = grid.weights_vector();
  if ((w.array() <= 0.0).any()) {
    throw Error(Errc::invalid_grid, "eigendecomposition needs strictly positive quadrature weights");
  }
  const Eigen::VectorXd root_w = w.cwiseSqrt();
  const Eigen::MatrixXd sym = (surface + surface.transpose()) / 2.0;
  const Eigen::MatrixXd weighted = root_w.asDiagonal() * sym * root_w.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::singular_system, "symmetric eigensolver did not converge");
  }
  // Eigen returns ascending order.
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::Index m = values.size();
  Eigen::Index kept = 0;
  for (Eigen::Index a = 0; a < m; ++a) {
    if (values(a) >= 0.0) ++kept;
  }

  EigenSystem out;
  out.trimmed = static_cast<std::size_t>(m - kept);
  out.eigenvalues.resize(kept);
  out.eigenfunctions.resize(m, kept);
  for (Eigen::Index a = 0; a < kept; ++a) {
    const Eigen::Index src = m - 1 - a;
    out.eigenvalues(a) = values(src);
    out.eigenfunctions.col(a) = solver.eigenvectors().col(src).cwiseQuotient(root_w);
  }
  apply_sign_convention(out.eigenfunctions);
  out.total_variance = out.eigenvalues.sum();
  out.pve.resize(kept);
  double running = 0.0;
  for (Eigen::Index a = 0; a < kept; ++a) {
    running += out.eigenvalues(a);
    out.pve(a) = out.total_variance > 0.0 ? running / out.total_variance : 0.0;
  }
  return out;
}

Eigen::MatrixXd reassemble(const EigenSystem& eig) {
  return eig.eigenfunctions * eig.eigenvalues.asDiagonal() * eig.eigenfunctions.transpose();
}

std::size_t select_k(const EigenSystem& eig, double pve_threshold) {
  if (!(pve_threshold > 0.0 && pve_threshold <= 1.0)) {
    throw Error(Errc::invalid_parameter, "pve threshold must lie in (0, 1]");
  }
  if (eig.components() == 0 || !(eig.eigenvalues(0) > 0.0)) {
    throw Error(Errc::degenerate_spectrum, "no positive eigenvalue to select from");
  }
  const double cutoff = kEigenvalueCutoff * eig.eigenvalues(0);
  double total = 0.0;
  std::size_t usable = 0;
  for (Eigen::Index a = 0; a < eig.eigenvalues.size(); ++a) {
    if (eig.eigenvalues(a) < cutoff) break;
    total += eig.eigenvalues(a);
    ++usable;
  }
  double running = 0.0;
  for (std::size_t a = 0; a < usable; ++a) {
    running += eig.eigenvalues(static_cast<Eigen::Index>(a));
    // Relative slack absorbs round-off when the threshold is hit exactly.
    if (running >= pve_threshold * total * (1.0 - 1e-12)) return a + 1;
  }
  return usable;
}

Eigen::MatrixXd project_scores(const CurveSet& x, const Curve& mean, const EigenSystem& eig) {
  require_same_grid(x.grid(), mean.grid);
  const Grid& grid = *x.grid();
  if (static_cast<std::size_t>(eig.eigenfunctions.rows()) != grid.size()) {
    throw Error(Errc::grid_mismatch, "eigenfunctions are not on the curve grid");
  }
  const Eigen::MatrixXd centred = x.values().rowwise() - mean.values.transpose();
  return centred * grid.weights_vector().asDiagonal() * eig.eigenfunctions;
}

FpcaFit fit_fpca(const CurveSet& x, const FpcaConfig& config) {
  FpcaFit fit;
  fit.config = config;
  fit.mean = mean_curve(x);
  const Grid& grid = *x.grid();
  const Eigen::MatrixXd raw = empirical_covariance(x, fit.mean);

  Eigen::MatrixXd surface = raw;
  if (config.estimate_noise) {
    const double bw = config.noise_bandwidth > 0.0 ? config.noise_bandwidth : diagonal_bandwidth(grid);
    const Eigen::MatrixXd limit = smooth_covariance(raw, grid, bw);
    fit.noise_variance = estimate_noise(raw, limit, grid);
    surface = with_diagonal_of(raw, limit);
  }
  if (config.smoothing.enabled) surface = smooth_covariance(surface, grid, config.smoothing.bandwidth);

  const EigenSystem full = eigendecompose(surface, grid);
  fit.eig = truncate(full, select_k(full, config.pve));
  fit.scores = project_scores(x, fit.mean, fit.eig);
  fit.units = x.index();
  fit.subject_ids = x.subject_ids();
  fit.measure_ids = x.measure_ids();
  return fit;
}

CurveSet reconstruct(const FpcaFit& fit, std::size_t k) {
  if (k > fit.eig.components()) {
    throw Error(Errc::invalid_parameter, "reconstruction order " + std::to_string(k) + " exceeds the " +
                                             std::to_string(fit.eig.components()) + " retained components");
  }
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd values = fit.scores.leftCols(kk) * fit.eig.eigenfunctions.leftCols(kk).transpose();
  values.rowwise() += fit.mean.values.transpose();
  return CurveSet(fit.mean.grid, std::move(values), fit.units, fit.subject_ids, fit.measure_ids);
}

}  // namespace mfda
