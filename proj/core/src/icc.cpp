#include "mfda/icc.hpp"

#include <algorithm>
#include <sstream>

#include "mfda/error.hpp"

namespace mfda {

double global_icc(const std::vector<double>& level_sums, double noise_variance) {
  if (level_sums.empty()) throw Error(Errc::undefined_icc, "no levels to compare");
  double denominator = noise_variance;
  for (double s : level_sums) denominator += s;
  if (!(denominator > 0.0)) throw Error(Errc::undefined_icc, "total variance is zero");
  return std::clamp(level_sums.front() / denominator, 0.0, 1.0);
}

double global_icc(const MultilevelFit& fit) {
  std::vector<double> sums;
  for (const auto& level : fit.levels) sums.push_back(level.eig.eigenvalue_sum());
  return global_icc(sums, fit.noise_variance);
}

Curve pointwise_icc(const MultilevelFit& fit) {
  if (fit.levels.empty()) throw Error(Errc::undefined_icc, "fit has no levels");
  const auto m = static_cast<Eigen::Index>(fit.grid->size());
  auto level_variance = [m](const EigenSystem& eig) -> Eigen::VectorXd {
    if (eig.components() == 0) return Eigen::VectorXd::Zero(m);
    return eig.eigenfunctions.array().square().matrix() * eig.eigenvalues;
  };
  const Eigen::VectorXd subject = level_variance(fit.levels.front().eig);
  Eigen::VectorXd total = Eigen::VectorXd::Constant(m, fit.noise_variance);
  for (const auto& level : fit.levels) total += level_variance(level.eig);

  Eigen::VectorXd rho(m);
  for (Eigen::Index t = 0; t < m; ++t) {
    if (!(total(t) > 0.0)) {
      std::ostringstream os;
      os << "every variance component is zero at t=" << fit.grid->point(static_cast<std::size_t>(t));
      throw Error(Errc::undefined_icc, os.str());
    }
    rho(t) = std::clamp(subject(t) / total(t), 0.0, 1.0);
  }
  return Curve(fit.grid, std::move(rho));
}

IccReport icc_report(const MultilevelFit& fit) {
  IccReport report;
  report.pointwise = pointwise_icc(fit);
  report.global_icc = global_icc(fit);
  for (const auto& level : fit.levels) report.level_variances.push_back(level.eig.eigenvalue_sum());
  report.noise_variance = fit.noise_variance;
  return report;
}

}  // namespace mfda
