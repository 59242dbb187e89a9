#include <algorithm>
#include <map>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mfda/error.hpp"
#include "mfda/mfpca.hpp"
#include "mfda/parallel.hpp"

namespace mfda {

namespace {

NestedIndex unit_key(std::size_t level, const NestedIndex& idx) {
  switch (level) {
    case 0: return {idx.subject, 0, std::nullopt};
    case 1: return {idx.subject, idx.measure, std::nullopt};
    default: return idx;
  }
}

}  // namespace

BlupScores blup_scores(const CurveSet& x, const MeanModel& means, std::span<const EigenSystem> levels,
                       double noise_variance) {
  if (levels.empty() || levels.size() > 3) {
    throw Error(Errc::invalid_parameter, "BLUP supports one to three levels");
  }
  if (!(noise_variance >= 0.0)) throw Error(Errc::invalid_parameter, "noise variance must be nonnegative");
  const Grid& grid = *x.grid();
  const auto m = static_cast<Eigen::Index>(grid.size());
  const std::size_t L = levels.size();

  std::vector<Eigen::Index> offset(L + 1, 0);
  for (std::size_t l = 0; l < L; ++l) {
    if (levels[l].eigenfunctions.rows() != m && levels[l].components() > 0) {
      throw Error(Errc::grid_mismatch, "level eigenfunctions are not on the curve grid");
    }
    offset[l + 1] = offset[l] + static_cast<Eigen::Index>(levels[l].components());
  }
  const Eigen::Index total_k = offset[L];
  Eigen::MatrixXd basis(m, total_k);
  Eigen::VectorXd lambda(total_k);
  for (std::size_t l = 0; l < L; ++l) {
    const auto k = static_cast<Eigen::Index>(levels[l].components());
    if (k == 0) continue;
    basis.middleCols(offset[l], k) = levels[l].eigenfunctions;
    lambda.segment(offset[l], k) = levels[l].eigenvalues;
  }
  if ((lambda.array() <= 0.0).any()) {
    throw Error(Errc::invalid_parameter, "BLUP needs strictly positive eigenvalues");
  }
  const Eigen::VectorXd w = grid.weights_vector();
  const Eigen::MatrixXd cross = basis.transpose() * w.asDiagonal() * basis;
  const Eigen::MatrixXd centred = center_rows(x, means).values();
  const Eigen::MatrixXd projections = centred * w.asDiagonal() * basis;
  const double ridge = noise_variance * w.mean();

  // Global unit tables, sorted.
  BlupScores out;
  out.scores.resize(L);
  out.units.resize(L);
  std::vector<std::map<NestedIndex, Eigen::Index>> unit_row(L);
  for (std::size_t l = 0; l < L; ++l) {
    for (const auto& idx : x.index()) unit_row[l].emplace(unit_key(l, idx), 0);
    Eigen::Index r = 0;
    for (auto& [key, row] : unit_row[l]) {
      row = r++;
      out.units[l].push_back(key);
    }
    out.scores[l] = Eigen::MatrixXd::Zero(r, static_cast<Eigen::Index>(levels[l].components()));
  }

  std::map<std::size_t, std::vector<std::size_t>> rows_by_subject;
  for (std::size_t r = 0; r < x.rows(); ++r) rows_by_subject[x.index()[r].subject].push_back(r);
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> subjects(rows_by_subject.begin(),
                                                                         rows_by_subject.end());

  parallel_for(subjects.size(), [&](std::size_t s) {
    const auto& [subject, rows] = subjects[s];
    // Local units per level and the column block of each.
    std::vector<std::map<NestedIndex, Eigen::Index>> local(L);
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t r : rows) local[l].emplace(unit_key(l, x.index()[r]), 0);
    }
    std::vector<Eigen::Index> block(L + 1, 0);
    for (std::size_t l = 0; l < L; ++l) {
      Eigen::Index u = 0;
      for (auto& [key, pos] : local[l]) pos = u++;
      block[l + 1] = block[l] + u * static_cast<Eigen::Index>(levels[l].components());
    }
    const Eigen::Index p = block[L];
    if (p == 0) return;

    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd prior = Eigen::VectorXd::Zero(p);
    std::vector<Eigen::Index> column(L);
    for (std::size_t r : rows) {
      for (std::size_t l = 0; l < L; ++l) {
        const auto k = static_cast<Eigen::Index>(levels[l].components());
        column[l] = block[l] + local[l].at(unit_key(l, x.index()[r])) * k;
      }
      for (std::size_t l = 0; l < L; ++l) {
        const auto kl = static_cast<Eigen::Index>(levels[l].components());
        if (kl == 0) continue;
        rhs.segment(column[l], kl) += projections.row(static_cast<Eigen::Index>(r)).segment(offset[l], kl).transpose();
        for (std::size_t q = 0; q < L; ++q) {
          const auto kq = static_cast<Eigen::Index>(levels[q].components());
          if (kq == 0) continue;
          system.block(column[l], column[q], kl, kq) += cross.block(offset[l], offset[q], kl, kq);
        }
      }
    }
    for (std::size_t l = 0; l < L; ++l) {
      const auto kl = static_cast<Eigen::Index>(levels[l].components());
      for (Eigen::Index u = 0; u < static_cast<Eigen::Index>(local[l].size()); ++u) {
        prior.segment(block[l] + u * kl, kl) = lambda.segment(offset[l], kl).cwiseInverse();
      }
    }
    system.diagonal() += ridge * prior;
    system = (system + system.transpose()) / 2.0;

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(system, Eigen::EigenvaluesOnly);
    const double largest = spectrum.eigenvalues().maxCoeff();
    const double smallest = spectrum.eigenvalues().minCoeff();
    if (!(smallest > 1e-10 * largest)) {
      throw Error(Errc::singular_system, "BLUP system is singular for subject '" + x.subject_ids()[subject] +
                                             "' (collinear level bases with zero noise variance)");
    }
    const Eigen::VectorXd solution = system.llt().solve(rhs);

    for (std::size_t l = 0; l < L; ++l) {
      const auto kl = static_cast<Eigen::Index>(levels[l].components());
      if (kl == 0) continue;
      for (const auto& [key, pos] : local[l]) {
        out.scores[l].row(unit_row[l].at(key)) = solution.segment(block[l] + pos * kl, kl).transpose();
      }
    }
  });
  return out;
}

}  // namespace mfda
