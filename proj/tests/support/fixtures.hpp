#pragma once

#include <random>

#include "mfda/mfda.hpp"
#include "oracles.hpp"

namespace fixture {

/// Random nested array x[i][j][k][t] with subject and measure effects.
inline oracle::Nested random_nested(std::size_t n, std::size_t J, std::size_t K, std::size_t m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  oracle::Nested x(n, std::vector<std::vector<std::vector<double>>>(J, std::vector<std::vector<double>>(K, std::vector<double>(m))));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> subj(m);
    for (auto& v : subj) v = z(rng);
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> cell(m);
      for (auto& v : cell) v = 0.7 * z(rng) + 0.3 * static_cast<double>(j);
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t a = 0; a < m; ++a) x[i][j][k][a] = subj[a] + cell[a] + 0.5 * z(rng);
    }
  }
  return x;
}

/// CurveSet with rows ordered by (subject, measure, replicate). Replicate
/// numbers are attached when `replicates` is true.
inline mfda::CurveSet to_curves(const oracle::Nested& x, bool replicates) {
  const std::size_t n = x.size(), J = x[0].size(), K = x[0][0].size(), m = x[0][0][0].size();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n * J * K), static_cast<Eigen::Index>(m));
  std::vector<mfda::NestedIndex> index;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k) {
        const auto row = static_cast<Eigen::Index>(index.size());
        for (std::size_t a = 0; a < m; ++a) values(row, static_cast<Eigen::Index>(a)) = x[i][j][k][a];
        mfda::NestedIndex idx{i, j, {}};
        if (replicates) idx.replicate = static_cast<int>(k + 1);
        index.push_back(idx);
      }
  return mfda::CurveSet(mfda::Grid::uniform(m), values, index);
}

inline double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

/// Standard two-level simulation used across the tests.
inline mfda::GeneratorSpec n2_spec(std::size_t subjects, std::size_t measures, std::uint64_t seed) {
  mfda::GeneratorSpec spec;
  spec.grid_points = 101;
  spec.subjects = subjects;
  spec.measures = measures;
  spec.levels = {{{4.0, 2.0}, {mfda::BasisSpec::Family::fourier, 1, {}}},
                 {{2.0, 1.0}, {mfda::BasisSpec::Family::fourier, 3, {}}}};
  spec.noise_variance = 1.0;
  spec.seed = seed;
  return spec;
}

inline mfda::GeneratorSpec n3_spec(std::size_t subjects, std::size_t measures, std::size_t replicates,
                                   std::uint64_t seed) {
  mfda::GeneratorSpec spec = n2_spec(subjects, measures, seed);
  spec.replicates = replicates;
  spec.levels.push_back({{1.0}, {mfda::BasisSpec::Family::fourier, 5, {}}});
  spec.noise_variance = 0.25;
  return spec;
}

}  // namespace fixture
