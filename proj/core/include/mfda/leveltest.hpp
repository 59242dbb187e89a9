#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mfda/statistics.hpp"

namespace mfda {

using StatisticFn = std::function<double(std::span<const double>, std::span<const double>)>;

struct PermutationResult {
  double p_value = 1.0;
  double observed = 0.0;
  /// The pooled sample was constant; p_value is 1 by convention.
  bool degenerate = false;
};

/// Within-subject relabelling: block ids for the rows of each sample. A
/// permutation swaps the sample membership of a whole subject at once, so
/// every block must hold as many rows in a as in b.
struct PairedBlocks {
  std::vector<std::size_t> subject_a;
  std::vector<std::size_t> subject_b;
};

/// p = (1 + #{permuted >= observed}) / (R + 1). Permutation r shuffles the
/// pooled labels with its own substream of `seed`, so the result depends
/// only on (input, seed, R).
PermutationResult permutation_pvalue(const StatisticFn& statistic, std::span<const double> a,
                                     std::span<const double> b, std::size_t n_permutations, std::uint64_t seed);

/// Same, for the built-in statistics, scoring each relabelling in linear time.
PermutationResult permutation_pvalue(TestMethod method, std::span<const double> a, std::span<const double> b,
                                     std::size_t n_permutations, std::uint64_t seed,
                                     const PairedBlocks* blocks = nullptr);

struct ScoreTestOptions {
  TestMethod method = TestMethod::energy;
  std::size_t n_permutations = 999;
  std::uint64_t seed = 1;
  /// Large-sample Kolmogorov p-values instead of permutations (ks only).
  bool asymptotic_ks = false;
  /// Within-subject permutations; rows of a and b carry subject ids.
  std::optional<PairedBlocks> paired;
};

struct ComponentResult {
  std::size_t component = 0;  // 1-based
  double statistic = 0.0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;
  bool degenerate = false;
};

struct TestReport {
  std::vector<ComponentResult> per_score;
  double global_p = 1.0;
  TestMethod method = TestMethod::energy;
  std::size_t n_permutations = 0;
  std::uint64_t seed = 0;
  bool asymptotic_ks = false;
  bool paired = false;
};

/// Column-by-column two-sample tests of score distributions, BH adjustment
/// across columns and the minimum adjusted p-value as the global p-value.
TestReport two_sample_score_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 const ScoreTestOptions& options = {});

struct CorrelationResult {
  std::size_t component = 0;  // 1-based
  double rho = 0.0;
  double p_value = 1.0;
};

/// Spearman correlation of every score column with a covariate, midranks for
/// ties, two-sided p-values from the t approximation with n - 2 df.
std::vector<CorrelationResult> score_covariate_correlation(const Eigen::MatrixXd& scores,
                                                           std::span<const double> covariate);

double spearman_rho(std::span<const double> x, std::span<const double> y);

}  // namespace mfda
