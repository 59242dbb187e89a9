#include "mfda/leveltest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "mfda/error.hpp"
#include "mfda/parallel.hpp"
#include "mfda/random.hpp"

namespace mfda {

namespace {

constexpr std::size_t kMinPermutations = 99;
constexpr std::size_t kChunk = 64;

// Produces the label vector of permutation r.
class Relabeller {
 public:
  Relabeller(std::size_t n_a, std::size_t n_b, const PairedBlocks* blocks) : initial_(n_a + n_b, 0) {
    std::fill_n(initial_.begin(), n_a, std::uint8_t{1});
    if (!blocks) return;
    if (blocks->subject_a.size() != n_a || blocks->subject_b.size() != n_b) {
      throw Error(Errc::invalid_parameter, "paired block ids do not match the sample sizes");
    }
    std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> members;
    for (std::size_t i = 0; i < n_a; ++i) members[blocks->subject_a[i]].first.push_back(i);
    for (std::size_t i = 0; i < n_b; ++i) members[blocks->subject_b[i]].second.push_back(n_a + i);
    for (auto& [subject, rows] : members) {
      if (rows.first.size() != rows.second.size()) {
        throw Error(Errc::invalid_parameter, "paired permutations need equal rows per subject in both samples (subject #" +
                                                 std::to_string(subject + 1) + ")");
      }
      pairs_.push_back(std::move(rows));
    }
    paired_ = true;
  }

  void draw(std::vector<std::uint8_t>& labels, std::uint64_t seed, std::size_t r) const {
    labels = initial_;
    RandomStream rng(seed, r + 1);
    if (paired_) {
      for (const auto& [in_a, in_b] : pairs_) {
        if (rng.below(2) == 0) continue;
        for (std::size_t p : in_a) labels[p] = 0;
        for (std::size_t p : in_b) labels[p] = 1;
      }
      return;
    }
    for (std::size_t i = labels.size() - 1; i > 0; --i) {
      std::swap(labels[i], labels[rng.below(i + 1)]);
    }
  }

 private:
  std::vector<std::uint8_t> initial_;
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> pairs_;
  bool paired_ = false;
};

template <class Evaluate>
double permutation_p(double observed, const Relabeller& relabel, std::size_t n_permutations, std::uint64_t seed,
                     Evaluate&& evaluate) {
  const double threshold = observed - 1e-12 * std::max(1.0, std::abs(observed));
  const std::size_t chunks = (n_permutations + kChunk - 1) / kChunk;
  std::vector<std::size_t> exceed(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    std::vector<std::uint8_t> labels;
    const std::size_t end = std::min(n_permutations, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      relabel.draw(labels, seed, r);
      if (evaluate(labels) >= threshold) ++exceed[c];
    }
  });
  std::size_t count = 0;
  for (std::size_t e : exceed) count += e;
  return static_cast<double>(1 + count) / static_cast<double>(n_permutations + 1);
}

void require_permutations(std::size_t n_permutations) {
  if (n_permutations < kMinPermutations) {
    throw Error(Errc::invalid_parameter, "permutation tests need at least " + std::to_string(kMinPermutations) +
                                             " permutations, got " + std::to_string(n_permutations));
  }
}

}  // namespace

PermutationResult permutation_pvalue(const StatisticFn& statistic, std::span<const double> a,
                                     std::span<const double> b, std::size_t n_permutations, std::uint64_t seed) {
  require_permutations(n_permutations);
  PermutationResult out;
  const PooledSample pooled(a, b);
  if (pooled.constant()) {
    out.degenerate = true;
    return out;
  }
  out.observed = statistic(a, b);
  std::vector<double> values(a.begin(), a.end());
  values.insert(values.end(), b.begin(), b.end());
  const Relabeller relabel(a.size(), b.size(), nullptr);
  out.p_value = permutation_p(out.observed, relabel, n_permutations, seed, [&](const std::vector<std::uint8_t>& labels) {
    std::vector<double> xa, xb;
    xa.reserve(a.size());
    xb.reserve(b.size());
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? xa : xb).push_back(values[i]);
    return statistic(xa, xb);
  });
  return out;
}

PermutationResult permutation_pvalue(TestMethod method, std::span<const double> a, std::span<const double> b,
                                     std::size_t n_permutations, std::uint64_t seed, const PairedBlocks* blocks) {
  require_permutations(n_permutations);
  PermutationResult out;
  const PooledSample pooled(a, b);
  const Relabeller relabel(a.size(), b.size(), blocks);
  if (pooled.constant()) {
    out.degenerate = true;
    return out;
  }
  std::vector<std::uint8_t> identity(a.size() + b.size(), 0);
  std::fill_n(identity.begin(), a.size(), std::uint8_t{1});
  out.observed = pooled.evaluate(method, identity);
  out.p_value = permutation_p(out.observed, relabel, n_permutations, seed,
                              [&](const std::vector<std::uint8_t>& labels) { return pooled.evaluate(method, labels); });
  return out;
}

TestReport two_sample_score_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const ScoreTestOptions& options) {
  if (a.cols() != b.cols()) {
    throw Error(Errc::component_mismatch, "score matrices have " + std::to_string(a.cols()) + " and " +
                                              std::to_string(b.cols()) + " components");
  }
  if (a.rows() < 5 || b.rows() < 5) {
    throw Error(Errc::insufficient_data, "each group needs at least 5 score rows (got " + std::to_string(a.rows()) +
                                             " and " + std::to_string(b.rows()) + ")");
  }
  if (options.asymptotic_ks && options.method != TestMethod::ks) {
    throw Error(Errc::invalid_parameter, "asymptotic p-values are only available for the ks method");
  }
  if (!options.asymptotic_ks) require_permutations(options.n_permutations);

  TestReport report;
  report.method = options.method;
  report.n_permutations = options.asymptotic_ks ? 0 : options.n_permutations;
  report.seed = options.seed;
  report.asymptotic_ks = options.asymptotic_ks;
  report.paired = options.paired.has_value();

  const PairedBlocks* blocks = options.paired ? &*options.paired : nullptr;
  std::vector<double> raw;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const Eigen::VectorXd col_a = a.col(k), col_b = b.col(k);
    const std::span<const double> xa(col_a.data(), static_cast<std::size_t>(col_a.size()));
    const std::span<const double> xb(col_b.data(), static_cast<std::size_t>(col_b.size()));
    ComponentResult result;
    result.component = static_cast<std::size_t>(k) + 1;
    if (options.asymptotic_ks) {
      const PooledSample pooled(xa, xb);
      result.degenerate = pooled.constant();
      result.statistic = ks_statistic(xa, xb);
      result.raw_p = result.degenerate ? 1.0 : ks_asymptotic_pvalue(result.statistic, xa.size(), xb.size());
    } else {
      const PermutationResult perm = permutation_pvalue(options.method, xa, xb, options.n_permutations,
                                                        substream_seed(options.seed, result.component), blocks);
      result.statistic = perm.observed;
      result.raw_p = perm.p_value;
      result.degenerate = perm.degenerate;
    }
    raw.push_back(result.raw_p);
    report.per_score.push_back(result);
  }
  const std::vector<double> adjusted = bh_adjust(raw);
  report.global_p = 1.0;
  for (std::size_t k = 0; k < adjusted.size(); ++k) {
    report.per_score[k].adjusted_p = adjusted[k];
    report.global_p = std::min(report.global_p, adjusted[k]);
  }
  return report;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::dimension_mismatch, "correlation inputs differ in length");
  const std::vector<double> rx = midranks(x), ry = midranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(Errc::undefined_correlation, "constant input has no rank correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<CorrelationResult> score_covariate_correlation(const Eigen::MatrixXd& scores,
                                                           std::span<const double> covariate) {
  const auto n = static_cast<std::size_t>(scores.rows());
  if (covariate.size() != n) {
    throw Error(Errc::dimension_mismatch, "covariate has " + std::to_string(covariate.size()) + " values for " +
                                              std::to_string(n) + " score rows");
  }
  if (n < 5) throw Error(Errc::insufficient_data, "correlation needs at least 5 observations");
  if (!scores.allFinite()) throw Error(Errc::invalid_parameter, "scores contain missing values");
  for (double v : covariate) {
    if (!std::isfinite(v)) throw Error(Errc::invalid_parameter, "covariate contains missing values");
  }
  if (std::all_of(covariate.begin(), covariate.end(), [&](double v) { return v == covariate[0]; })) {
    throw Error(Errc::undefined_correlation, "covariate has zero variance");
  }
  const boost::math::students_t dist(static_cast<double>(n - 2));
  std::vector<CorrelationResult> out;
  for (Eigen::Index k = 0; k < scores.cols(); ++k) {
    const Eigen::VectorXd col = scores.col(k);
    const std::span<const double> x(col.data(), n);
    CorrelationResult result;
    result.component = static_cast<std::size_t>(k) + 1;
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
      throw Error(Errc::undefined_correlation, "score component " + std::to_string(k + 1) + " has zero variance");
    }
    result.rho = spearman_rho(x, covariate);
    const double denom = 1.0 - result.rho * result.rho;
    if (denom <= 0.0) {
      result.p_value = 0.0;
    } else {
      const double t = result.rho * std::sqrt(static_cast<double>(n - 2) / denom);
      result.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    }
    out.push_back(result);
  }
  return out;
}

}  // namespace mfda
