#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mfda {

enum class TestMethod { ks, cvm, energy };

std::string_view to_string(TestMethod method) noexcept;
/// Accepts "ks", "cvm", "energy"; throws invalid_parameter otherwise.
TestMethod parse_test_method(std::string_view name);

/// sup_x |F_a(x) - F_b(x)|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Two-sample Cramer-von Mises criterion,
/// n_a n_b / (n_a + n_b)^2 * sum over the pooled sample of (F_a - F_b)^2.
double cvm_statistic(std::span<const double> a, std::span<const double> b);

/// Energy test statistic n_a n_b / (n_a + n_b) * (2 E|a-b| - E|a-a'| - E|b-b'|),
/// with V-statistic means.
double energy_statistic(std::span<const double> a, std::span<const double> b);

double two_sample_statistic(TestMethod method, std::span<const double> a, std::span<const double> b);

/// Large-sample Kolmogorov p-value for a two-sample KS statistic, with the
/// usual effective-size correction.
double ks_asymptotic_pvalue(double statistic, std::size_t n_a, std::size_t n_b);

/// Pooled sample sorted once so that any relabelling can be scored in
/// linear time. Labels are indexed by position in the pooled sample
/// (a first, then b); a nonzero label means "belongs to sample a".
class PooledSample {
 public:
  PooledSample(std::span<const double> a, std::span<const double> b);

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t size_a() const noexcept { return n_a_; }
  std::size_t size_b() const noexcept { return size() - n_a_; }
  /// Every pooled value is equal.
  bool constant() const noexcept;

  double evaluate(TestMethod method, std::span<const std::uint8_t> labels) const;

 private:
  double ks(std::span<const std::uint8_t> labels) const;
  double cvm(std::span<const std::uint8_t> labels) const;
  double energy(std::span<const std::uint8_t> labels) const;

  std::vector<double> values_;        // ascending
  std::vector<std::size_t> origin_;   // pooled index of each sorted value
  std::vector<bool> group_end_;       // last element of a run of ties
  std::size_t n_a_ = 0;
  double pooled_pair_sum_ = 0.0;      // sum_{i<j} |x_i - x_j|
};

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
/// Throws invalid_pvalue for entries outside [0,1].
std::vector<double> bh_adjust(std::span<const double> p);

/// Midranks (1-based) with ties sharing the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

}  // namespace mfda
