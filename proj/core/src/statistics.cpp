#include "mfda/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mfda/error.hpp"

namespace mfda {

std::string_view to_string(TestMethod method) noexcept {
  switch (method) {
    case TestMethod::ks: return "ks";
    case TestMethod::cvm: return "cvm";
    case TestMethod::energy: return "energy";
  }
  return "unknown";
}

TestMethod parse_test_method(std::string_view name) {
  if (name == "ks") return TestMethod::ks;
  if (name == "cvm") return TestMethod::cvm;
  if (name == "energy") return TestMethod::energy;
  throw Error(Errc::invalid_parameter, "unknown test method '" + std::string(name) + "' (expected ks, cvm or energy)");
}

namespace {

std::vector<std::uint8_t> identity_labels(std::size_t n_a, std::size_t n_b) {
  std::vector<std::uint8_t> labels(n_a + n_b, 0);
  std::fill_n(labels.begin(), n_a, std::uint8_t{1});
  return labels;
}

void require_nonempty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::insufficient_data, "two-sample statistics need nonempty samples");
}

}  // namespace

PooledSample::PooledSample(std::span<const double> a, std::span<const double> b) : n_a_(a.size()) {
  require_nonempty(a, b);
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled) {
    if (!std::isfinite(v)) throw Error(Errc::invalid_parameter, "samples contain non-finite values");
  }
  origin_.resize(pooled.size());
  std::iota(origin_.begin(), origin_.end(), std::size_t{0});
  std::stable_sort(origin_.begin(), origin_.end(), [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
  values_.resize(pooled.size());
  for (std::size_t p = 0; p < pooled.size(); ++p) values_[p] = pooled[origin_[p]];
  group_end_.assign(values_.size(), true);
  for (std::size_t p = 0; p + 1 < values_.size(); ++p) group_end_[p] = values_[p + 1] != values_[p];
  const double n = static_cast<double>(values_.size());
  for (std::size_t p = 0; p < values_.size(); ++p) {
    pooled_pair_sum_ += (2.0 * static_cast<double>(p + 1) - n - 1.0) * values_[p];
  }
}

bool PooledSample::constant() const noexcept { return values_.front() == values_.back(); }

double PooledSample::evaluate(TestMethod method, std::span<const std::uint8_t> labels) const {
  switch (method) {
    case TestMethod::ks: return ks(labels);
    case TestMethod::cvm: return cvm(labels);
    case TestMethod::energy: return energy(labels);
  }
  return 0.0;
}

double PooledSample::ks(std::span<const std::uint8_t> labels) const {
  const double na = static_cast<double>(n_a_), nb = static_cast<double>(size_b());
  std::size_t ca = 0, cb = 0;
  double best = 0.0;
  for (std::size_t p = 0; p < values_.size(); ++p) {
    if (labels[origin_[p]]) ++ca; else ++cb;
    if (group_end_[p]) best = std::max(best, std::abs(static_cast<double>(ca) / na - static_cast<double>(cb) / nb));
  }
  return best;
}

double PooledSample::cvm(std::span<const std::uint8_t> labels) const {
  const double na = static_cast<double>(n_a_), nb = static_cast<double>(size_b());
  std::size_t ca = 0, cb = 0, run = 0;
  double sum = 0.0;
  for (std::size_t p = 0; p < values_.size(); ++p) {
    if (labels[origin_[p]]) ++ca; else ++cb;
    ++run;
    if (group_end_[p]) {
      const double diff = static_cast<double>(ca) / na - static_cast<double>(cb) / nb;
      sum += static_cast<double>(run) * diff * diff;
      run = 0;
    }
  }
  return na * nb / ((na + nb) * (na + nb)) * sum;
}

double PooledSample::energy(std::span<const std::uint8_t> labels) const {
  const double na = static_cast<double>(n_a_), nb = static_cast<double>(size_b());
  double within_a = 0.0, within_b = 0.0;
  std::size_t ra = 0, rb = 0;
  for (std::size_t p = 0; p < values_.size(); ++p) {
    if (labels[origin_[p]]) {
      ++ra;
      within_a += (2.0 * static_cast<double>(ra) - na - 1.0) * values_[p];
    } else {
      ++rb;
      within_b += (2.0 * static_cast<double>(rb) - nb - 1.0) * values_[p];
    }
  }
  const double cross = pooled_pair_sum_ - within_a - within_b;
  const double distance = 2.0 * cross / (na * nb) - 2.0 * within_a / (na * na) - 2.0 * within_b / (nb * nb);
  return na * nb / (na + nb) * distance;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  return PooledSample(a, b).evaluate(TestMethod::ks, identity_labels(a.size(), b.size()));
}

double cvm_statistic(std::span<const double> a, std::span<const double> b) {
  return PooledSample(a, b).evaluate(TestMethod::cvm, identity_labels(a.size(), b.size()));
}

double energy_statistic(std::span<const double> a, std::span<const double> b) {
  return PooledSample(a, b).evaluate(TestMethod::energy, identity_labels(a.size(), b.size()));
}

double two_sample_statistic(TestMethod method, std::span<const double> a, std::span<const double> b) {
  return PooledSample(a, b).evaluate(method, identity_labels(a.size(), b.size()));
}

double ks_asymptotic_pvalue(double statistic, std::size_t n_a, std::size_t n_b) {
  const double ne = static_cast<double>(n_a) * static_cast<double>(n_b) / static_cast<double>(n_a + n_b);
  const double root = std::sqrt(ne);
  const double lambda = (root + 0.12 + 0.11 / root) * statistic;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

std::vector<double> bh_adjust(std::span<const double> p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
      throw Error(Errc::invalid_pvalue, "p-value at position " + std::to_string(i) + " lies outside [0,1]");
    }
  }
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    // max() guards against p * m / m rounding below p.
    const double pk = p[order[k]];
    const double q = std::max(pk, pk * static_cast<double>(m) / static_cast<double>(k + 1));
    running = std::min(running, q);
    adjusted[order[k]] = std::min(1.0, running);
  }
  return adjusted;
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    const double rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t q = start; q < end; ++q) ranks[order[q]] = rank;
    start = end;
  }
  return ranks;
}

}  // namespace mfda
