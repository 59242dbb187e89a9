#pragma once

// Deliberately naive reference implementations used to check the library.
// Nothing here shares code with the library beyond the data containers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Mat = Eigen::MatrixXd;

// rows[i][j][k] is one centred curve (length m).
using Nested = std::vector<std::vector<std::vector<std::vector<double>>>>;

inline Mat outer_sum_pairs(const std::vector<std::pair<const std::vector<double>*, const std::vector<double>*>>& pairs,
                           std::size_t m) {
  Mat s = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (const auto& [u, v] : pairs) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += (*u)[a] * (*v)[b];
    }
  }
  return s;
}

/// Subtracts the grand mean and each measure's deviation from it.
inline Nested center(Nested x) {
  const std::size_t n = x.size(), J = x[0].size(), K = x[0][0].size(), m = x[0][0][0].size();
  std::vector<double> grand(m, 0.0);
  std::vector<std::vector<double>> by_measure(J, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t a = 0; a < m; ++a) {
          grand[a] += x[i][j][k][a] / static_cast<double>(n * J * K);
          by_measure[j][a] += x[i][j][k][a] / static_cast<double>(n * K);
        }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t a = 0; a < m; ++a) x[i][j][k][a] -= grand[a] + (by_measure[j][a] - grand[a]);
  return x;
}

/// 1/(nJ) sum_i sum_j r_ij r_ij' over the first replicate of each cell.
inline Mat sigma_t(const Nested& r) {
  const std::size_t n = r.size(), J = r[0].size(), m = r[0][0][0].size();
  Mat s = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += r[i][j][0][a] * r[i][j][0][b];
  return s / static_cast<double>(n * J);
}

/// 1/(nJ(J-1)) sum_i sum_{j != j'} r_ij r_ij''.
inline Mat sigma_b(const Nested& r) {
  const std::size_t n = r.size(), J = r[0].size(), m = r[0][0][0].size();
  Mat s = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t jj = 0; jj < J; ++jj) {
        if (j == jj) continue;
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = 0; b < m; ++b)
            s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += r[i][j][0][a] * r[i][jj][0][b];
      }
  return s / static_cast<double>(n * J * (J - 1));
}

/// Cross products over distinct measures (every replicate pair).
inline Mat h1(const Nested& r) {
  const std::size_t n = r.size(), J = r[0].size(), K = r[0][0].size(), m = r[0][0][0].size();
  Mat s = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t jj = 0; jj < J; ++jj) {
        if (j == jj) continue;
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t kk = 0; kk < K; ++kk)
            for (std::size_t a = 0; a < m; ++a)
              for (std::size_t b = 0; b < m; ++b)
                s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += r[i][j][k][a] * r[i][jj][kk][b];
      }
  return s / static_cast<double>(n * J * (J - 1) * K * K);
}

/// Cross products over distinct replicates of one (subject, measure).
inline Mat h2(const Nested& r) {
  const std::size_t n = r.size(), J = r[0].size(), K = r[0][0].size(), m = r[0][0][0].size();
  Mat s = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t kk = 0; kk < K; ++kk) {
          if (k == kk) continue;
          for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
              s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += r[i][j][k][a] * r[i][j][kk][b];
        }
  return s / static_cast<double>(n * J * K * (K - 1));
}

/// Same-row products.
inline Mat h3(const Nested& r) {
  const std::size_t n = r.size(), J = r[0].size(), K = r[0][0].size(), m = r[0][0][0].size();
  Mat s = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = 0; b < m; ++b)
            s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += r[i][j][k][a] * r[i][j][k][b];
  return s / static_cast<double>(n * J * K);
}

/// Empirical CDF of `x` at `t`.
inline double ecdf(const std::vector<double>& x, double t) {
  double c = 0;
  for (double v : x) c += v <= t ? 1.0 : 0.0;
  return c / static_cast<double>(x.size());
}

inline double ks(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (const auto* s : {&a, &b})
    for (double t : *s) d = std::max(d, std::abs(ecdf(a, t) - ecdf(b, t)));
  return d;
}

inline double cvm(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (const auto* v : {&a, &b})
    for (double t : *v) {
      const double d = ecdf(a, t) - ecdf(b, t);
      s += d * d;
    }
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  return na * nb / ((na + nb) * (na + nb)) * s;
}

/// Energy statistic with O(n^2) pairwise V-statistic means.
inline double energy(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean_abs = [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0;
    for (double u : x)
      for (double v : y) s += std::abs(u - v);
    return s / static_cast<double>(x.size() * y.size());
  };
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  return na * nb / (na + nb) * (2 * mean_abs(a, b) - mean_abs(a, a) - mean_abs(b, b));
}

/// Step-up BH computed from the definition: adj_i = min_{k >= rank_i} min(1, m p_(k) / k).
inline std::vector<double> bh(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
  std::vector<double> out(m);
  for (std::size_t r = 0; r < m; ++r) {
    double best = 1.0;
    for (std::size_t k = r; k < m; ++k) {
      best = std::min(best, p[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1));
    }
    out[order[r]] = best;
  }
  return out;
}

/// Midranks by counting.
inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i] ? 1 : 0;
      equal += v == x[i] ? 1 : 0;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) { return pearson(ranks(x), ranks(y)); }

}  // namespace oracle
