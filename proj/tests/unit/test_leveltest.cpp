#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"

using namespace mfda;
using doctest::Approx;

namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k, double shift_col0 = 0.0) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = z(rng) + (j == 0 ? shift_col0 : 0.0);
  return m;
}

}  // namespace

TEST_SUITE("leveltest") {
  TEST_CASE("identical samples") {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd a = gaussian(rng, 20, 3);
    ScoreTestOptions opt;
    opt.method = TestMethod::ks;
    const TestReport r = two_sample_score_test(a, a, opt);
    REQUIRE(r.per_score.size() == 3);
    for (const auto& c : r.per_score) {
      CHECK(c.statistic == 0.0);
      CHECK(c.raw_p == 1.0);
    }
    CHECK(r.global_p == 1.0);
  }

  TEST_CASE("shifted first column is detected by every method") {
    for (TestMethod m : {TestMethod::ks, TestMethod::cvm, TestMethod::energy}) {
      std::mt19937_64 rng(2);
      const Eigen::MatrixXd a = gaussian(rng, 200, 3), b = gaussian(rng, 200, 3, 2.0);
      ScoreTestOptions opt;
      opt.method = m;
      const TestReport r = two_sample_score_test(a, b, opt);
      CHECK(r.global_p < 0.01);
      for (const auto& c : r.per_score) {
        CHECK(c.adjusted_p >= c.raw_p);
        CHECK(c.adjusted_p <= 1.0);
      }
      double mn = 1.0;
      for (const auto& c : r.per_score) mn = std::min(mn, c.adjusted_p);
      CHECK(r.global_p == mn);
    }
  }

  TEST_CASE("errors") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd a = gaussian(rng, 10, 2), b = gaussian(rng, 10, 3), small = gaussian(rng, 4, 2);
    auto code = [](const std::function<void()>& f) {
      try {
        f();
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::io_error;
    };
    CHECK(code([&] { two_sample_score_test(a, b); }) == Errc::component_mismatch);
    CHECK(code([&] { two_sample_score_test(a, small); }) == Errc::insufficient_data);
    ScoreTestOptions few;
    few.n_permutations = 98;
    CHECK(code([&] { two_sample_score_test(a, a, few); }) == Errc::invalid_parameter);
    ScoreTestOptions asym;
    asym.asymptotic_ks = true;
    CHECK(code([&] { two_sample_score_test(a, a, asym); }) == Errc::invalid_parameter);
  }

  TEST_CASE("permutation p-values") {
    const std::vector<double> lo{0, 1, 2, 3, 4, 5, 6, 7}, hi{100, 101, 102, 103, 104, 105, 106, 107};
    const PermutationResult extreme = permutation_pvalue(TestMethod::energy, lo, hi, 199, 5);
    CHECK(extreme.p_value == Approx(1.0 / 200.0));
    const std::vector<double> c(8, 2.0);
    const PermutationResult flat = permutation_pvalue(TestMethod::ks, c, c, 199, 5);
    CHECK(flat.p_value == 1.0);
    CHECK(flat.degenerate);

    std::mt19937_64 rng(6);
    const Eigen::MatrixXd a = gaussian(rng, 30, 1), b = gaussian(rng, 30, 1, 0.4);
    const std::span<const double> sa(a.data(), 30), sb(b.data(), 30);
    const auto p1 = permutation_pvalue(TestMethod::energy, sa, sb, 999, 1);
    const auto p2 = permutation_pvalue(TestMethod::energy, sa, sb, 999, 2);
    const auto p1b = permutation_pvalue(TestMethod::energy, sa, sb, 999, 1);
    CHECK(std::abs(p1.p_value - p2.p_value) < 0.05);
    CHECK(p1.p_value == p1b.p_value);
    const double grid_step = p1.p_value * 1000.0;
    CHECK(grid_step == Approx(std::round(grid_step)).epsilon(1e-9));
    CHECK(p1.p_value >= 1.0 / 1000.0);

    // The function overload agrees with the built-in statistic.
    const StatisticFn fn = [](std::span<const double> x, std::span<const double> y) { return energy_statistic(x, y); };
    const auto generic = permutation_pvalue(fn, sa, sb, 999, 1);
    CHECK(generic.observed == Approx(p1.observed));
    CHECK(generic.p_value == p1.p_value);
  }

  TEST_CASE("adding an uninformative component never lowers the global p") {
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd a = gaussian(rng, 40, 2), b = gaussian(rng, 40, 2, 0.6);
    Eigen::MatrixXd a3(40, 3), b3(40, 3);
    a3 << a, Eigen::VectorXd::LinSpaced(40, 0, 1);
    b3 << b, Eigen::VectorXd::LinSpaced(40, 0, 1);
    for (TestMethod m : {TestMethod::ks, TestMethod::cvm, TestMethod::energy}) {
      ScoreTestOptions opt;
      opt.method = m;
      CHECK(two_sample_score_test(a3, b3, opt).global_p >= two_sample_score_test(a, b, opt).global_p);
    }
  }

  TEST_CASE("paired permutations") {
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd base = gaussian(rng, 30, 1);
    Eigen::MatrixXd a = base + 0.1 * gaussian(rng, 30, 1), b = base + 0.1 * gaussian(rng, 30, 1);
    b.array() += 0.3;
    PairedBlocks blocks;
    for (std::size_t i = 0; i < 30; ++i) {
      blocks.subject_a.push_back(i);
      blocks.subject_b.push_back(i);
    }
    ScoreTestOptions opt;
    opt.paired = blocks;
    const TestReport paired = two_sample_score_test(a, b, opt);
    CHECK(paired.paired);
    CHECK(paired.per_score[0].raw_p >= 1.0 / 1000.0);
    CHECK(paired.per_score[0].raw_p <= 1.0);
  }

  TEST_CASE("asymptotic KS option") {
    std::mt19937_64 rng(9);
    const Eigen::MatrixXd a = gaussian(rng, 100, 2), b = gaussian(rng, 100, 2, 1.0);
    ScoreTestOptions opt;
    opt.method = TestMethod::ks;
    opt.asymptotic_ks = true;
    const TestReport r = two_sample_score_test(a, b, opt);
    CHECK(r.asymptotic_ks);
    CHECK(r.n_permutations == 0);
    CHECK(r.global_p < 0.01);
  }

  TEST_CASE("spearman correlation") {
    const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(10, -1, 1);
    Eigen::MatrixXd scores(10, 2);
    scores << s, s.array().square().matrix();
    std::vector<double> up(10), down(10);
    for (int i = 0; i < 10; ++i) {
      up[static_cast<std::size_t>(i)] = std::exp(s(i));
      down[static_cast<std::size_t>(i)] = -s(i) * 3;
    }
    CHECK(score_covariate_correlation(scores.leftCols(1), up)[0].rho == Approx(1.0));
    CHECK(score_covariate_correlation(scores.leftCols(1), down)[0].rho == Approx(-1.0));
    const auto r = score_covariate_correlation(scores, up);
    CHECK(r[1].component == 2);
    CHECK(r[1].rho == Approx(oracle::spearman(std::vector<double>(scores.col(1).data(), scores.col(1).data() + 10), up)));
    CHECK(r[0].p_value < 1e-6);
    CHECK(r[1].p_value > 0.05);

    Eigen::MatrixXd flat = Eigen::MatrixXd::Ones(10, 1);
    try {
      score_covariate_correlation(flat, up);
      FAIL("expected undefined_correlation");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::undefined_correlation);
      CHECK(std::string(e.what()).find('1') != std::string::npos);
    }

    std::mt19937_64 rng(10);
    std::normal_distribution<double> z;
    // Gaussian correlation r gives Spearman rho = (6/pi) asin(r/2); r = 2 sin(pi/12) gives 0.5.
    const double corr = 2.0 * std::sin(std::numbers::pi / 12.0);
    Eigen::MatrixXd x(500, 1);
    std::vector<double> y(500);
    for (int i = 0; i < 500; ++i) {
      const double u = z(rng), v = z(rng);
      x(i, 0) = u;
      y[static_cast<std::size_t>(i)] = corr * u + std::sqrt(1 - corr * corr) * v;
    }
    const double rho = score_covariate_correlation(x, y)[0].rho;
    CHECK(rho >= 0.4);
    CHECK(rho <= 0.6);
  }
}
