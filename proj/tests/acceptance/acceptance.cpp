// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "cli.hpp"
#include "fixtures.hpp"

using namespace mfda;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

double weighted_abs_inner(const Grid& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::abs((grid.weights_vector().array() * a.array() * b.array()).sum());
}

/// Level-2 scores split by measure.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> level2_groups(const MultilevelFit& fit) {
  const LevelFit& level = fit.levels[1];
  std::vector<Eigen::Index> rows_a, rows_b;
  for (std::size_t u = 0; u < level.units.size(); ++u)
    (level.units[u].measure == 0 ? rows_a : rows_b).push_back(static_cast<Eigen::Index>(u));
  return {level.scores(rows_a, Eigen::all), level.scores(rows_b, Eigen::all)};
}

NestedConfig no_measure_means() {
  NestedConfig c;
  c.measure_means = false;
  return c;
}

Outcome recovery_n2() {
  const auto start = std::chrono::steady_clock::now();
  const int seeds = 20;
  // [level][component]
  double inner[2][2] = {}, ratio[2][2] = {};
  const double truth[2][2] = {{4, 2}, {2, 1}};
  bool short_k = false;
  for (int s = 0; s < seeds; ++s) {
    const auto sim = generate(fixture::n2_spec(200, 4, 100 + s));
    const MultilevelFit fit = fit_nested(sim.data);
    for (int l = 0; l < 2; ++l) {
      const EigenSystem& eig = fit.levels[l].eig;
      if (eig.components() < 2) {
        short_k = true;
        continue;
      }
      for (int a = 0; a < 2; ++a) {
        inner[l][a] += weighted_abs_inner(*fit.grid, eig.eigenfunctions.col(a), sim.truth.eigenfunctions[l].col(a)) / seeds;
        ratio[l][a] += eig.eigenvalues(a) / truth[l][a] / seeds;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double min_inner = 1.0, worst_ratio = 0.0;
  for (int l = 0; l < 2; ++l)
    for (int a = 0; a < 2; ++a) {
      min_inner = std::min(min_inner, inner[l][a]);
      worst_ratio = std::max(worst_ratio, std::abs(ratio[l][a] - 1.0));
    }
  return {!short_k && min_inner >= 0.90 && worst_ratio <= 0.25 && secs <= 60.0,
          fmt("min mean |<e_hat,e>|=%.4f (>=0.90), worst mean eigenvalue error=%.3f (<=0.25), %.1fs (<=60s)", min_inner,
              worst_ratio, secs) +
              (short_k ? ", a level kept fewer than 2 components" : "")};
}

Outcome icc_n2() {
  double mean = 0.0;
  for (int s = 0; s < 20; ++s) mean += global_icc(fit_nested(generate(fixture::n2_spec(200, 4, 100 + s)).data)) / 20;
  return {std::abs(mean - 0.6) <= 0.05, fmt("mean ICC=%.4f, target 0.6 +- 0.05", mean)};
}

Outcome three_level() {
  // The ICC must hold on every seed. The eigenvalue check is made on the
  // designated run (first seed) and on the mean over seeds; single runs carry
  // about 15% sampling error at level 2, so the per-seed count is reported.
  const int seeds = 20;
  const double top[3] = {4, 2, 1};
  bool icc_ok = true, designated_ok = true, fitted = true;
  double worst_icc = 0.0, designated_worst = 0.0, mean_top[3] = {};
  int seeds_all_within = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto spec = fixture::n3_spec(100, 2, 20, 300 + s);
    NestedConfig config;
    config.levels = 3;
    const MultilevelFit fit = fit_nested(generate(spec).data, config);
    const double icc_err = std::abs(global_icc(fit) - spec.analytic_icc());
    worst_icc = std::max(worst_icc, icc_err);
    icc_ok = icc_ok && icc_err <= 0.07;
    bool within = true;
    for (int l = 0; l < 3; ++l) {
      if (fit.levels[l].eig.components() == 0) {
        fitted = false;
        within = false;
        continue;
      }
      const double value = fit.levels[l].eig.eigenvalues(0);
      mean_top[l] += value / seeds;
      const double err = std::abs(value / top[l] - 1.0);
      within = within && err <= 0.25;
      if (s == 0) designated_worst = std::max(designated_worst, err);
    }
    if (s == 0) designated_ok = within;
    seeds_all_within += within;
  }
  double mean_worst = 0.0;
  for (int l = 0; l < 3; ++l) mean_worst = std::max(mean_worst, std::abs(mean_top[l] / top[l] - 1.0));
  return {fitted && icc_ok && designated_ok && mean_worst <= 0.25,
          fmt("%g seeds: worst |ICC - %.4f|=%.4f (<=0.07); top eigenvalues ", seeds,
              fixture::n3_spec(1, 2, 2, 1).analytic_icc(), worst_icc) +
              fmt("designated run worst error=%.3f, 20-seed mean worst error=%.3f (<=0.25), %g/20 seeds within 25%% at every level",
                  designated_worst, mean_worst, seeds_all_within)};
}

Outcome calibration() {
  const int reps = 500;
  const TestMethod methods[] = {TestMethod::ks, TestMethod::cvm, TestMethod::energy};
  int rejections[3] = {};
  for (int r = 0; r < reps; ++r) {
    auto spec = fixture::n2_spec(100, 2, 5000 + r);
    spec.grid_points = 51;
    const MultilevelFit fit = fit_nested(generate(spec).data, no_measure_means());
    const auto [a, b] = level2_groups(fit);
    for (int k = 0; k < 3; ++k) {
      ScoreTestOptions options;
      options.method = methods[k];
      options.seed = 900000 + static_cast<std::uint64_t>(r);
      if (two_sample_score_test(a, b, options).global_p <= 0.05) ++rejections[k];
    }
  }
  double worst = 0.0;
  for (int k : rejections) worst = std::max(worst, static_cast<double>(k) / reps);
  return {worst <= 0.07, fmt("rejection rates ks=%.3f cvm=%.3f energy=%.3f (<=0.07)", double(rejections[0]) / reps,
                             double(rejections[1]) / reps, double(rejections[2]) / reps)};
}

Outcome power() {
  const int reps = 100;
  int rejections = 0;
  for (int r = 0; r < reps; ++r) {
    auto spec = fixture::n2_spec(100, 2, 7000 + r);
    spec.grid_points = 51;
    spec.shifts = {{2, 1, 2, 1.5 * std::sqrt(2.0)}};
    const MultilevelFit fit = fit_nested(generate(spec).data, no_measure_means());
    const auto [a, b] = level2_groups(fit);
    ScoreTestOptions options;
    options.n_permutations = 999;
    options.seed = 800000 + static_cast<std::uint64_t>(r);
    if (two_sample_score_test(a, b, options).global_p <= 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  return {rate >= 0.80, fmt("energy, R=999, %g replicates: rejection rate=%.3f (>=0.80)", reps, rate)};
}

Outcome oracle_equivalence() {
  double worst = 0.0;
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto two = fixture::random_nested(5, 3, 1, 7, 40 + seed);
    const auto x2 = fixture::to_curves(two, false);
    const MeanModel m2 = measure_means(x2);
    const auto c2 = oracle::center(two);
    worst = std::max(worst, fixture::max_abs(sigma_T_hat(x2, m2) - oracle::sigma_t(c2)));
    worst = std::max(worst, fixture::max_abs(sigma_B_hat(x2, m2) - oracle::sigma_b(c2)));

    const auto three = fixture::random_nested(5, 3, 4, 7, 60 + seed);
    const auto x3 = fixture::to_curves(three, true);
    const auto c3 = oracle::center(three);
    const LevelCovariances cov = three_level_covariances(x3, measure_means(x3));
    worst = std::max(worst, fixture::max_abs(cov.h1 - oracle::h1(c3)));
    worst = std::max(worst, fixture::max_abs(cov.h2 - oracle::h2(c3)));
    worst = std::max(worst, fixture::max_abs(cov.h3 - oracle::h3(c3)));
  }
  return {worst <= 1e-12, fmt("5-subject toy sets: max abs difference=%.3g (<=1e-12)", worst)};
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

Outcome psd() {
  double worst = 0.0;
  for (unsigned seed = 0; seed < 100; ++seed) {
    // Small, noisy designs make the differenced surfaces indefinite.
    NestedConfig config;
    config.levels = seed % 2 == 0 ? 2 : 3;
    config.pve = 1.0;
    const auto raw = fixture::random_nested(6, 2, config.levels == 2 ? 1 : 3, 15, 1000 + seed);
    const MultilevelFit fit = fit_nested(fixture::to_curves(raw, config.levels == 3), config);
    for (const auto& level : fit.levels) worst = std::min(worst, min_eigenvalue(reassemble(level.eig)));
  }
  return {worst >= -1e-10, fmt("100 seeds, two- and three-level: min eigenvalue=%.3g (>=-1e-10)", worst)};
}

Outcome bh() {
  bool exact = true;
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> worked = {
      {{0.01, 0.02, 0.03}, {0.03, 0.03, 0.03}},
      {{0.05}, {0.05}},
      {{0.01, 0.04, 0.03, 0.005}, {0.02, 0.04, 0.04, 0.02}},
  };
  for (const auto& [p, expected] : worked) exact = exact && bh_adjust(p) == expected;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 40);
  double worst = 0.0;
  for (int r = 0; r < 1000; ++r) {
    std::vector<double> p(static_cast<std::size_t>(len(rng)));
    for (auto& v : p) v = r % 3 == 0 ? std::pow(u(rng), 4) : u(rng);
    if (r % 5 == 0 && p.size() > 1) p[1] = p[0];
    const auto got = bh_adjust(p);
    const auto want = oracle::bh(p);
    for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  return {exact && worst <= 1e-15,
          std::string(exact ? "worked examples exact" : "worked examples differ") + fmt(", 1000 random vectors: max abs difference=%.3g (<=1e-15)", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (code != 0) std::fprintf(stderr, "mfda %s exited %d: %s", args[0].c_str(), code, err.str().c_str());
  return code;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mfda_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  auto spec = fixture::n3_spec(30, 2, 4, 11);
  spec.measure_labels = {"HIIT", "CTR"};
  std::ofstream(root / "spec.json") << spec_to_json(spec);
  for (const std::string run : {"a", "b"}) {
    const fs::path d = root / run;
    if (cli({"simulate", (root / "spec.json").string(), "--out", (d / "sim").string(), "--seed", "42"}) != 0 ||
        cli({"fit", (d / "sim" / "data.csv").string(), "--out", (d / "fit").string(), "--levels", "3", "--no-measure-means"}) != 0 ||
        cli({"icc", (d / "fit").string()}) != 0 ||
        cli({"test", (d / "fit").string(), "--group-a", "HIIT", "--group-b", "CTR", "--seed", "7"}) != 0)
      return {false, "a command failed"};
  }
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path twin = root / "b" / fs::relative(entry.path(), root / "a");
    if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) ++differing;
  }
  std::size_t files_b = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "b")) files_b += entry.is_regular_file();
  return {differing == 0 && files == files_b && files > 0,
          fmt("simulate+fit+icc+test twice: %g files, %g differ", static_cast<double>(files), static_cast<double>(differing + (files_b - files)))};
}

double diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

Outcome round_trips() {
  const fs::path root = fs::temp_directory_path() / "mfda_acceptance_roundtrip";
  fs::remove_all(root);
  fs::create_directories(root);
  double worst = 0.0;
  bool labels = true;

  auto spec = fixture::n3_spec(12, 3, 3, 5);
  spec.grid_points = 37;
  const CurveSet data = generate(spec).data;
  write_long_csv(data, "value", (root / "data.csv").string());
  const CurveSet back = read_long_csv((root / "data.csv").string(), "value").curves;
  worst = std::max(worst, diff(data.values(), back.values()));
  worst = std::max(worst, diff(data.grid()->points_vector(), back.grid()->points_vector()));
  labels = labels && data.index() == back.index() && data.subject_ids() == back.subject_ids() &&
           data.measure_ids() == back.measure_ids();

  for (int levels : {2, 3}) {
    NestedConfig config;
    config.levels = levels;
    const MultilevelFit fit = fit_nested(levels == 3 ? data : generate(fixture::n2_spec(15, 2, 9)).data, config);
    const std::string dir = (root / ("fit" + std::to_string(levels))).string();
    write_fit(fit, dir);
    const MultilevelFit got = read_fit(dir);
    worst = std::max(worst, diff(fit.global_mean, got.global_mean));
    worst = std::max(worst, diff(fit.grid->points_vector(), got.grid->points_vector()));
    worst = std::max(worst, std::abs(fit.noise_variance - got.noise_variance));
    labels = labels && fit.levels.size() == got.levels.size() && fit.measure_means.size() == got.measure_means.size();
    if (!labels) break;
    for (std::size_t j = 0; j < fit.measure_means.size(); ++j)
      worst = std::max(worst, diff(fit.measure_means[j], got.measure_means[j]));
    for (std::size_t l = 0; l < fit.levels.size(); ++l) {
      const auto &a = fit.levels[l], &b = got.levels[l];
      worst = std::max(worst, diff(a.eig.eigenvalues, b.eig.eigenvalues));
      worst = std::max(worst, diff(a.eig.eigenfunctions, b.eig.eigenfunctions));
      worst = std::max(worst, diff(a.eig.pve, b.eig.pve));
      worst = std::max(worst, std::abs(a.eig.total_variance - b.eig.total_variance));
      worst = std::max(worst, diff(a.scores, b.scores));
      labels = labels && a.units == b.units && a.eig.trimmed == b.eig.trimmed;
    }
    labels = labels && fit.subject_ids == got.subject_ids && fit.measure_ids == got.measure_ids;
  }
  return {labels && worst <= 1e-12, fmt("CSV and fit directories: max abs difference=%.3g (<=1e-12)", worst) +
                                        (labels ? "" : ", labels or shapes differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"eigenstructure recovery (two-level)", recovery_n2},
      {"global ICC recovery", icc_n2},
      {"three-level pipeline", three_level},
      {"test calibration under H0", calibration},
      {"test power", power},
      {"estimator brute-force equivalence", oracle_equivalence},
      {"PSD level surfaces", psd},
      {"BH adjustment", bh},
      {"determinism", determinism},
      {"round trips", round_trips},
  };
  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c + 1, criteria[c].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
