#include "mfda/simkl.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "mfda/error.hpp"
#include "mfda/parallel.hpp"
#include "mfda/random.hpp"

namespace mfda {

using nlohmann::json;

Eigen::MatrixXd fourier_matrix(const Grid& grid, std::size_t count, std::size_t first) {
  if (first < 1) throw Error(Errc::invalid_parameter, "Fourier positions start at 1");
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd out(m, static_cast<Eigen::Index>(count));
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t q = first + c;
    const double cycles = static_cast<double>((q + 1) / 2);
    const bool use_sin = (q % 2) == 1;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double arg = 2.0 * std::numbers::pi * cycles * grid.point(static_cast<std::size_t>(j));
      out(j, static_cast<Eigen::Index>(c)) = std::numbers::sqrt2 * (use_sin ? std::sin(arg) : std::cos(arg));
    }
  }
  return out;
}

std::vector<Curve> fourier_basis(const GridPtr& grid, std::size_t count, std::size_t first) {
  const Eigen::MatrixXd values = fourier_matrix(*grid, count, first);
  std::vector<Curve> out;
  out.reserve(count);
  for (Eigen::Index c = 0; c < values.cols(); ++c) out.emplace_back(grid, values.col(c));
  return out;
}

Eigen::VectorXd FunctionSpec::evaluate(const Grid& grid) const {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (!tabulated.empty()) {
    if (tabulated.size() != grid.size()) {
      throw Error(Errc::invalid_spec, "tabulated function has " + std::to_string(tabulated.size()) +
                                          " values for a grid of " + std::to_string(grid.size()));
    }
    return Eigen::Map<const Eigen::VectorXd>(tabulated.data(), m);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double t = grid.point(static_cast<std::size_t>(j));
    for (const auto& term : terms) {
      const double arg = 2.0 * std::numbers::pi * term.frequency * t;
      switch (term.kind) {
        case Kind::constant: out(j) += term.amplitude; break;
        case Kind::sin: out(j) += term.amplitude * std::sin(arg); break;
        case Kind::cos: out(j) += term.amplitude * std::cos(arg); break;
        case Kind::power: out(j) += term.amplitude * std::pow(t, term.frequency); break;
      }
    }
  }
  return out;
}

GridPtr GeneratorSpec::make_grid() const {
  if (!grid_custom.empty()) return Grid::from_points(grid_custom);
  return Grid::uniform(grid_points);
}

double GeneratorSpec::analytic_icc() const {
  double total = noise_variance;
  std::vector<double> sums;
  for (const auto& level : levels) {
    double s = 0.0;
    for (double v : level.eigenvalues) s += v;
    sums.push_back(s);
    total += s;
  }
  if (sums.empty() || !(total > 0.0)) throw Error(Errc::undefined_icc, "generator has zero total variance");
  return sums.front() / total;
}

namespace {

Eigen::MatrixXd level_basis(const LevelSpec& level, const Grid& grid) {
  const std::size_t k = level.eigenvalues.size();
  if (level.basis.family == BasisSpec::Family::fourier) return fourier_matrix(grid, k, level.basis.first);
  if (level.basis.tabulated.size() != k) {
    throw Error(Errc::invalid_spec, "tabulated basis has " + std::to_string(level.basis.tabulated.size()) +
                                        " functions for " + std::to_string(k) + " eigenvalues");
  }
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd out(m, static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    if (level.basis.tabulated[c].size() != grid.size()) {
      throw Error(Errc::invalid_spec, "tabulated eigenfunction " + std::to_string(c + 1) + " does not match the grid");
    }
    out.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(level.basis.tabulated[c].data(), m);
  }
  return out;
}

void check_orthonormal(const Eigen::MatrixXd& basis, const Grid& grid, std::size_t level) {
  const Eigen::MatrixXd gram = basis.transpose() * grid.weights_vector().asDiagonal() * basis;
  std::ostringstream bad;
  for (Eigen::Index a = 0; a < gram.rows(); ++a) {
    for (Eigen::Index b = 0; b < gram.cols(); ++b) {
      const double target = a == b ? 1.0 : 0.0;
      if (std::abs(gram(a, b) - target) > 1e-6) {
        bad << " G(" << a + 1 << "," << b + 1 << ")=" << gram(a, b);
      }
    }
  }
  if (!bad.str().empty()) {
    throw Error(Errc::invalid_basis, "level " + std::to_string(level) + " basis is not orthonormal on the grid:" + bad.str());
  }
}

}  // namespace

void GeneratorSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::invalid_spec, msg); };
  if (levels.empty() || levels.size() > 3) fail("a generator needs one to three levels");
  if (subjects < 1) fail("design needs at least one subject");
  if (measures < 1) fail("design needs at least one measure");
  if (levels.size() == 1 && (measures != 1 || replicates != 0)) {
    fail("a one-level generator has one measure and no replicates");
  }
  if (levels.size() == 2 && replicates != 0) fail("a two-level generator has no replicate level (set replicates to 0)");
  if (levels.size() == 3 && replicates < 1) fail("a three-level generator needs replicates >= 1");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) fail("noise_variance must be >= 0");
  if (!measure_labels.empty() && measure_labels.size() != measures) fail("measure_labels must list every measure");
  if (!measure_means.empty() && measure_means.size() != measures) fail("measure_means must list every measure");
  if (distribution == ScoreDistribution::student_t && t_df <= 2) fail("student_t scores need df > 2");
  const GridPtr grid = make_grid();
  (void)mean.evaluate(*grid);
  for (const auto& f : measure_means) (void)f.evaluate(*grid);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (double v : levels[l].eigenvalues) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail("eigenvalues must be >= 0 (level " + std::to_string(l + 1) + ")");
    }
    check_orthonormal(level_basis(levels[l], *grid), *grid, l + 1);
  }
  for (const auto& s : shifts) {
    if (s.level < 2 || static_cast<std::size_t>(s.level) > levels.size()) fail("score shifts apply to levels 2 or 3 only");
    if (s.component < 1 || s.component > levels[static_cast<std::size_t>(s.level) - 1].eigenvalues.size()) {
      fail("score shift names a missing component");
    }
    if (s.measure < 1 || s.measure > measures) fail("score shift names a missing measure");
  }
}

SimulatedData generate(const GeneratorSpec& spec) {
  spec.validate();
  const GridPtr grid = spec.make_grid();
  const auto m = static_cast<Eigen::Index>(grid->size());
  const std::size_t L = spec.levels.size();
  const std::size_t n = spec.subjects, J = spec.measures;
  const std::size_t K = std::max<std::size_t>(spec.replicates, 1);
  const std::size_t rows = n * J * K;

  SimulationTruth truth;
  truth.mean = spec.mean.evaluate(*grid);
  for (std::size_t j = 0; j < J; ++j) {
    truth.measure_means.push_back(spec.measure_means.empty() ? Eigen::VectorXd::Zero(m)
                                                             : spec.measure_means[j].evaluate(*grid));
  }
  const std::size_t units_per_level[3] = {n, n * J, n * J * K};
  for (std::size_t l = 0; l < L; ++l) {
    const auto& level = spec.levels[l];
    truth.eigenfunctions.push_back(level_basis(level, *grid));
    truth.eigenvalues.push_back(
        Eigen::Map<const Eigen::VectorXd>(level.eigenvalues.data(), static_cast<Eigen::Index>(level.eigenvalues.size())));
    truth.scores.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(units_per_level[l]),
                                                 static_cast<Eigen::Index>(level.eigenvalues.size())));
    truth.level_curves.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(units_per_level[l]), m));
    truth.units.emplace_back();
  }
  truth.noise = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), m);
  truth.noise_variance = spec.noise_variance;
  // Undefined for a variance-free generator; the data are still well defined.
  truth.analytic_icc = std::numeric_limits<double>::quiet_NaN();
  try {
    truth.analytic_icc = spec.analytic_icc();
  } catch (const Error&) {
  }

  std::vector<NestedIndex> index(rows);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t k = 0; k < K; ++k) {
        index[(i * J + j) * K + k] = {i, j, L == 3 ? std::optional<int>(static_cast<int>(k + 1)) : std::nullopt};
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    truth.units[0].push_back({i, 0, std::nullopt});
    for (std::size_t j = 0; j < J && L >= 2; ++j) {
      truth.units[1].push_back({i, j, std::nullopt});
      for (std::size_t k = 0; k < K && L == 3; ++k) truth.units[2].push_back(index[(i * J + j) * K + k]);
    }
  }

  const double t_scale = spec.distribution == ScoreDistribution::student_t
                             ? std::sqrt(static_cast<double>(spec.t_df - 2) / static_cast<double>(spec.t_df))
                             : 1.0;
  auto draw_score = [&](RandomStream& rng) {
    const double z = rng.normal();
    if (spec.distribution == ScoreDistribution::gaussian) return z;
    double chi2 = 0.0;
    for (int d = 0; d < spec.t_df; ++d) {
      const double g = rng.normal();
      chi2 += g * g;
    }
    return t_scale * z / std::sqrt(chi2 / static_cast<double>(spec.t_df));
  };
  auto shift_for = [&](int level, std::size_t component, std::size_t measure) {
    double total = 0.0;
    for (const auto& s : spec.shifts) {
      if (s.level == level && s.component == component + 1 && s.measure == measure + 1) total += s.shift;
    }
    return total;
  };
  auto draw_level = [&](std::size_t l, Eigen::Index unit, std::size_t measure, RandomStream& rng) {
    Eigen::MatrixXd& scores = truth.scores[l];
    for (Eigen::Index a = 0; a < scores.cols(); ++a) {
      scores(unit, a) = std::sqrt(truth.eigenvalues[l](a)) * draw_score(rng) +
                        shift_for(static_cast<int>(l + 1), static_cast<std::size_t>(a), measure);
    }
    if (scores.cols() > 0) {
      truth.level_curves[l].row(unit) = (truth.eigenfunctions[l] * scores.row(unit).transpose()).transpose();
    }
  };

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), m);
  parallel_for(n, [&](std::size_t i) {
    RandomStream rng(spec.seed, i + 1);
    const auto subject = static_cast<Eigen::Index>(i);
    draw_level(0, subject, 0, rng);
    for (std::size_t j = 0; j < J; ++j) {
      const auto cell = static_cast<Eigen::Index>(i * J + j);
      if (L >= 2) draw_level(1, cell, j, rng);
      for (std::size_t k = 0; k < K; ++k) {
        const auto row = static_cast<Eigen::Index>((i * J + j) * K + k);
        if (L == 3) draw_level(2, row, j, rng);
        const double sd = std::sqrt(spec.noise_variance);
        for (Eigen::Index t = 0; t < m; ++t) truth.noise(row, t) = sd * rng.normal();
        Eigen::VectorXd curve = truth.mean + truth.measure_means[j] + truth.level_curves[0].row(subject).transpose();
        if (L >= 2) curve += truth.level_curves[1].row(cell).transpose();
        if (L == 3) curve += truth.level_curves[2].row(row).transpose();
        values.row(row) = (curve + truth.noise.row(row).transpose()).transpose();
      }
    }
  });

  Eigen::VectorXd numerator = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd denominator = Eigen::VectorXd::Constant(m, spec.noise_variance);
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::VectorXd v = truth.eigenfunctions[l].array().square().matrix() * truth.eigenvalues[l];
    if (l == 0) numerator = v;
    denominator += v;
  }
  truth.analytic_pointwise_icc = numerator.cwiseQuotient(denominator.cwiseMax(1e-300));

  std::vector<std::string> subject_ids(n);
  for (std::size_t i = 0; i < n; ++i) subject_ids[i] = "S" + std::to_string(i + 1);
  std::vector<std::string> measure_ids = spec.measure_labels;
  if (measure_ids.empty()) {
    for (std::size_t j = 0; j < J; ++j) measure_ids.push_back("M" + std::to_string(j + 1));
  }
  return {CurveSet(grid, std::move(values), std::move(index), std::move(subject_ids), std::move(measure_ids)),
          std::move(truth)};
}

namespace {

json function_to_json(const FunctionSpec& f) {
  if (!f.tabulated.empty()) return json{{"tabulated", f.tabulated}};
  json terms = json::array();
  for (const auto& t : f.terms) {
    const char* kind = "constant";
    switch (t.kind) {
      case FunctionSpec::Kind::constant: kind = "constant"; break;
      case FunctionSpec::Kind::sin: kind = "sin"; break;
      case FunctionSpec::Kind::cos: kind = "cos"; break;
      case FunctionSpec::Kind::power: kind = "power"; break;
    }
    json term{{"kind", kind}, {"amplitude", t.amplitude}};
    if (t.kind != FunctionSpec::Kind::constant) term["frequency"] = t.frequency;
    terms.push_back(term);
  }
  return json{{"terms", terms}};
}

FunctionSpec function_from_json(const json& j) {
  FunctionSpec f;
  if (j.contains("tabulated")) {
    f.tabulated = j.at("tabulated").get<std::vector<double>>();
    return f;
  }
  for (const auto& term : j.value("terms", json::array())) {
    FunctionSpec::Term t;
    const std::string kind = term.value("kind", "constant");
    if (kind == "constant") t.kind = FunctionSpec::Kind::constant;
    else if (kind == "sin") t.kind = FunctionSpec::Kind::sin;
    else if (kind == "cos") t.kind = FunctionSpec::Kind::cos;
    else if (kind == "power") t.kind = FunctionSpec::Kind::power;
    else throw Error(Errc::invalid_spec, "unknown function term kind '" + kind + "'");
    t.amplitude = term.at("amplitude").get<double>();
    t.frequency = term.value("frequency", 1.0);
    f.terms.push_back(t);
  }
  return f;
}

}  // namespace

std::string spec_to_json(const GeneratorSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["channel"] = spec.channel;
  j["grid"] = spec.grid_custom.empty() ? json{{"points", spec.grid_points}} : json{{"custom", spec.grid_custom}};
  json design{{"subjects", spec.subjects}, {"measures", spec.measures}, {"replicates", spec.replicates}};
  if (!spec.measure_labels.empty()) design["measure_labels"] = spec.measure_labels;
  j["design"] = design;
  j["mean"] = function_to_json(spec.mean);
  if (!spec.measure_means.empty()) {
    json mm = json::array();
    for (const auto& f : spec.measure_means) mm.push_back(function_to_json(f));
    j["measure_means"] = mm;
  }
  json levels = json::array();
  for (const auto& level : spec.levels) {
    json basis;
    if (level.basis.family == BasisSpec::Family::fourier) {
      basis = json{{"family", "fourier"}, {"first", level.basis.first}};
    } else {
      basis = json{{"family", "tabulated"}, {"functions", level.basis.tabulated}};
    }
    levels.push_back(json{{"eigenvalues", level.eigenvalues}, {"basis", basis}});
  }
  j["levels"] = levels;
  j["noise_variance"] = spec.noise_variance;
  json scores{{"distribution", spec.distribution == ScoreDistribution::gaussian ? "gaussian" : "student_t"}};
  if (spec.distribution == ScoreDistribution::student_t) scores["df"] = spec.t_df;
  if (!spec.shifts.empty()) {
    json shifts = json::array();
    for (const auto& s : spec.shifts) {
      shifts.push_back(json{{"level", s.level}, {"component", s.component}, {"measure", s.measure}, {"shift", s.shift}});
    }
    scores["shifts"] = shifts;
  }
  j["scores"] = scores;
  return j.dump(2) + "\n";
}

GeneratorSpec spec_from_json(const std::string& text) {
  GeneratorSpec spec;
  try {
    const json j = json::parse(text);
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.channel = j.value("channel", std::string("value"));
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      if (g.contains("custom")) spec.grid_custom = g.at("custom").get<std::vector<double>>();
      spec.grid_points = g.value("points", std::size_t{101});
    }
    const json& design = j.at("design");
    spec.subjects = design.at("subjects").get<std::size_t>();
    spec.measures = design.value("measures", std::size_t{1});
    spec.replicates = design.value("replicates", std::size_t{0});
    if (design.contains("measure_labels")) spec.measure_labels = design.at("measure_labels").get<std::vector<std::string>>();
    if (j.contains("mean")) spec.mean = function_from_json(j.at("mean"));
    if (j.contains("measure_means")) {
      for (const auto& f : j.at("measure_means")) spec.measure_means.push_back(function_from_json(f));
    }
    for (const auto& level : j.at("levels")) {
      LevelSpec ls;
      ls.eigenvalues = level.at("eigenvalues").get<std::vector<double>>();
      const json basis = level.value("basis", json{{"family", "fourier"}});
      const std::string family = basis.value("family", std::string("fourier"));
      if (family == "fourier") {
        ls.basis.family = BasisSpec::Family::fourier;
        ls.basis.first = basis.value("first", std::size_t{1});
      } else if (family == "tabulated") {
        ls.basis.family = BasisSpec::Family::tabulated;
        ls.basis.tabulated = basis.at("functions").get<std::vector<std::vector<double>>>();
      } else {
        throw Error(Errc::invalid_spec, "unknown basis family '" + family + "'");
      }
      spec.levels.push_back(std::move(ls));
    }
    spec.noise_variance = j.value("noise_variance", 0.0);
    if (j.contains("scores")) {
      const json& scores = j.at("scores");
      const std::string dist = scores.value("distribution", std::string("gaussian"));
      if (dist == "gaussian") spec.distribution = ScoreDistribution::gaussian;
      else if (dist == "student_t") spec.distribution = ScoreDistribution::student_t;
      else throw Error(Errc::invalid_spec, "unknown score distribution '" + dist + "'");
      spec.t_df = scores.value("df", 5);
      for (const auto& s : scores.value("shifts", json::array())) {
        spec.shifts.push_back({s.at("level").get<int>(), s.at("component").get<std::size_t>(),
                               s.at("measure").get<std::size_t>(), s.at("shift").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_spec, std::string("generator spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

GeneratorSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open generator spec '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return spec_from_json(text.str());
}

}  // namespace mfda
