#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfda/mfda.hpp"

namespace mfda::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code(Errc code) {
  switch (code) {
    case Errc::unbalanced_design:
    case Errc::insufficient_replication:
    case Errc::insufficient_data:
    case Errc::empty_group:
      return kModelError;
    case Errc::degenerate_spectrum:
    case Errc::singular_system:
    case Errc::undefined_icc:
    case Errc::asymmetric_matrix:
    case Errc::undefined_correlation:
      return kNumericalError;
    default:
      return kUsageError;
  }
}

[[noreturn]] void usage(const std::string& message) { throw Error(Errc::invalid_parameter, message); }

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& value) { write_text(path, value.dump(2) + "\n"); }

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? sep : "") + items[i];
  return s;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Recorded paths are reduced to the file name so that manifests do not
// depend on where a run happened.
std::string base_name(const std::string& path) { return fs::path(path).filename().string(); }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// Writes one score table; which index columns are filled depends on the level.
std::string score_table(const Eigen::MatrixXd& scores, const std::vector<NestedIndex>& units,
                        const std::vector<std::string>& subjects, const std::vector<std::string>& measures,
                        bool with_measure, bool with_replicate) {
  std::ostringstream out;
  out << "subject,measure,replicate";
  for (Eigen::Index a = 0; a < scores.cols(); ++a) out << ",score_" << (a + 1);
  out << '\n';
  for (std::size_t u = 0; u < units.size(); ++u) {
    out << subjects[units[u].subject] << ',';
    if (with_measure) out << measures[units[u].measure];
    out << ',';
    if (with_replicate && units[u].replicate) out << *units[u].replicate;
    for (Eigen::Index a = 0; a < scores.cols(); ++a) out << ',' << format_real(scores(static_cast<Eigen::Index>(u), a));
    out << '\n';
  }
  return out.str();
}

std::string function_table(const Grid& grid, const Eigen::MatrixXd& columns, const std::string& prefix) {
  std::ostringstream out;
  out << 't';
  for (Eigen::Index a = 0; a < columns.cols(); ++a) out << ',' << prefix << (a + 1);
  out << '\n';
  for (std::size_t j = 0; j < grid.size() && columns.cols() > 0; ++j) {
    out << format_real(grid.point(j));
    for (Eigen::Index a = 0; a < columns.cols(); ++a) out << ',' << format_real(columns(static_cast<Eigen::Index>(j), a));
    out << '\n';
  }
  return out.str();
}

// ---- simulate ----

struct SimulateArgs {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  GeneratorSpec spec = load_spec(args.spec);
  if (args.seed) spec.seed = *args.seed;
  spec.validate();
  const SimulatedData sim = generate(spec);
  const CurveSet& data = sim.data;
  const SimulationTruth& truth = sim.truth;
  const Grid& grid = *data.grid();
  const fs::path dir(args.out);
  make_dir(dir);
  std::vector<std::string> files;

  write_long_csv(data, spec.channel, (dir / "data.csv").string());
  files.push_back("data.csv");

  {
    std::ostringstream csv;
    csv << "t,mean";
    for (std::size_t j = 0; j < truth.measure_means.size(); ++j) csv << ',' << data.measure_ids()[j];
    csv << '\n';
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      csv << format_real(grid.point(j)) << ',' << format_real(truth.mean(r));
      for (const auto& mm : truth.measure_means) csv << ',' << format_real(mm(r));
      csv << '\n';
    }
    write_text(dir / "truth_mean.csv", csv.str());
    files.push_back("truth_mean.csv");
  }
  {
    std::ostringstream csv;
    csv << "level,component,eigenvalue\n";
    for (std::size_t l = 0; l < truth.eigenvalues.size(); ++l) {
      for (Eigen::Index a = 0; a < truth.eigenvalues[l].size(); ++a) {
        csv << (l + 1) << ',' << (a + 1) << ',' << format_real(truth.eigenvalues[l](a)) << '\n';
      }
    }
    write_text(dir / "truth_eigenvalues.csv", csv.str());
    files.push_back("truth_eigenvalues.csv");
  }
  const std::size_t levels = truth.eigenvalues.size();
  for (std::size_t l = 0; l < levels; ++l) {
    const std::string suffix = std::to_string(l + 1) + ".csv";
    write_text(dir / ("truth_eigenfunctions_level" + suffix), function_table(grid, truth.eigenfunctions[l], "phi_"));
    files.push_back("truth_eigenfunctions_level" + suffix);
    const bool with_measure = levels == 1 || l >= 1;
    const bool with_replicate = levels == 1 || l >= 2;
    write_text(dir / ("truth_scores_level" + suffix),
               score_table(truth.scores[l], truth.units[l], data.subject_ids(), data.measure_ids(), with_measure,
                           with_replicate));
    files.push_back("truth_scores_level" + suffix);
  }
  {
    std::ostringstream csv;
    csv << "t,icc\n";
    for (std::size_t j = 0; j < grid.size(); ++j) {
      csv << format_real(grid.point(j)) << ',' << format_real(truth.analytic_pointwise_icc(static_cast<Eigen::Index>(j)))
          << '\n';
    }
    write_text(dir / "truth_pointwise_icc.csv", csv.str());
    files.push_back("truth_pointwise_icc.csv");
  }
  json eig = json::array();
  for (const auto& values : truth.eigenvalues) eig.push_back(std::vector<double>(values.data(), values.data() + values.size()));
  write_json(dir / "truth.json", json{{"analytic_icc", truth.analytic_icc},
                                      {"noise_variance", truth.noise_variance},
                                      {"levels", levels},
                                      {"eigenvalues", eig}});
  files.push_back("truth.json");
  write_text(dir / "spec.json", spec_to_json(spec) + "\n");
  files.push_back("spec.json");

  const DesignLayout layout = data.layout();
  files.push_back("manifest.json");
  write_json(dir / "manifest.json", json{{"format", kFormatVersion},
                                         {"version", library_version()},
                                         {"command", "simulate"},
                                         {"spec", base_name(args.spec)},
                                         {"seed", spec.seed},
                                         {"channel", spec.channel},
                                         {"curves", data.rows()},
                                         {"subjects", layout.n_subjects},
                                         {"measures", layout.n_measures},
                                         {"replicates", spec.replicates},
                                         {"files", files}});

  out << "curves=" << data.rows() << " subjects=" << layout.n_subjects << " measures=" << layout.n_measures
      << " replicates=" << spec.replicates << " levels=" << levels << '\n';
  out << "analytic_icc=" << format_real(truth.analytic_icc) << '\n';
}

// ---- fit ----

struct FitArgs {
  std::string data;
  std::string out;
  std::string config_file;
  CLI::Option* channel_opt = nullptr;
  CLI::Option* levels_opt = nullptr;
  CLI::Option* pve_opt = nullptr;
  CLI::Option* smooth_opt = nullptr;
  CLI::Option* no_means_opt = nullptr;
  CLI::Option* noise_bw_opt = nullptr;
  CLI::Option* policy_opt = nullptr;
  std::string channel = "value";
  int levels = 2;
  double pve = 0.9;
  std::vector<std::string> smooth;
  double noise_bandwidth = 0.0;
  std::string grid_policy = "strict";
};

struct FitSettings {
  std::string channel = "value";
  std::string grid_policy = "strict";
  NestedConfig config;
};

FitSettings read_fit_config(const std::string& path) {
  FitSettings s;
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(Errc::parse_error, path + ": expected a JSON object");
  static const std::set<std::string> known = {"channel", "levels", "pve", "smooth", "bandwidth",
                                              "measure_means", "noise_bandwidth", "grid_policy"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw Error(Errc::parse_error, path + ": unknown key '" + key + "'");
    }
    s.channel = j.value("channel", s.channel);
    s.grid_policy = j.value("grid_policy", s.grid_policy);
    s.config.levels = j.value("levels", s.config.levels);
    s.config.pve = j.value("pve", s.config.pve);
    s.config.smoothing.enabled = j.value("smooth", s.config.smoothing.enabled);
    s.config.smoothing.bandwidth = j.value("bandwidth", s.config.smoothing.bandwidth);
    s.config.measure_means = j.value("measure_means", s.config.measure_means);
    s.config.noise_bandwidth = j.value("noise_bandwidth", s.config.noise_bandwidth);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, path + ": " + e.what());
  }
  return s;
}

void cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err) {
  FitSettings s = args.config_file.empty() ? FitSettings{} : read_fit_config(args.config_file);
  if (args.channel_opt->count()) s.channel = args.channel;
  if (args.policy_opt->count()) s.grid_policy = args.grid_policy;
  if (args.levels_opt->count()) s.config.levels = args.levels;
  if (args.pve_opt->count()) s.config.pve = args.pve;
  if (args.smooth_opt->count()) {
    s.config.smoothing.enabled = true;
    if (!args.smooth.empty() && !args.smooth.front().empty()) {
      try {
        s.config.smoothing.bandwidth = std::stod(args.smooth.front());
      } catch (const std::exception&) {
        usage("--smooth expects a bandwidth, got '" + args.smooth.front() + "'");
      }
    }
  }
  if (args.no_means_opt->count()) s.config.measure_means = false;
  if (args.noise_bw_opt->count()) s.config.noise_bandwidth = args.noise_bandwidth;
  if (s.config.levels != 2 && s.config.levels != 3) usage("--levels must be 2 or 3");
  if (!(s.config.smoothing.bandwidth > 0.0)) usage("smoothing bandwidth must be positive");

  GridPolicy policy = GridPolicy::strict;
  if (s.grid_policy == "intersect") policy = GridPolicy::intersect;
  else if (s.grid_policy != "strict") usage("grid policy must be 'strict' or 'intersect'");

  const IngestResult ingest = read_long_csv(args.data, s.channel, policy);
  if (!ingest.report.dropped_points.empty()) {
    err << "note: intersect policy dropped " << ingest.report.dropped_points.size() << " points:";
    for (const auto& p : ingest.report.dropped_points) err << ' ' << p;
    err << '\n';
  }
  const MultilevelFit fit = fit_nested(ingest.curves, s.config);

  FitProvenance provenance;
  provenance.source = base_name(args.data);
  provenance.channel = s.channel;
  provenance.options = {{"command", "fit"},
                        {"grid_policy", s.grid_policy},
                        {"config_file", args.config_file.empty() ? "" : base_name(args.config_file)}};
  write_fit(fit, args.out, provenance);

  double total = fit.noise_variance;
  for (const auto& level : fit.levels) total += level.eig.eigenvalue_sum();
  const auto share = [&](double v) { return total > 0.0 ? v / total : 0.0; };
  const DesignLayout& layout = ingest.report.layout;
  out << "model=N" << fit.levels.size() << " curves=" << ingest.curves.rows() << " subjects=" << layout.n_subjects
      << " measures=" << layout.n_measures << '\n';
  for (std::size_t l = 0; l < fit.levels.size(); ++l) {
    const double v = fit.levels[l].eig.eigenvalue_sum();
    out << "level=" << (l + 1) << " components=" << fit.levels[l].eig.components() << " variance=" << format_real(v)
        << " share=" << format_real(share(v)) << '\n';
  }
  out << "noise variance=" << format_real(fit.noise_variance) << " share=" << format_real(share(fit.noise_variance))
      << '\n';
}

// ---- icc ----

struct IccArgs {
  std::string fit_dir;
  std::string out;
};

MultilevelFit load_nested(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "manifest.json")) {
    throw Error(Errc::io_error, "'" + dir + "' is not a fit directory (no manifest.json)");
  }
  const std::string model = read_fit_model(dir);
  if (model != "N2" && model != "N3") usage("'" + dir + "' holds a " + model + " fit; a nested fit is required");
  return read_fit(dir);
}

void cmd_icc(const IccArgs& args, std::ostream& out) {
  const MultilevelFit fit = load_nested(args.fit_dir);
  const IccReport report = icc_report(fit);
  const fs::path dir(args.out.empty() ? args.fit_dir : args.out);
  make_dir(dir);
  write_json(dir / "icc.json", json{{"global_icc", report.global_icc},
                                    {"level_variances", report.level_variances},
                                    {"noise_variance", report.noise_variance}});
  std::ostringstream csv;
  csv << "t,icc\n";
  const Grid& grid = *fit.grid;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    csv << format_real(grid.point(j)) << ',' << format_real(report.pointwise.values(static_cast<Eigen::Index>(j)))
        << '\n';
  }
  write_text(dir / "pointwise_icc.csv", csv.str());
  out << fixed2(report.global_icc) << '\n';
}

// ---- test ----

struct TestArgs {
  std::string fit_dir;
  std::string out;
  int level = 2;
  std::vector<std::string> group_a, group_b;
  std::string method = "energy";
  std::size_t perms = 999;
  std::uint64_t seed = 1;
  bool paired = false;
  bool asymptotic_ks = false;
};

void cmd_test(const TestArgs& args, std::ostream& out, std::ostream& err) {
  const TestMethod method = parse_test_method(args.method);
  if (args.group_a.empty() || args.group_b.empty()) usage("--group-a and --group-b must both name measures");
  const MultilevelFit fit = load_nested(args.fit_dir);
  if (args.level < 2 || args.level > static_cast<int>(fit.levels.size())) {
    usage("--level must be between 2 and " + std::to_string(fit.levels.size()) + " for this fit");
  }
  std::map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < fit.measure_ids.size(); ++j) position[fit.measure_ids[j]] = j;
  std::vector<int> side(fit.measure_ids.size(), 0);
  const auto assign = [&](const std::vector<std::string>& ids, int label) {
    for (const auto& id : ids) {
      const auto it = position.find(id);
      if (it == position.end()) usage("unknown measure id '" + id + "'; known ids: " + join(fit.measure_ids, ", "));
      if (side[it->second] != 0 && side[it->second] != label) usage("measure '" + id + "' is in both groups");
      side[it->second] = label;
    }
  };
  assign(args.group_a, 1);
  assign(args.group_b, 2);

  const LevelFit& level = fit.levels[static_cast<std::size_t>(args.level - 1)];
  std::vector<Eigen::Index> rows_a, rows_b;
  PairedBlocks blocks;
  for (std::size_t u = 0; u < level.units.size(); ++u) {
    const int s = side[level.units[u].measure];
    if (s == 1) {
      rows_a.push_back(static_cast<Eigen::Index>(u));
      blocks.subject_a.push_back(level.units[u].subject);
    } else if (s == 2) {
      rows_b.push_back(static_cast<Eigen::Index>(u));
      blocks.subject_b.push_back(level.units[u].subject);
    }
  }
  const auto gather = [&](const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), level.scores.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = level.scores.row(rows[r]);
    return m;
  };
  ScoreTestOptions options;
  options.method = method;
  options.n_permutations = args.perms;
  options.seed = args.seed;
  options.asymptotic_ks = args.asymptotic_ks;
  if (args.paired) options.paired = blocks;
  if (level.scores.cols() == 0) err << "note: level " << args.level << " retained no components; global p is 1\n";
  const TestReport report = two_sample_score_test(gather(rows_a), gather(rows_b), options);

  json per_score = json::array();
  for (const auto& c : report.per_score) {
    per_score.push_back(json{{"component", c.component},
                             {"statistic", c.statistic},
                             {"raw_p", c.raw_p},
                             {"adjusted_p", c.adjusted_p},
                             {"degenerate", c.degenerate}});
  }
  const fs::path dir(args.out.empty() ? args.fit_dir : args.out);
  make_dir(dir);
  write_json(dir / "test_report.json", json{{"level", args.level},
                                            {"group_a", args.group_a},
                                            {"group_b", args.group_b},
                                            {"n_a", rows_a.size()},
                                            {"n_b", rows_b.size()},
                                            {"method", std::string(to_string(report.method))},
                                            {"n_permutations", report.n_permutations},
                                            {"seed", report.seed},
                                            {"asymptotic_ks", report.asymptotic_ks},
                                            {"paired", report.paired},
                                            {"per_score", per_score},
                                            {"global_p", report.global_p}});
  out << format_real(report.global_p) << '\n';
}

// ---- correlate ----

struct CorrelateArgs {
  std::string fit_dir;
  std::string covariate;
  std::string column;
  std::string out;
  int level = 1;
};

void cmd_correlate(const CorrelateArgs& args, std::ostream& out) {
  std::ifstream in(args.covariate);
  if (!in) throw Error(Errc::io_error, "cannot open covariate file '" + args.covariate + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::parse_error, args.covariate + ": empty file");
  const std::vector<std::string> header = split_line(line);
  const auto subject_col = std::find(header.begin(), header.end(), "subject");
  if (subject_col == header.end()) throw Error(Errc::parse_error, args.covariate + ": no 'subject' column");
  std::size_t value_col = 0;
  if (args.column.empty()) {
    if (header.size() != 2) usage("the covariate file has several columns; choose one with --column");
    value_col = subject_col == header.begin() ? 1 : 0;
  } else {
    const auto it = std::find(header.begin(), header.end(), args.column);
    if (it == header.end()) usage("covariate column '" + args.column + "' not found; columns: " + join(header, ", "));
    value_col = static_cast<std::size_t>(it - header.begin());
  }
  const auto key_col = static_cast<std::size_t>(subject_col - header.begin());
  std::map<std::string, double> covariate;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    const std::string where = args.covariate + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) throw Error(Errc::parse_error, where + ": expected " + std::to_string(header.size()) + " fields");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(fields[value_col], &used);
      if (used != fields[value_col].size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw Error(Errc::parse_error, where + ": not a number '" + fields[value_col] + "'");
    }
    if (!covariate.emplace(fields[key_col], v).second) {
      throw Error(Errc::duplicate_record, where + ": subject '" + fields[key_col] + "' listed twice");
    }
  }

  const MultilevelFit fit = load_nested(args.fit_dir);
  if (args.level < 1 || args.level > static_cast<int>(fit.levels.size())) {
    usage("--level must be between 1 and " + std::to_string(fit.levels.size()));
  }
  const LevelFit& level = fit.levels[static_cast<std::size_t>(args.level - 1)];
  std::vector<double> values;
  std::vector<std::string> missing;
  for (const auto& unit : level.units) {
    const std::string& id = fit.subject_ids[unit.subject];
    const auto it = covariate.find(id);
    if (it == covariate.end()) missing.push_back(id);
    else values.push_back(it->second);
  }
  if (!missing.empty()) {
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    usage("no covariate value for subjects: " + join(missing, ", "));
  }
  const std::vector<CorrelationResult> results = score_covariate_correlation(level.scores, values);

  const fs::path dir(args.out.empty() ? args.fit_dir : args.out);
  make_dir(dir);
  std::ostringstream csv;
  csv << "component,rho,p_value\n";
  for (const auto& r : results) {
    csv << r.component << ',' << format_real(r.rho) << ',' << format_real(r.p_value) << '\n';
    out << "component=" << r.component << " rho=" << format_real(r.rho) << " p=" << format_real(r.p_value) << '\n';
  }
  write_text(dir / "correlation.csv", csv.str());

  std::ostringstream scatter;
  scatter << "subject,measure,replicate,covariate";
  for (Eigen::Index a = 0; a < level.scores.cols(); ++a) scatter << ",score_" << (a + 1);
  scatter << '\n';
  for (std::size_t u = 0; u < level.units.size(); ++u) {
    const NestedIndex& idx = level.units[u];
    scatter << fit.subject_ids[idx.subject] << ',';
    if (args.level >= 2) scatter << fit.measure_ids[idx.measure];
    scatter << ',';
    if (args.level >= 3 && idx.replicate) scatter << *idx.replicate;
    scatter << ',' << format_real(values[u]);
    for (Eigen::Index a = 0; a < level.scores.cols(); ++a) {
      scatter << ',' << format_real(level.scores(static_cast<Eigen::Index>(u), a));
    }
    scatter << '\n';
  }
  write_text(dir / "correlation_scatter.csv", scatter.str());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilevel functional principal component analysis", "mfda"};
  app.require_subcommand(1);
  app.set_version_flag("--version", library_version());
  std::function<void()> action;

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw a data set from a generator spec");
  simulate->add_option("spec", sim.spec, "Generator spec (JSON)")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Override the spec seed");
  simulate->callback([&] { action = [&] { cmd_simulate(sim, out); }; });

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a two- or three-level model to a long CSV");
  fit->add_option("data", fa.data, "Long CSV file")->required();
  fit->add_option("--out", fa.out, "Output directory")->required();
  fit->add_option("--config", fa.config_file, "JSON config; flags take precedence");
  fa.channel_opt = fit->add_option("--channel", fa.channel, "Channel to analyse (default value)");
  fa.levels_opt = fit->add_option("--levels", fa.levels, "Number of levels, 2 or 3 (default 2)");
  fa.pve_opt = fit->add_option("--pve", fa.pve, "Variance share for component selection (default 0.9)");
  fa.smooth_opt = fit->add_option("--smooth", fa.smooth, "Smooth the level surfaces, optional bandwidth (default 0.05)")
                      ->expected(0, 1);
  fa.no_means_opt = fit->add_flag("--no-measure-means", "Do not estimate per-measure mean deviations");
  fa.noise_bw_opt = fit->add_option("--noise-bandwidth", fa.noise_bandwidth, "Bandwidth of the diagonal limit (default: grid spacing)");
  fa.policy_opt = fit->add_option("--grid-policy", fa.grid_policy, "strict or intersect (default strict)");
  fit->callback([&] { action = [&] { cmd_fit(fa, out, err); }; });

  IccArgs ia;
  auto* icc = app.add_subcommand("icc", "Global and pointwise intraclass correlation of a fit");
  icc->add_option("fit", ia.fit_dir, "Fit directory")->required();
  icc->add_option("--out", ia.out, "Output directory (default: the fit directory)");
  icc->callback([&] { action = [&] { cmd_icc(ia, out); }; });

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Compare score distributions of two groups of measures");
  test->add_option("fit", ta.fit_dir, "Fit directory")->required();
  test->add_option("--level", ta.level, "Level whose scores are compared (default 2)");
  test->add_option("--group-a", ta.group_a, "Measure ids of group a")->delimiter(',')->required();
  test->add_option("--group-b", ta.group_b, "Measure ids of group b")->delimiter(',')->required();
  test->add_option("--method", ta.method, "ks, cvm or energy (default energy)");
  test->add_option("--perms", ta.perms, "Number of permutations (default 999)");
  test->add_option("--seed", ta.seed, "Permutation seed (default 1)");
  test->add_flag("--paired", ta.paired, "Permute within subjects");
  test->add_flag("--asymptotic-ks", ta.asymptotic_ks, "Large-sample p-values (ks only)");
  test->add_option("--out", ta.out, "Output directory (default: the fit directory)");
  test->callback([&] { action = [&] { cmd_test(ta, out, err); }; });

  CorrelateArgs ca;
  auto* correlate = app.add_subcommand("correlate", "Spearman correlation of scores with a subject covariate");
  correlate->add_option("fit", ca.fit_dir, "Fit directory")->required();
  correlate->add_option("--covariate", ca.covariate, "CSV with a subject column")->required();
  correlate->add_option("--column", ca.column, "Covariate column");
  correlate->add_option("--level", ca.level, "Level whose scores are used (default 1)");
  correlate->add_option("--out", ca.out, "Output directory (default: the fit directory)");
  correlate->callback([&] { action = [&] { cmd_correlate(ca, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kSuccess : kUsageError;
  }
  try {
    action();
    return kSuccess;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace mfda::cli
