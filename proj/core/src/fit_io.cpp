#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mfda/error.hpp"
#include "mfda/ingest.hpp"
#include "text_io.hpp"

namespace mfda {

namespace fs = std::filesystem;
using nlohmann::json;
using detail::format_double;

namespace {

struct LevelView {
  const EigenSystem* eig;
  const Eigen::MatrixXd* scores;
  const std::vector<NestedIndex>* units;
};

struct FitView {
  std::string model;
  const Grid* grid;
  const Eigen::VectorXd* mean;
  std::vector<Eigen::VectorXd> measure_means;
  std::vector<LevelView> levels;
  double noise_variance;
  json config;
  const std::vector<std::string>* subject_ids;
  const std::vector<std::string>* measure_ids;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(Errc::io_error, "write failed for '" + path.string() + "'");
}

// Which index fields a score file carries at each level of a model.
struct UnitFields {
  bool measure;
  bool replicate;
};

UnitFields unit_fields(const std::string& model, std::size_t level) {
  if (model == "N1") return {true, true};
  if (level == 1) return {false, false};
  if (level == 2) return {true, false};
  return {true, true};
}

void write_view(const FitView& view, const std::string& out_dir, const FitProvenance& provenance) {
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create '" + dir.string() + "': " + ec.message());
  const Grid& grid = *view.grid;
  const std::size_t m = grid.size();
  std::vector<std::string> files;

  {
    const fs::path path = dir / "mean.csv";
    auto out = open_out(path);
    out << "t,mean\n";
    for (std::size_t j = 0; j < m; ++j) {
      out << format_double(grid.point(j)) << ',' << format_double((*view.mean)(static_cast<Eigen::Index>(j))) << '\n';
    }
    finish(out, path);
    files.push_back("mean.csv");
  }
  {
    const fs::path path = dir / "measure_means.csv";
    auto out = open_out(path);
    out << 't';
    for (std::size_t q = 0; q < view.measure_means.size(); ++q) out << ',' << (*view.measure_ids)[q];
    out << '\n';
    for (std::size_t j = 0; j < m; ++j) {
      out << format_double(grid.point(j));
      for (const auto& mm : view.measure_means) out << ',' << format_double(mm(static_cast<Eigen::Index>(j)));
      out << '\n';
    }
    finish(out, path);
    files.push_back("measure_means.csv");
  }
  {
    const fs::path path = dir / "eigenvalues.csv";
    auto out = open_out(path);
    out << "level,component,eigenvalue,pve\n";
    for (std::size_t l = 0; l < view.levels.size(); ++l) {
      const EigenSystem& eig = *view.levels[l].eig;
      for (Eigen::Index a = 0; a < eig.eigenvalues.size(); ++a) {
        out << (l + 1) << ',' << (a + 1) << ',' << format_double(eig.eigenvalues(a)) << ','
            << format_double(eig.pve(a)) << '\n';
      }
    }
    finish(out, path);
    files.push_back("eigenvalues.csv");
  }
  json level_summary = json::array();
  for (std::size_t l = 0; l < view.levels.size(); ++l) {
    const LevelView& level = view.levels[l];
    const EigenSystem& eig = *level.eig;
    const std::size_t k = eig.components();
    const std::string suffix = std::to_string(l + 1) + ".csv";
    {
      const fs::path path = dir / ("eigenfunctions_level" + suffix);
      auto out = open_out(path);
      out << 't';
      for (std::size_t a = 0; a < k; ++a) out << ",phi_" << (a + 1);
      out << '\n';
      for (std::size_t j = 0; j < m && k > 0; ++j) {
        out << format_double(grid.point(j));
        for (std::size_t a = 0; a < k; ++a) {
          out << ',' << format_double(eig.eigenfunctions(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)));
        }
        out << '\n';
      }
      finish(out, path);
      files.push_back("eigenfunctions_level" + suffix);
    }
    {
      const fs::path path = dir / ("scores_level" + suffix);
      auto out = open_out(path);
      const UnitFields fields = unit_fields(view.model, l + 1);
      out << "subject,measure,replicate";
      for (std::size_t a = 0; a < k; ++a) out << ",score_" << (a + 1);
      out << '\n';
      for (std::size_t u = 0; u < level.units->size(); ++u) {
        const NestedIndex& idx = (*level.units)[u];
        out << (*view.subject_ids)[idx.subject] << ',';
        if (fields.measure) out << (*view.measure_ids)[idx.measure];
        out << ',';
        if (fields.replicate && idx.replicate) out << *idx.replicate;
        for (std::size_t a = 0; a < k; ++a) {
          out << ',' << format_double((*level.scores)(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(a)));
        }
        out << '\n';
      }
      finish(out, path);
      files.push_back("scores_level" + suffix);
    }
    level_summary.push_back(json{{"level", l + 1},
                                 {"components", k},
                                 {"total_variance", eig.total_variance},
                                 {"trimmed", eig.trimmed}});
  }
  {
    const fs::path path = dir / "noise.json";
    auto out = open_out(path);
    out << json{{"noise_variance", view.noise_variance}}.dump(2) << '\n';
    finish(out, path);
    files.push_back("noise.json");
  }
  {
    json manifest;
    manifest["format"] = kFormatVersion;
    manifest["version"] = library_version();
    manifest["model"] = view.model;
    manifest["levels"] = view.levels.size();
    manifest["grid_points"] = m;
    manifest["config"] = view.config;
    manifest["seed"] = provenance.seed ? json(*provenance.seed) : json(nullptr);
    manifest["source"] = provenance.source;
    manifest["channel"] = provenance.channel;
    manifest["run"] = json(provenance.options);
    manifest["subjects"] = *view.subject_ids;
    manifest["measures"] = *view.measure_ids;
    manifest["level_summary"] = level_summary;
    files.push_back("manifest.json");
    manifest["files"] = files;
    const fs::path path = dir / "manifest.json";
    auto out = open_out(path);
    out << manifest.dump(2) << '\n';
    finish(out, path);
  }
}

json nested_config_json(const NestedConfig& c) {
  return json{{"levels", c.levels},
              {"pve", c.pve},
              {"smoothing", c.smoothing.enabled},
              {"bandwidth", c.smoothing.bandwidth},
              {"measure_means", c.measure_means},
              {"noise_bandwidth", c.noise_bandwidth}};
}

json fpca_config_json(const FpcaConfig& c) {
  return json{{"pve", c.pve},
              {"smoothing", c.smoothing.enabled},
              {"bandwidth", c.smoothing.bandwidth},
              {"estimate_noise", c.estimate_noise},
              {"noise_bandwidth", c.noise_bandwidth}};
}

// ---- reading ----

detail::CsvTable load_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "missing fit file '" + path.string() + "'");
  return detail::read_csv_table(in, path.string());
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "missing fit file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, path.string() + ": " + e.what());
  }
}

double number(const std::string& text, const std::string& where) {
  double v = 0.0;
  if (!detail::parse_double(text, v)) throw Error(Errc::parse_error, where + ": not a number '" + text + "'");
  return v;
}

struct LoadedFit {
  json manifest;
  std::string model;
  GridPtr grid;
  Eigen::VectorXd mean;
  std::vector<Eigen::VectorXd> measure_means;
  std::vector<EigenSystem> eigs;
  std::vector<Eigen::MatrixXd> scores;
  std::vector<std::vector<NestedIndex>> units;
  double noise_variance = 0.0;
  std::vector<std::string> subject_ids, measure_ids;
};

LoadedFit load(const std::string& dir_name) {
  const fs::path dir(dir_name);
  LoadedFit fit;
  fit.manifest = load_json(dir / "manifest.json");
  try {
    fit.model = fit.manifest.at("model").get<std::string>();
    fit.subject_ids = fit.manifest.at("subjects").get<std::vector<std::string>>();
    fit.measure_ids = fit.manifest.at("measures").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, (dir / "manifest.json").string() + ": " + e.what());
  }
  const std::size_t level_count = fit.manifest.value("levels", std::size_t{0});

  const detail::CsvTable mean = load_table(dir / "mean.csv");
  std::vector<double> points;
  fit.mean.resize(static_cast<Eigen::Index>(mean.rows.size()));
  for (std::size_t j = 0; j < mean.rows.size(); ++j) {
    points.push_back(number(mean.rows[j][0], "mean.csv"));
    fit.mean(static_cast<Eigen::Index>(j)) = number(mean.rows[j].at(1), "mean.csv");
  }
  fit.grid = Grid::from_points(points);
  const auto m = static_cast<Eigen::Index>(points.size());

  const detail::CsvTable mm = load_table(dir / "measure_means.csv");
  if (mm.rows.size() != points.size()) throw Error(Errc::parse_error, "measure_means.csv: grid length mismatch");
  for (std::size_t q = 1; q < mm.header.size(); ++q) {
    Eigen::VectorXd v(m);
    for (std::size_t j = 0; j < mm.rows.size(); ++j) v(static_cast<Eigen::Index>(j)) = number(mm.rows[j][q], "measure_means.csv");
    fit.measure_means.push_back(std::move(v));
  }

  const detail::CsvTable ev = load_table(dir / "eigenvalues.csv");
  std::map<std::size_t, std::vector<std::pair<double, double>>> by_level;
  for (const auto& row : ev.rows) {
    const auto level = static_cast<std::size_t>(number(row.at(0), "eigenvalues.csv"));
    by_level[level].emplace_back(number(row.at(2), "eigenvalues.csv"), number(row.at(3), "eigenvalues.csv"));
  }
  const json summary = fit.manifest.value("level_summary", json::array());

  std::map<std::string, std::size_t> subject_pos, measure_pos;
  for (std::size_t i = 0; i < fit.subject_ids.size(); ++i) subject_pos[fit.subject_ids[i]] = i;
  for (std::size_t j = 0; j < fit.measure_ids.size(); ++j) measure_pos[fit.measure_ids[j]] = j;

  for (std::size_t l = 1; l <= level_count; ++l) {
    const std::string suffix = std::to_string(l) + ".csv";
    EigenSystem eig;
    const auto& values = by_level[l];
    const auto k = static_cast<Eigen::Index>(values.size());
    eig.eigenvalues.resize(k);
    eig.pve.resize(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      eig.eigenvalues(a) = values[static_cast<std::size_t>(a)].first;
      eig.pve(a) = values[static_cast<std::size_t>(a)].second;
    }
    if (summary.size() >= l) {
      eig.total_variance = summary[l - 1].value("total_variance", 0.0);
      eig.trimmed = summary[l - 1].value("trimmed", std::size_t{0});
    }
    const detail::CsvTable ef = load_table(dir / ("eigenfunctions_level" + suffix));
    if (static_cast<Eigen::Index>(ef.header.size()) != k + 1) {
      throw Error(Errc::parse_error, "eigenfunctions_level" + suffix + ": component count disagrees with eigenvalues.csv");
    }
    eig.eigenfunctions.resize(m, k);
    if (k > 0) {
      if (ef.rows.size() != points.size()) throw Error(Errc::parse_error, "eigenfunctions_level" + suffix + ": grid length mismatch");
      for (std::size_t j = 0; j < ef.rows.size(); ++j) {
        for (Eigen::Index a = 0; a < k; ++a) {
          eig.eigenfunctions(static_cast<Eigen::Index>(j), a) =
              number(ef.rows[j][static_cast<std::size_t>(a) + 1], "eigenfunctions_level" + suffix);
        }
      }
    }
    const detail::CsvTable sc = load_table(dir / ("scores_level" + suffix));
    const std::string sname = "scores_level" + suffix;
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(sc.rows.size()), k);
    std::vector<NestedIndex> units;
    for (std::size_t u = 0; u < sc.rows.size(); ++u) {
      const auto& row = sc.rows[u];
      NestedIndex idx;
      auto sit = subject_pos.find(row[0]);
      if (sit == subject_pos.end()) throw Error(Errc::parse_error, sname + ": unknown subject '" + row[0] + "'");
      idx.subject = sit->second;
      if (!row[1].empty()) {
        auto mit = measure_pos.find(row[1]);
        if (mit == measure_pos.end()) throw Error(Errc::parse_error, sname + ": unknown measure '" + row[1] + "'");
        idx.measure = mit->second;
      }
      if (!row[2].empty()) idx.replicate = static_cast<int>(number(row[2], sname));
      for (Eigen::Index a = 0; a < k; ++a) scores(static_cast<Eigen::Index>(u), a) = number(row[static_cast<std::size_t>(a) + 3], sname);
      units.push_back(idx);
    }
    fit.eigs.push_back(std::move(eig));
    fit.scores.push_back(std::move(scores));
    fit.units.push_back(std::move(units));
  }
  const json noise = load_json(dir / "noise.json");
  fit.noise_variance = noise.value("noise_variance", 0.0);
  return fit;
}

}  // namespace

void write_fit(const MultilevelFit& fit, const std::string& out_dir, const FitProvenance& provenance) {
  FitView view;
  view.model = fit.levels.size() == 3 ? "N3" : "N2";
  view.grid = fit.grid.get();
  view.mean = &fit.global_mean;
  view.measure_means = fit.measure_means;
  for (const auto& level : fit.levels) view.levels.push_back({&level.eig, &level.scores, &level.units});
  view.noise_variance = fit.noise_variance;
  view.config = nested_config_json(fit.config);
  view.subject_ids = &fit.subject_ids;
  view.measure_ids = &fit.measure_ids;
  write_view(view, out_dir, provenance);
}

void write_fit(const FpcaFit& fit, const std::string& out_dir, const FitProvenance& provenance) {
  FitView view;
  view.model = "N1";
  view.grid = fit.mean.grid.get();
  view.mean = &fit.mean.values;
  view.levels.push_back({&fit.eig, &fit.scores, &fit.units});
  view.noise_variance = fit.noise_variance;
  view.config = fpca_config_json(fit.config);
  view.subject_ids = &fit.subject_ids;
  view.measure_ids = &fit.measure_ids;
  write_view(view, out_dir, provenance);
}

std::string read_fit_model(const std::string& dir) {
  const json manifest = load_json(fs::path(dir) / "manifest.json");
  return manifest.value("model", std::string());
}

MultilevelFit read_fit(const std::string& dir) {
  LoadedFit loaded = load(dir);
  if (loaded.model != "N2" && loaded.model != "N3") {
    throw Error(Errc::parse_error, dir + ": expected a nested (N2/N3) fit, found '" + loaded.model + "'");
  }
  MultilevelFit fit;
  fit.grid = loaded.grid;
  fit.global_mean = std::move(loaded.mean);
  fit.measure_means = std::move(loaded.measure_means);
  fit.noise_variance = loaded.noise_variance;
  fit.subject_ids = std::move(loaded.subject_ids);
  fit.measure_ids = std::move(loaded.measure_ids);
  const json config = loaded.manifest.value("config", json::object());
  fit.config.levels = config.value("levels", static_cast<int>(loaded.eigs.size()));
  fit.config.pve = config.value("pve", 0.9);
  fit.config.smoothing.enabled = config.value("smoothing", false);
  fit.config.smoothing.bandwidth = config.value("bandwidth", 0.05);
  fit.config.measure_means = config.value("measure_means", true);
  fit.config.noise_bandwidth = config.value("noise_bandwidth", 0.0);
  for (std::size_t l = 0; l < loaded.eigs.size(); ++l) {
    fit.levels.push_back({std::move(loaded.eigs[l]), std::move(loaded.scores[l]), std::move(loaded.units[l])});
  }
  return fit;
}

FpcaFit read_fpca_fit(const std::string& dir) {
  LoadedFit loaded = load(dir);
  if (loaded.model != "N1" || loaded.eigs.size() != 1) {
    throw Error(Errc::parse_error, dir + ": expected a single-level (N1) fit, found '" + loaded.model + "'");
  }
  FpcaFit fit;
  fit.mean = Curve(loaded.grid, std::move(loaded.mean));
  fit.eig = std::move(loaded.eigs[0]);
  fit.scores = std::move(loaded.scores[0]);
  fit.units = std::move(loaded.units[0]);
  fit.noise_variance = loaded.noise_variance;
  fit.subject_ids = std::move(loaded.subject_ids);
  fit.measure_ids = std::move(loaded.measure_ids);
  const json config = loaded.manifest.value("config", json::object());
  fit.config.pve = config.value("pve", 0.9);
  fit.config.smoothing.enabled = config.value("smoothing", false);
  fit.config.smoothing.bandwidth = config.value("bandwidth", 0.05);
  fit.config.estimate_noise = config.value("estimate_noise", false);
  fit.config.noise_bandwidth = config.value("noise_bandwidth", 0.0);
  return fit;
}

}  // namespace mfda
