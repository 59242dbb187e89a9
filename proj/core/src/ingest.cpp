#include "mfda/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "mfda/error.hpp"
#include "text_io.hpp"

#ifndef MFDA_VERSION_STRING
#define MFDA_VERSION_STRING "0.0.0"
#endif

namespace mfda {

const char* library_version() noexcept { return MFDA_VERSION_STRING; }

std::string format_real(double value) { return detail::format_double(value); }

namespace {

using detail::format_double;

struct GroupKey {
  std::size_t subject;
  std::size_t measure;
  long long replicate;
  auto operator<=>(const GroupKey&) const = default;
};

class LabelTable {
 public:
  std::size_t intern(const std::string& label) {
    auto [it, inserted] = positions_.emplace(label, labels_.size());
    if (inserted) labels_.push_back(label);
    return it->second;
  }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::unordered_map<std::string, std::size_t> positions_;
  std::vector<std::string> labels_;
};

}  // namespace

IngestResult read_long_csv(std::istream& in, const std::string& channel, GridPolicy policy,
                           const std::string& source_name) {
  const detail::CsvTable table = detail::read_csv_table(in, source_name);
  const std::size_t c_subject = table.column("subject", source_name);
  const std::size_t c_measure = table.column("measure", source_name);
  const std::size_t c_replicate = table.column("replicate", source_name);
  const std::size_t c_t = table.column("t", source_name);
  const std::size_t c_value = table.column("value", source_name);
  const std::size_t c_channel = table.column("channel", source_name);

  IngestReport report;
  LabelTable subjects, measures;
  std::map<GroupKey, std::map<double, std::pair<double, std::size_t>>> groups;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    ++report.records_read;
    const std::string where = source_name + ":" + std::to_string(line);
    if (row[c_channel] != channel) {
      ++report.records_other_channels;
      continue;
    }
    long long replicate = 0;
    double t = 0.0, value = 0.0;
    if (row[c_subject].empty() || row[c_measure].empty()) {
      throw Error(Errc::parse_error, where + ": empty subject or measure id");
    }
    if (!detail::parse_int(row[c_replicate], replicate) || replicate < 1) {
      throw Error(Errc::parse_error, where + ": replicate must be an integer >= 1, got '" + row[c_replicate] + "'");
    }
    if (!detail::parse_double(row[c_t], t) || !std::isfinite(t) || t < 0.0 || t > 1.0) {
      throw Error(Errc::parse_error, where + ": t must be a number in [0,1], got '" + row[c_t] + "'");
    }
    if (!detail::parse_double(row[c_value], value) || !std::isfinite(value)) {
      throw Error(Errc::parse_error, where + ": value must be a finite number, got '" + row[c_value] + "'");
    }
    const GroupKey key{subjects.intern(row[c_subject]), measures.intern(row[c_measure]), replicate};
    auto [it, inserted] = groups[key].emplace(t, std::make_pair(value, line));
    if (!inserted) {
      throw Error(Errc::duplicate_record, where + ": duplicate record for subject '" + row[c_subject] + "', measure '" +
                                              row[c_measure] + "', replicate " + row[c_replicate] + ", t=" + row[c_t] +
                                              " (first seen on line " + std::to_string(it->second.second) + ")");
    }
  }
  if (groups.empty()) {
    throw Error(Errc::empty_input, source_name + ": no records for channel '" + channel + "'");
  }

  auto group_name = [&](const GroupKey& key) {
    return subjects.labels()[key.subject] + "/" + measures.labels()[key.measure] + "/" + std::to_string(key.replicate);
  };

  std::set<double> grid_points;
  if (policy == GridPolicy::strict) {
    for (const auto& [key, samples] : groups) {
      for (const auto& [t, v] : samples) grid_points.insert(t);
    }
    for (const auto& [key, samples] : groups) {
      if (samples.size() != grid_points.size()) {
        throw Error(Errc::incomplete_curve, source_name + ": curve " + group_name(key) + " has " +
                                                std::to_string(samples.size()) + " of " +
                                                std::to_string(grid_points.size()) + " grid points");
      }
    }
  } else {
    bool first = true;
    for (const auto& [key, samples] : groups) {
      std::set<double> ts;
      for (const auto& [t, v] : samples) ts.insert(t);
      if (first) {
        grid_points = std::move(ts);
        first = false;
        continue;
      }
      std::set<double> common;
      std::set_intersection(grid_points.begin(), grid_points.end(), ts.begin(), ts.end(),
                            std::inserter(common, common.end()));
      grid_points = std::move(common);
    }
    for (const auto& [key, samples] : groups) {
      for (const auto& [t, v] : samples) {
        if (!grid_points.count(t)) report.dropped_points.push_back(group_name(key) + "@" + format_double(t));
      }
    }
  }
  if (grid_points.size() < 2) {
    throw Error(Errc::incomplete_curve, source_name + ": fewer than two shared grid points");
  }

  const GridPtr grid = Grid::from_points(std::vector<double>(grid_points.begin(), grid_points.end()));
  const auto m = static_cast<Eigen::Index>(grid->size());
  Eigen::MatrixXd values(static_cast<Eigen::Index>(groups.size()), m);
  std::vector<NestedIndex> index;
  index.reserve(groups.size());
  Eigen::Index r = 0;
  for (const auto& [key, samples] : groups) {
    Eigen::Index j = 0;
    for (double t : grid_points) values(r, j++) = samples.at(t).first;
    index.push_back({key.subject, key.measure, static_cast<int>(key.replicate)});
    ++r;
  }
  IngestResult result{CurveSet(grid, std::move(values), std::move(index), subjects.labels(), measures.labels()),
                      std::move(report)};
  result.report.curves = result.curves.rows();
  result.report.layout = result.curves.layout();
  return result;
}

IngestResult read_long_csv(const std::string& path, const std::string& channel, GridPolicy policy) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  return read_long_csv(in, channel, policy, path);
}

void write_long_csv(const CurveSet& curves, const std::string& channel, std::ostream& out) {
  out << "subject,measure,replicate,t,value,channel\n";
  const Grid& grid = *curves.grid();
  for (std::size_t r = 0; r < curves.rows(); ++r) {
    const auto& idx = curves.index()[r];
    const std::string prefix = curves.subject_ids()[idx.subject] + "," + curves.measure_ids()[idx.measure] + "," +
                               std::to_string(idx.replicate.value_or(1)) + ",";
    for (std::size_t j = 0; j < grid.size(); ++j) {
      out << prefix << format_double(grid.point(j)) << ','
          << format_double(curves.values()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j))) << ','
          << channel << '\n';
    }
  }
}

void write_long_csv(const CurveSet& curves, const std::string& channel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
  write_long_csv(curves, channel, out);
  if (!out) throw Error(Errc::io_error, "write failed for '" + path + "'");
}

}  // namespace mfda
