#include "mfda/curves.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "mfda/error.hpp"

namespace mfda {

namespace {

std::vector<std::string> default_labels(std::size_t count) {
  std::vector<std::string> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = std::to_string(i + 1);
  return labels;
}

}  // namespace

Curve::Curve(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw Error(Errc::invalid_grid, "curve without a grid");
  if (static_cast<std::size_t>(values.size()) != grid->size()) {
    throw Error(Errc::invalid_parameter, "curve length does not match its grid");
  }
  if (!values.allFinite()) throw Error(Errc::invalid_parameter, "curve contains non-finite values");
}

double inner_product(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (f.size() != m || g.size() != m) {
    throw Error(Errc::grid_mismatch, "sample vectors do not match the grid size");
  }
  return (grid.weights_vector().array() * f.array() * g.array()).sum();
}

double inner_product(const Curve& f, const Curve& g) {
  require_same_grid(f.grid, g.grid);
  return inner_product(*f.grid, f.values, g.values);
}

std::string DesignLayout::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < replicates.size(); ++i) {
    if (i < subject_labels.size()) os << "subject " << subject_labels[i];
    else os << "subject #" << (i + 1);
    os << ": measures=" << measures_per_subject[i] << " curves per measure=[";
    for (std::size_t j = 0; j < replicates[i].size(); ++j) {
      if (j) os << ' ';
      os << replicates[i][j];
    }
    os << "]\n";
  }
  return os.str();
}

CurveSet::CurveSet(GridPtr grid, Eigen::MatrixXd values, std::vector<NestedIndex> index,
                   std::vector<std::string> subject_ids, std::vector<std::string> measure_ids)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      index_(std::move(index)),
      subject_ids_(std::move(subject_ids)),
      measure_ids_(std::move(measure_ids)) {
  if (!grid_) throw Error(Errc::invalid_grid, "curve set without a grid");
  if (static_cast<std::size_t>(values_.cols()) != grid_->size()) {
    throw Error(Errc::grid_mismatch, "curve set columns do not match the grid size");
  }
  if (static_cast<std::size_t>(values_.rows()) != index_.size()) {
    throw Error(Errc::dimension_mismatch, "curve set rows do not match the index length");
  }
  if (!values_.allFinite()) {
    throw Error(Errc::invalid_parameter, "curve set contains non-finite values");
  }
  std::size_t max_subject = 0, max_measure = 0;
  for (const auto& idx : index_) {
    max_subject = std::max(max_subject, idx.subject + 1);
    max_measure = std::max(max_measure, idx.measure + 1);
    if (idx.replicate && *idx.replicate < 1) {
      throw Error(Errc::invalid_parameter, "replicate numbers start at 1");
    }
  }
  if (subject_ids_.empty()) subject_ids_ = default_labels(max_subject);
  if (measure_ids_.empty()) measure_ids_ = default_labels(max_measure);
  if (subject_ids_.size() < max_subject || measure_ids_.size() < max_measure) {
    throw Error(Errc::invalid_parameter, "index refers past the label tables");
  }
  std::set<NestedIndex> seen;
  for (const auto& idx : index_) {
    if (!seen.insert(idx).second) {
      throw Error(Errc::duplicate_record, "duplicate (subject, measure, replicate) triple for subject '" +
                                              subject_ids_[idx.subject] + "', measure '" +
                                              measure_ids_[idx.measure] + "'");
    }
  }
}

CurveSet CurveSet::independent(GridPtr grid, Eigen::MatrixXd values) {
  std::vector<NestedIndex> index(static_cast<std::size_t>(values.rows()));
  for (std::size_t r = 0; r < index.size(); ++r) index[r].subject = r;
  return CurveSet(std::move(grid), std::move(values), std::move(index));
}

Curve CurveSet::curve(std::size_t row) const {
  return Curve(grid_, values_.row(static_cast<Eigen::Index>(row)).transpose());
}

CurveSet CurveSet::with_values(Eigen::MatrixXd values) const {
  return CurveSet(grid_, std::move(values), index_, subject_ids_, measure_ids_);
}

DesignLayout CurveSet::layout() const {
  DesignLayout out;
  out.n_subjects = subject_ids_.size();
  out.n_measures = measure_ids_.size();
  out.subject_labels = subject_ids_;
  out.replicates.assign(out.n_subjects, std::vector<std::size_t>(out.n_measures, 0));
  for (const auto& idx : index_) {
    ++out.replicates[idx.subject][idx.measure];
    if (idx.replicate) out.has_replicates = true;
  }
  out.measures_per_subject.assign(out.n_subjects, 0);
  for (std::size_t i = 0; i < out.n_subjects; ++i) {
    for (std::size_t j = 0; j < out.n_measures; ++j) {
      if (out.replicates[i][j] > 0) ++out.measures_per_subject[i];
    }
  }
  out.balanced = !index_.empty();
  out.replicates_per_cell = index_.empty() ? 0 : out.replicates[0][0];
  for (const auto& row : out.replicates) {
    for (std::size_t count : row) {
      if (count != out.replicates_per_cell || count == 0) out.balanced = false;
    }
  }
  if (!out.balanced) out.replicates_per_cell = 0;
  return out;
}

CurveSet center_rows(const CurveSet& x, const MeanModel& means) {
  const auto m = static_cast<Eigen::Index>(x.grid_size());
  if (means.global.size() != m) {
    throw Error(Errc::grid_mismatch, "global mean does not match the grid size");
  }
  Eigen::MatrixXd out = x.values();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t j = x.index()[r].measure;
    if (j >= means.measure_deviation.size() || means.measure_deviation[j].size() != m) {
      throw Error(Errc::missing_mean, "no mean curve supplied for measure '" + x.measure_ids()[j] + "'");
    }
    const auto row = static_cast<Eigen::Index>(r);
    out.row(row) -= (means.global + means.measure_deviation[j]).transpose();
  }
  return x.with_values(std::move(out));
}

}  // namespace mfda
