#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfda/grid.hpp"

namespace mfda {

/// One function sampled on a grid.
struct Curve {
  GridPtr grid;
  Eigen::VectorXd values;

  Curve() = default;
  /// Throws invalid_parameter on a length mismatch or non-finite samples.
  Curve(GridPtr g, Eigen::VectorXd v);
};

/// Quadrature approximation of the L2 inner product.
double inner_product(const Curve& f, const Curve& g);

/// Same quadrature on raw sample vectors; lengths must match the grid.
double inner_product(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g);

/// Position of a curve in the nesting hierarchy. `subject` and `measure`
/// index the label tables of the owning CurveSet; `replicate` is the stride
/// number (>= 1) and is absent for two-level data.
struct NestedIndex {
  std::size_t subject = 0;
  std::size_t measure = 0;
  std::optional<int> replicate;

  friend bool operator==(const NestedIndex&, const NestedIndex&) = default;
  friend auto operator<=>(const NestedIndex&, const NestedIndex&) = default;
};

/// Counts derived from the index set of a CurveSet.
struct DesignLayout {
  std::size_t n_subjects = 0;
  std::size_t n_measures = 0;
  /// Distinct measures observed for each subject.
  std::vector<std::size_t> measures_per_subject;
  /// replicates[i][j]: curves for subject i, measure j (0 when missing).
  std::vector<std::vector<std::size_t>> replicates;
  bool has_replicates = false;
  /// Every subject has every measure and every cell has the same count.
  bool balanced = false;
  std::size_t replicates_per_cell = 0;
  /// Subject labels, used by describe().
  std::vector<std::string> subject_labels;

  /// Human-readable per-subject counts, used in unbalanced-design errors.
  std::string describe() const;
};

/// Curves sharing one grid, each tagged with its NestedIndex. Stored as an
/// n_rows x m matrix.
class CurveSet {
 public:
  CurveSet() = default;
  /// Labels default to "1", "2", ... when omitted. Validates shape,
  /// finiteness and uniqueness of the index triples.
  CurveSet(GridPtr grid, Eigen::MatrixXd values, std::vector<NestedIndex> index,
           std::vector<std::string> subject_ids = {}, std::vector<std::string> measure_ids = {});

  /// Independent curves (one subject per row, one measure).
  static CurveSet independent(GridPtr grid, Eigen::MatrixXd values);

  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<NestedIndex>& index() const noexcept { return index_; }
  const std::vector<std::string>& subject_ids() const noexcept { return subject_ids_; }
  const std::vector<std::string>& measure_ids() const noexcept { return measure_ids_; }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t grid_size() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  bool empty() const noexcept { return values_.rows() == 0; }

  Curve curve(std::size_t row) const;
  DesignLayout layout() const;

  /// Same index and labels, new values (same shape).
  CurveSet with_values(Eigen::MatrixXd values) const;

 private:
  GridPtr grid_;
  Eigen::MatrixXd values_;
  std::vector<NestedIndex> index_;
  std::vector<std::string> subject_ids_;
  std::vector<std::string> measure_ids_;
};

/// Fixed effects of a nested model: the grand mean and one deviation curve
/// per measure (all zero for the one-way model).
struct MeanModel {
  Eigen::VectorXd global;
  std::vector<Eigen::VectorXd> measure_deviation;
};

/// Subtracts the grand mean and the row's measure deviation from every row.
/// Throws missing_mean when a row's measure has no deviation curve.
CurveSet center_rows(const CurveSet& x, const MeanModel& means);

}  // namespace mfda
