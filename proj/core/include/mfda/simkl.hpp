#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfda/curves.hpp"
#include "mfda/grid.hpp"

namespace mfda {

/// Orthonormal Fourier functions on the grid, in the order
/// sqrt2 sin(2 pi t), sqrt2 cos(2 pi t), sqrt2 sin(4 pi t), ...; `first` is
/// the 1-based position in that sequence of the first returned function.
std::vector<Curve> fourier_basis(const GridPtr& grid, std::size_t count, std::size_t first = 1);

/// Fourier functions as the columns of an m x count matrix.
Eigen::MatrixXd fourier_matrix(const Grid& grid, std::size_t count, std::size_t first = 1);

/// A fixed function of t: either tabulated on the grid or a sum of terms.
struct FunctionSpec {
  enum class Kind { constant, sin, cos, power };
  struct Term {
    Kind kind = Kind::constant;
    double amplitude = 0.0;
    /// sin/cos: cycles on [0,1]; power: exponent.
    double frequency = 1.0;
  };
  std::vector<Term> terms;
  std::vector<double> tabulated;

  bool is_zero() const noexcept { return terms.empty() && tabulated.empty(); }
  Eigen::VectorXd evaluate(const Grid& grid) const;
};

struct BasisSpec {
  enum class Family { fourier, tabulated };
  Family family = Family::fourier;
  std::size_t first = 1;
  /// One vector per component, sampled on the grid.
  std::vector<std::vector<double>> tabulated;
};

struct LevelSpec {
  std::vector<double> eigenvalues;
  BasisSpec basis;
};

enum class ScoreDistribution { gaussian, student_t };

/// Adds `shift` to a score component of one measure (levels 2 and 3).
struct ScoreShift {
  int level = 2;
  std::size_t component = 1;  // 1-based
  std::size_t measure = 1;    // 1-based
  double shift = 0.0;
};

struct GeneratorSpec {
  std::size_t grid_points = 101;
  /// Overrides grid_points when nonempty.
  std::vector<double> grid_custom;

  std::size_t subjects = 10;
  std::size_t measures = 2;
  /// Curves per (subject, measure); 0 for data without a replicate level.
  std::size_t replicates = 0;
  std::vector<std::string> measure_labels;

  FunctionSpec mean;
  /// Empty, or one entry per measure.
  std::vector<FunctionSpec> measure_means;
  /// levels[0] is the subject level. One level means independent curves.
  std::vector<LevelSpec> levels;
  double noise_variance = 0.0;

  ScoreDistribution distribution = ScoreDistribution::gaussian;
  /// Degrees of freedom for student_t scores (integer > 2); draws are scaled
  /// to unit variance before multiplying by sqrt(lambda).
  int t_df = 5;
  std::vector<ScoreShift> shifts;

  std::uint64_t seed = 1;
  std::string channel = "value";

  std::size_t level_count() const noexcept { return levels.size(); }
  GridPtr make_grid() const;
  /// S1 / (sum_l Sl + noise_variance).
  double analytic_icc() const;
  /// Throws invalid_spec (or invalid_basis) with a diagnostic.
  void validate() const;
};

/// Hidden quantities behind a simulated data set.
struct SimulationTruth {
  Eigen::VectorXd mean;
  std::vector<Eigen::VectorXd> measure_means;
  /// Per level: eigenvalues, eigenfunctions (m x K), scores and their units
  /// (same unit ordering as blup_scores) and the level curves (one row per unit).
  std::vector<Eigen::VectorXd> eigenvalues;
  std::vector<Eigen::MatrixXd> eigenfunctions;
  std::vector<Eigen::MatrixXd> scores;
  std::vector<std::vector<NestedIndex>> units;
  std::vector<Eigen::MatrixXd> level_curves;
  /// One row per curve of the data set.
  Eigen::MatrixXd noise;
  double noise_variance = 0.0;
  double analytic_icc = 0.0;
  Eigen::VectorXd analytic_pointwise_icc;
};

struct SimulatedData {
  CurveSet data;
  SimulationTruth truth;
};

/// Draws one data set. Subject i uses its own random substream, so the
/// output does not depend on how subjects are scheduled.
SimulatedData generate(const GeneratorSpec& spec);

/// JSON text <-> GeneratorSpec. Parsing errors raise invalid_spec.
std::string spec_to_json(const GeneratorSpec& spec);
GeneratorSpec spec_from_json(const std::string& text);
GeneratorSpec load_spec(const std::string& path);

}  // namespace mfda
