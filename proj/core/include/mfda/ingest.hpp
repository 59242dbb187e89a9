#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfda/curves.hpp"
#include "mfda/fpca.hpp"
#include "mfda/mfpca.hpp"

namespace mfda {

/// Format tag written into every manifest.
inline constexpr const char* kFormatVersion = "mfda-v1";

/// Library version string.
const char* library_version() noexcept;

/// Shortest decimal text that reads back to the same double.
std::string format_real(double value);

/// Column names of the long (tidy) curve format, in writing order.
inline constexpr const char* kLongColumns[] = {"subject", "measure", "replicate", "t", "value", "channel"};

enum class GridPolicy {
  /// Every curve must be observed on the same set of t values.
  strict,
  /// Keep only the t values shared by every curve; report the rest.
  intersect,
};

struct IngestReport {
  std::size_t records_read = 0;
  /// Records belonging to other channels.
  std::size_t records_other_channels = 0;
  std::size_t curves = 0;
  /// Points removed by the intersect policy, as "subject/measure/replicate@t".
  std::vector<std::string> dropped_points;
  DesignLayout layout;
};

struct IngestResult {
  CurveSet curves;
  IngestReport report;
};

/// Reads one channel of a long CSV file. Subjects and measures keep their
/// first-appearance order; curves are ordered by (subject, measure, replicate).
IngestResult read_long_csv(const std::string& path, const std::string& channel,
                           GridPolicy policy = GridPolicy::strict);
IngestResult read_long_csv(std::istream& in, const std::string& channel, GridPolicy policy,
                           const std::string& source_name);

/// Writes every curve as one record per grid point. Curves without a
/// replicate number are written as replicate 1.
void write_long_csv(const CurveSet& curves, const std::string& channel, const std::string& path);
void write_long_csv(const CurveSet& curves, const std::string& channel, std::ostream& out);

/// Run metadata copied into manifest.json.
struct FitProvenance {
  std::optional<std::uint64_t> seed;
  std::string source;
  std::string channel;
  /// Further effective run options, stored under "run".
  std::map<std::string, std::string> options;
};

/// Writes mean.csv, measure_means.csv, eigenfunctions_level{l}.csv,
/// eigenvalues.csv, scores_level{l}.csv, noise.json and manifest.json.
void write_fit(const MultilevelFit& fit, const std::string& out_dir, const FitProvenance& provenance = {});
void write_fit(const FpcaFit& fit, const std::string& out_dir, const FitProvenance& provenance = {});

/// Inverse of write_fit for nested (two- or three-level) fits.
MultilevelFit read_fit(const std::string& dir);
/// Inverse of write_fit for single-level fits.
FpcaFit read_fpca_fit(const std::string& dir);

/// Model tag stored in a fit directory's manifest ("N1", "N2" or "N3").
std::string read_fit_model(const std::string& dir);

}  // namespace mfda
