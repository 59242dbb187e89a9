#include "mfda/error.hpp"

namespace mfda {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_grid: return "invalid grid";
    case Errc::grid_mismatch: return "grid mismatch";
    case Errc::missing_mean: return "missing mean";
    case Errc::empty_input: return "empty input";
    case Errc::insufficient_data: return "insufficient data";
    case Errc::invalid_parameter: return "invalid parameter";
    case Errc::asymmetric_matrix: return "asymmetric matrix";
    case Errc::degenerate_spectrum: return "degenerate spectrum";
    case Errc::unbalanced_design: return "unbalanced design";
    case Errc::empty_group: return "empty group";
    case Errc::insufficient_replication: return "insufficient replication";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::singular_system: return "singular system";
    case Errc::undefined_icc: return "undefined icc";
    case Errc::component_mismatch: return "component mismatch";
    case Errc::invalid_pvalue: return "invalid p-value";
    case Errc::undefined_correlation: return "undefined correlation";
    case Errc::invalid_basis: return "invalid basis";
    case Errc::invalid_spec: return "invalid generator spec";
    case Errc::parse_error: return "parse error";
    case Errc::incomplete_curve: return "incomplete curve";
    case Errc::duplicate_record: return "duplicate record";
    case Errc::io_error: return "i/o error";
  }
  return "unknown error";
}

}  // namespace mfda
