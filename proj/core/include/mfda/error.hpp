#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfda {

enum class Errc {
  invalid_grid,
  grid_mismatch,
  missing_mean,
  empty_input,
  insufficient_data,
  invalid_parameter,
  asymmetric_matrix,
  degenerate_spectrum,
  unbalanced_design,
  empty_group,
  insufficient_replication,
  dimension_mismatch,
  singular_system,
  undefined_icc,
  component_mismatch,
  invalid_pvalue,
  undefined_correlation,
  invalid_basis,
  invalid_spec,
  parse_error,
  incomplete_curve,
  duplicate_record,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the Errc codes so
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mfda
