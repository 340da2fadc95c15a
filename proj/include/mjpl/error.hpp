#pragma once

#include <stdexcept>
#include <string>

namespace mjpl {

enum class Errc {
  dimension_mismatch,
  not_symmetric,
  not_positive_definite,
  singular_information,
  non_finite_objective,
  degenerate_design,
  non_positive_response,
  non_positive_input,
  non_positive_scale,
  length_mismatch,
  degenerate_bootstrap,
  degenerate_observations,
  quadrature_unstable,
  unknown_config,
  invalid_argument,
  parse_error,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mjpl
