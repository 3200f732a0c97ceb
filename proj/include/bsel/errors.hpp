#pragma once

#include <stdexcept>
#include <string>

namespace bsel {

enum class Errc {
  missing_column,
  non_numeric_cell,
  non_binary_label,
  non_finite_value,
  empty_table,
  unknown_feature,
  duplicate_feature_assignment,
  duplicate_block_name,
  empty_vector,
  length_mismatch,
  too_large,
  single_class,
  dimension_mismatch,
  too_few_groups,
  invalid_counts,
  out_of_range,
  block_set_mismatch,
  invalid_spec,
  invalid_argument,
  io_error,
  classifier_failed,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace bsel
