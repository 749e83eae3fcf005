#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subleq {

enum class Errc {
  image_too_large,
  bad_image,
  syntax_error,
  unterminated_string,
  bad_escape,
  duplicate_label,
  undefined_label,
  unsupported_construct,
  undefined_variable,
  undefined_function,
  bad_proc_count,
  bad_index,
  bad_length,
  invalid_params,
  slot_fault,
  step_limit,
  io,
};

std::string_view errc_name(Errc code);

// Thrown by every toolchain stage. Parser-level errors carry a 1-based
// source position; line 0 means "no position".
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message, int line = 0, int column = 0);

  Errc code() const noexcept { return code_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  Errc code_;
  int line_;
  int column_;
};

}  // namespace subleq
