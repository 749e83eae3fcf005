#include "subleq/error.hpp"

namespace subleq {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::image_too_large: return "ImageTooLarge";
    case Errc::bad_image: return "BadImage";
    case Errc::syntax_error: return "SyntaxError";
    case Errc::unterminated_string: return "UnterminatedString";
    case Errc::bad_escape: return "BadEscape";
    case Errc::duplicate_label: return "DuplicateLabel";
    case Errc::undefined_label: return "UndefinedLabel";
    case Errc::unsupported_construct: return "UnsupportedConstruct";
    case Errc::undefined_variable: return "UndefinedVariable";
    case Errc::undefined_function: return "UndefinedFunction";
    case Errc::bad_proc_count: return "BadProcCount";
    case Errc::bad_index: return "BadIndex";
    case Errc::bad_length: return "BadLength";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::slot_fault: return "SlotFault";
    case Errc::step_limit: return "StepLimit";
    case Errc::io: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string decorate(Errc code, const std::string& message, int line, int column) {
  std::string out(errc_name(code));
  if (line > 0) {
    out += " at " + std::to_string(line);
    if (column > 0) out += ":" + std::to_string(column);
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, int line, int column)
    : std::runtime_error(decorate(code, message, line, column)),
      code_(code),
      line_(line),
      column_(column) {}

}  // namespace subleq
