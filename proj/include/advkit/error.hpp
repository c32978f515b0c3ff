#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace advkit {

/// Broad failure categories. The CLI maps them onto exit codes.
enum class ErrorKind {
  input_shape,      // vector length does not match the model
  class_index,      // class index outside [0, C)
  data,             // empty or malformed dataset
  label,            // labels inconsistent with the class count
  format,           // bad file magic / unknown model layer / bad JSON schema
  length,           // truncated binary file
  pairing,          // counts of two paired collections differ
  degenerate,       // zero-norm input or all boundary normals vanish
  cancelled,        // aggregated boundary direction cancels out
  generation,       // synthetic data could not be generated
  split,            // not enough samples to split
  validation,       // configuration constraint violated
  io,               // filesystem failure
  parse,            // CSV/text parse failure
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input_shape: return "input-shape";
    case ErrorKind::class_index: return "class-index";
    case ErrorKind::data: return "data";
    case ErrorKind::label: return "label";
    case ErrorKind::format: return "format";
    case ErrorKind::length: return "length";
    case ErrorKind::pairing: return "pairing";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::cancelled: return "cancelled-direction";
    case ErrorKind::generation: return "generation";
    case ErrorKind::split: return "split";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace advkit
