#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace linpal {

// Every failure raised by the library carries one of these categories; the
// CLI prints it as `error[<category>]: <message>`.
enum class ErrorKind {
  invalid_feature,
  empty_input,
  division_hazard,
  domain,
  schema,
  encoding,
  decoding,
  numeric,
  degenerate_label,
  optimization,
  config,
  stratum,
  empty_train,
  io,
  usage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_feature: return "invalid-feature";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::division_hazard: return "division-hazard";
    case ErrorKind::domain: return "domain";
    case ErrorKind::schema: return "schema";
    case ErrorKind::encoding: return "encoding";
    case ErrorKind::decoding: return "decoding";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::degenerate_label: return "degenerate-label";
    case ErrorKind::optimization: return "optimization";
    case ErrorKind::config: return "config";
    case ErrorKind::stratum: return "stratum";
    case ErrorKind::empty_train: return "empty-train";
    case ErrorKind::io: return "io";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace linpal
