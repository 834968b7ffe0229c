#pragma once

#include <stdexcept>
#include <string>

namespace windcast {

enum class ErrorKind {
  schema,
  empty_data,
  degenerate_feature,
  insufficient_data,
  infeasible_k,
  dimension,
  numeric,
  parameter,
  contract,
  diverged,
  unsupported_version,
  integrity,
  initialization,
  no_data,
  usage,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::schema: return "schema";
    case ErrorKind::empty_data: return "empty-data";
    case ErrorKind::degenerate_feature: return "degenerate-feature";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::infeasible_k: return "infeasible-k";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::contract: return "contract";
    case ErrorKind::diverged: return "diverged-training";
    case ErrorKind::unsupported_version: return "unsupported-version";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::initialization: return "initialization";
    case ErrorKind::no_data: return "no-data";
    case ErrorKind::usage: return "usage";
    case ErrorKind::io: return "io";
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

// Raised when the training loss stops being finite.
class DivergedTraining : public Error {
 public:
  DivergedTraining(int epoch, const std::string& what)
      : Error(ErrorKind::diverged, what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace windcast
