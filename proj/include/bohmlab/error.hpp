#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bohmlab {

enum class ErrorKind {
  invalid_grid,
  invalid_model,
  invalid_argument,
  grid_too_small,
  not_normalized,
  stability,
  singular_system,
  node_proximity,
  all_flagged,
  convergence,
  config,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_grid: return "invalid-grid";
    case ErrorKind::invalid_model: return "invalid-model";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::grid_too_small: return "grid-too-small";
    case ErrorKind::not_normalized: return "not-normalized";
    case ErrorKind::stability: return "stability";
    case ErrorKind::singular_system: return "singular-system";
    case ErrorKind::node_proximity: return "node-proximity";
    case ErrorKind::all_flagged: return "all-flagged";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library. The kind drives
/// the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for failures of the numerical pipeline itself, as opposed to bad
/// input or configuration.
constexpr bool is_numerical(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::stability:
    case ErrorKind::singular_system:
    case ErrorKind::node_proximity:
    case ErrorKind::all_flagged:
    case ErrorKind::convergence:
      return true;
    default:
      return false;
  }
}

}  // namespace bohmlab
