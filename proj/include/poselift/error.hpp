#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace poselift {

// Error categories, used by the CLI to pick exit codes:
// config -> 1, data -> 2, numeric -> 3.
enum class ErrorKind { config, data, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad configuration or usage.
struct ConfigError : Error {
  explicit ConfigError(std::string msg) : Error(ErrorKind::config, std::move(msg)) {}
};

// Malformed or inconsistent data (shapes, indices, topologies).
struct StructuralError : Error {
  explicit StructuralError(std::string msg) : Error(ErrorKind::data, std::move(msg)) {}
};

// File could not be parsed or validated.
struct LoadError : Error {
  explicit LoadError(std::string msg) : Error(ErrorKind::data, std::move(msg)) {}
};

// Degenerate geometry in a camera or alignment fit.
struct FitError : Error {
  explicit FitError(std::string msg) : Error(ErrorKind::numeric, std::move(msg)) {}
};

// Per-frame lifting failed.
struct LiftError : Error {
  explicit LiftError(std::string msg) : Error(ErrorKind::numeric, std::move(msg)) {}
};

// Noise injection is undefined for the input.
struct NoiseError : Error {
  explicit NoiseError(std::string msg) : Error(ErrorKind::numeric, std::move(msg)) {}
};

}  // namespace poselift
