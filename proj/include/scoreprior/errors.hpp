#pragma once

#include <stdexcept>
#include <string>

namespace scoreprior {

/// Invalid or inconsistent configuration / arguments. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical iteration produced non-finite values or left the sane range.
/// CLI exit code 3.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// File format or filesystem failure. CLI exit code 4.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scoreprior
