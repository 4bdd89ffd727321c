#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace strainmix {

/// Malformed or inconsistent input data (maps to CLI exit code 1).
class InputError : public std::runtime_error {
  public:
    explicit InputError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    /// 1-based line of the offending record, 0 when not tied to a line.
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Sampler or model-evaluation failure (maps to CLI exit code 2).
class InferenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace strainmix
