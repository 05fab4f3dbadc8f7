#ifndef OPSPLIT_ERRORS_HPP
#define OPSPLIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace opsplit {

// Thrown when vector/matrix shapes do not agree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a numeric parameter is out of its admissible range
// (negative threshold, nonpositive step size, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown by the dataset reader; message carries the 1-based line number.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for invalid run configuration (thread count, kernel/mode combination, flags).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a projection target set is empty.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace opsplit

#endif
