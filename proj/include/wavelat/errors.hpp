#pragma once

#include <stdexcept>
#include <string>

namespace wavelat {

// Invalid configuration supplied by the caller (bad flag value, empty
// parameter vector, unknown wavelet name). CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (unparseable file, invariant-violating
// filter bank, non-orthogonal fit target). CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/size violation on an operation input. A kind of data error.
struct DimensionError : DataError {
    explicit DimensionError(const std::string& msg) : DataError(msg) {}
};

// Numerical failure: divergence, non-finite loss, fit that did not converge.
// CLI exit code 4.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wavelat
