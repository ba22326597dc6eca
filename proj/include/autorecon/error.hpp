#pragma once

#include <stdexcept>
#include <string>

namespace autorecon {

/// Bad input: shapes, names, configuration, file contents. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values, divergence, integrator blow-up. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace autorecon
