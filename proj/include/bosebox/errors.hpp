#pragma once

#include <stdexcept>
#include <string>

namespace bosebox {

// Invalid argument outside an operation's domain.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Numerical failures. The CLI maps all of these to exit code 3.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};

struct CutoffInsufficient : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};

struct CutoffTooLarge : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};

struct PoleProximity : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};

// Bad configuration; exit code 2.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace bosebox
