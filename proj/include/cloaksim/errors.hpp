#pragma once

#include <stdexcept>
#include <string>

namespace cloaksim {

/// Violated input contract (bad radius, dimension mismatch, infeasible target, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (stagnation, non-SPD coefficient, singular system).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cloaksim
