#pragma once

#include <stdexcept>
#include <string>

namespace opo {

/// Non-finite or out-of-range argument to a numerical routine.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Squeezing correction whose log argument is not positive.
class UnphysicalCorrection : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class BelowThreshold : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class StepSizeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ServoUnstable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// LO and signal carriers differ by more than the demodulation tolerance.
class HeterodyneLeakage : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientSamples : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration could not be parsed or violates an invariant.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace opo
