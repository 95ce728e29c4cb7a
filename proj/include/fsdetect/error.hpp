#pragma once

#include <stdexcept>
#include <string>

namespace fsd {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid numeric argument (non-positive duration, pfa outside (0,1), ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// FFT size smaller than the time-domain signal it should hold.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// Path delay falls outside the N-sample observation frame.
class FrameError : public Error {
public:
    using Error::Error;
};

/// Gram matrix too ill-conditioned to invert.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Duplicate delays, rank-deficient stacked steering matrix or a statistic
/// whose denominator vanishes.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Singular block or Schur complement in a partitioned inverse.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Zero-energy path set handed to level calibration.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Malformed or misspelled scenario configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace fsd
