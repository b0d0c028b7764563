#pragma once

#include <stdexcept>
#include <string>

namespace pgdk {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
    using Error::Error;
};

// Stacked data matrix lost row rank below the fit tolerance.
struct RankDeficient : Error {
    using Error::Error;
};

// Fewer batch columns than the r+m minimum for the least-squares fit.
struct BatchTooSmall : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct InsufficientHistory : Error {
    using Error::Error;
};

struct DivergedRollout : Error {
    using Error::Error;
};

struct EnvDiverged : Error {
    using Error::Error;
};

struct OracleDiverged : Error {
    using Error::Error;
};

struct NumericalDivergence : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

}  // namespace pgdk
