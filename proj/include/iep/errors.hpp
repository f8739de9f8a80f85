#pragma once

#include <stdexcept>
#include <string>

namespace iep {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BracketError : Error { using Error::Error; };
struct DegreeMismatch : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct DegenerateSigma : Error { using Error::Error; };
struct PrecisionExhausted : Error { using Error::Error; };
struct SizeLimit : Error { using Error::Error; };
struct InfeasibleSpectrum : Error { using Error::Error; };
struct NonPositiveParameter : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };

struct OverflowError : Error {
    OverflowError(const std::string& what, long required_bits)
        : Error(what + " (requires about " + std::to_string(required_bits) + " mantissa bits)"),
          required_bits(required_bits) {}
    long required_bits;
};

}  // namespace iep
