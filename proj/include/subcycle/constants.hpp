#pragma once

#include <stdexcept>
#include <string>

namespace subcycle {

/// CODATA 2018 values. Everything inside the library is strict SI.
struct PhysConstants {
    double c = 299792458.0;          // m/s
    double hbar = 1.054571817e-34;   // J s
    double eps0 = 8.8541878128e-12;  // F/m
};

inline constexpr PhysConstants kCodata{};

// Unit factors for the I/O boundary (value_in_SI = value * factor).
namespace units {
inline constexpr double fs = 1e-15;
inline constexpr double nJ = 1e-9;
inline constexpr double THz = 1e12;
inline constexpr double um = 1e-6;
inline constexpr double pm_per_V = 1e-12;
inline constexpr double V_per_cm = 100.0;
}  // namespace units

/// Raised when a numerical procedure cannot deliver a trustworthy result
/// (instability, non-finite output). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed scenario/config input. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace subcycle
