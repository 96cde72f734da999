#pragma once
// Error taxonomy shared across the library.  The CLI maps these onto exit
// codes: ConfigError -> 2, ConvergenceError -> 3, SpectralGuardError -> 4.

#include <stdexcept>
#include <string>

namespace mse {

// Bad or inconsistent run parameters (geometry, gauge, material, config file).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A sum/quadrature failed to reach the requested tolerance within its budget.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A channel's scattering block has spectral radius >= 1: the Neumann series is
// meaningless there and only the direct (resummed) solve is defined.
class SpectralGuardError : public std::runtime_error {
public:
    SpectralGuardError(const std::string& what, double radius)
        : std::runtime_error(what), spectral_radius(radius) {}
    double spectral_radius;
};

}
