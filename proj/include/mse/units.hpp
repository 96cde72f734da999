#pragma once
// Unit conventions and Matsubara-frequency machinery.
//
// Internal units: lengths in micrometers, energies/frequencies in eV (the
// frequency variable is xi with hbar = 1), wavenumbers kappa = xi/(hbar c)
// in 1/um.  With R ~ 30 um and material data in eV this keeps every
// intermediate quantity within a few hundred orders of magnitude of unity;
// the special-function layer handles the rest in log space.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace mse {

inline constexpr double k_boltzmann = 8.6173332e-5;  // eV / K
inline constexpr double hbar_c      = 0.19732697;    // eV um

struct MatsubaraTerm {
    std::size_t n;
    double xi;       // eV
    double kappa;    // 1/um,  kappa = xi / (hbar c)
    double weight;   // 1/2 for n = 0, else 1 (the "primed sum" convention)
};

inline MatsubaraTerm matsubara_term(std::size_t n, double temperature)
{
    if (!(temperature > 0.0))
        throw std::domain_error("matsubara_term: temperature must be positive");
    const double xi = 2.0 * M_PI * static_cast<double>(n) * k_boltzmann * temperature;
    return {n, xi, xi / hbar_c, n == 0 ? 0.5 : 1.0};
}

// Thermal wavelength hbar c / (2 pi kB T); sets the decay scale of the
// Matsubara tail, terms fall off like exp(-2 kappa_n d) = exp(-n d / lambda_T).
inline double thermal_wavelength(double temperature)
{
    return hbar_c / (2.0 * M_PI * k_boltzmann * temperature);
}

struct PrimedSumResult {
    double value = 0.0;
    std::size_t last_n = 0;      // highest term index evaluated
    bool converged = false;      // false when the n_max budget stopped the sum
    double tail_estimate = 0.0;  // geometric bound from the last two terms
    std::string stop_reason;
};

// value = (1/2) term(0) + sum_{n>=1} term(n), stopped once |term| stays below
// rel_tol * |sum| for two consecutive n (exponential decay makes a single
// small term untrustworthy near an accidental cancellation).
template <class TermFn>
PrimedSumResult primed_sum(TermFn&& term, double rel_tol, std::size_t n_max)
{
    if (!(rel_tol > 0.0))
        throw std::domain_error("primed_sum: rel_tol must be positive");

    PrimedSumResult out;
    const double t0 = term(std::size_t{0});
    if (!std::isfinite(t0))
        throw std::runtime_error("primed_sum: non-finite term at n = 0");
    out.value = 0.5 * t0;

    double prev_mag = std::abs(t0);
    double last_mag = prev_mag;
    int small_streak = 0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        const double t = term(n);
        if (!std::isfinite(t))
            throw std::runtime_error("primed_sum: non-finite term at n = " + std::to_string(n));
        out.value += t;
        out.last_n = n;
        prev_mag = last_mag;
        last_mag = std::abs(t);
        if (last_mag <= rel_tol * std::abs(out.value)) {
            if (++small_streak >= 2) {
                out.converged = true;
                out.stop_reason = "two consecutive terms below rel_tol";
                break;
            }
        } else {
            small_streak = 0;
        }
    }
    if (!out.converged)
        out.stop_reason = "n_max budget reached";

    // Geometric tail bound q/(1-q) with q estimated from the last step.
    double q = prev_mag > 0.0 ? last_mag / prev_mag : 0.0;
    if (q >= 1.0) q = 0.5;  // non-decaying tail: report a nominal bound
    out.tail_estimate = last_mag * q / (1.0 - q);
    return out;
}

}
