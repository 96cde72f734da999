#pragma once
// Sphere T-matrix (Mie coefficients at imaginary frequency) and the exact
// particle-sphere interaction energy it feeds.
//
// Convention: the outgoing radial factor is Kt_l(x) = (2/pi) K_l(x) with
// K_l(x) = x k_l(x) the A&S Riccati third kind, so I_l Kt_l' - I_l' Kt_l = -1.
// With u = kappa R and v = sqrt(eps mu) u,
//
//            sqrt(eps/mu) I(v) I'(u) - I'(v) I(u)
//   T^EE  =  ------------------------------------ ,   T^HH: eps <-> mu.
//            Kt(u) I'(v) - sqrt(eps/mu) I(v) Kt'(u)
//
// T grows like e^{2u}, so blocks are stored scaled by e^{-2u}; the energy
// brackets multiply by outgoing-wave products at kappa*a carrying e^{-2*kappa*a},
// leaving the physical net factor e^{-2 kappa d} per term.

#include <cmath>
#include <string>

#include "mse/bessel.hpp"
#include "mse/config.hpp"
#include "mse/errors.hpp"
#include "mse/units.hpp"

namespace mse {

struct MieBlock {
    int l;
    double kappa_r;      // kappa * R
    double tee_scaled;   // T^EE * e^{-2 kappa R}
    double thh_scaled;   // T^HH * e^{-2 kappa R}
    // T^EH = T^HE = 0 identically for a sphere: polarization is conserved.

    double tee() const { return tee_scaled * std::exp(2.0 * kappa_r); }
    double thh() const { return thh_scaled * std::exp(2.0 * kappa_r); }
    bool representable() const { return 2.0 * kappa_r < 700.0; }
};

inline MieBlock mie_block(int l, double kappa, double eps, double mu, double R)
{
    if (l < 1) throw std::domain_error("mie_block: l must be >= 1");
    if (!(kappa > 0.0)) throw std::domain_error("mie_block: kappa must be positive");
    if (!(R > 0.0)) throw std::domain_error("mie_block: R must be positive");
    if (!(mu > 0.0)) throw std::domain_error("mie_block: mu must be positive");
    if (!(eps >= 1.0) && !std::isinf(eps))
        throw std::domain_error("mie_block: eps must be >= 1 or infinite");

    const double u = kappa * R;
    const RiccatiPair bu = riccati_ik(l, u);
    // (pi/2) e^{ln I(u) - ln K(u)} = I(u)/Kt(u), the common scaled amplitude
    const double amp = M_PI_2 * std::exp(bu.ln_i - bu.ln_k - 2.0 * u);

    MieBlock out;
    out.l = l;
    out.kappa_r = u;
    if (std::isinf(eps)) {
        // perfect conductor: T^EE = -I'(u)/Kt'(u), T^HH = -I(u)/Kt(u)
        out.tee_scaled = -amp * bu.ip_over_i / bu.kp_over_k;
        out.thh_scaled = -amp;
        if (!std::isfinite(out.tee_scaled) || !std::isfinite(out.thh_scaled))
            throw ConvergenceError("mie_block: non-finite perfect-conductor value at l = " +
                                   std::to_string(l) + ", kappa R = " + std::to_string(u));
        return out;
    }

    const double v = std::sqrt(eps * mu) * u;
    const RiccatiPair bv = riccati_ik(l, v);
    const double se = std::sqrt(eps / mu);
    const double sh = std::sqrt(mu / eps);
    const double riu = bu.ip_over_i;
    const double rku = bu.kp_over_k;
    const double riv = bv.ip_over_i;
    out.tee_scaled = amp * (se * riu - riv) / (riv - se * rku);
    out.thh_scaled = amp * (sh * riu - riv) / (riv - sh * rku);
    if (!std::isfinite(out.tee_scaled) || !std::isfinite(out.thh_scaled))
        throw ConvergenceError("mie_block: non-finite value at l = " + std::to_string(l) +
                               ", kappa R = " + std::to_string(u) +
                               ", eps = " + std::to_string(eps));
    return out;
}

// Leading static coefficient: T^EE_l = c_l (kappa R)^{2l+1} (1 + O((kappa R)^2)).
// c_l = (l+1) frac / ((2l+1)!! (2l-1)!!) with frac = (eps0-1)/(l eps0 + l + 1),
// or 1/l in the conducting limit.  Underflows to zero for l beyond ~150, which
// is harmless: the n = 0 energy sums the combination (R/a)^{2l+1} directly.
inline double mie_block_static(int l, double eps0, double /*R*/)
{
    if (l < 1) throw std::domain_error("mie_block_static: l must be >= 1");
    double frac;
    if (std::isinf(eps0)) frac = 1.0 / l;
    else frac = (eps0 - 1.0) / (l * eps0 + l + 1.0);
    // (2l+1)!! = (2l+1)! / (2^l l!), evaluated in log space
    const double lnf1 = std::lgamma(2.0 * l + 2.0) - l * std::log(2.0) - std::lgamma(l + 1.0);
    const double lnf2 = std::lgamma(2.0 * l + 1.0) - l * std::log(2.0) - std::lgamma(l + 1.0);
    return (l + 1.0) * frac * std::exp(-lnf1 - lnf2);
}

namespace detail {

// l-sum of (2l+1)[T^HH Kt^2(xa) - T^EE (Kt'^2(xa) + l(l+1)/xa^2 Kt^2(xa))],
// every term assembled from bounded ratios times one log-tracked amplitude
// I(u) Kt(xa)^2/Kt(u) ~ e^{-2 kappa d} * geometric^l.
inline double sphere_lsum(double kappa, double eps, double mu, double R, double a,
                          double rtol, int lmax)
{
    const double u = kappa * R;
    const double xa = kappa * a;
    const bool metallic = std::isinf(eps);
    SphILadder ilu(u);
    SphKLadder klu(u), kla(xa);

    double v = 0.0, se = 0.0, sh = 0.0;
    SphILadder ilv(1.0);  // re-seeded below when dielectric
    if (!metallic) {
        v = std::sqrt(eps * mu) * u;
        ilv = SphILadder(v);
        se = std::sqrt(eps / mu);
        sh = std::sqrt(mu / eps);
    }

    const double ln23 = std::log(2.0 / M_PI);  // one net 2/pi in Kt(xa)^2/Kt(u)
    double s = 0.0;
    int small = 0;
    for (int l = 1; l <= lmax; ++l) {
        const double riu = (l + 1) / u + ilu.ratio();
        const double rku = (l + 1) / u - klu.rho();
        const double rka = (l + 1) / xa - kla.rho();
        double fe, fh, sgn;
        if (metallic) {
            fh = 1.0;
            fe = riu / rku;
            sgn = -1.0;
        } else {
            const double riv = (l + 1) / v + ilv.ratio();
            fe = (se * riu - riv) / (riv - se * rku);
            fh = (sh * riu - riv) / (riv - sh * rku);
            sgn = 1.0;
        }
        const double lam = l * (l + 1.0);
        const double amp = std::exp(ilu.ln_i() + 2.0 * kla.ln_k() - klu.ln_k() + ln23);
        const double t = (2 * l + 1) * sgn * (fh - fe * (rka * rka + lam / (xa * xa))) * amp;
        s += t;
        if (std::abs(t) < rtol * std::abs(s)) {
            if (++small >= 3) return s;
        } else {
            small = 0;
        }
        ilu.step();
        klu.step();
        kla.step();
        if (!metallic) ilv.step();
    }
    throw ConvergenceError("sphere l-sum did not converge by l = " + std::to_string(lmax) +
                           " at kappa = " + std::to_string(kappa));
}

// n = 0 term per (kB T alpha), half weight included:
//   -(1/(2 a^3)) sum_l (2l+1) l(l+1) frac (R/a)^{2l+1},
// the closed kappa->0 limit of (kappa/a^2) * lsum.
inline double sphere_n0_closed(double eps0, double R, double a, int lmax = 200000)
{
    double s = 0.0;
    const double lnq = std::log(R / a);
    for (int l = 1; l <= lmax; ++l) {
        const double frac = std::isinf(eps0) ? 1.0 / l : (eps0 - 1.0) / (l * eps0 + l + 1.0);
        const double t = (2 * l + 1.0) * l * (l + 1.0) * frac * std::exp((2 * l + 1) * lnq);
        s += t;
        if (t < 1e-14 * s) break;
    }
    return -s / (2.0 * a * a * a);
}

}  // namespace detail

inline double cp_energy_sphere_exact(const Configuration& cfg)
{
    cfg.validate();
    if (cfg.geometry != Geometry::sphere)
        throw ConfigError("cp_energy_sphere_exact: configuration is not a sphere");
    const double R = cfg.radius;
    const double a = cfg.a();
    const double kbt = k_boltzmann * cfg.temperature;

    const double eps0 = permittivity(cfg.material, 0.0);
    double E = kbt * cfg.alpha * detail::sphere_n0_closed(eps0, R, a);

    int small = 0;
    for (std::size_t n = 1; n <= cfg.tol.n_max; ++n) {
        const auto mt = matsubara_term(n, cfg.temperature);
        const double eps = permittivity(cfg.material, mt.xi);
        const double term = kbt / (a * a) * mt.kappa * cfg.alpha *
            detail::sphere_lsum(mt.kappa, eps, cfg.mu_body, R, a,
                                cfg.tol.channel_rel, cfg.tol.channel_max);
        E += term;
        if (std::abs(term) < cfg.tol.matsubara_rel * std::abs(E)) {
            if (++small >= 2) return E;
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("sphere Matsubara sum did not converge within n_max = " +
                           std::to_string(cfg.tol.n_max));
}

}
