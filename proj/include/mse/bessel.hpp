#pragma once
// Modified Bessel functions at real positive argument: cylindrical I_m, K_m
// and spherical Riccati forms I_l(x) = x i_l(x), K_l(x) = x k_l(x) with
// k_l(x) = sqrt(pi/2x) K_{l+1/2}(x)   (so  K_0(x) = (pi/2) e^{-x},
// Wronskian I_l K_l' - I_l' K_l = -pi/2; cylindrical I K' - I' K = -1/x).
//
// K grows and I shrinks factorially in the order at fixed argument, so plain
// values are useless beyond a few hundred orders.  Everything here works with
// ln|f| plus order ratios:
//
//   upward recurrence for the third kind (stable direction), seeded at the
//   two lowest orders;
//
//   downward continued fraction for the first-kind ratio r = f_{m+1}/f_m,
//   refreshed in blocks while an energy sum marches the order upward.
//
// Derivatives come from the current ratios alone:
//   cyl:  K'_m/K_m = m/x - rho_m,        I'_m/I_m = m/x + r_m
//   sph:  K_l'/K_l = (l+1)/x - rho_l,    I_l'/I_l = (l+1)/x + r_l
// with rho = f_{m+1}/f_m of the third kind.

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

namespace mse {

namespace detail {

// GSL's default error handler aborts the process; silence it once and check
// status codes at the call sites instead.
inline void gsl_quiet()
{
    static const bool off = [] { gsl_set_error_handler_off(); return true; }();
    (void)off;
}

inline double gsl_checked(int (*fn)(double, gsl_sf_result*), double x, const char* name)
{
    gsl_quiet();
    gsl_sf_result r;
    const int status = fn(x, &r);
    if (status != 0 && status != GSL_EUNDRFLW)
        throw std::runtime_error(std::string(name) + " failed at x = " + std::to_string(x));
    return r.val;
}

inline void require_positive(double x, const char* where)
{
    if (!(x > 0.0))
        throw std::domain_error(std::string(where) + ": argument must be positive");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Order ladders.  Each instance is pinned to one argument x and marches the
// order upward one step at a time; energy sums advance all their ladders in
// lockstep with the partial-wave index.

// ln K_m(x) and rho_m = K_{m+1}(x)/K_m(x), starting at m = 0.
class CylKLadder {
public:
    explicit CylKLadder(double x) : x_(x), m_(0)
    {
        detail::require_positive(x, "CylKLadder");
        const double k0 = detail::gsl_checked(gsl_sf_bessel_K0_scaled_e, x, "K0_scaled");
        const double k1 = detail::gsl_checked(gsl_sf_bessel_K1_scaled_e, x, "K1_scaled");
        ln_k_ = std::log(k0) - x;
        rho_ = k1 / k0;
    }
    int order() const { return m_; }
    double ln_k() const { return ln_k_; }
    double rho() const { return rho_; }
    double kp_over_k() const { return m_ / x_ - rho_; }
    void step()
    {
        ln_k_ += std::log(rho_);
        rho_ = 1.0 / rho_ + 2.0 * (m_ + 1) / x_;
        ++m_;
    }

private:
    double x_;
    int m_;
    double ln_k_;
    double rho_;
};

// ln I_m(x) and r_m = I_{m+1}(x)/I_m(x), starting at m = 0.  Ratios from a
// downward continued fraction r_{m-1} = 1/(2m/x + r_m), filled a block at a
// time with a start pad so the seed error has died off by the block top.
class CylILadder {
public:
    static constexpr int block = 64;

    explicit CylILadder(double x) : x_(x), m_(0)
    {
        detail::require_positive(x, "CylILadder");
        const double i0 = detail::gsl_checked(gsl_sf_bessel_I0_scaled_e, x, "I0_scaled");
        ln_i_ = std::log(i0) + x;
        fill(0);
    }
    int order() const { return m_; }
    double ln_i() const { return ln_i_; }
    double ratio()
    {
        if (m_ >= lo_ + block) fill(m_);
        return rs_[m_ - lo_];
    }
    double ip_over_i() { return m_ / x_ + ratio(); }
    void step()
    {
        ln_i_ += std::log(ratio());
        ++m_;
    }

private:
    void fill(int mlo)
    {
        // One downward step scales the seed's relative error by
        // r_m r_{m+1} ~ exp(-2 asinh(nu/x)), which is barely below 1 when the
        // order is far under the argument, so a fixed pad is not enough at
        // large x: size it so the accumulated damping passes e^{-45}.
        int top = mlo + block;
        for (double damp = 0.0; damp < 45.0; ++top)
            damp += 2.0 * std::asinh((top + 1.0) / x_);
        const double nu = top + 2.0;  // seed r_{top+1} from its asymptotic form
        double r = x_ / (nu + std::hypot(nu, x_));
        for (int mm = top; mm >= mlo; --mm) {
            r = 1.0 / (2.0 * (mm + 1) / x_ + r);
            if (mm < mlo + block) rs_[mm - mlo] = r;
        }
        lo_ = mlo;
    }

    double x_;
    int m_;
    double ln_i_;
    std::array<double, block> rs_{};
    int lo_ = 0;
};

// Riccati third kind K_l(x) = x k_l(x): ln K_l and rho_l = K_{l+1}/K_l,
// starting at l = 1.  Upward:  K_{l+1} = K_{l-1} + ((2l+1)/x) K_l; the seeds
// are the closed forms K_1 = (pi/2) e^{-x} (1+x)/x and
// K_2/K_1 = (x^2+3x+3)/(x(1+x)).
class SphKLadder {
public:
    explicit SphKLadder(double x) : x_(x), l_(1)
    {
        detail::require_positive(x, "SphKLadder");
        ln_k_ = std::log(M_PI_2) - x + std::log1p(x) - std::log(x);
        rho_ = (x * x + 3.0 * x + 3.0) / (x * (1.0 + x));
    }
    int order() const { return l_; }
    double ln_k() const { return ln_k_; }
    double rho() const { return rho_; }
    double kp_over_k() const { return (l_ + 1) / x_ - rho_; }
    void step()
    {
        ln_k_ += std::log(rho_);
        rho_ = 1.0 / rho_ + (2.0 * (l_ + 1) + 1.0) / x_;
        ++l_;
    }

private:
    double x_;
    int l_;
    double ln_k_;
    double rho_;
};

// Riccati first kind I_l(x) = x i_l(x): ln I_l and r_l = I_{l+1}/I_l from the
// downward continued fraction r_l = 1/((2l+3)/x + r_{l+1}), starting at l = 1.
class SphILadder {
public:
    static constexpr int block = 64;

    explicit SphILadder(double x) : x_(x), l_(1)
    {
        detail::require_positive(x, "SphILadder");
        gsl_sf_result r;
        detail::gsl_quiet();
        const int status = gsl_sf_bessel_il_scaled_e(1, x, &r);
        if (status != 0 && status != GSL_EUNDRFLW)
            throw std::runtime_error("il_scaled(1) failed at x = " + std::to_string(x));
        ln_i_ = std::log(x * r.val) + x;
        fill(1);
    }
    int order() const { return l_; }
    double ln_i() const { return ln_i_; }
    double ratio()
    {
        if (l_ >= lo_ + block) fill(l_);
        return rs_[l_ - lo_];
    }
    double ip_over_i() { return (l_ + 1) / x_ + ratio(); }
    void step()
    {
        ln_i_ += std::log(ratio());
        ++l_;
    }

private:
    void fill(int llo)
    {
        // same damping budget as the cylindrical ladder: the pad must grow
        // with the argument for the seed error to die before the block
        int top = llo + block;
        for (double damp = 0.0; damp < 45.0; ++top)
            damp += 2.0 * std::asinh((top + 1.5) / x_);
        const double nu = top + 2.5;
        double r = x_ / (nu + std::hypot(nu, x_));
        for (int ll = top; ll >= llo; --ll) {
            r = 1.0 / ((2.0 * ll + 3.0) / x_ + r);
            if (ll < llo + block) rs_[ll - llo] = r;
        }
        lo_ = llo;
    }

    double x_;
    int l_;
    double ln_i_;
    std::array<double, block> rs_{};
    int lo_ = 1;
};

// ---------------------------------------------------------------------------
// Single-shot evaluations.  These construct a ladder and march it to the
// requested order, so they cost O(order); the energy sums never call them in
// their inner loops.

struct RiccatiPair {
    int l;
    double x;
    double ln_i, ln_k;            // ln I_l(x), ln K_l(x); always finite
    double ip_over_i, kp_over_k;  // derivative ratios
    bool representable;           // unscaled values fit in double range

    double i() const { return std::exp(ln_i); }
    double k() const { return std::exp(ln_k); }
    double ip() const { return ip_over_i * std::exp(ln_i); }
    double kp() const { return kp_over_k * std::exp(ln_k); }
    double i_scaled() const { return std::exp(ln_i - x); }  // e^{-x} I_l
    double k_scaled() const { return std::exp(ln_k + x); }  // e^{+x} K_l
    double ik() const { return std::exp(ln_i + ln_k); }
    // I K' - I' K, assembled from the always-finite product and ratios.
    double wronskian() const { return ik() * (kp_over_k - ip_over_i); }
};

inline RiccatiPair riccati_ik(int l, double x)
{
    if (l < 0) throw std::domain_error("riccati_ik: order must be >= 0");
    detail::require_positive(x, "riccati_ik");
    RiccatiPair out;
    out.l = l;
    out.x = x;
    if (l == 0) {
        // I_0 = sinh x, K_0 = (pi/2) e^{-x}; I_0' = cosh x, K_0' = -K_0.
        out.ln_i = x < 350.0 ? std::log(std::sinh(x))
                             : x - std::log(2.0) + std::log1p(-std::exp(-2.0 * x));
        out.ln_k = std::log(M_PI_2) - x;
        out.ip_over_i = 1.0 / std::tanh(x);
        out.kp_over_k = -1.0;
    } else {
        SphILadder li(x);
        SphKLadder lk(x);
        while (li.order() < l) li.step();
        while (lk.order() < l) lk.step();
        out.ln_i = li.ln_i();
        out.ln_k = lk.ln_k();
        out.ip_over_i = li.ip_over_i();
        out.kp_over_k = lk.kp_over_k();
    }
    out.representable = std::abs(out.ln_i) < 700.0 && std::abs(out.ln_k) < 700.0;
    return out;
}

struct CylBesselPair {
    int m;
    double x;
    double ln_i, ln_k;
    double ip_over_i, kp_over_k;
    bool representable;

    double i() const { return std::exp(ln_i); }
    double k() const { return std::exp(ln_k); }
    double ip() const { return ip_over_i * std::exp(ln_i); }
    double kp() const { return kp_over_k * std::exp(ln_k); }
    double i_scaled() const { return std::exp(ln_i - x); }
    double k_scaled() const { return std::exp(ln_k + x); }
    double ik() const { return std::exp(ln_i + ln_k); }
    double wronskian() const { return ik() * (kp_over_k - ip_over_i); }
};

inline CylBesselPair cyl_ik(int m, double x)
{
    detail::require_positive(x, "cyl_ik");
    const int ma = m < 0 ? -m : m;  // I_{-m} = I_m, K_{-m} = K_m
    CylBesselPair out;
    out.m = m;
    out.x = x;
    CylILadder li(x);
    CylKLadder lk(x);
    while (li.order() < ma) li.step();
    while (lk.order() < ma) lk.step();
    out.ln_i = li.ln_i();
    out.ln_k = lk.ln_k();
    out.ip_over_i = li.ip_over_i();
    out.kp_over_k = lk.kp_over_k();
    out.representable = std::abs(out.ln_i) < 700.0 && std::abs(out.ln_k) < 700.0;
    return out;
}

}
