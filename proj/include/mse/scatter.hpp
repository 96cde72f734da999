#pragma once
// Surface scattering operator in partial-wave channels, Neumann orders, and
// direct resummation.
//
// For a single homogeneous body the surface operator is block-diagonal in the
// partial-wave label: multipole l for the sphere, (m, k_z) for the cylinder.
// Each block is a real 4x4 matrix K over the tangential basis
// (j_1, j_2, m_1, m_2) -- electric and magnetic surface currents resolved
// along the two tangential vector fields of the channel.  The particle away
// from the surface enters through detector rows A (vacuum propagation from
// the surface to the particle) and source columns B (the coupling operator's
// projection, which carries the exterior-coefficient prefactor).  The energy
// of one channel is
//
//     sum_i A_i . (I - K)^{-1} . B_i          (resummed)
//     sum_i A_i . (I + K + ... + K^k) . B_i   (series through order k)
//
// and the resummed value reproduces the exact T-matrix energy -- that identity
// is the module's certificate, since the individual normalizations of A, K, B
// cancel in the contraction.
//
// All Bessel content is carried as ln-magnitudes plus ratios (see bessel.hpp);
// couplings are stored with a bounded amplitude pulled out, so channels stay
// representable at any separation.  Energies are accumulated per unit
// polarizability and scaled once at the end.

#include <mse/bessel.hpp>
#include <mse/config.hpp>
#include <mse/cylinder.hpp>
#include <mse/errors.hpp>
#include <mse/materials.hpp>
#include <mse/units.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace mse {

struct SsoBlock {
    Geometry geometry = Geometry::sphere;
    int l = 0;        // sphere multipole (>= 1); unused for cylinder
    int m = 0;        // cylinder azimuthal index
    double kz = 0.0;  // cylinder axial wavenumber, 1/um
    double kappa = 0.0;
    Eigen::Matrix4d k_matrix = Eigen::Matrix4d::Zero();
};

inline double spectral_radius(const SsoBlock& block)
{
    Eigen::EigenSolver<Eigen::Matrix4d> es(block.k_matrix, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Detector rows / source columns of one channel.  The stored rows and columns
// are scaled: the physical contraction of pair i through any matrix X is
// scale * a.row(i) * X * b.col(i).  Two pairs for the sphere (electric- and
// magnetic-type detector polarization), three for the cylinder.
struct ChannelCouplings {
    int pairs = 0;
    Eigen::Matrix<double, 3, 4> a = Eigen::Matrix<double, 3, 4>::Zero();
    Eigen::Matrix<double, 4, 3> b = Eigen::Matrix<double, 4, 3>::Zero();
    double scale = 1.0;
};

namespace detail {

inline const Eigen::Matrix2d& pair_spin()
{
    // the fixed antisymmetric coupling ((0,-1),(1,0)) between the two
    // tangential directions
    static const Eigen::Matrix2d p = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();
    return p;
}

// Gauge-weighted assembly of the 4x4 round-trip block from the single-medium
// 2x2 kernels: S (transverse) and D (mixing) evaluated with exterior (0) and
// interior (s) wavenumbers.  Identical structure for sphere and cylinder.
inline Eigen::Matrix4d roundtrip(const GaugeWeights& g, double kappa, double eps, double mu,
                                 const Eigen::Matrix2d& s0, const Eigen::Matrix2d& ss,
                                 const Eigen::Matrix2d& d0, const Eigen::Matrix2d& ds)
{
    const Eigen::Matrix2d& n = pair_spin();
    const double gh = g.gamma_h();
    const double ge = g.gamma_e();
    Eigen::Matrix4d k;
    k.block<2, 2>(0, 0) = -(2.0 / gh) * (n * (g.ci_h * ds - g.ce_h * d0));
    k.block<2, 2>(0, 2) = (2.0 * kappa / gh) * (n * (g.ci_h * eps * ss - g.ce_h * s0));
    k.block<2, 2>(2, 0) = -(2.0 * kappa / ge) * (n * (g.ci_e * mu * ss - g.ce_e * s0));
    k.block<2, 2>(2, 2) = -(2.0 / ge) * (n * (g.ci_e * ds - g.ce_e * d0));
    return k;
}

// ---------------------------------------------------------------------------
// Sphere channel.  Kernel readout at one l: derivative ratios and scaled
// products of the Riccati pairs at u = kappa R (exterior), v = sqrt(eps mu)
// kappa R (interior), and xa = kappa a (detector).

struct SphereReadout {
    double riu, rku;  // I'/I, K'/K at u
    double riv, rkv;  // at v
    double rka;       // K'/K at xa
    double pku, pkv;  // I*K at u, v
    double a2;        // (I(u) K(xa))^2
};

inline void sphere_sd(double q, double pk, double ri, double rk,
                      Eigen::Matrix2d& s, Eigen::Matrix2d& d)
{
    s << -pk * ri * rk, 0.0,
          0.0,          pk;
    s *= 2.0 / (M_PI * q);
    const double c = -pk * (ri + rk) / M_PI;
    d << 0.0, c,
         c,   0.0;
}

inline Eigen::Matrix4d sphere_roundtrip(double kappa, double eps, double mu,
                                        const GaugeWeights& g, const SphereReadout& r)
{
    const double qs = std::sqrt(eps * mu) * kappa;
    Eigen::Matrix2d s0, ss, d0, ds;
    sphere_sd(kappa, r.pku, r.riu, r.rku, s0, d0);
    sphere_sd(qs, r.pkv, r.riv, r.rkv, ss, ds);
    return roundtrip(g, kappa, eps, mu, s0, ss, d0, ds);
}

// Couplings decompose the channel's trace kernel into two detector/source
// pairs.  m2 and n2 are the magnetic- and electric-type detector weights,
// built from K(kappa a); the common factor kappa^2 (2l+1)/pi^3 sits in the
// detector rows.
inline void sphere_couplings(int l, double kappa, double a, const GaugeWeights& g,
                             const SphereReadout& r, ChannelCouplings& c)
{
    const double xa = kappa * a;
    const double lam = double(l) * (l + 1.0);
    const double m2 = r.a2 / (xa * xa);
    const double n2 = r.a2 * (r.rka * r.rka + lam / (xa * xa)) / (xa * xa);
    const double beta = kappa * kappa * (2.0 * l + 1.0) / (M_PI * M_PI * M_PI);
    const double cth = g.ct_h();
    const double cte = g.ct_e();
    c.pairs = 2;
    c.scale = 1.0;
    c.a.setZero();
    c.b.setZero();
    c.a.row(0) << beta * r.riu * n2, 0.0, 0.0, beta * n2;
    c.b.col(0) << cth, 0.0, 0.0, -cte * r.riu;
    c.a.row(1) << 0.0, beta * m2, -beta * r.riu * m2, 0.0;
    c.b.col(1) << 0.0, cth * r.riu, cte, 0.0;
}

// Static (kappa = 0) limit.  After rescaling the magnetic-current components
// by kappa the block has a finite limit in which the (j_1, m_2) sector carries
// the whole energy; the complementary sector decouples and contributes
// nothing, so its entries are left zero here.  w = 1/(2l+1), lam = l(l+1),
// and the detector weight is x = (R/a)^{2l+1}/a^3, kept in log space.
inline void sphere_static_channel(int l, double eps0, double drude_sigma, double mu,
                                  double R, double a, const CoefficientChoice& choice,
                                  Eigen::Matrix4d& k, ChannelCouplings& c)
{
    const double w = 1.0 / (2.0 * l + 1.0);
    const double lam = double(l) * (l + 1.0);
    const double x = std::exp((2.0 * l + 1.0) * std::log(R / a)) / (a * a * a);
    k.setZero();
    c.pairs = 1;
    c.scale = 1.0;
    c.a.setZero();
    c.b.setZero();
    if (!std::isinf(eps0)) {
        const GaugeWeights g = gauge_weights(choice, eps0, mu);
        const double gh = g.gamma_h();
        const double ge = g.gamma_e();
        k(0, 0) = -w * (g.ci_h - g.ce_h) / gh;
        k(0, 3) = -2.0 * R * w * (g.ci_h * eps0 - g.ce_h) / gh;
        k(3, 0) = -(2.0 * lam * w / R) * (g.ci_e / eps0 - g.ce_e) / ge;
        k(3, 3) = w * (g.ci_e - g.ce_e) / ge;
        c.a.row(0) << lam * x / (4.0 * M_PI), 0.0, 0.0, double(l) * x * R / (4.0 * M_PI);
        c.b.col(0) << g.ct_h(), 0.0, 0.0, -g.ct_e() * (l + 1.0) / R;
        return;
    }
    // Conductor: the limit is taken along eps ~ sigma/kappa, where
    // sigma = Omega^2/(gamma hbar c) is the material's Drude scale.  The
    // blocks depend on sigma but every trace of K^j Xi does not (the sigma
    // factors cancel pairwise), so the series and its resummation are
    // sigma-free.  Only the named coefficient choices have a finite limit.
    if (choice.kind == CoefficientChoice::Kind::c1) {
        k(0, 0) = -w * (mu - 1.0) / (mu + 1.0);
        k(0, 3) = -2.0 * R * w * mu * drude_sigma / (mu + 1.0);
        k(3, 3) = w;
        c.a.row(0) << lam * x / (4.0 * M_PI), 0.0, 0.0, 0.0;
        c.b.col(0) << 2.0 / (mu + 1.0), 0.0, 0.0, -(2.0 / drude_sigma) * (l + 1.0) / R;
    } else if (choice.kind == CoefficientChoice::Kind::c2) {
        if (mu != 1.0)
            throw ConfigError("metallic static limit with mu != 1 is not available for c2");
        k(0, 0) = w;
        k(3, 0) = -2.0 * lam * w / (drude_sigma * R);
        k(3, 3) = w;
        c.a.row(0) << lam * x / (4.0 * M_PI), 0.0, 0.0, 0.0;
        c.b.col(0) << 2.0, 0.0, 0.0, 0.0;
    } else {
        throw ConfigError("metallic static limit requires coefficient choice c1 or c2");
    }
}

// ---------------------------------------------------------------------------
// Cylinder channel.  Kernel readout at one (m, k_z): marched ladders at
// x0 = p0 R, x1 = p1 R (interior) and xa = p0 a, with p^2 = q^2 + kz^2.

struct CylReadout {
    double ik0, ipr0, kpr0;  // I K, I'/I, K'/K at x0
    double ik1, ipr1, kpr1;  // at x1
    double ln_i0, ln_ka;     // ln I(x0), ln K(xa)
    double kpra;             // K'/K at xa
};

inline void cyl_sd(int m, double kz, double q, double R,
                   double ik, double ipr, double kpr,
                   Eigen::Matrix2d& s, Eigen::Matrix2d& d)
{
    const double p2 = q * q + kz * kz;
    const double p = std::sqrt(p2);
    const double mk = m * kz;
    const double off = (mk * p2 / (q * q * R)) * ik;
    s << -p2 * ik * ipr * kpr + (mk / (q * R)) * (mk / (q * R)) * ik, off,
         off, (p2 * p2 / (q * q)) * ik;
    s *= R / p2;
    const double f = -ik * (ipr + kpr);
    d << f * mk / p, f * R * p / 2.0,
         f * R * p / 2.0, 0.0;
}

inline Eigen::Matrix4d cyl_roundtrip(int m, double kz, double kappa, double eps, double mu,
                                     double R, const GaugeWeights& g, const CylReadout& r)
{
    const double qs = std::sqrt(eps * mu) * kappa;
    Eigen::Matrix2d s0, ss, d0, ds;
    cyl_sd(m, kz, kappa, R, r.ik0, r.ipr0, r.kpr0, s0, d0);
    cyl_sd(m, kz, qs, R, r.ik1, r.ipr1, r.kpr1, ss, ds);
    return roundtrip(g, kappa, eps, mu, s0, ss, d0, ds);
}

// Three detector polarizations.  One factor I(p0 R) and one K(p0 a) appear in
// every entry; exp(ln I0 + ln Ka + p0 (a - R)) is pulled out of the rows and
// columns (it stays bounded), leaving scale = e^{-2 p0 (a-R)} for the
// contraction.  The azimuthal polarization carries a factor i on the particle
// side and -i on the detector side; the product is real, so the i's are
// dropped and everything below is real arithmetic.
inline void cyl_couplings(int m, double kz, double kappa, double R, double a,
                          const GaugeWeights& g, const CylReadout& r, ChannelCouplings& c)
{
    const double p0 = std::hypot(kappa, kz);
    const double amp = std::exp(r.ln_i0 + r.ln_ka + p0 * (a - R));
    const double cth = g.ct_h();
    const double cte = g.ct_e();
    const double mk = m * kz;
    c.pairs = 3;
    c.scale = std::exp(-2.0 * p0 * (a - R));
    const std::array<std::array<double, 2>, 3> pols = {{
        {m / a, -kz * p0 * r.kpra / kappa},
        {-p0 * r.kpra, mk / (kappa * a)},
        {0.0, p0 * p0 / kappa},
    }};
    for (int i = 0; i < 3; ++i) {
        const double mf = pols[i][0];
        const double nf = pols[i][1];
        const double j1 = -mf;
        const double j2 = (mk / (p0 * p0 * R)) * mf - (kappa / p0) * r.ipr0 * nf;
        const double m1 = -nf;
        const double m2 = (kappa / p0) * r.ipr0 * mf + (mk / (p0 * p0 * R)) * nf;
        c.b.col(i) << amp * cth * j1, amp * cth * j2, amp * cte * m1, amp * cte * m2;
        c.a.row(i) << amp * -(kappa * R / (p0 * p0)) * (p0 * r.ipr0 * mf + (mk / (kappa * R)) * nf),
                      amp * -R * nf,
                      amp * -(kappa * R / (p0 * p0)) * (-p0 * r.ipr0 * nf + (mk / (kappa * R)) * mf),
                      amp * -R * mf;
    }
}

// Five ladders marching m together for one (kappa, kz).
struct CylLadders {
    double x0, x1, xa;
    CylILadder i0, i1;
    CylKLadder k0, k1, ka;
    int m = 0;

    CylLadders(double kz, double kappa, double eps, double mu, double R, double a)
        : x0(std::hypot(kappa, kz) * R),
          x1(std::sqrt(eps * mu * kappa * kappa + kz * kz) * R),
          xa(std::hypot(kappa, kz) * a),
          i0(x0), i1(x1), k0(x0), k1(x1), ka(xa)
    {
    }
    CylReadout readout()
    {
        CylReadout r;
        r.ik0 = std::exp(i0.ln_i() + k0.ln_k());
        r.ipr0 = i0.ip_over_i();
        r.kpr0 = k0.kp_over_k();
        r.ik1 = std::exp(i1.ln_i() + k1.ln_k());
        r.ipr1 = i1.ip_over_i();
        r.kpr1 = k1.kp_over_k();
        r.ln_i0 = i0.ln_i();
        r.ln_ka = ka.ln_k();
        r.kpra = m / xa - ka.rho();
        return r;
    }
    void step()
    {
        i0.step();
        i1.step();
        k0.step();
        k1.step();
        ka.step();
        ++m;
    }
};

// ---------------------------------------------------------------------------
// Channel accumulation.  One pass produces the series partial sums through
// every requested order and the direct solve.  Channels whose spectral radius
// reaches [1 - guard, 1) are replaced by their resummed value at every order
// and flagged; radius >= 1 aborts with the channel named.

struct ChannelSum {
    std::vector<double> cum;  // partial sums through orders 0..k
    double res = 0.0;
    int last = 0;        // highest retained channel index (l or |m|)
    bool guarded = false;
    double worst_rho = 0.0;
    std::string guard_note;
};

inline double spectral_radius4(const Eigen::Matrix4d& k)
{
    Eigen::EigenSolver<Eigen::Matrix4d> es(k, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Returns the channel's resummed contraction; accumulates order partials.
inline double channel_contract(const Eigen::Matrix4d& k, const ChannelCouplings& c,
                               int kord, bool orders, double weight,
                               const Tolerances& tol, const std::string& label,
                               ChannelSum& out)
{
    const Eigen::Matrix4d m = Eigen::Matrix4d::Identity() - k;
    const Eigen::PartialPivLU<Eigen::Matrix4d> lu(m);
    double tres = 0.0;
    for (int i = 0; i < c.pairs; ++i)
        tres += c.a.row(i) * lu.solve(c.b.col(i));
    tres *= c.scale;
    out.res += weight * tres;
    if (!orders) return tres;

    // route near-divergent channels to the direct solve; the row-sum norm
    // screens out the common case before an eigen decomposition is paid for
    const double bound = k.cwiseAbs().rowwise().sum().maxCoeff();
    if (bound >= 1.0 - tol.spectral_guard) {
        const double rho = spectral_radius4(k);
        if (rho >= 1.0)
            throw SpectralGuardError(label + ": spectral radius " + std::to_string(rho) +
                                         " >= 1, the scattering series diverges; "
                                         "use resummed_energy",
                                     rho);
        if (rho >= 1.0 - tol.spectral_guard) {
            for (int j = 0; j <= kord; ++j) out.cum[j] += weight * tres;
            out.guarded = true;
            if (rho > out.worst_rho) {
                out.worst_rho = rho;
                out.guard_note = label + " rho=" + std::to_string(rho);
            }
            return tres;
        }
    }
    for (int i = 0; i < c.pairs; ++i) {
        Eigen::Vector4d v = c.b.col(i);
        double s = c.a.row(i) * v;
        out.cum[0] += weight * c.scale * s;
        for (int j = 1; j <= kord; ++j) {
            v = k * v;
            s += c.a.row(i) * v;
            out.cum[j] += weight * c.scale * s;
        }
    }
    return tres;
}

// sum over l of the sphere channel traces at one Matsubara frequency
inline ChannelSum sphere_trace_orders(double kappa, double eps, double mu, double R, double a,
                                      const GaugeWeights& g, int kord, bool orders,
                                      const Tolerances& tol)
{
    const double u = kappa * R;
    const double v = std::sqrt(eps * mu) * kappa * R;
    const double xa = kappa * a;
    SphILadder liu(u), liv(v);
    SphKLadder lku(u), lkv(v), lka(xa);
    ChannelSum out;
    out.cum.assign(orders ? kord + 1 : 0, 0.0);
    int small = 0;
    while (liu.order() <= tol.channel_max) {
        const int l = liu.order();
        SphereReadout r;
        r.riu = liu.ip_over_i();
        r.rku = lku.kp_over_k();
        r.riv = liv.ip_over_i();
        r.rkv = lkv.kp_over_k();
        r.rka = lka.kp_over_k();
        r.pku = std::exp(liu.ln_i() + lku.ln_k());
        r.pkv = std::exp(liv.ln_i() + lkv.ln_k());
        r.a2 = std::exp(2.0 * (liu.ln_i() + lka.ln_k()));
        const Eigen::Matrix4d k = sphere_roundtrip(kappa, eps, mu, g, r);
        ChannelCouplings c;
        sphere_couplings(l, kappa, a, g, r, c);
        const double tres = channel_contract(k, c, kord, orders, 1.0, tol,
                                             "sphere channel l=" + std::to_string(l), out);
        out.last = l;
        if (l > 3 && std::abs(tres) < tol.channel_rel * std::abs(out.res)) {
            if (++small >= 6) return out;
        } else {
            small = 0;
        }
        liu.step();
        lku.step();
        liv.step();
        lkv.step();
        lka.step();
    }
    throw ConvergenceError("sphere channel sum did not converge by l = " +
                           std::to_string(tol.channel_max));
}

// static l-sum from the 2x2-sector channel limits
inline ChannelSum sphere_static_orders(double eps0, double drude_sigma, double mu,
                                       double R, double a, const CoefficientChoice& choice,
                                       int kord, bool orders, const Tolerances& tol)
{
    ChannelSum out;
    out.cum.assign(orders ? kord + 1 : 0, 0.0);
    int small = 0;
    Eigen::Matrix4d k;
    ChannelCouplings c;
    for (int l = 1; l <= tol.channel_max; ++l) {
        sphere_static_channel(l, eps0, drude_sigma, mu, R, a, choice, k, c);
        const double tres = channel_contract(k, c, kord, orders, 1.0, tol,
                                             "sphere static channel l=" + std::to_string(l),
                                             out);
        out.last = l;
        if (l > 3 && std::abs(tres) < 1e-14 * std::abs(out.res)) {
            if (++small >= 4) return out;
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("sphere static channel sum did not converge by l = " +
                           std::to_string(tol.channel_max));
}

// m-folded cylinder integrand at one (kappa, kz): m=0 once, |m|>=1 twice
inline ChannelSum cyl_msum_orders(double kz, double kappa, double eps, double mu,
                                  double R, double a, const GaugeWeights& g,
                                  int kord, bool orders, double mtol, const Tolerances& tol)
{
    CylLadders lad(kz, kappa, eps, mu, R, a);
    ChannelSum out;
    out.cum.assign(orders ? kord + 1 : 0, 0.0);
    int small = 0;
    for (int m = 0; m <= tol.channel_max; ++m) {
        const CylReadout r = lad.readout();
        const Eigen::Matrix4d k = cyl_roundtrip(m, kz, kappa, eps, mu, R, g, r);
        ChannelCouplings c;
        cyl_couplings(m, kz, kappa, R, a, g, r, c);
        const double wgt = (m == 0) ? 1.0 : 2.0;
        const double tres = channel_contract(k, c, kord, orders, wgt, tol,
                                             "cylinder channel m=" + std::to_string(m) +
                                                 " kz=" + std::to_string(kz),
                                             out);
        out.last = m;
        if (m > 3 && std::abs(tres) < mtol * std::abs(out.res)) {
            if (++small >= 2) return out;
        } else {
            small = 0;
        }
        lad.step();
    }
    throw ConvergenceError("cylinder m-sum did not converge by |m| = " +
                           std::to_string(tol.channel_max) + " at kz = " + std::to_string(kz));
}

// 2 int_0^inf dk_z of the m-folded channel sums, sinh-substituted
// Gauss-Legendre with node doubling controlled on the resummed component.
inline ChannelSum cyl_kz_orders_integral(double kappa, double eps, double mu,
                                         double R, double a, const GaugeWeights& g,
                                         int kord, bool orders, const Tolerances& tol)
{
    const double d = a - R;
    const double tmax = std::asinh(26.0 / (kappa * d));
    std::vector<double> x, w;
    ChannelSum out;
    double prev = 0.0;
    bool have_prev = false;
    for (int npts = tol.quad_min_nodes; npts <= tol.quad_max_nodes; npts *= 2) {
        gauss_legendre(npts, x, w);
        ChannelSum acc;
        acc.cum.assign(orders ? kord + 1 : 0, 0.0);
        for (int i = 0; i < npts; ++i) {
            const double t = 0.5 * tmax * (x[i] + 1.0);
            const double kz = kappa * std::sinh(t);
            const double jac = kappa * std::cosh(t);
            const double wt = 2.0 * 0.5 * tmax * w[i] * jac;
            ChannelSum node = cyl_msum_orders(kz, kappa, eps, mu, R, a, g, kord, orders,
                                              0.1 * tol.channel_rel, tol);
            acc.res += wt * node.res;
            for (int j = 0; j <= (orders ? kord : -1); ++j) acc.cum[j] += wt * node.cum[j];
            if (node.last > acc.last) acc.last = node.last;
            if (node.guarded && node.worst_rho > acc.worst_rho) {
                acc.guarded = true;
                acc.worst_rho = node.worst_rho;
                acc.guard_note = node.guard_note;
            }
        }
        out = acc;
        if (have_prev && std::abs(out.res - prev) <= tol.quad_rel * std::abs(out.res))
            return out;
        prev = out.res;
        have_prev = true;
    }
    throw ConvergenceError("cylinder k_z quadrature did not converge at " +
                           std::to_string(tol.quad_max_nodes) + " nodes");
}

// ---------------------------------------------------------------------------
// Cylinder static series terms.  kappa -> 0 does not commute with the channel
// blocks entry-wise (a rank-one piece of K grows like 1/kappa^2 while its
// energy contribution stays finite), so the static per-order integrand is the
// polynomial limit of kappa * (channel orders) along a fixed node scheme in
// kappa/|kz|, taken by Neville extrapolation.  The node fractions were chosen
// so that the float64 truncation + rounding error stays at the 1e-6 level.

inline constexpr std::array<double, 6> static_nodes = {0.04, 0.07, 0.10, 0.13, 0.16, 0.19};

inline std::vector<double> neville_to_zero(const std::array<double, 6>& xs,
                                           std::array<std::vector<double>, 6>& ys)
{
    const int n = 6;
    for (int j = 1; j < n; ++j)
        for (int i = 0; i + j < n; ++i)
            for (std::size_t q = 0; q < ys[i].size(); ++q)
                ys[i][q] = (xs[i + j] * ys[i][q] - xs[i] * ys[i + 1][q]) / (xs[i + j] - xs[i]);
    return ys[0];
}

inline std::vector<double> cyl_static_orders_msum(double kz, double eps0, double mu,
                                                  double R, double a,
                                                  const CoefficientChoice& choice,
                                                  int kord, const Tolerances& tol)
{
    const GaugeWeights g = gauge_weights(choice, eps0, mu);
    const double h = std::abs(kz) / std::sqrt(eps0 * mu);
    std::array<double, 6> xs;
    std::array<std::vector<double>, 6> ys;
    for (int i = 0; i < 6; ++i) {
        xs[i] = static_nodes[i] * h;
        ChannelSum cs = cyl_msum_orders(kz, xs[i], eps0, mu, R, a, g, kord, true,
                                        tol.channel_rel, tol);
        ys[i].resize(kord + 1);
        for (int j = 0; j <= kord; ++j) ys[i][j] = xs[i] * cs.cum[j];
    }
    std::vector<double> lim = neville_to_zero(xs, ys);
    for (double v : lim)
        if (!std::isfinite(v))
            throw ConvergenceError("cylinder static series extrapolation failed at kz = " +
                                   std::to_string(kz));
    return lim;
}

inline std::vector<double> cyl_static_orders_integral(double eps0, double mu, double R,
                                                      double a,
                                                      const CoefficientChoice& choice,
                                                      int kord, const Tolerances& tol)
{
    const double d = a - R;
    const double scale = 1.0 / a;
    const double tmax = std::asinh(26.0 / (scale * d));
    std::vector<double> x, w;
    std::vector<double> out;
    double prev = 0.0;
    bool have_prev = false;
    for (int npts = tol.quad_min_nodes; npts <= tol.quad_max_nodes; npts *= 2) {
        gauss_legendre(npts, x, w);
        std::vector<double> acc(kord + 1, 0.0);
        for (int i = 0; i < npts; ++i) {
            const double t = 0.5 * tmax * (x[i] + 1.0);
            const double kz = scale * std::sinh(t);
            const double jac = scale * std::cosh(t);
            const double wt = 2.0 * 0.5 * tmax * w[i] * jac;
            const std::vector<double> node =
                cyl_static_orders_msum(kz, eps0, mu, R, a, choice, kord, tol);
            for (int j = 0; j <= kord; ++j) acc[j] += wt * node[j];
        }
        out = acc;
        if (have_prev && std::abs(out[kord] - prev) <= tol.quad_rel * std::abs(out[kord]))
            return out;
        prev = out[kord];
        have_prev = true;
    }
    throw ConvergenceError("cylinder static k_z quadrature did not converge at " +
                           std::to_string(tol.quad_max_nodes) + " nodes");
}

// ---------------------------------------------------------------------------
// Matsubara assembly, per unit polarizability.

struct MseTerms {
    std::vector<double> orders;  // energies through orders 0..k
    double resummed = 0.0;
    long n_terms = 0;       // highest Matsubara index evaluated
    long max_channel = 0;   // largest l or |m| retained anywhere
    std::vector<std::string> flags;
};

inline void note_guard(MseTerms& t, std::size_t n, const ChannelSum& cs)
{
    if (!cs.guarded) return;
    if (t.flags.size() >= 8) {
        if (t.flags.size() == 8) t.flags.push_back("guard: further channels suppressed");
        return;
    }
    t.flags.push_back("guard n=" + std::to_string(n) + " " + cs.guard_note);
}

inline double drude_scale(const Material& mat)
{
    // Omega^2/(gamma hbar c), the kappa->0 slope of 1/eps for a Drude metal
    return mat.plasma_sq / (mat.drude_gamma * hbar_c);
}

inline MseTerms sphere_mse_terms(const Configuration& cfg, int kord, bool orders)
{
    const double R = cfg.radius;
    const double a = cfg.a();
    const double kbt = k_boltzmann * cfg.temperature;
    const double pref = -4.0 * M_PI * kbt;
    MseTerms t;
    t.orders.assign(orders ? kord + 1 : 0, 0.0);

    const double eps0 = permittivity(cfg.material, 0.0);
    const double sigma = std::isinf(eps0) ? drude_scale(cfg.material) : 0.0;
    ChannelSum st = sphere_static_orders(eps0, sigma, cfg.mu_body, R, a, cfg.gauge,
                                         kord, orders, cfg.tol);
    t.resummed = pref * 0.5 * st.res;
    for (int j = 0; j <= (orders ? kord : -1); ++j) t.orders[j] = pref * 0.5 * st.cum[j];
    t.max_channel = st.last;
    note_guard(t, 0, st);

    int small = 0;
    for (std::size_t n = 1; n <= cfg.tol.n_max; ++n) {
        const auto mt = matsubara_term(n, cfg.temperature);
        const double eps = permittivity(cfg.material, mt.xi);
        const GaugeWeights g = gauge_weights(cfg.gauge, eps, cfg.mu_body);
        ChannelSum cs = sphere_trace_orders(mt.kappa, eps, cfg.mu_body, R, a, g,
                                            kord, orders, cfg.tol);
        const double term = pref * mt.kappa * cs.res;
        t.resummed += term;
        for (int j = 0; j <= (orders ? kord : -1); ++j)
            t.orders[j] += pref * mt.kappa * cs.cum[j];
        if (cs.last > t.max_channel) t.max_channel = cs.last;
        note_guard(t, n, cs);
        t.n_terms = long(n);
        if (std::abs(term) < cfg.tol.matsubara_rel * std::abs(t.resummed)) {
            if (++small >= 2) return t;
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("sphere Matsubara sum did not converge within n_max = " +
                           std::to_string(cfg.tol.n_max));
}

inline MseTerms cylinder_mse_terms(const Configuration& cfg, int kord, bool orders)
{
    const double R = cfg.radius;
    const double a = cfg.a();
    const double d = cfg.distance;
    const double kbt = k_boltzmann * cfg.temperature;
    const double pref = -kbt / M_PI;
    MseTerms t;
    t.orders.assign(orders ? kord + 1 : 0, 0.0);

    const double eps0 = permittivity(cfg.material, 0.0);
    if (orders && std::isinf(eps0))
        throw SpectralGuardError(
            "metallic cylinder: the n=0 round trip has an eigenvalue at 1 in the m=0 "
            "channel (every channel for c2), so no finite scattering order exists; "
            "use resummed_energy",
            1.0);
    // resummed n=0 from the closed static integrand (identical to the series
    // limit channel by channel, without the extrapolation detour)
    const double mtol = cfg.tol.channel_rel * 1e-3;
    const double stat = sinh_quadrature(
        [&](double kz) { return cyl_msum_static(kz, eps0, R, a, mtol, cfg.tol.channel_max); },
        1.0 / a, d, cfg.tol.quad_rel, cfg.tol.quad_min_nodes, cfg.tol.quad_max_nodes);
    t.resummed = kbt / M_PI * 0.5 * stat;
    if (orders) {
        const std::vector<double> cum0 =
            cyl_static_orders_integral(eps0, cfg.mu_body, R, a, cfg.gauge, kord, cfg.tol);
        for (int j = 0; j <= kord; ++j) t.orders[j] = pref * 0.5 * cum0[j];
    }

    int small = 0;
    for (std::size_t n = 1; n <= cfg.tol.n_max; ++n) {
        const auto mt = matsubara_term(n, cfg.temperature);
        const double eps = permittivity(cfg.material, mt.xi);
        const GaugeWeights g = gauge_weights(cfg.gauge, eps, cfg.mu_body);
        ChannelSum cs = cyl_kz_orders_integral(mt.kappa, eps, cfg.mu_body, R, a, g,
                                               kord, orders, cfg.tol);
        const double term = pref * mt.kappa * cs.res;
        t.resummed += term;
        for (int j = 0; j <= (orders ? kord : -1); ++j)
            t.orders[j] += pref * mt.kappa * cs.cum[j];
        if (cs.last > t.max_channel) t.max_channel = cs.last;
        note_guard(t, n, cs);
        t.n_terms = long(n);
        if (std::abs(term) < cfg.tol.matsubara_rel * std::abs(t.resummed)) {
            if (++small >= 2) return t;
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("cylinder Matsubara sum did not converge within n_max = " +
                           std::to_string(cfg.tol.n_max));
}

inline MseTerms mse_terms(const Configuration& cfg, int kord, bool orders)
{
    cfg.validate();
    if (cfg.material.kind == Material::Kind::perfect_conductor)
        throw ConfigError("the scattering-series routes need a dispersive metal "
                          "(finite eps at nonzero frequency); the ideal-conductor limit "
                          "is available through the exact T-matrix energies");
    return cfg.geometry == Geometry::sphere ? sphere_mse_terms(cfg, kord, orders)
                                            : cylinder_mse_terms(cfg, kord, orders);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public channel constructors (single-shot; the energy drivers above use
// marched ladders instead and never call these in their inner loops).

inline SsoBlock sso_block_sphere(int l, double kappa, double eps, double mu, double R,
                                 const CoefficientChoice& choice)
{
    if (l < 1) throw std::domain_error("sso_block_sphere: l must be >= 1");
    if (kappa < 0.0 || R <= 0.0) throw std::domain_error("sso_block_sphere: bad geometry");
    SsoBlock b;
    b.geometry = Geometry::sphere;
    b.l = l;
    b.kappa = kappa;
    if (kappa == 0.0) {
        if (std::isinf(eps))
            throw ConfigError("sso_block_sphere: the metallic static block depends on the "
                              "Drude scale; it is built internally per material");
        Eigen::Matrix4d k;
        ChannelCouplings c;
        detail::sphere_static_channel(l, eps, 0.0, mu, R, 2.0 * R, choice, k, c);
        b.k_matrix = k;
        return b;
    }
    const GaugeWeights g = gauge_weights(choice, eps, mu);
    const RiccatiPair pu = riccati_ik(l, kappa * R);
    const RiccatiPair pv = riccati_ik(l, std::sqrt(eps * mu) * kappa * R);
    detail::SphereReadout r;
    r.riu = pu.ip_over_i;
    r.rku = pu.kp_over_k;
    r.riv = pv.ip_over_i;
    r.rkv = pv.kp_over_k;
    r.rka = 0.0;
    r.pku = pu.ik();
    r.pkv = pv.ik();
    r.a2 = 0.0;
    b.k_matrix = detail::sphere_roundtrip(kappa, eps, mu, g, r);
    return b;
}

inline SsoBlock sso_block_cylinder(int m, double kz, double kappa, double eps, double mu,
                                   double R, const CoefficientChoice& choice)
{
    if (R <= 0.0) throw std::domain_error("sso_block_cylinder: radius must be positive");
    if (kappa <= 0.0)
        throw std::domain_error("sso_block_cylinder: kappa must be positive (the static "
                                "limit of a cylinder channel is not finite entry-wise; "
                                "the energy drivers reach it by extrapolation)");
    const GaugeWeights g = gauge_weights(choice, eps, mu);
    const int ma = m < 0 ? -m : m;
    SsoBlock b;
    b.geometry = Geometry::cylinder;
    b.m = ma;
    b.kz = kz;
    b.kappa = kappa;
    const double p0 = std::hypot(kappa, kz);
    const double p1 = std::sqrt(eps * mu * kappa * kappa + kz * kz);
    const CylBesselPair e = cyl_ik(ma, p0 * R);
    const CylBesselPair in = cyl_ik(ma, p1 * R);
    detail::CylReadout r;
    r.ik0 = e.ik();
    r.ipr0 = e.ip_over_i;
    r.kpr0 = e.kp_over_k;
    r.ik1 = in.ik();
    r.ipr1 = in.ip_over_i;
    r.kpr1 = in.kp_over_k;
    r.ln_i0 = e.ln_i;
    r.ln_ka = 0.0;
    r.kpra = 0.0;
    b.k_matrix = detail::cyl_roundtrip(ma, kz, kappa, eps, mu, R, g, r);
    return b;
}

inline ChannelCouplings channel_couplings_sphere(int l, double kappa, double eps, double mu,
                                                 double R, double a,
                                                 const CoefficientChoice& choice)
{
    if (a <= R) throw std::domain_error("channel_couplings_sphere: particle must be outside");
    ChannelCouplings c;
    if (kappa == 0.0) {
        if (std::isinf(eps))
            throw ConfigError("channel_couplings_sphere: metallic static couplings are "
                              "built internally per material");
        Eigen::Matrix4d k;
        detail::sphere_static_channel(l, eps, 0.0, mu, R, a, choice, k, c);
        return c;
    }
    const GaugeWeights g = gauge_weights(choice, eps, mu);
    const RiccatiPair pu = riccati_ik(l, kappa * R);
    const RiccatiPair pa = riccati_ik(l, kappa * a);
    detail::SphereReadout r{};
    r.riu = pu.ip_over_i;
    r.rka = pa.kp_over_k;
    r.a2 = std::exp(2.0 * (pu.ln_i + pa.ln_k));
    detail::sphere_couplings(l, kappa, a, g, r, c);
    return c;
}

inline ChannelCouplings channel_couplings_cylinder(int m, double kz, double kappa,
                                                   double eps, double mu, double R, double a,
                                                   const CoefficientChoice& choice)
{
    if (a <= R)
        throw std::domain_error("channel_couplings_cylinder: particle must be outside");
    if (kappa <= 0.0)
        throw std::domain_error("channel_couplings_cylinder: kappa must be positive");
    const GaugeWeights g = gauge_weights(choice, eps, mu);
    const int ma = m < 0 ? -m : m;
    const double p0 = std::hypot(kappa, kz);
    const CylBesselPair e = cyl_ik(ma, p0 * R);
    const CylBesselPair ka = cyl_ik(ma, p0 * a);
    detail::CylReadout r{};
    r.ipr0 = e.ip_over_i;
    r.ln_i0 = e.ln_i;
    r.ln_ka = ka.ln_k;
    r.kpra = ka.kp_over_k;
    ChannelCouplings c;
    detail::cyl_couplings(ma, kz, kappa, R, a, g, r, c);
    return c;
}

// ---------------------------------------------------------------------------
// Energies.  Series and resummed values come from one pass; everything is
// computed per unit polarizability and scaled once, so ratios of energies are
// exactly invariant under rescaling alpha.

struct MseEnergies {
    std::vector<double> orders;  // E through orders 0..k, eV
    double resummed = 0.0;       // direct-solve energy, eV
    long n_matsubara = 0;
    long max_channel = 0;
    std::vector<std::string> flags;
};

inline MseEnergies mse_energy(const Configuration& cfg, int max_order)
{
    if (max_order < 0) throw ConfigError("mse_energy: order must be >= 0");
    detail::MseTerms t = detail::mse_terms(cfg, max_order, true);
    MseEnergies e;
    e.orders.resize(t.orders.size());
    for (std::size_t j = 0; j < t.orders.size(); ++j) e.orders[j] = cfg.alpha * t.orders[j];
    e.resummed = cfg.alpha * t.resummed;
    e.n_matsubara = t.n_terms;
    e.max_channel = t.max_channel;
    e.flags = std::move(t.flags);
    return e;
}

inline double resummed_energy(const Configuration& cfg)
{
    return cfg.alpha * detail::mse_terms(cfg, 0, false).resummed;
}

}
