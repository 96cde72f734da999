#include <mse/mie.hpp>
#include <mse/scatter.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "reference_values.hpp"

using namespace mse;
using Catch::Approx;

namespace {

Configuration base(Geometry g, Material mat, double R, double d, CoefficientChoice c)
{
    Configuration cfg;
    cfg.geometry = g;
    cfg.material = std::move(mat);
    cfg.radius = R;
    cfg.distance = d;
    cfg.gauge = c;
    return cfg;
}

double exact_energy(const Configuration& cfg)
{
    return cfg.geometry == Geometry::sphere ? cp_energy_sphere_exact(cfg)
                                            : cp_energy_cylinder_exact(cfg);
}

}  // namespace

TEST_CASE("resummed series reproduces the exact sphere energy")
{
    auto cfg = base(Geometry::sphere, material_silicon(), 30.0, 3.0, CoefficientChoice::c1());
    CHECK(resummed_energy(cfg) == Approx(exact_energy(cfg)).epsilon(1e-9));

    cfg = base(Geometry::sphere, material_gold(), 30.0, 0.9, CoefficientChoice::c2());
    CHECK(resummed_energy(cfg) == Approx(exact_energy(cfg)).epsilon(1e-8));

    cfg = base(Geometry::sphere, material_polystyrene(), 30.0, 30.0, CoefficientChoice::c1());
    CHECK(resummed_energy(cfg) == Approx(exact_energy(cfg)).epsilon(1e-9));

    cfg = base(Geometry::sphere, material_silicon(), 2.0, 0.6, CoefficientChoice::c2());
    CHECK(resummed_energy(cfg) == Approx(exact_energy(cfg)).epsilon(1e-9));
}

TEST_CASE("resummed series reproduces the exact cylinder energy")
{
    auto cfg = base(Geometry::cylinder, material_silicon(), 30.0, 6.0, CoefficientChoice::c1());
    CHECK(resummed_energy(cfg) == Approx(exact_energy(cfg)).epsilon(1e-9));

    cfg = base(Geometry::cylinder, material_polystyrene(), 2.0, 1.0, CoefficientChoice::c2());
    CHECK(resummed_energy(cfg) == Approx(exact_energy(cfg)).epsilon(1e-9));
}

TEST_CASE("the coefficient choice drops out of the resummed energy")
{
    for (Geometry g : {Geometry::sphere, Geometry::cylinder}) {
        auto c1 = base(g, material_silicon(), 2.0, 0.8, CoefficientChoice::c1());
        auto c2 = c1;
        c2.gauge = CoefficientChoice::c2();
        auto cx = c1;
        cx.gauge = CoefficientChoice::custom(2.0, 1.3, 0.7, 1.1);
        const double e1 = resummed_energy(c1);
        INFO(to_string(g));
        CHECK(resummed_energy(c2) == Approx(e1).epsilon(1e-8));
        CHECK(resummed_energy(cx) == Approx(e1).epsilon(1e-8));
    }
}

TEST_CASE("finite orders do depend on the coefficient choice")
{
    auto c1 = base(Geometry::sphere, material_silicon(), 30.0, 3.0, CoefficientChoice::c1());
    auto c2 = c1;
    c2.gauge = CoefficientChoice::c2();
    const double e1 = mse_energy(c1, 1).orders[1];
    const double e2 = mse_energy(c2, 1).orders[1];
    CHECK(std::abs(e2 / e1 - 1.0) > 1e-4);
}

TEST_CASE("zero contrast: c1 sphere blocks vanish identically, energies cancel")
{
    const double kap = ref::kappa1_300k;
    for (int l : {1, 2, 5}) {
        const SsoBlock b = sso_block_sphere(l, kap, 1.0, 1.0, 2.0, CoefficientChoice::c1());
        CHECK(b.k_matrix.cwiseAbs().maxCoeff() == 0.0);  // exactly, not approximately
        CHECK(spectral_radius(b) == 0.0);
    }
    // c2 keeps a nonzero round trip at unit contrast...
    const SsoBlock b2 = sso_block_sphere(1, kap, 1.0, 1.0, 2.0, CoefficientChoice::c2());
    CHECK(b2.k_matrix.cwiseAbs().maxCoeff() > 1e-6);

    // ...yet the resummed energy still cancels (to rounding residue, eleven
    // orders below the silicon energy at the same geometry)
    for (auto gauge : {CoefficientChoice::c1(), CoefficientChoice::c2()}) {
        auto cfg = base(Geometry::sphere, material_constant(1.0), 2.0, 0.8, gauge);
        CHECK(std::abs(resummed_energy(cfg)) < 1e-16);
    }

    // cylinder kernel at unit contrast: the m-folded channel sum collapses to
    // rounding noise as well (the kz quadrature would chase that noise, so the
    // check sits at fixed kz)
    const GaugeWeights g1 = gauge_weights(CoefficientChoice::c1(), 1.0, 1.0);
    Tolerances tol;
    const double noise =
        detail::cyl_msum_orders(0.5, 0.8, 1.0, 1.0, 2.0, 3.0, g1, 0, false, 1e-11, tol).res;
    const GaugeWeights gsi =
        gauge_weights(CoefficientChoice::c1(), permittivity(material_silicon(), 0.8 * hbar_c),
                      1.0);
    const double signal =
        detail::cyl_msum_orders(0.5, 0.8, permittivity(material_silicon(), 0.8 * hbar_c), 1.0,
                                2.0, 3.0, gsi, 0, false, 1e-11, tol)
            .res;
    CHECK(std::abs(noise) < 1e-12 * std::abs(signal));
}

TEST_CASE("series partial sums are prefixes: one pass equals shorter passes")
{
    auto cfg = base(Geometry::sphere, material_silicon(), 30.0, 3.0, CoefficientChoice::c1());
    const MseEnergies e4 = mse_energy(cfg, 4);
    const MseEnergies e2 = mse_energy(cfg, 2);
    REQUIRE(e4.orders.size() == 5);
    REQUIRE(e2.orders.size() == 3);
    for (int k = 0; k <= 2; ++k) CHECK(e4.orders[k] == e2.orders[k]);  // bit-for-bit

    // each added power moves the partial sum toward the resummed value
    const double err0 = std::abs(e4.orders[0] - e4.resummed);
    const double err4 = std::abs(e4.orders[4] - e4.resummed);
    CHECK(err4 < 0.1 * err0);
}

TEST_CASE("energies are linear in alpha, bit for bit")
{
    auto cfg = base(Geometry::sphere, material_silicon(), 30.0, 3.0, CoefficientChoice::c1());
    const MseEnergies e1 = mse_energy(cfg, 3);
    cfg.alpha = 7.3;
    const MseEnergies e73 = mse_energy(cfg, 3);
    CHECK(e73.resummed == 7.3 * e1.resummed);
    for (int k = 0; k <= 3; ++k) CHECK(e73.orders[k] == 7.3 * e1.orders[k]);
}

TEST_CASE("static sphere blocks: frozen spectral radii, R drops out")
{
    const double eps0 = permittivity(material_silicon(), 0.0);
    struct Row {
        int l;
        CoefficientChoice g;
        double rho;
    };
    const Row rows[] = {
        {1, CoefficientChoice::c1(), ref::rho_static_si_c1_l1},
        {2, CoefficientChoice::c1(), ref::rho_static_si_c1_l2},
        {1, CoefficientChoice::c2(), ref::rho_static_si_c2_l1},
        {2, CoefficientChoice::c2(), ref::rho_static_si_c2_l2},
    };
    for (const Row& r : rows) {
        INFO("l=" << r.l << " " << r.g.name());
        const SsoBlock b30 = sso_block_sphere(r.l, 0.0, eps0, 1.0, 30.0, r.g);
        const SsoBlock b2 = sso_block_sphere(r.l, 0.0, eps0, 1.0, 2.0, r.g);
        CHECK(spectral_radius(b30) == Approx(r.rho).epsilon(1e-9));
        CHECK(spectral_radius(b2) == Approx(r.rho).epsilon(1e-9));
    }
}

TEST_CASE("cylinder static series terms against frozen limits")
{
    // Single-channel kappa->0 limits of kappa * (partial sums through order k),
    // Si / c1 / R=2 / a=3, assembled the way the n=0 driver does it: channel
    // orders at six kappa nodes proportional to |kz|, extrapolated to zero.
    const double eps0 = permittivity(material_silicon(), 0.0);
    const GaugeWeights g = gauge_weights(CoefficientChoice::c1(), eps0, 1.0);
    auto limits = [&](int m, double kz, int kord) {
        std::array<double, 6> xs;
        std::array<std::vector<double>, 6> ys;
        for (int i = 0; i < 6; ++i) {
            xs[i] = detail::static_nodes[i] * kz / std::sqrt(eps0);
            detail::CylLadders lad(kz, xs[i], eps0, 1.0, 2.0, 3.0);
            for (int j = 0; j < m; ++j) lad.step();
            const detail::CylReadout r = lad.readout();
            const Eigen::Matrix4d k = detail::cyl_roundtrip(m, kz, xs[i], eps0, 1.0, 2.0, g, r);
            ChannelCouplings c;
            detail::cyl_couplings(m, kz, xs[i], 2.0, 3.0, g, r, c);
            detail::ChannelSum acc;
            acc.cum.assign(kord + 1, 0.0);
            Tolerances tol;
            detail::channel_contract(k, c, kord, true, 1.0, tol, "test", acc);
            ys[i].resize(kord + 1);
            for (int j = 0; j <= kord; ++j) ys[i][j] = xs[i] * acc.cum[j];
        }
        return detail::neville_to_zero(xs, ys);
    };

    const std::vector<double> m0 = limits(0, 0.8, 4);
    for (int k = 0; k <= 4; ++k) {
        INFO("m=0 k=" << k);
        CHECK(m0[k] == Approx(ref::cyl_stat_ord_m0_kz08[k]).epsilon(5e-7));
    }
    const std::vector<double> m1 = limits(1, 0.45, 4);
    for (int k = 0; k <= 4; ++k) {
        INFO("m=1 k=" << k);
        CHECK(m1[k] == Approx(ref::cyl_stat_ord_m1_kz045[k]).epsilon(5e-7));
    }
}

TEST_CASE("metallic cylinder round-trip eigenvalues approach 1 from below")
{
    // c1, m=0: reproduce the frozen maxima over the fixed kz grid
    std::vector<double> kzs(28);
    for (int i = 0; i < 28; ++i) kzs[i] = std::pow(10.0, -8.0 + 9.0 * i / 27.0);
    auto lmax_c1_m0 = [&](double kap) {
        const double eps = permittivity(material_gold(), kap * hbar_c);
        double r = 0.0;
        for (double kz : kzs)
            r = std::max(r, spectral_radius(sso_block_cylinder(0, kz, kap, eps, 1.0, 30.0,
                                                               CoefficientChoice::c1())));
        return r;
    };
    CHECK(lmax_c1_m0(1e-3) == Approx(ref::au_cyl_c1_m0_k1em3).epsilon(1e-9));
    CHECK(lmax_c1_m0(1e-5) == Approx(ref::au_cyl_c1_m0_k1em5).epsilon(1e-9));
    CHECK(lmax_c1_m0(1e-6) == Approx(ref::au_cyl_c1_m0_k1em6).epsilon(1e-9));

    const double eps5 = permittivity(material_gold(), 1e-5 * hbar_c);
    auto lmax_c2 = [&](int m) {
        double r = 0.0;
        for (double kz : kzs)
            r = std::max(r, spectral_radius(sso_block_cylinder(m, kz, 1e-5, eps5, 1.0, 30.0,
                                                               CoefficientChoice::c2())));
        return r;
    };
    CHECK(lmax_c2(0) == Approx(ref::au_cyl_c2_k1em5_m0).epsilon(1e-8));
    CHECK(lmax_c2(1) == Approx(ref::au_cyl_c2_k1em5_m1).epsilon(1e-8));
    CHECK(lmax_c2(3) == Approx(ref::au_cyl_c2_k1em5_m3).epsilon(1e-8));
}

TEST_CASE("spectral guard: divergent channels abort, near-unit channels reroute")
{
    Tolerances tol;
    ChannelCouplings c;
    c.pairs = 1;
    c.a.row(0) << 1.0, 0.0, 0.0, 0.0;
    c.b.col(0) << 1.0, 0.0, 0.0, 0.0;

    Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
    k(0, 0) = 1.0 + 1e-5;  // radius beyond 1: the series has no meaning
    detail::ChannelSum out;
    out.cum.assign(3, 0.0);
    CHECK_THROWS_AS(detail::channel_contract(k, c, 2, true, 1.0, tol, "unit test", out),
                    SpectralGuardError);

    k(0, 0) = 1.0 - 1e-8;  // inside [1 - guard, 1): every order gets the solve
    detail::ChannelSum g;
    g.cum.assign(3, 0.0);
    detail::channel_contract(k, c, 2, true, 1.0, tol, "unit test", g);
    CHECK(g.guarded);
    CHECK(g.cum[0] == g.cum[2]);
    CHECK(g.cum[0] == Approx(g.res).epsilon(1e-15));
    CHECK_FALSE(g.guard_note.empty());

    k(0, 0) = 0.5;  // ordinary channel: geometric series, no flag
    detail::ChannelSum n;
    n.cum.assign(3, 0.0);
    detail::channel_contract(k, c, 2, true, 1.0, tol, "unit test", n);
    CHECK_FALSE(n.guarded);
    CHECK(n.cum[0] == 1.0);
    CHECK(n.cum[1] == 1.5);
    CHECK(n.cum[2] == 1.75);
    CHECK(n.res == Approx(2.0).epsilon(1e-14));
}

TEST_CASE("metallic cylinder: series refused, resummation carries on")
{
    auto cfg = base(Geometry::cylinder, material_gold(), 30.0, 6.0, CoefficientChoice::c1());
    CHECK_THROWS_AS(mse_energy(cfg, 2), SpectralGuardError);
    const double e = resummed_energy(cfg);
    CHECK(std::isfinite(e));
    CHECK(e < 0.0);
    CHECK(e == Approx(exact_energy(cfg)).epsilon(1e-8));

    // the sphere has no such obstruction: metallic series orders exist
    auto sph = base(Geometry::sphere, material_gold(), 30.0, 9.0, CoefficientChoice::c1());
    CHECK_NOTHROW(mse_energy(sph, 2));
}

TEST_CASE("ideal conductor is the exact route's job")
{
    auto cfg = base(Geometry::sphere, material_perfect_conductor(), 2.0, 1.0,
                    CoefficientChoice::c1());
    CHECK_THROWS_AS(resummed_energy(cfg), ConfigError);
    CHECK_THROWS_AS(mse_energy(cfg, 1), ConfigError);
    CHECK(exact_energy(cfg) < 0.0);
}

TEST_CASE("coupling constructors enforce their domains")
{
    CHECK_THROWS_AS(channel_couplings_sphere(1, 0.5, 2.0, 1.0, 30.0, 30.0,
                                             CoefficientChoice::c1()),
                    std::domain_error);
    CHECK_THROWS_AS(channel_couplings_sphere(1, 0.5, 2.0, 1.0, 30.0, 29.0,
                                             CoefficientChoice::c1()),
                    std::domain_error);
    CHECK_THROWS_AS(channel_couplings_cylinder(1, 0.3, 0.5, 2.0, 1.0, 2.0, 1.5,
                                               CoefficientChoice::c1()),
                    std::domain_error);
    CHECK_THROWS_AS(channel_couplings_cylinder(1, 0.3, 0.0, 2.0, 1.0, 2.0, 3.0,
                                               CoefficientChoice::c1()),
                    std::domain_error);
    CHECK_THROWS_AS(sso_block_sphere(0, 0.5, 2.0, 1.0, 30.0, CoefficientChoice::c1()),
                    std::domain_error);
    CHECK_THROWS_AS(sso_block_cylinder(1, 0.3, 0.0, 2.0, 1.0, 2.0, CoefficientChoice::c1()),
                    std::domain_error);

    // couplings carry no polarizability: the particle enters only through alpha
    const ChannelCouplings c =
        channel_couplings_sphere(2, 0.5, 2.0, 1.0, 2.0, 3.0, CoefficientChoice::c1());
    CHECK(c.pairs == 2);
    CHECK(std::isfinite(c.a.row(0).sum()));
    CHECK(c.scale == 1.0);
}

TEST_CASE("a singular custom coefficient choice fails early")
{
    auto cfg = base(Geometry::sphere, material_silicon(), 2.0, 1.0,
                    CoefficientChoice::custom(1.0, -1.0, -1.0, 1.0));
    CHECK_THROWS_AS(resummed_energy(cfg), ConfigError);
}
