#include <mse/bessel.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "reference_values.hpp"

using namespace mse;
using Catch::Approx;

TEST_CASE("Riccati pair against independent values, l=5, x=2")
{
    const RiccatiPair p = riccati_ik(5, 2.0);
    CHECK(p.i() == Approx(ref::ric5_i).epsilon(1e-13));
    CHECK(p.ip() == Approx(ref::ric5_ip).epsilon(1e-13));
    CHECK(p.k() == Approx(ref::ric5_k).epsilon(1e-13));
    CHECK(p.kp() == Approx(ref::ric5_kp).epsilon(1e-13));
}

TEST_CASE("Riccati pair deep in the scaled regime, l=200, x=50")
{
    const RiccatiPair p = riccati_ik(200, 50.0);
    CHECK(p.ln_i == Approx(ref::ric200_ln_i).epsilon(1e-13));
    CHECK(p.ln_k == Approx(ref::ric200_ln_k).epsilon(1e-13));
    CHECK(p.ip_over_i == Approx(ref::ric200_ip_over_i).epsilon(1e-13));
    CHECK(p.kp_over_k == Approx(ref::ric200_kp_over_k).epsilon(1e-13));
}

TEST_CASE("cylinder pair against independent values")
{
    const CylBesselPair p = cyl_ik(3, 0.7);
    CHECK(p.i() == Approx(ref::cyl3_i).epsilon(1e-13));
    CHECK(p.ip() == Approx(ref::cyl3_ip).epsilon(1e-13));
    CHECK(p.k() == Approx(ref::cyl3_k).epsilon(1e-13));
    CHECK(p.kp() == Approx(ref::cyl3_kp).epsilon(1e-13));

    const CylBesselPair q = cyl_ik(200, 50.0);
    CHECK(q.ln_i == Approx(ref::cyl200_ln_i).epsilon(1e-13));
    CHECK(q.ln_k == Approx(ref::cyl200_ln_k).epsilon(1e-13));
    CHECK(q.ip_over_i == Approx(ref::cyl200_ip_over_i).epsilon(1e-13));
    CHECK(q.kp_over_k == Approx(ref::cyl200_kp_over_k).epsilon(1e-13));
}

TEST_CASE("Riccati Wronskian I K' - I' K = -pi/2 across the domain")
{
    for (int l : {1, 2, 3, 7, 20, 90, 400}) {
        for (double x : {1e-3, 0.05, 0.9, 2.0, 14.0, 50.0, 320.0, 1500.0}) {
            const RiccatiPair p = riccati_ik(l, x);
            const double w = p.ik() * (p.kp_over_k - p.ip_over_i);
            INFO("l=" << l << " x=" << x);
            CHECK(w == Approx(-M_PI / 2.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("cylinder Wronskian I K' - I' K = -1/x across the domain")
{
    for (int m : {0, 1, 2, 5, 19, 80, 350}) {
        for (double x : {1e-3, 0.07, 1.1, 3.0, 21.0, 75.0, 410.0, 2000.0}) {
            const CylBesselPair p = cyl_ik(m, x);
            INFO("m=" << m << " x=" << x);
            CHECK(p.wronskian() == Approx(-1.0 / x).epsilon(1e-10));
        }
    }
}

TEST_CASE("ladders reproduce the single-shot evaluations")
{
    const double x = 3.7;
    CylILadder il(x);
    CylKLadder kl(x);
    for (int m = 0; m <= 12; ++m) {
        const CylBesselPair p = cyl_ik(m, x);
        INFO("m=" << m);
        CHECK(il.ln_i() == Approx(p.ln_i).epsilon(1e-12));
        CHECK(kl.ln_k() == Approx(p.ln_k).epsilon(1e-12));
        CHECK(il.ip_over_i() == Approx(p.ip_over_i).epsilon(1e-12));
        CHECK(kl.kp_over_k() == Approx(p.kp_over_k).epsilon(1e-12));
        il.step();
        kl.step();
    }

    SphILadder sil(x);
    SphKLadder skl(x);
    for (int l = 1; l <= 12; ++l) {
        const RiccatiPair p = riccati_ik(l, x);
        INFO("l=" << l);
        CHECK(sil.ln_i() == Approx(p.ln_i).epsilon(1e-12));
        CHECK(skl.ln_k() == Approx(p.ln_k).epsilon(1e-12));
        CHECK(sil.ip_over_i() == Approx(p.ip_over_i).epsilon(1e-12));
        CHECK(skl.kp_over_k() == Approx(p.kp_over_k).epsilon(1e-12));
        sil.step();
        skl.step();
    }
}

TEST_CASE("negative order symmetry and domain checks")
{
    const CylBesselPair a = cyl_ik(-4, 1.3);
    const CylBesselPair b = cyl_ik(4, 1.3);
    CHECK(a.ln_i == b.ln_i);
    CHECK(a.kp_over_k == b.kp_over_k);
    CHECK_THROWS_AS(riccati_ik(0, -1.0), std::domain_error);
    CHECK_THROWS_AS(riccati_ik(-1, 1.0), std::domain_error);
    CHECK_THROWS_AS(cyl_ik(2, 0.0), std::domain_error);
}

TEST_CASE("tiny and huge arguments stay finite in log form")
{
    for (double x : {1e-8, 1e-4, 600.0, 5e3}) {
        const RiccatiPair p = riccati_ik(3, x);
        CHECK(std::isfinite(p.ln_i));
        CHECK(std::isfinite(p.ln_k));
        CHECK(std::isfinite(p.ip_over_i));
        const CylBesselPair c = cyl_ik(3, x);
        CHECK(std::isfinite(c.ln_i));
        CHECK(std::isfinite(c.ln_k));
    }
    // K ratio behaves like -(1 + l/x) for small x; I ratio like (l+1)/x
    const RiccatiPair p = riccati_ik(2, 1e-6);
    CHECK(p.ip_over_i == Approx(3.0 / 1e-6).epsilon(1e-5));
}

TEST_CASE("first-kind ratios with the order far below the argument")
{
    // the downward continued fraction must still be converged when the sum
    // sits at small orders while the argument is in the thousands
    {
        SphILadder li(1240.0);
        CHECK(li.ip_over_i() == Approx(ref::sph_ip_over_i_l1_x1240).epsilon(1e-13));
    }
    {
        SphILadder li(3000.0);
        while (li.order() < 80) li.step();
        CHECK(li.ip_over_i() == Approx(ref::sph_ip_over_i_l80_x3000).epsilon(1e-13));
        CHECK(li.ln_i() == Approx(ref::sph_ln_i_l80_x3000).epsilon(1e-13));
    }
    {
        SphILadder li(240.0);
        while (li.order() < 5) li.step();
        CHECK(li.ip_over_i() == Approx(ref::sph_ip_over_i_l5_x240).epsilon(1e-13));
    }
    {
        CylILadder li(2000.0);
        CHECK(li.ip_over_i() == Approx(ref::cyl_ip_over_i_m0_x2000).epsilon(1e-13));
    }
    {
        CylILadder li(900.0);
        while (li.order() < 40) li.step();
        CHECK(li.ip_over_i() == Approx(ref::cyl_ip_over_i_m40_x900).epsilon(1e-13));
        CHECK(li.ln_i() == Approx(ref::cyl_ln_i_m40_x900).epsilon(1e-13));
    }
}
