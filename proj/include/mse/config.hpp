#pragma once
// Shared run configuration: geometry, gauge choice, tolerances.

#include <cmath>
#include <string>
#include <vector>

#include "mse/errors.hpp"
#include "mse/materials.hpp"

namespace mse {

enum class Geometry { sphere, cylinder };

inline std::string to_string(Geometry g)
{
    return g == Geometry::sphere ? "sphere" : "cylinder";
}

// The free diagonal coefficient pair (interior C^i, exterior C^e) entering the
// surface operator.  Physics is independent of the choice after resummation;
// finite-order series are not.  c1 weights the interior fields by the body's
// (eps, mu); c2 is the fully asymmetric material-independent choice.
struct CoefficientChoice {
    enum class Kind { c1, c2, custom };
    Kind kind = Kind::c1;
    // entries used when kind == custom: C^i = diag(ci_e, ci_h), C^e = diag(ce_e, ce_h)
    double ci_e = 0.0, ci_h = 0.0, ce_e = 0.0, ce_h = 0.0;

    static CoefficientChoice c1() { return {}; }
    static CoefficientChoice c2()
    {
        CoefficientChoice c;
        c.kind = Kind::c2;
        return c;
    }
    static CoefficientChoice custom(double cie, double cih, double cee, double ceh)
    {
        CoefficientChoice c;
        c.kind = Kind::custom;
        c.ci_e = cie;
        c.ci_h = cih;
        c.ce_e = cee;
        c.ce_h = ceh;
        return c;
    }
    std::string name() const
    {
        switch (kind) {
            case Kind::c1: return "c1";
            case Kind::c2: return "c2";
            default: return "custom";
        }
    }
};

// Coefficients resolved at one frequency (c1 needs the body's eps there).
struct GaugeWeights {
    double ci_e, ce_e, ci_h, ce_h;
    double gamma_e() const { return ci_e + ce_e; }
    double gamma_h() const { return ci_h + ce_h; }
    // 2 C^e (C^i + C^e)^{-1}, the weight of the source operator per sector
    double ct_e() const { return 2.0 * ce_e / gamma_e(); }
    double ct_h() const { return 2.0 * ce_h / gamma_h(); }
};

inline GaugeWeights gauge_weights(const CoefficientChoice& c, double eps, double mu)
{
    GaugeWeights w{};
    switch (c.kind) {
        case CoefficientChoice::Kind::c1: w = {eps, 1.0, mu, 1.0}; break;
        case CoefficientChoice::Kind::c2: w = {1.0, 0.0, 0.0, 1.0}; break;
        case CoefficientChoice::Kind::custom: w = {c.ci_e, c.ce_e, c.ci_h, c.ce_h}; break;
    }
    if (w.gamma_e() == 0.0 || w.gamma_h() == 0.0)
        throw ConfigError("coefficient choice '" + c.name() +
                          "' is singular: C^i + C^e must be invertible");
    return w;
}

struct Tolerances {
    double matsubara_rel = 1e-9;  // primed-sum stop
    double channel_rel = 1e-10;   // partial-wave (l or m) sums
    double quad_rel = 1e-11;      // k_z quadrature node doubling
    double dual_route_rel = 1e-6; // sweep cross-check flag threshold (sphere)
    std::size_t n_max = 4000;     // Matsubara budget
    int channel_max = 200000;     // hard cap on l or |m|
    int quad_min_nodes = 40;
    int quad_max_nodes = 1280;
    // Channels with spectral radius in [1 - spectral_guard, 1) are solved
    // directly even inside a series evaluation, and flagged.
    double spectral_guard = 1e-6;
};

struct Configuration {
    Geometry geometry = Geometry::sphere;
    double radius = 30.0;  // um
    Material material = material_silicon();
    double mu_body = 1.0;
    double distance = 3.0;     // um, surface-to-particle gap
    double temperature = 300.0;  // K
    double alpha = 1.0;  // scalar electric polarizability; energies are linear in it
    CoefficientChoice gauge = CoefficientChoice::c1();
    std::vector<int> orders = {0, 1, 2, 3, 4};
    Tolerances tol;

    double a() const { return radius + distance; }  // center-to-particle distance

    void validate() const
    {
        if (!(radius > 0.0)) throw ConfigError("radius must be positive");
        if (!(distance > 0.0)) throw ConfigError("distance must be positive");
        if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
        if (!(mu_body > 0.0)) throw ConfigError("mu must be positive");
        for (int k : orders)
            if (k < 0) throw ConfigError("series orders must be >= 0");
        // resolve the gauge once so a singular custom choice fails early
        gauge_weights(gauge, 2.0, mu_body);
    }
};

}
