// Why the scattering series fails for a metallic cylinder: the m = 0
// round-trip eigenvalue approaches 1 as kappa -> 0 under gauge c1, and every
// low channel does under c2.  The dielectric comparison stays well inside the
// unit disk.

#include <mse/materials.hpp>
#include <mse/scatter.hpp>
#include <mse/units.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

int main()
{
    using namespace mse;
    const double R = 30.0;
    std::vector<double> kzs(28);
    for (int i = 0; i < 28; ++i) kzs[i] = std::pow(10.0, -8.0 + 9.0 * i / 27.0);

    auto lambda_max = [&](const Material& mat, const CoefficientChoice& g, int m, double kap) {
        const double eps = permittivity(mat, kap * hbar_c);
        double rho = 0.0;
        for (double kz : kzs)
            rho = std::max(rho, spectral_radius(sso_block_cylinder(m, kz, kap, eps, 1.0, R, g)));
        return rho;
    };

    std::printf("gold cylinder, gauge c1, m = 0:\n");
    std::printf("%10s  %16s\n", "kappa", "max |lambda|");
    for (double kap : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6})
        std::printf("%10.0e  %16.12f\n", kap, lambda_max(material_gold(), CoefficientChoice::c1(), 0, kap));

    std::printf("\ngold cylinder, gauge c2, kappa = 1e-5:\n");
    std::printf("%4s  %16s\n", "m", "max |lambda|");
    for (int m = 0; m <= 3; ++m)
        std::printf("%4d  %16.12f\n", m, lambda_max(material_gold(), CoefficientChoice::c2(), m, 1e-5));

    std::printf("\nsilicon cylinder, gauge c1, kappa = 1e-5 (for contrast):\n");
    for (int m = 0; m <= 3; ++m)
        std::printf("%4d  %16.12f\n", m, lambda_max(material_silicon(), CoefficientChoice::c1(), m, 1e-5));
    return 0;
}
