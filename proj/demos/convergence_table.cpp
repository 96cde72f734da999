// Order-by-order convergence of the scattering series against the exact
// energy, over a distance grid.
//
//   ./demo_convergence [sphere|cylinder] [au|si|polystyrene] [c1|c2]

#include <mse/mie.hpp>
#include <mse/scatter.hpp>
#include <mse/sweep.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv)
{
    using namespace mse;
    Configuration cfg;
    cfg.geometry = (argc > 1 && std::string(argv[1]) == "cylinder") ? Geometry::cylinder
                                                                    : Geometry::sphere;
    cfg.material = material_by_name(argc > 2 ? argv[2] : "si");
    cfg.gauge = (argc > 3 && std::string(argv[3]) == "c2") ? CoefficientChoice::c2()
                                                           : CoefficientChoice::c1();
    cfg.radius = 30.0;

    const int kmax = 4;
    std::printf("%s, %s, gauge %s, R = %g um, T = %g K\n", to_string(cfg.geometry).c_str(),
                cfg.material.name.c_str(), cfg.gauge.name().c_str(), cfg.radius,
                cfg.temperature);
    std::printf("%8s %14s", "d/R", "E_exact [eV]");
    for (int k = 0; k <= kmax; ++k) std::printf("   err(k=%d)", k);
    std::printf("\n");

    for (double dr : {0.03, 0.1, 0.3, 1.0}) {
        cfg.distance = dr * cfg.radius;
        const double exact = cfg.geometry == Geometry::sphere
                                 ? cp_energy_sphere_exact(cfg)
                                 : cp_energy_cylinder_exact(cfg);
        const MseEnergies e = mse_energy(cfg, kmax);
        std::printf("%8.2f %14.6e", dr, exact);
        for (int k = 0; k <= kmax; ++k)
            std::printf(" %+9.4f%%", 100.0 * (e.orders[k] / exact - 1.0));
        std::printf("\n");
    }
    return 0;
}
