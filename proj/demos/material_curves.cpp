// Permittivities along the imaginary frequency axis, tabulated at the
// Matsubara points of T = 300 K.

#include <mse/materials.hpp>
#include <mse/units.hpp>

#include <cstdio>

int main()
{
    using namespace mse;
    const Material au = material_gold();
    const Material si = material_silicon();
    const Material ps = material_polystyrene();

    std::printf("%6s %12s %14s %14s %14s\n", "n", "xi_n [eV]", "eps_au", "eps_si", "eps_ps");
    for (int n : {0, 1, 2, 5, 10, 20, 50, 100, 200, 500}) {
        const auto t = matsubara_term(n, 300.0);
        const double ea = permittivity(au, t.xi);
        std::printf("%6d %12.5e %14.6g %14.6f %14.6f\n", n, t.xi, ea,
                    permittivity(si, t.xi), permittivity(ps, t.xi));
    }
    return 0;
}
