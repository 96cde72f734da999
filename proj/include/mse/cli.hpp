#pragma once
// Command-line front end.  Subcommands:
//
//   sweep      distance grid -> CSV or JSON-lines (series orders vs exact)
//   exact      one separation, exact T-matrix energy
//   mse        one separation, series orders + resummed + exact with ratios
//   spectrum   spectral radii of round-trip blocks over a kappa/channel scan
//   materials  permittivity at a Matsubara frequency
//
// Exit codes: 0 success, 2 configuration, 3 convergence failure,
// 4 spectral-radius guard.  A --config file holds key=value lines whose keys
// are the long option names of the subcommand; unknown keys are rejected and
// explicit command-line flags win over file values.

#include <mse/config.hpp>
#include <mse/errors.hpp>
#include <mse/materials.hpp>
#include <mse/mie.hpp>
#include <mse/scatter.hpp>
#include <mse/sweep.hpp>
#include <mse/units.hpp>
#include <mse/version.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

namespace mse {
namespace cli {

struct Options {
    std::string geometry = "sphere";
    std::string material = "si";
    std::string gauge = "c1";
    std::vector<double> coeffs;  // ci_e ci_h ce_e ce_h for --gauge custom
    double radius_um = 30.0;
    double temperature_k = 300.0;
    double alpha_um3 = 1.0;
    double mu = 1.0;
    double d_over_r = 0.1;
    int order = 4;
    std::vector<double> distances;
    std::vector<int> orders;
    std::string output = "-";
    std::string format = "csv";
    int threads = 0;
    bool deterministic = false;
    bool emit_plot_script = false;
    std::string config_file;
    // spectrum
    std::vector<double> kappas;
    int channel_max = 3;
    // materials
    long matsubara_n = 0;
    std::string material_file;
};

inline void add_physics(CLI::App* cmd, Options& o, bool with_distance)
{
    cmd->add_option("--geometry", o.geometry, "sphere or cylinder")
        ->check(CLI::IsMember({"sphere", "cylinder"}));
    cmd->add_option("--material", o.material,
                    "au | si | polystyrene | perfect-conductor | eps=<value>");
    cmd->add_option("--gauge", o.gauge, "c1, c2, or custom (see --coeffs)")
        ->check(CLI::IsMember({"c1", "c2", "custom"}));
    cmd->add_option("--coeffs", o.coeffs, "ci_e,ci_h,ce_e,ce_h for --gauge custom")
        ->delimiter(',')
        ->expected(0, 4);
    cmd->add_option("--radius-um", o.radius_um, "body radius R in um");
    cmd->add_option("--temperature-k", o.temperature_k, "temperature in K");
    cmd->add_option("--alpha-um3", o.alpha_um3, "static polarizability in um^3");
    cmd->add_option("--mu", o.mu, "body permeability");
    cmd->add_option("--config", o.config_file, "key=value file of these options");
    if (with_distance) cmd->add_option("--d-over-r", o.d_over_r, "surface gap over radius");
}

inline Material resolve_material(const Options& o)
{
    if (o.material.rfind("eps=", 0) == 0)
        return material_constant(detail::parse_double(o.material.substr(4), "--material"));
    if (!o.material_file.empty()) {
        auto table = load_materials(o.material_file);
        auto it = table.find(o.material);
        if (it != table.end()) return it->second;
    }
    return material_by_name(o.material);
}

inline Configuration build_config(const Options& o)
{
    Configuration cfg;
    cfg.geometry = o.geometry == "cylinder" ? Geometry::cylinder : Geometry::sphere;
    cfg.material = resolve_material(o);
    cfg.radius = o.radius_um;
    cfg.temperature = o.temperature_k;
    cfg.alpha = o.alpha_um3;
    cfg.mu_body = o.mu;
    cfg.distance = o.d_over_r * o.radius_um;
    if (o.gauge == "c1") {
        cfg.gauge = CoefficientChoice::c1();
    } else if (o.gauge == "c2") {
        cfg.gauge = CoefficientChoice::c2();
    } else {
        if (o.coeffs.size() != 4)
            throw ConfigError("--gauge custom needs --coeffs ci_e,ci_h,ce_e,ce_h");
        cfg.gauge = CoefficientChoice::custom(o.coeffs[0], o.coeffs[1], o.coeffs[2], o.coeffs[3]);
    }
    cfg.validate();
    return cfg;
}

// key=value file applied on top of defaults; command-line flags keep priority.
// Keys must be long option names of the subcommand (dashes or underscores).
inline void apply_config_file(const CLI::App& cmd, const std::string& path,
                              std::vector<std::string>& args)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::set<std::string> known;
    for (const CLI::Option* opt : cmd.get_options())
        for (const std::string& n : opt->get_lnames()) known.insert(n);
    auto passed = [&](const std::string& key) {
        for (const std::string& a : args)
            if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
        return false;
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = detail::strip(line.substr(0, eq));
        const std::string value = detail::strip(line.substr(eq + 1));
        for (char& c : key)
            if (c == '_') c = '-';
        if (!known.count(key))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key +
                              "'");
        if (key == "config")
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": config files do not nest");
        if (!passed(key)) args.push_back("--" + key + "=" + value);
    }
}

inline int run_sweep_cmd(const Options& o)
{
    Configuration cfg = build_config(o);
    std::vector<double> grid = o.distances.empty() ? default_grid() : o.distances;
    std::vector<int> orders = o.orders;
    if (orders.empty())
        for (int k = 0; k <= o.order; ++k) orders.push_back(k);
    const int threads = o.deterministic ? 1 : o.threads;
    SweepResult r = run_sweep(cfg, grid, orders, threads);

    if (o.emit_plot_script && o.output == "-")
        throw ConfigError("--emit-plot-script needs --output FILE");
    if (o.output == "-") {
        if (o.format == "csv")
            write_csv(r, std::cout);
        else
            write_json_lines(r, std::cout);
        return 0;
    }
    std::ofstream out(o.output);
    if (!out) throw ConfigError("cannot open output file '" + o.output + "'");
    if (o.format == "csv")
        write_csv(r, out);
    else
        write_json_lines(r, out);
    if (o.emit_plot_script) {
        const std::string spath = o.output + ".py";
        std::ofstream ps(spath);
        if (!ps) throw ConfigError("cannot open plot script '" + spath + "'");
        ps << plot_script(o.output);
        std::fprintf(stderr, "plot script: %s\n", spath.c_str());
    }
    return 0;
}

inline int run_exact_cmd(const Options& o)
{
    Configuration cfg = build_config(o);
    const double e = cfg.geometry == Geometry::sphere ? cp_energy_sphere_exact(cfg)
                                                      : cp_energy_cylinder_exact(cfg);
    std::printf("%.17g\n", e);
    return 0;
}

inline int run_mse_cmd(const Options& o)
{
    Configuration cfg = build_config(o);
    const double exact = cfg.geometry == Geometry::sphere ? cp_energy_sphere_exact(cfg)
                                                          : cp_energy_cylinder_exact(cfg);
    MseEnergies e = mse_energy(cfg, o.order);
    std::printf("E_exact    = %.17g\n", exact);
    std::printf("E_resummed = %.17g   (rel. to exact: %.3e)\n", e.resummed,
                e.resummed / exact - 1.0);
    for (std::size_t k = 0; k < e.orders.size(); ++k)
        std::printf("k=%-2zu E_MSE = %.17g   ratio = %.17g\n", k, e.orders[k],
                    e.orders[k] / exact);
    std::printf("matsubara_terms = %ld   channel_max = %ld\n", e.n_matsubara, e.max_channel);
    for (const std::string& f : e.flags) std::printf("flag: %s\n", f.c_str());
    return 0;
}

inline int run_spectrum_cmd(const Options& o)
{
    Configuration cfg = build_config(o);
    std::vector<double> kappas = o.kappas;
    if (kappas.empty()) kappas = {1e-3, 1e-2, 1e-1, 1.0};
    std::printf("kappa,channel,rho\n");
    if (cfg.geometry == Geometry::sphere) {
        for (double kap : kappas) {
            const double eps = permittivity(cfg.material, kap * hbar_c);
            for (int l = 1; l <= o.channel_max; ++l) {
                const SsoBlock b = sso_block_sphere(l, kap, eps, cfg.mu_body, cfg.radius,
                                                    cfg.gauge);
                std::printf("%.17g,%d,%.12f\n", kap, l, spectral_radius(b));
            }
        }
        return 0;
    }
    // cylinder: report the maximum over a fixed logarithmic k_z grid
    std::vector<double> kzs(28);
    for (int i = 0; i < 28; ++i) kzs[i] = std::pow(10.0, -8.0 + 9.0 * i / 27.0);
    for (double kap : kappas) {
        const double eps = permittivity(cfg.material, kap * hbar_c);
        for (int m = 0; m <= o.channel_max; ++m) {
            double rho = 0.0;
            for (double kz : kzs) {
                const SsoBlock b =
                    sso_block_cylinder(m, kz, kap, eps, cfg.mu_body, cfg.radius, cfg.gauge);
                rho = std::max(rho, spectral_radius(b));
            }
            std::printf("%.17g,%d,%.12f\n", kap, m, rho);
        }
    }
    return 0;
}

inline int run_materials_cmd(const Options& o)
{
    Material mat;
    if (o.material.rfind("eps=", 0) == 0) {
        mat = material_constant(detail::parse_double(o.material.substr(4), "--material"));
    } else if (!o.material_file.empty()) {
        auto table = load_materials(o.material_file);
        auto it = table.find(o.material);
        if (it == table.end())
            throw ConfigError("material '" + o.material + "' not in " + o.material_file);
        mat = it->second;
    } else {
        mat = material_by_name(o.material);
    }
    if (o.matsubara_n < 0) throw ConfigError("--n must be >= 0");
    const auto term = matsubara_term(std::size_t(o.matsubara_n), o.temperature_k);
    const double eps = permittivity(mat, term.xi);
    std::printf("material  = %s\n", mat.name.c_str());
    std::printf("n         = %ld   T = %.17g K\n", o.matsubara_n, o.temperature_k);
    std::printf("xi_ev     = %.17g\n", term.xi);
    if (std::isinf(eps))
        std::printf("eps       = inf\n");
    else
        std::printf("eps       = %.17g\n", eps);
    return 0;
}

inline int main(int argc, char** argv)
{
    CLI::App app{"Casimir-Polder energies: particle facing a sphere or cylinder, "
                 "scattering series and exact T-matrix routes"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);
    Options o;

    CLI::App* sweep = app.add_subcommand("sweep", "distance sweep to CSV / JSON lines");
    add_physics(sweep, o, false);
    sweep->add_option("--distances", o.distances, "d/R values (default: 12 log-spaced in [0.03,1])")
        ->delimiter(',');
    sweep->add_option("--orders", o.orders, "series orders to report (default 0..order)")
        ->delimiter(',');
    sweep->add_option("--order", o.order, "highest order when --orders is not given");
    sweep->add_option("--output", o.output, "output path, - for stdout");
    sweep->add_option("--format", o.format, "csv or json-lines")
        ->check(CLI::IsMember({"csv", "json-lines"}));
    sweep->add_option("--threads", o.threads, "worker threads (0: MSE_THREADS or hardware)");
    sweep->add_flag("--deterministic", o.deterministic, "single-threaded evaluation");
    sweep->add_flag("--emit-plot-script", o.emit_plot_script,
                    "write <output>.py (matplotlib companion)");

    CLI::App* exact = app.add_subcommand("exact", "exact T-matrix energy at one separation");
    add_physics(exact, o, true);

    CLI::App* mse_cmd = app.add_subcommand("mse", "series orders vs exact at one separation");
    add_physics(mse_cmd, o, true);
    mse_cmd->add_option("--order", o.order, "highest series order");

    CLI::App* spectrum = app.add_subcommand("spectrum", "round-trip spectral radii");
    add_physics(spectrum, o, false);
    spectrum->add_option("--kappas", o.kappas, "imaginary wavenumbers in 1/um")->delimiter(',');
    spectrum->add_option("--channel-max", o.channel_max, "largest l or |m| to scan");

    CLI::App* materials = app.add_subcommand("materials", "permittivity at i xi_n");
    materials->add_option("--material", o.material,
                          "au | si | polystyrene | perfect-conductor | eps=<value>");
    materials->add_option("--n", o.matsubara_n, "Matsubara index");
    materials->add_option("--temperature-k", o.temperature_k, "temperature in K");
    materials->add_option("--file", o.material_file, "material parameter file");
    materials->add_option("--config", o.config_file, "key=value file of these options");

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        // peek at --config before the real parse so file values become flags
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string path;
            if (args[i] == "--config" && i + 1 < args.size())
                path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0)
                path = args[i].substr(9);
            else
                continue;
            for (CLI::App* sub : {sweep, exact, mse_cmd, spectrum, materials})
                if (!args.empty() && args[0] == sub->get_name())
                    apply_config_file(*sub, path, args);
            break;
        }
        std::vector<const char*> ptrs;
        ptrs.push_back(argv[0]);
        for (const std::string& a : args) ptrs.push_back(a.c_str());
        try {
            app.parse(int(ptrs.size()), ptrs.data());
        } catch (const CLI::ParseError& e) {
            const int rc = app.exit(e);
            return rc == 0 ? 0 : 2;
        }
        if (sweep->parsed()) return run_sweep_cmd(o);
        if (exact->parsed()) return run_exact_cmd(o);
        if (mse_cmd->parsed()) return run_mse_cmd(o);
        if (spectrum->parsed()) return run_spectrum_cmd(o);
        if (materials->parsed()) return run_materials_cmd(o);
        return 2;
    } catch (const SpectralGuardError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const ConvergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace cli
}  // namespace mse
