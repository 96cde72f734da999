#pragma once
// Dispersive permittivities on the imaginary frequency axis, where every
// built-in model is real and >= 1.  Frequencies xi in eV (hbar = 1).
//
// The Drude term diverges at xi = 0; permittivity() returns +infinity there,
// and the static-limit code paths treat an infinite epsilon as the
// perfect-conductor limit instead of feeding a huge float into the formulas.

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mse/errors.hpp"

namespace mse {

inline constexpr double eps_infinite = std::numeric_limits<double>::infinity();

// One Lorentz pole f / (w^2 + g xi + xi^2) evaluated at imaginary frequency.
struct Oscillator {
    double w;  // resonance, eV
    double f;  // strength, eV^2
    double g;  // damping, eV
};

struct Material {
    enum class Kind { drude_lorentz, two_pole, oscillator_sum, constant, perfect_conductor };

    std::string name;
    Kind kind = Kind::constant;

    // drude_lorentz: 1 + Op^2/(xi(xi+gamma)) + sum of oscillators
    double plasma_sq = 0.0;    // Omega_p^2, eV^2
    double drude_gamma = 0.0;  // eV
    std::vector<Oscillator> oscillators;  // shared with oscillator_sum

    // two_pole: eps_inf + (eps_static - eps_inf)/(1 + (xi/w_uv)^2)
    double eps_inf = 1.0;
    double eps_static = 1.0;
    double w_uv = 1.0;  // eV

    // constant
    double eps_const = 1.0;

    double mu = 1.0;  // all built-ins are non-magnetic
};

inline double permittivity(const Material& mat, double xi)
{
    if (xi < 0.0)
        throw std::domain_error("permittivity: xi must be >= 0");
    switch (mat.kind) {
        case Material::Kind::perfect_conductor:
            return eps_infinite;
        case Material::Kind::constant:
            return mat.eps_const;
        case Material::Kind::two_pole: {
            const double r = xi / mat.w_uv;
            return mat.eps_inf + (mat.eps_static - mat.eps_inf) / (1.0 + r * r);
        }
        case Material::Kind::oscillator_sum: {
            double e = 1.0;
            for (const auto& o : mat.oscillators)
                e += o.f / (o.w * o.w + o.g * xi + xi * xi);
            return e;
        }
        case Material::Kind::drude_lorentz: {
            if (xi == 0.0) return eps_infinite;  // Drude term ~ 1/xi
            double e = 1.0 + mat.plasma_sq / (xi * (xi + mat.drude_gamma));
            for (const auto& o : mat.oscillators)
                e += o.f / (o.w * o.w + o.g * xi + xi * xi);
            return e;
        }
    }
    throw std::logic_error("permittivity: unhandled material kind");
}

// --------------------------------------------------------------------------
// Built-in parameter sets.  data/materials.dat ships the same numbers; the
// loader below reads that format, and a test pins file == built-ins.

inline Material material_gold()
{
    Material m;
    m.name = "gold";
    m.kind = Material::Kind::drude_lorentz;
    m.plasma_sq = 81.0;  // (9 eV)^2
    m.drude_gamma = 0.035;
    m.oscillators = {{3.05, 7.091, 0.75}, {4.15, 41.46, 1.85}, {5.4, 2.7, 1.0},
                     {8.5, 154.7, 7.0},   {13.5, 44.55, 6.0},  {21.5, 309.6, 9.0}};
    return m;
}

inline Material material_silicon()
{
    Material m;
    m.name = "silicon";
    m.kind = Material::Kind::two_pole;
    m.eps_inf = 1.035;
    m.eps_static = 11.87;
    m.w_uv = 4.34;
    return m;
}

inline Material material_polystyrene()
{
    Material m;
    m.name = "polystyrene";
    m.kind = Material::Kind::oscillator_sum;
    m.oscillators = {{6.35, 14.6, 0.65}, {14.0, 96.9, 5.0}, {11.0, 44.4, 3.5},
                     {20.1, 136.9, 11.5}};
    return m;
}

inline Material material_perfect_conductor()
{
    Material m;
    m.name = "perfect-conductor";
    m.kind = Material::Kind::perfect_conductor;
    return m;
}

inline Material material_constant(double eps)
{
    Material m;
    m.name = "constant";
    m.kind = Material::Kind::constant;
    m.eps_const = eps;
    return m;
}

inline Material material_by_name(const std::string& name)
{
    if (name == "au" || name == "gold") return material_gold();
    if (name == "si" || name == "silicon") return material_silicon();
    if (name == "ps" || name == "polystyrene") return material_polystyrene();
    if (name == "pc" || name == "perfect-conductor") return material_perfect_conductor();
    throw ConfigError("unknown material '" + name + "' (au|si|polystyrene|perfect-conductor)");
}

// --------------------------------------------------------------------------
// Parameter file: INI-style sections, one material per section.
//
//   [gold]
//   model = drude_lorentz
//   plasma_frequency_ev = 9.0
//   drude_gamma_ev = 0.035
//   oscillator = 3.05 7.091 0.75      # w f g, repeatable
//
// Unknown keys are rejected (fail closed) so a typo cannot silently fall back
// to a default.

namespace detail {

inline std::string strip(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& context)
{
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError(context + ": cannot parse number '" + s + "'");
    }
    if (pos != s.size())
        throw ConfigError(context + ": trailing characters in number '" + s + "'");
    return v;
}

}  // namespace detail

inline std::map<std::string, Material> load_materials(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open material file '" + path + "'");

    std::map<std::string, Material> out;
    Material cur;
    bool have_section = false;
    auto flush = [&] {
        if (have_section) out[cur.name] = cur;
    };

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::strip(line);
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where + ": malformed section header");
            flush();
            cur = Material{};
            cur.name = detail::strip(line.substr(1, line.size() - 2));
            if (cur.name.empty()) throw ConfigError(where + ": empty section name");
            have_section = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        if (!have_section)
            throw ConfigError(where + ": key outside of a [section]");
        const std::string key = detail::strip(line.substr(0, eq));
        const std::string val = detail::strip(line.substr(eq + 1));

        if (key == "model") {
            if (val == "drude_lorentz") cur.kind = Material::Kind::drude_lorentz;
            else if (val == "two_pole") cur.kind = Material::Kind::two_pole;
            else if (val == "oscillator_sum") cur.kind = Material::Kind::oscillator_sum;
            else if (val == "constant") cur.kind = Material::Kind::constant;
            else if (val == "perfect_conductor") cur.kind = Material::Kind::perfect_conductor;
            else throw ConfigError(where + ": unknown model '" + val + "'");
        } else if (key == "plasma_frequency_ev") {
            const double w = detail::parse_double(val, where);
            cur.plasma_sq = w * w;
        } else if (key == "drude_gamma_ev") {
            cur.drude_gamma = detail::parse_double(val, where);
        } else if (key == "oscillator") {
            std::istringstream os(val);
            Oscillator o{};
            if (!(os >> o.w >> o.f >> o.g))
                throw ConfigError(where + ": oscillator needs three numbers 'w f g'");
            std::string rest;
            if (os >> rest)
                throw ConfigError(where + ": oscillator has trailing fields");
            cur.oscillators.push_back(o);
        } else if (key == "eps_inf") {
            cur.eps_inf = detail::parse_double(val, where);
        } else if (key == "eps_static") {
            cur.eps_static = detail::parse_double(val, where);
        } else if (key == "omega_uv_ev") {
            cur.w_uv = detail::parse_double(val, where);
        } else if (key == "eps") {
            cur.eps_const = detail::parse_double(val, where);
        } else {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
    flush();
    return out;
}

}
