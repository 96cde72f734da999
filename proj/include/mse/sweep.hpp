#pragma once
// Distance sweeps: series energies against the exact T-matrix reference over
// a grid of separations, with CSV / JSON-lines emission.
//
// Each distance costs one exact evaluation and one series pass (every
// requested order plus the resummed value come out of that single pass).
// Distances run concurrently; results are merged in input order, so the
// emitted bytes do not depend on the thread budget.  Energies are computed
// per unit polarizability and scaled on output -- the ratio column is formed
// from the unscaled values and is therefore bit-for-bit invariant under a
// rescaling of alpha.

#include <mse/config.hpp>
#include <mse/errors.hpp>
#include <mse/mie.hpp>
#include <mse/scatter.hpp>
#include <mse/version.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace mse {

struct SweepRow {
    double d_over_r = 0.0;
    int order = 0;
    double e_mse = std::numeric_limits<double>::quiet_NaN();
    double e_exact = std::numeric_limits<double>::quiet_NaN();
    double ratio = std::numeric_limits<double>::quiet_NaN();
    long channel_max = 0;  // largest l or |m| retained
    long n_matsubara = 0;
    std::string flags;  // ';'-joined notes, empty if clean
};

struct SweepMetadata {
    std::string geometry;
    std::string material;
    std::string gauge;
    double temperature = 0.0;
    double radius = 0.0;
    double alpha = 1.0;
    std::vector<int> orders;
    Tolerances tol;
    std::string config_hash;  // FNV-1a of the canonical configuration string
};

struct SweepResult {
    SweepMetadata meta;
    std::vector<SweepRow> rows;
    std::vector<double> resummed;  // per distance, same order as the input grid
};

namespace detail {

inline std::string fnv1a_hex(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string canonical_config(const Configuration& cfg, const std::vector<double>& grid,
                                    const std::vector<int>& orders)
{
    char buf[256];
    std::string s = "geometry=" + to_string(cfg.geometry) + ";material=" + cfg.material.name;
    std::snprintf(buf, sizeof buf, ";radius=%.17g;temperature=%.17g;alpha=%.17g;mu=%.17g;gauge=%s",
                  cfg.radius, cfg.temperature, cfg.alpha, cfg.mu_body, cfg.gauge.name().c_str());
    s += buf;
    if (cfg.gauge.kind == CoefficientChoice::Kind::custom) {
        std::snprintf(buf, sizeof buf, ";coeffs=%.17g,%.17g,%.17g,%.17g", cfg.gauge.ci_e,
                      cfg.gauge.ci_h, cfg.gauge.ce_e, cfg.gauge.ce_h);
        s += buf;
    }
    s += ";grid=";
    for (double d : grid) {
        std::snprintf(buf, sizeof buf, "%.17g,", d);
        s += buf;
    }
    s += "orders=";
    for (int k : orders) s += std::to_string(k) + ",";
    std::snprintf(buf, sizeof buf, ";mats_rel=%g;chan_rel=%g;quad_rel=%g;guard=%g",
                  cfg.tol.matsubara_rel, cfg.tol.channel_rel, cfg.tol.quad_rel,
                  cfg.tol.spectral_guard);
    s += buf;
    return s;
}

inline int thread_budget(int requested, std::size_t jobs)
{
    int n = requested;
    if (n <= 0) {
        if (const char* env = std::getenv("MSE_THREADS")) n = std::atoi(env);
    }
    if (n <= 0) n = int(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    return int(std::min<std::size_t>(n, jobs));
}

// everything one distance produces, before rows are cut
struct DistancePoint {
    std::vector<double> orders;  // per unit alpha
    double resummed = std::numeric_limits<double>::quiet_NaN();
    double exact = std::numeric_limits<double>::quiet_NaN();
    long n_matsubara = 0;
    long channel_max = 0;
    std::vector<std::string> flags;
};

inline DistancePoint sweep_point(Configuration cfg, double d_over_r, int max_order)
{
    cfg.distance = d_over_r * cfg.radius;
    cfg.alpha = 1.0;
    DistancePoint p;
    try {
        p.exact = cfg.geometry == Geometry::sphere ? cp_energy_sphere_exact(cfg)
                                                   : cp_energy_cylinder_exact(cfg);
    } catch (const std::exception& ex) {
        p.flags.push_back(std::string("exact-error: ") + ex.what());
    }
    try {
        MseEnergies e = mse_energy(cfg, max_order);
        p.orders = std::move(e.orders);
        p.resummed = e.resummed;
        p.n_matsubara = e.n_matsubara;
        p.channel_max = e.max_channel;
        for (auto& f : e.flags) p.flags.push_back(f);
    } catch (const std::exception& ex) {
        p.flags.push_back(std::string("series-error: ") + ex.what());
        try {
            p.resummed = resummed_energy(cfg);  // still fine when only the series is barred
        } catch (const std::exception&) {
        }
    }
    return p;
}

}  // namespace detail

// One exact + one series pass per distance.  orders selects which partial
// sums become rows; the resummed value is kept alongside and compared against
// the exact route at three sampled distances (ends and middle of the grid) --
// disagreement beyond tol.dual_route_rel flags those rows.
inline SweepResult run_sweep(const Configuration& base, const std::vector<double>& d_over_r,
                             const std::vector<int>& orders, int threads = 0)
{
    base.validate();
    if (d_over_r.empty()) throw ConfigError("run_sweep: empty distance grid");
    if (orders.empty()) throw ConfigError("run_sweep: no orders requested");
    for (double d : d_over_r)
        if (!(d > 0.0)) throw ConfigError("run_sweep: distances must be positive");
    for (int k : orders)
        if (k < 0) throw ConfigError("run_sweep: orders must be >= 0");
    const int kmax = *std::max_element(orders.begin(), orders.end());

    std::vector<detail::DistancePoint> pts(d_over_r.size());
    const int nthreads = detail::thread_budget(threads, d_over_r.size());
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < d_over_r.size(); ++i)
            pts[i] = detail::sweep_point(base, d_over_r[i], kmax);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int w = 0; w < nthreads; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < d_over_r.size();
                     i = next.fetch_add(1))
                    pts[i] = detail::sweep_point(base, d_over_r[i], kmax);
            });
        for (auto& th : pool) th.join();
    }

    SweepResult out;
    out.meta.geometry = to_string(base.geometry);
    out.meta.material = base.material.name;
    out.meta.gauge = base.gauge.name();
    out.meta.temperature = base.temperature;
    out.meta.radius = base.radius;
    out.meta.alpha = base.alpha;
    out.meta.orders = orders;
    out.meta.tol = base.tol;
    out.meta.config_hash = detail::fnv1a_hex(detail::canonical_config(base, d_over_r, orders));

    std::vector<std::size_t> checked;
    checked.push_back(0);
    if (d_over_r.size() > 2) checked.push_back(d_over_r.size() / 2);
    if (d_over_r.size() > 1) checked.push_back(d_over_r.size() - 1);

    out.resummed.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const detail::DistancePoint& p = pts[i];
        out.resummed.push_back(base.alpha * p.resummed);
        std::string flags;
        for (const auto& f : p.flags) {
            if (!flags.empty()) flags += ';';
            flags += f;
        }
        if (std::count(checked.begin(), checked.end(), i) && std::isfinite(p.resummed) &&
            std::isfinite(p.exact)) {
            const double rel = std::abs(p.resummed / p.exact - 1.0);
            if (!(rel <= base.tol.dual_route_rel)) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "dualroute:%.3e", rel);
                if (!flags.empty()) flags += ';';
                flags += buf;
            }
        }
        for (int k : orders) {
            SweepRow row;
            row.d_over_r = d_over_r[i];
            row.order = k;
            if (std::size_t(k) < p.orders.size()) {
                row.e_mse = base.alpha * p.orders[k];
                if (std::isfinite(p.exact)) row.ratio = p.orders[k] / p.exact;
            }
            row.e_exact = base.alpha * p.exact;
            row.channel_max = p.channel_max;
            row.n_matsubara = p.n_matsubara;
            row.flags = flags;
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

namespace detail {

inline std::string g17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_csv(const SweepResult& r, std::ostream& os)
{
    os << "# mse-cp " << version << " sweep\n";
    os << "# geometry: " << r.meta.geometry << "\n";
    os << "# material: " << r.meta.material << "\n";
    os << "# gauge: " << r.meta.gauge << "\n";
    os << "# radius_um: " << detail::g17(r.meta.radius) << "\n";
    os << "# temperature_k: " << detail::g17(r.meta.temperature) << "\n";
    os << "# alpha_um3: " << detail::g17(r.meta.alpha) << "\n";
    os << "# tol: matsubara_rel=" << r.meta.tol.matsubara_rel
       << " channel_rel=" << r.meta.tol.channel_rel << " quad_rel=" << r.meta.tol.quad_rel
       << " dual_route_rel=" << r.meta.tol.dual_route_rel
       << " spectral_guard=" << r.meta.tol.spectral_guard << "\n";
    os << "# config_hash: " << r.meta.config_hash << "\n";
    os << "d_over_r,order,e_mse,e_exact,ratio,lmax_or_mmax,n_matsubara,flags\n";
    for (const SweepRow& row : r.rows) {
        os << detail::g17(row.d_over_r) << ',' << row.order << ',' << detail::g17(row.e_mse)
           << ',' << detail::g17(row.e_exact) << ',' << detail::g17(row.ratio) << ','
           << row.channel_max << ',' << row.n_matsubara << ','
           << (row.flags.empty() ? "-" : row.flags) << '\n';
    }
}

inline void write_json_lines(const SweepResult& r, std::ostream& os)
{
    os << "{\"meta\":{\"version\":\"" << version << "\",\"geometry\":\"" << r.meta.geometry
       << "\",\"material\":\"" << r.meta.material << "\",\"gauge\":\"" << r.meta.gauge
       << "\",\"radius_um\":" << detail::g17(r.meta.radius)
       << ",\"temperature_k\":" << detail::g17(r.meta.temperature)
       << ",\"alpha_um3\":" << detail::g17(r.meta.alpha) << ",\"config_hash\":\""
       << r.meta.config_hash << "\"}}\n";
    for (const SweepRow& row : r.rows) {
        os << "{\"d_over_r\":" << detail::g17(row.d_over_r) << ",\"order\":" << row.order
           << ",\"e_mse\":" << detail::g17(row.e_mse)
           << ",\"e_exact\":" << detail::g17(row.e_exact)
           << ",\"ratio\":" << detail::g17(row.ratio)
           << ",\"lmax_or_mmax\":" << row.channel_max
           << ",\"n_matsubara\":" << row.n_matsubara << ",\"flags\":\"" << row.flags
           << "\"}\n";
    }
}

// a small matplotlib companion for a sweep CSV; kept dependency-free
inline std::string plot_script(const std::string& csv_path)
{
    std::string s;
    s += "#!/usr/bin/env python3\n";
    s += "\"\"\"Plot |E_MSE_k / E_exact - 1| against d/R from a sweep CSV.\"\"\"\n";
    s += "import csv\nimport sys\n\nimport matplotlib.pyplot as plt\n\n";
    s += "path = sys.argv[1] if len(sys.argv) > 1 else \"" + csv_path + "\"\n";
    s += "rows = [r for r in csv.reader(l for l in open(path) if not l.startswith(\"#\"))]\n";
    s += "head, data = rows[0], rows[1:]\n";
    s += "orders = sorted({int(r[1]) for r in data})\n";
    s += "for k in orders:\n";
    s += "    pts = [(float(r[0]), abs(float(r[4]) - 1.0)) for r in data if int(r[1]) == k]\n";
    s += "    pts.sort()\n";
    s += "    plt.loglog([p[0] for p in pts], [p[1] for p in pts], \"o-\", label=f\"k={k}\")\n";
    s += "plt.xlabel(\"d/R\")\nplt.ylabel(\"|E_k/E - 1|\")\nplt.legend()\nplt.grid(True, which=\"both\", alpha=0.3)\n";
    s += "plt.tight_layout()\nplt.show()\n";
    return s;
}

// the default grid: 12 log-spaced points over [0.03, 1]
inline std::vector<double> default_grid()
{
    std::vector<double> g(12);
    const double lo = std::log(0.03), hi = std::log(1.0);
    for (int i = 0; i < 12; ++i) g[i] = std::exp(lo + (hi - lo) * i / 11.0);
    g.back() = 1.0;
    return g;
}

}
