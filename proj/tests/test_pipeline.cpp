#include <mse/sweep.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace mse;
using Catch::Approx;

namespace {

Configuration small_sphere()
{
    Configuration cfg;
    cfg.geometry = Geometry::sphere;
    cfg.material = material_silicon();
    cfg.radius = 2.0;
    return cfg;
}

std::string csv_of(const SweepResult& r)
{
    std::ostringstream os;
    write_csv(r, os);
    return os.str();
}

}  // namespace

TEST_CASE("sweep input validation")
{
    const Configuration cfg = small_sphere();
    CHECK_THROWS_AS(run_sweep(cfg, {}, {0, 1}), ConfigError);
    CHECK_THROWS_AS(run_sweep(cfg, {0.1, 0.3}, {}), ConfigError);
    CHECK_THROWS_AS(run_sweep(cfg, {0.1, -0.3}, {0}), ConfigError);
    CHECK_THROWS_AS(run_sweep(cfg, {0.1}, {0, -1}), ConfigError);
}

TEST_CASE("sweep rows come out distance-major in input order")
{
    const std::vector<double> grid = {0.3, 0.1, 0.5};  // deliberately unsorted
    const std::vector<int> orders = {0, 2};
    const SweepResult r = run_sweep(small_sphere(), grid, orders, 1);
    REQUIRE(r.rows.size() == 6);
    REQUIRE(r.resummed.size() == 3);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < orders.size(); ++j) {
            const SweepRow& row = r.rows[i * orders.size() + j];
            CHECK(row.d_over_r == grid[i]);
            CHECK(row.order == orders[j]);
        }
}

TEST_CASE("sweep rows are internally consistent")
{
    const SweepResult r = run_sweep(small_sphere(), {0.1, 0.3, 1.0}, {0, 1, 3}, 1);
    for (const SweepRow& row : r.rows) {
        CHECK(std::isfinite(row.e_mse));
        CHECK(std::isfinite(row.e_exact));
        CHECK(row.e_exact < 0.0);
        // base alpha is 1, so the stored ratio is exactly e_mse / e_exact
        CHECK(row.ratio == row.e_mse / row.e_exact);
        CHECK(row.channel_max > 0);
        CHECK(row.n_matsubara > 0);
        CHECK(row.flags.empty());  // clean dielectric sweep: nothing to report
    }
    // the high-order partial sum tracks the exact energy tightly at mid grid
    const SweepRow& mid = r.rows[1 * 3 + 2];  // d/R = 0.3, k = 3
    CHECK(mid.ratio == Approx(1.0).margin(0.02));
    for (double e : r.resummed) CHECK(e < 0.0);
}

TEST_CASE("ratio columns do not depend on alpha, bit for bit")
{
    Configuration a = small_sphere();
    Configuration b = small_sphere();
    b.alpha = 7.3;
    const std::vector<double> grid = {0.1, 1.0};
    const SweepResult ra = run_sweep(a, grid, {0, 2}, 1);
    const SweepResult rb = run_sweep(b, grid, {0, 2}, 1);
    REQUIRE(ra.rows.size() == rb.rows.size());
    for (std::size_t i = 0; i < ra.rows.size(); ++i) {
        CHECK(ra.rows[i].ratio == rb.rows[i].ratio);  // exact: computed per unit alpha
        CHECK(rb.rows[i].e_mse == 7.3 * ra.rows[i].e_mse);
        CHECK(rb.rows[i].e_exact == 7.3 * ra.rows[i].e_exact);
    }
}

TEST_CASE("sweeps are deterministic across runs and thread counts")
{
    const std::vector<double> grid = {0.05, 0.1, 0.3, 0.6, 1.0};
    const std::vector<int> orders = {0, 1, 2};
    const std::string s1 = csv_of(run_sweep(small_sphere(), grid, orders, 4));
    const std::string s2 = csv_of(run_sweep(small_sphere(), grid, orders, 4));
    const std::string s3 = csv_of(run_sweep(small_sphere(), grid, orders, 1));
    CHECK(s1 == s2);
    CHECK(s1 == s3);
}

TEST_CASE("metallic cylinder sweep: series rows are barred, resummed survives")
{
    Configuration cfg;
    cfg.geometry = Geometry::cylinder;
    cfg.material = material_gold();
    cfg.radius = 2.0;
    const SweepResult r = run_sweep(cfg, {0.2, 0.3}, {0, 1}, 1);
    REQUIRE(r.rows.size() == 4);
    for (const SweepRow& row : r.rows) {
        CHECK(row.flags.find("series-error:") != std::string::npos);
        CHECK(std::isnan(row.e_mse));
        CHECK(std::isnan(row.ratio));
        CHECK(std::isfinite(row.e_exact));
        CHECK(row.e_exact < 0.0);
    }
    REQUIRE(r.resummed.size() == 2);
    for (std::size_t i = 0; i < r.resummed.size(); ++i) {
        CHECK(std::isfinite(r.resummed[i]));
        CHECK(r.resummed[i] == Approx(r.rows[2 * i].e_exact).epsilon(1e-6));
    }
}

TEST_CASE("csv and json-lines formats")
{
    const SweepResult r = run_sweep(small_sphere(), {0.1, 0.5}, {0, 1}, 1);
    const std::string csv = csv_of(r);
    CHECK(csv.find("# config_hash: " + r.meta.config_hash) != std::string::npos);
    CHECK(csv.find("d_over_r,order,e_mse,e_exact,ratio,lmax_or_mmax,n_matsubara,flags\n") !=
          std::string::npos);
    CHECK(r.meta.config_hash.size() == 16);

    // one line per row plus the provenance header block
    std::istringstream is(csv);
    std::string line;
    int data = 0, comment = 0;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') ++comment;
        else if (line[0] == 'd') header = true;
        else {
            ++data;
            CHECK(std::count(line.begin(), line.end(), ',') == 7);
            CHECK(line.back() == '-');  // clean rows carry the placeholder flag
        }
    }
    CHECK(header);
    CHECK(comment >= 5);
    CHECK(data == 4);

    std::ostringstream js;
    write_json_lines(r, js);
    const std::string jsl = js.str();
    CHECK(std::count(jsl.begin(), jsl.end(), '\n') == int(r.rows.size()) + 1);
    CHECK(jsl.find("\"config_hash\":\"" + r.meta.config_hash + "\"") != std::string::npos);
    CHECK(jsl.rfind("{\"meta\":", 0) == 0);
}

TEST_CASE("config hash tracks the inputs")
{
    Configuration a = small_sphere();
    const SweepResult ra = run_sweep(a, {0.1}, {0}, 1);
    const SweepResult rb = run_sweep(a, {0.2}, {0}, 1);
    Configuration c = small_sphere();
    c.gauge = CoefficientChoice::c2();
    const SweepResult rc = run_sweep(c, {0.1}, {0}, 1);
    CHECK(ra.meta.config_hash != rb.meta.config_hash);
    CHECK(ra.meta.config_hash != rc.meta.config_hash);
    CHECK(ra.meta.config_hash == run_sweep(a, {0.1}, {0}, 1).meta.config_hash);
}

TEST_CASE("plot companion script mentions its csv")
{
    const std::string s = plot_script("runs/sweep.csv");
    CHECK(s.find("runs/sweep.csv") != std::string::npos);
    CHECK(s.find("matplotlib") != std::string::npos);
    CHECK(s.rfind("#!/usr/bin/env python3", 0) == 0);
}

TEST_CASE("default grid spans 0.03 to 1")
{
    const std::vector<double> g = default_grid();
    REQUIRE(g.size() == 12);
    CHECK(g.front() == Approx(0.03).epsilon(1e-15));
    CHECK(g.back() == 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}
