#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sbsim/config.hpp"
#include "sbsim/experiments.hpp"

using namespace sbsim;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("sbsim_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("empty config yields the paper defaults") {
    SystemConfig cfg = parse_config_json("");
    CHECK(cfg.cell_radius_m == 800.0);
    CHECK(cfg.d_backhaul_m == 3000.0);
    CHECK(cfg.e_max_j == 2.0);
    CHECK(cfg.p_max_w == 0.8);
    CHECK(cfg.harvest_q_j == doctest::Approx(0.08));
    CHECK(cfg.slot_t_s == doctest::Approx(1e-3));
    CHECK(cfg.zipf_s == 2.0);
    CHECK(cfg.mu == 1.0);
    CHECK(cfg.g_params.a == doctest::Approx(0.18));
    CHECK(cfg.g_params.b == doctest::Approx(0.03));
    CHECK(cfg.discount == doctest::Approx(0.7));
    CHECK(cfg.gamma_min_db == doctest::Approx(8.0));
    CHECK(cfg.alpha == 3.0);
    CHECK(cfg.noise_dbmw == doctest::Approx(-90.0));
    CHECK(cfg.bandwidth_hz == doctest::Approx(1e5));
    CHECK(cfg.catalog_size == 10000);
    CHECK(cfg.grid_cells == 2001);
    CHECK(cfg.power_levels == 11);
}

TEST_CASE("unit conversions at ingestion") {
    SystemConfig cfg = parse_config_json("");
    CHECK(cfg.sigma2_w() == doctest::Approx(1e-12).epsilon(1e-12));
    CHECK(cfg.gamma_min_linear() ==
          doctest::Approx(6.309573444801932).epsilon(1e-12));
    CHECK(cfg.backhaul_power_avg_w() ==
          doctest::Approx(0.170358483009652).epsilon(1e-9));
}

TEST_CASE("parsing overrides and schema errors") {
    SystemConfig cfg = parse_config_json(R"({
      "network": {"n_users": 5, "cell_radius_m": 400.0},
      "content": {"cache_size": 7},
      "solver": {"discount": 0.5, "backhaul_accounting": "realized"}
    })");
    CHECK(cfg.n_users == 5);
    CHECK(cfg.cell_radius_m == 400.0);
    CHECK(cfg.cache_size == 7);
    CHECK(cfg.discount == 0.5);
    CHECK(cfg.backhaul_accounting == BackhaulAccounting::Realized);

    CHECK_THROWS_WITH_AS(parse_config_json(R"({"solver": {"theta": -1}})"),
                         doctest::Contains("solver.theta"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"nope": {}})"),
                         doctest::Contains("nope"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"solver": {"bogus": 1}})"),
                         doctest::Contains("solver.bogus"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config_json(R"({"utility": {"a": 0.03, "b": 0.18}})"),
        doctest::Contains("utility"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("not json"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config_json(
            R"({"network": {"n_users": 2, "user_distances_m": [100.0]}})"),
        doctest::Contains("user_distances_m"), std::invalid_argument);
}

TEST_CASE("config echo round trip") {
    SystemConfig cfg = parse_config_json(
        R"({"network": {"n_users": 3}, "energy": {"harvest_rate_hz": 0.5}})");
    SystemConfig back = parse_config_json(cfg.to_json_string());
    CHECK(back.n_users == 3);
    CHECK(back.harvest_rate_hz == 0.5);
    CHECK(back.solver_hash({100.0, 200.0, 300.0}) ==
          cfg.solver_hash({100.0, 200.0, 300.0}));
}

TEST_CASE("placement draw is deterministic and in-disc") {
    SystemConfig cfg = parse_config_json("");
    cfg.n_users = 50;
    auto d1 = cfg.resolve_user_distances(3);
    auto d2 = cfg.resolve_user_distances(3);
    CHECK(d1 == d2);
    auto d3 = cfg.resolve_user_distances(4);
    CHECK(d1 != d3);
    for (double d : d1) {
        CHECK(d > 0.0);
        CHECK(d <= cfg.cell_radius_m);
    }
    // explicit distances win
    cfg.n_users = 2;
    cfg.user_distances_m = {10.0, 20.0};
    CHECK(cfg.resolve_user_distances(3) == std::vector<double>{10.0, 20.0});
}

TEST_CASE("solver hash separates solver-relevant fields") {
    SystemConfig a = parse_config_json("");
    SystemConfig b = a;
    std::vector<double> d = {100.0, 200.0};
    a.n_users = b.n_users = 2;
    CHECK(a.solver_hash(d) == b.solver_hash(d));
    b.cache_size = 99;
    CHECK(a.solver_hash(d) != b.solver_hash(d));
    b = a;
    b.n_slots = 77; // simulation-only field: hash unchanged
    CHECK(a.solver_hash(d) == b.solver_hash(d));
}

TEST_CASE("experiment outputs reproduce byte-identical CSVs") {
    TempDir dir_a("csv_a"), dir_b("csv_b");
    SystemConfig cfg = parse_config_json(R"({
      "network": {"n_users": 3},
      "content": {"cache_size": 4},
      "solver": {"grid_cells": 201, "power_levels": 5},
      "simulation": {"n_slots": 1500, "seeds": 2}
    })");
    std::ostringstream sink;
    run_simulate(cfg, PolicyKind::DpLookahead, "", dir_a.path.string(), sink);
    run_simulate(cfg, PolicyKind::DpLookahead, "", dir_b.path.string(), sink);
    CHECK(slurp(dir_a.path / "trace.csv") == slurp(dir_b.path / "trace.csv"));
    CHECK(slurp(dir_a.path / "metrics.csv") ==
          slurp(dir_b.path / "metrics.csv"));
    CHECK(!slurp(dir_a.path / "manifest.json").empty());

    // re-run from the embedded manifest config: still identical bytes
    auto manifest = slurp(dir_a.path / "manifest.json");
    auto cfg_pos = manifest.find("\"config\"");
    REQUIRE(cfg_pos != std::string::npos);
    TempDir dir_c("csv_c");
    SystemConfig embedded = parse_config_json(cfg.to_json_string());
    run_simulate(embedded, PolicyKind::DpLookahead, "", dir_c.path.string(),
                 sink);
    CHECK(slurp(dir_a.path / "trace.csv") == slurp(dir_c.path / "trace.csv"));
}

TEST_CASE("trace csv shape") {
    TempDir dir("trace");
    SystemConfig cfg = parse_config_json(R"({
      "network": {"n_users": 2},
      "solver": {"grid_cells": 101, "power_levels": 4},
      "simulation": {"n_slots": 50}
    })");
    std::ostringstream sink;
    run_simulate(cfg, PolicyKind::BaselineMaxPower, "", dir.path.string(),
                 sink);
    std::string csv = slurp(dir.path / "trace.csv");
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header ==
          "slot,start_energy_j,downlink_total_w,gain_u1,gain_u2,"
          "backhaul_gain,miss,backhaul_power_w,harvested_j,end_energy_j,"
          "throughput_bps,idle");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 50);
}

TEST_CASE("solve cache reuses identical solver inputs") {
    SolveCache cache;
    SystemConfig cfg = parse_config_json(
        R"({"solver": {"grid_cells": 101, "power_levels": 4},
            "network": {"n_users": 2}})");
    auto d = cfg.resolve_user_distances();
    auto a = cache.get_or_solve(cfg, d);
    auto b = cache.get_or_solve(cfg, d);
    CHECK(a.get() == b.get());
    CHECK(cache.size() == 1);
    SystemConfig other = cfg;
    other.cache_size = 50;
    auto c = cache.get_or_solve(other, d);
    CHECK(c.get() != a.get());
    CHECK(cache.size() == 2);
}

TEST_CASE("snapshot guards against mismatched configs") {
    TempDir dir("snap");
    SystemConfig cfg = parse_config_json(
        R"({"solver": {"grid_cells": 101, "power_levels": 4},
            "network": {"n_users": 2}})");
    std::ostringstream sink;
    auto snap_path = (dir.path / "policy.json").string();
    run_solve(cfg, snap_path, sink);

    SystemConfig other = cfg;
    other.cache_size = 77;
    CHECK_THROWS_WITH_AS(run_simulate(other, PolicyKind::DpLookahead,
                                      snap_path, dir.path.string(), sink),
                         doctest::Contains("different"),
                         std::invalid_argument);
    // matching config loads fine
    run_simulate(cfg, PolicyKind::DpLookahead, snap_path, dir.path.string(),
                 sink);
}
