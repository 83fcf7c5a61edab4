#include "sbsim/config.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sbsim {

using nlohmann::json;

double SystemConfig::sigma2_w() const {
    return std::pow(10.0, noise_dbmw / 10.0) * 1e-3;
}

double SystemConfig::gamma_min_linear() const {
    return std::pow(10.0, gamma_min_db / 10.0);
}

double SystemConfig::backhaul_power_avg_w() const {
    return gamma_min_linear() * mu * std::pow(d_backhaul_m, alpha) * sigma2_w();
}

double SystemConfig::initial_energy() const {
    return initial_energy_j < 0.0 ? e_max_j : initial_energy_j;
}

void SystemConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& msg) {
        throw std::invalid_argument("config." + field + ": " + msg);
    };
    if (n_users < 1) fail("network.n_users", "must be >= 1");
    if (!(cell_radius_m > 0)) fail("network.cell_radius_m", "must be > 0");
    if (!(d_backhaul_m > 0)) fail("network.backhaul_distance_m", "must be > 0");
    if (!user_distances_m.empty()) {
        if (user_distances_m.size() != n_users)
            fail("network.user_distances_m",
                 "length must equal n_users when given");
        for (double d : user_distances_m)
            if (!(d > 0)) fail("network.user_distances_m", "entries must be > 0");
    }
    if (!(e_max_j > 0)) fail("energy.e_max_j", "must be > 0");
    if (!(p_max_w > 0)) fail("energy.p_max_w", "must be > 0");
    if (harvest_q_j < 0) fail("energy.harvest_q_j", "must be >= 0");
    if (harvest_rate_hz < 0) fail("energy.harvest_rate_hz", "must be >= 0");
    if (!(slot_t_s > 0)) fail("energy.slot_s", "must be > 0");
    if (initial_energy_j > e_max_j)
        fail("energy.initial_energy_j", "exceeds battery capacity");
    if (!(harvest_tail_tol > 0 && harvest_tail_tol < 1))
        fail("energy.tail_tol", "must be in (0,1)");
    if (!(zipf_s > 1)) fail("content.zipf_s", "must be > 1");
    if (catalog_size < 1) fail("content.catalog_size", "must be >= 1");
    if (cache_size > catalog_size)
        fail("content.cache_size", "exceeds catalog size");
    if (!(mu > 0)) fail("channel.mu", "must be > 0");
    if (!(bandwidth_hz > 0)) fail("channel.bandwidth_hz", "must be > 0");
    try {
        g_params.validate();
    } catch (const std::exception& e) {
        fail("utility", e.what());
    }
    if (!(discount >= 0 && discount < 1))
        fail("solver.discount", "must be in [0,1)");
    if (!(theta > 0)) fail("solver.theta", "must be > 0");
    if (max_iterations < 1) fail("solver.max_iterations", "must be >= 1");
    if (grid_cells < 2) fail("solver.grid_cells", "must be >= 2");
    if (power_levels < 2) fail("solver.power_levels", "must be >= 2");
    if (action_mode == ActionMode::Exhaustive && n_users > 3)
        fail("solver.action_mode",
             "exhaustive mode is limited to n_users <= 3");
    if (!(backhaul_power_avg_w() < p_max_w))
        fail("channel.gamma_min_db",
             "averaged backhaul power must stay below p_max_w");
    if (n_slots < 1) fail("simulation.n_slots", "must be >= 1");
    if (n_seeds < 1) fail("simulation.seeds", "must be >= 1");
    if (!(warmup_fraction >= 0 && warmup_fraction < 1))
        fail("simulation.warmup_fraction", "must be in [0,1)");
}

std::vector<double> SystemConfig::resolve_user_distances(
    std::uint64_t lane) const {
    if (!user_distances_m.empty()) return user_distances_m;
    RngStream rng = RngStream::derive(root_seed, "placement", lane);
    std::vector<double> d(n_users);
    for (auto& di : d)
        di = cell_radius_m * std::sqrt(rng.uniform01_open_low());
    return d;
}

LinkGeometry SystemConfig::make_geometry(
    const std::vector<double>& distances) const {
    LinkGeometry geom;
    geom.distances = distances;
    geom.d_backhaul = d_backhaul_m;
    geom.alpha = alpha;
    geom.sigma2 = sigma2_w();
    geom.mu = mu;
    geom.validate();
    return geom;
}

namespace {

void hash_double(std::uint64_t& h, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = fnv1a64(&bits, sizeof(bits), h);
}

void hash_u64(std::uint64_t& h, std::uint64_t v) {
    h = fnv1a64(&v, sizeof(v), h);
}

} // namespace

std::uint64_t SystemConfig::solver_hash(
    const std::vector<double>& distances) const {
    std::uint64_t h = 1469598103934665603ULL;
    hash_u64(h, n_users);
    for (double d : distances) hash_double(h, d);
    hash_double(h, d_backhaul_m);
    hash_double(h, e_max_j);
    hash_double(h, p_max_w);
    hash_double(h, harvest_q_j);
    hash_double(h, harvest_rate_hz);
    hash_double(h, slot_t_s);
    hash_double(h, harvest_tail_tol);
    hash_double(h, zipf_s);
    hash_u64(h, catalog_size);
    hash_u64(h, cache_size);
    hash_double(h, mu);
    hash_double(h, alpha);
    hash_double(h, noise_dbmw);
    hash_double(h, gamma_min_db);
    hash_double(h, bandwidth_hz);
    hash_double(h, g_params.a);
    hash_double(h, g_params.b);
    hash_double(h, discount);
    hash_double(h, theta);
    hash_u64(h, max_iterations);
    hash_u64(h, grid_cells);
    hash_u64(h, power_levels);
    hash_u64(h, static_cast<std::uint64_t>(action_mode));
    hash_u64(h, static_cast<std::uint64_t>(backhaul_accounting));
    return h;
}

namespace {

struct FieldReader {
    const json& section;
    std::string prefix;
    std::set<std::string> seen;

    void number(const char* key, double& out) {
        if (!section.contains(key)) return;
        seen.insert(key);
        const auto& v = section.at(key);
        if (!v.is_number())
            throw std::invalid_argument("config." + prefix + key +
                                        ": expected a number");
        out = v.get<double>();
    }
    void count(const char* key, std::size_t& out) {
        if (!section.contains(key)) return;
        seen.insert(key);
        const auto& v = section.at(key);
        if (!v.is_number_unsigned())
            throw std::invalid_argument("config." + prefix + key +
                                        ": expected a non-negative integer");
        out = v.get<std::size_t>();
    }
    void u64(const char* key, std::uint64_t& out) {
        if (!section.contains(key)) return;
        seen.insert(key);
        const auto& v = section.at(key);
        if (!v.is_number_unsigned())
            throw std::invalid_argument("config." + prefix + key +
                                        ": expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }
    void numbers(const char* key, std::vector<double>& out) {
        if (!section.contains(key)) return;
        seen.insert(key);
        const auto& v = section.at(key);
        if (!v.is_array())
            throw std::invalid_argument("config." + prefix + key +
                                        ": expected an array of numbers");
        out = v.get<std::vector<double>>();
    }
    void text(const char* key, std::string& out) {
        if (!section.contains(key)) return;
        seen.insert(key);
        const auto& v = section.at(key);
        if (!v.is_string())
            throw std::invalid_argument("config." + prefix + key +
                                        ": expected a string");
        out = v.get<std::string>();
    }
    void finish() const {
        for (auto it = section.begin(); it != section.end(); ++it)
            if (!seen.count(it.key()))
                throw std::invalid_argument("config." + prefix + it.key() +
                                            ": unknown key");
    }
};

const json* maybe_section(const json& root, const char* name,
                          std::set<std::string>& seen) {
    if (!root.contains(name)) return nullptr;
    seen.insert(name);
    const auto& s = root.at(name);
    if (!s.is_object())
        throw std::invalid_argument(std::string("config.") + name +
                                    ": expected an object");
    return &s;
}

} // namespace

SystemConfig parse_config_json(const std::string& text,
                               const std::string& origin) {
    SystemConfig cfg;
    std::string trimmed = text;
    if (trimmed.find_first_not_of(" \t\r\n") == std::string::npos) {
        cfg.validate();
        return cfg; // empty file: all defaults
    }

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    if (!root.is_object())
        throw std::invalid_argument(origin + ": top level must be an object");

    std::set<std::string> seen;
    if (const json* s = maybe_section(root, "network", seen)) {
        FieldReader r{*s, "network.", {}};
        r.count("n_users", cfg.n_users);
        r.number("cell_radius_m", cfg.cell_radius_m);
        r.numbers("user_distances_m", cfg.user_distances_m);
        r.number("backhaul_distance_m", cfg.d_backhaul_m);
        r.finish();
    }
    if (const json* s = maybe_section(root, "energy", seen)) {
        FieldReader r{*s, "energy.", {}};
        r.number("e_max_j", cfg.e_max_j);
        r.number("p_max_w", cfg.p_max_w);
        r.number("harvest_q_j", cfg.harvest_q_j);
        r.number("harvest_rate_hz", cfg.harvest_rate_hz);
        r.number("slot_s", cfg.slot_t_s);
        r.number("initial_energy_j", cfg.initial_energy_j);
        r.number("tail_tol", cfg.harvest_tail_tol);
        r.finish();
    }
    if (const json* s = maybe_section(root, "content", seen)) {
        FieldReader r{*s, "content.", {}};
        r.number("zipf_s", cfg.zipf_s);
        r.count("catalog_size", cfg.catalog_size);
        r.count("cache_size", cfg.cache_size);
        r.finish();
    }
    if (const json* s = maybe_section(root, "channel", seen)) {
        FieldReader r{*s, "channel.", {}};
        r.number("mu", cfg.mu);
        r.number("alpha", cfg.alpha);
        r.number("noise_dbmw", cfg.noise_dbmw);
        r.number("gamma_min_db", cfg.gamma_min_db);
        r.number("bandwidth_hz", cfg.bandwidth_hz);
        r.finish();
    }
    if (const json* s = maybe_section(root, "utility", seen)) {
        FieldReader r{*s, "utility.", {}};
        r.number("a", cfg.g_params.a);
        r.number("b", cfg.g_params.b);
        r.finish();
    }
    if (const json* s = maybe_section(root, "solver", seen)) {
        FieldReader r{*s, "solver.", {}};
        r.number("discount", cfg.discount);
        r.number("theta", cfg.theta);
        r.count("max_iterations", cfg.max_iterations);
        r.count("grid_cells", cfg.grid_cells);
        r.count("power_levels", cfg.power_levels);
        std::string mode;
        r.text("action_mode", mode);
        if (!mode.empty()) {
            if (mode == "equal_split")
                cfg.action_mode = ActionMode::EqualSplit;
            else if (mode == "exhaustive")
                cfg.action_mode = ActionMode::Exhaustive;
            else
                throw std::invalid_argument(
                    "config.solver.action_mode: expected equal_split or "
                    "exhaustive");
        }
        std::string acc;
        r.text("backhaul_accounting", acc);
        if (!acc.empty()) {
            if (acc == "averaged")
                cfg.backhaul_accounting = BackhaulAccounting::Averaged;
            else if (acc == "realized")
                cfg.backhaul_accounting = BackhaulAccounting::Realized;
            else
                throw std::invalid_argument(
                    "config.solver.backhaul_accounting: expected averaged or "
                    "realized");
        }
        r.finish();
    }
    if (const json* s = maybe_section(root, "simulation", seen)) {
        FieldReader r{*s, "simulation.", {}};
        r.count("n_slots", cfg.n_slots);
        r.count("seeds", cfg.n_seeds);
        r.u64("root_seed", cfg.root_seed);
        r.number("warmup_fraction", cfg.warmup_fraction);
        r.finish();
    }
    for (auto it = root.begin(); it != root.end(); ++it)
        if (!seen.count(it.key()))
            throw std::invalid_argument("config." + it.key() + ": unknown key");

    cfg.validate();
    return cfg;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str(), path);
}

std::string SystemConfig::to_json_string(int indent) const {
    json j;
    j["network"] = {{"n_users", n_users},
                    {"cell_radius_m", cell_radius_m},
                    {"backhaul_distance_m", d_backhaul_m}};
    if (!user_distances_m.empty())
        j["network"]["user_distances_m"] = user_distances_m;
    j["energy"] = {{"e_max_j", e_max_j},
                   {"p_max_w", p_max_w},
                   {"harvest_q_j", harvest_q_j},
                   {"harvest_rate_hz", harvest_rate_hz},
                   {"slot_s", slot_t_s},
                   {"initial_energy_j", initial_energy_j},
                   {"tail_tol", harvest_tail_tol}};
    j["content"] = {{"zipf_s", zipf_s},
                    {"catalog_size", catalog_size},
                    {"cache_size", cache_size}};
    j["channel"] = {{"mu", mu},
                    {"alpha", alpha},
                    {"noise_dbmw", noise_dbmw},
                    {"gamma_min_db", gamma_min_db},
                    {"bandwidth_hz", bandwidth_hz}};
    j["utility"] = {{"a", g_params.a}, {"b", g_params.b}};
    j["solver"] = {
        {"discount", discount},
        {"theta", theta},
        {"max_iterations", max_iterations},
        {"grid_cells", grid_cells},
        {"power_levels", power_levels},
        {"action_mode",
         action_mode == ActionMode::EqualSplit ? "equal_split" : "exhaustive"},
        {"backhaul_accounting",
         backhaul_accounting == BackhaulAccounting::Averaged ? "averaged"
                                                             : "realized"}};
    j["simulation"] = {{"n_slots", n_slots},
                       {"seeds", n_seeds},
                       {"root_seed", root_seed},
                       {"warmup_fraction", warmup_fraction}};
    return j.dump(indent);
}

} // namespace sbsim
