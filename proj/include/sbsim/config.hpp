#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbsim/utility.hpp"

namespace sbsim {

enum class ActionMode { EqualSplit, Exhaustive };
enum class BackhaulAccounting { Averaged, Realized };
enum class PolicyKind { DpLookahead, BaselineMaxPower };

/// Every physical and algorithmic parameter of the model, SI units inside.
/// dB/dBmW fields are converted at ingestion and kept only for echoing the
/// configuration back out.
struct SystemConfig {
    // network
    std::size_t n_users = 10;
    double cell_radius_m = 800.0;
    std::vector<double> user_distances_m; // empty: drawn uniformly in disc
    double d_backhaul_m = 3000.0;

    // energy
    double e_max_j = 2.0;
    double p_max_w = 0.8;
    double harvest_q_j = 0.08;
    double harvest_rate_hz = 2.0; // lambda, arrivals per second
    double slot_t_s = 1e-3;
    double initial_energy_j = -1.0; // negative: start full
    double harvest_tail_tol = 1e-12;

    // content popularity
    double zipf_s = 2.0;
    std::size_t catalog_size = 10000;
    std::size_t cache_size = 2;

    // channel
    double mu = 1.0;
    double alpha = 3.0;
    double noise_dbmw = -90.0;
    double gamma_min_db = 8.0;
    double bandwidth_hz = 1e5; // per user

    // utility exponent
    EfficiencyExponentParams g_params{0.18, 0.03};

    // solver
    double discount = 0.7;
    double theta = 1e-6;
    std::size_t max_iterations = 10000;
    std::size_t grid_cells = 2001;
    std::size_t power_levels = 11;
    ActionMode action_mode = ActionMode::EqualSplit;
    BackhaulAccounting backhaul_accounting = BackhaulAccounting::Averaged;

    // simulation
    std::size_t n_slots = 100000;
    std::size_t n_seeds = 10;
    std::uint64_t root_seed = 1;
    double warmup_fraction = 0.1;

    // --- derived quantities ---
    double sigma2_w() const;           // noise power in watts
    double gamma_min_linear() const;   // linear SNR threshold
    /// Averaged-rule backhaul power gamma_min * mu * d_b^alpha * sigma2.
    double backhaul_power_avg_w() const;
    double initial_energy() const;     // resolved starting energy

    /// Range checks with field-level messages; throws std::invalid_argument.
    void validate() const;

    /// Distances from config, or a fresh uniform-in-disc draw from the
    /// placement stream of (root_seed, lane) when none are configured.
    std::vector<double> resolve_user_distances(std::uint64_t lane = 0) const;

    LinkGeometry make_geometry(const std::vector<double>& distances) const;

    /// Content hash over the solver-relevant fields plus resolved distances;
    /// keys the experiment solve cache.
    std::uint64_t solver_hash(const std::vector<double>& distances) const;

    std::string to_json_string(int indent = 2) const;
};

/// Parse a JSON config file. Missing file content or {} yields defaults;
/// unknown keys and out-of-range values are reported with their paths.
SystemConfig load_config(const std::string& path);
SystemConfig parse_config_json(const std::string& text,
                               const std::string& origin = "<string>");

} // namespace sbsim
