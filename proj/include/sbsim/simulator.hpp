#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sbsim/config.hpp"
#include "sbsim/rng.hpp"
#include "sbsim/solver.hpp"

namespace sbsim {

/// One simulated slot, everything needed to audit the energy ledger.
struct SlotOutcome {
    std::size_t slot = 0;
    double start_energy_j = 0.0;
    double downlink_total_w = 0.0;      // the action taken (equal split)
    std::vector<double> gains;          // realized per-user |h|^2
    double backhaul_gain = 0.0;         // realized backhaul |h|^2
    bool miss = false;
    double backhaul_power_w = 0.0;      // spent serving the miss
    double harvested_j = 0.0;
    double end_energy_j = 0.0;
    double throughput_bps = 0.0;
    bool idle = false;
};

/// Aggregates over one run (post-warm-up window).
struct RunMetrics {
    double mean_remaining_energy_j = 0.0;
    double mean_sum_throughput_bps = 0.0;
    double idle_fraction = 0.0;
    double backhaul_use_fraction = 0.0;
    double terminal_energy_j = 0.0;
    std::size_t slot_count = 0;
    std::uint64_t seed = 0;
};

/// n_users + 1 independent Exponential(mu) squared channel norms;
/// the last entry is the backhaul link.
std::vector<double> sample_channels(RngStream& rng, std::size_t n_users,
                                    double mu);

/// Realized-channel backhaul power gamma_min d_b^alpha sigma2 / h2_b, or
/// nothing when even the full power budget cannot reach gamma_min (the slot
/// must idle on a miss).
std::optional<double> backhaul_power(double h2_b, double e,
                                     const SystemConfig& config);

/// Closed-loop slot simulation under the dp-lookahead or baseline policy.
/// Deterministic in (config, seed). dp requires a converged value function.
RunMetrics simulate(PolicyKind kind, const DpProblem& problem,
                    const ValueFunction* value, std::uint64_t seed,
                    std::size_t n_slots,
                    std::vector<SlotOutcome>* trace = nullptr);

/// Channel-oblivious max-power split: total min(P_max, e/T) less the
/// backhaul spend on a miss, divided equally; idles only when the backhaul
/// is needed but infeasible or the battery is empty.
/// Returns (downlink_total_w, backhaul_power_w).
std::pair<double, double> baseline_action(double e,
                                          std::optional<double> miss_charge,
                                          bool miss,
                                          const SystemConfig& config);

} // namespace sbsim
