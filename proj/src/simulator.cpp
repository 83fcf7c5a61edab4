#include "sbsim/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "sbsim/popularity.hpp"

namespace sbsim {

std::vector<double> sample_channels(RngStream& rng, std::size_t n_users,
                                    double mu) {
    if (!(mu > 0.0))
        throw std::invalid_argument("sample_channels: mu must be > 0");
    std::vector<double> gains(n_users + 1);
    for (auto& g : gains) g = rng.exponential(mu);
    return gains;
}

std::optional<double> backhaul_power(double h2_b, double e,
                                     const SystemConfig& config) {
    if (h2_b <= 0.0) return std::nullopt;
    const double need = config.gamma_min_linear() *
                        std::pow(config.d_backhaul_m, config.alpha) *
                        config.sigma2_w() / h2_b;
    const double cap = std::min(config.p_max_w, e / config.slot_t_s);
    if (need > cap) return std::nullopt;
    return need;
}

std::pair<double, double> baseline_action(double e,
                                          std::optional<double> miss_charge,
                                          bool miss,
                                          const SystemConfig& config) {
    const double cap = std::min(config.p_max_w, e / config.slot_t_s);
    if (cap <= 0.0) return {0.0, 0.0};
    if (!miss) return {cap, 0.0};
    if (!miss_charge.has_value()) return {0.0, 0.0}; // forced idle
    double dl = cap - *miss_charge;
    if (dl <= 0.0) return {0.0, 0.0};
    return {dl, *miss_charge};
}

RunMetrics simulate(PolicyKind kind, const DpProblem& problem,
                    const ValueFunction* value, std::uint64_t seed,
                    std::size_t n_slots, std::vector<SlotOutcome>* trace) {
    const SystemConfig& cfg = problem.config();
    if (n_slots < 1)
        throw std::invalid_argument("simulate: need at least one slot");
    if (kind == PolicyKind::DpLookahead &&
        (value == nullptr || value->values.size() != cfg.grid_cells))
        throw std::invalid_argument(
            "simulate: dp policy needs a converged value function on the "
            "configured grid");

    ZipfCatalog catalog(cfg.zipf_s, cfg.catalog_size, cfg.cache_size);
    RngStream ch = RngStream::derive(cfg.root_seed, "channels", seed);
    RngStream rq = RngStream::derive(cfg.root_seed, "requests", seed);
    RngStream ar = RngStream::derive(cfg.root_seed, "arrivals", seed);

    const HarvestDistribution& harvest = problem.harvest();
    const LinkGeometry& geom = problem.geometry();
    const std::vector<double> bandwidths(cfg.n_users, cfg.bandwidth_hz);
    const double p_b_avg = cfg.backhaul_power_avg_w();

    double e = cfg.initial_energy();
    const std::size_t warmup =
        static_cast<std::size_t>(static_cast<double>(n_slots) *
                                 cfg.warmup_fraction);

    double sum_e = 0.0, sum_tput = 0.0;
    std::size_t idle_n = 0, backhaul_n = 0, counted = 0;
    if (trace) trace->reserve(n_slots);

    std::vector<double> powers(cfg.n_users, 0.0);
    for (std::size_t t = 0; t < n_slots; ++t) {
        SlotOutcome slot;
        slot.slot = t;
        slot.start_energy_j = e;

        std::vector<double> gains = sample_channels(ch, cfg.n_users, cfg.mu);
        slot.backhaul_gain = gains.back();
        std::span<const double> user_gains(gains.data(), cfg.n_users);

        RequestDraw req = sample_requests(rq, catalog, cfg.n_users);
        slot.miss = req.miss;

        double dl_total = 0.0;
        double spent = 0.0;
        if (kind == PolicyKind::DpLookahead) {
            LookaheadChoice choice = problem.one_step_lookahead(
                e, user_gains, slot.backhaul_gain, slot.miss, *value);
            const Action& act = problem.actions().actions[choice.action_index];
            dl_total = act.downlink_total();
            spent = choice.backhaul_power_w;
            powers = act.per_user_powers;
        } else {
            std::optional<double> charge;
            if (slot.miss) {
                if (cfg.backhaul_accounting == BackhaulAccounting::Realized)
                    charge = backhaul_power(slot.backhaul_gain, e, cfg);
                else if (p_b_avg <= std::min(cfg.p_max_w, e / cfg.slot_t_s))
                    charge = p_b_avg;
            }
            auto [dl, bh] = baseline_action(e, charge, slot.miss, cfg);
            dl_total = dl;
            spent = bh;
            std::fill(powers.begin(), powers.end(),
                      dl_total / static_cast<double>(cfg.n_users));
        }

        slot.downlink_total_w = dl_total;
        slot.backhaul_power_w = spent;
        slot.idle = dl_total == 0.0;
        if (slot.idle) {
            slot.throughput_bps = 0.0;
            std::fill(powers.begin(), powers.end(), 0.0);
        } else {
            if (kind == PolicyKind::BaselineMaxPower)
                std::fill(powers.begin(), powers.end(),
                          dl_total / static_cast<double>(cfg.n_users));
            slot.throughput_bps =
                sum_throughput(bandwidths, powers, user_gains, geom);
        }

        std::size_t arrivals = sample_arrivals(ar, harvest);
        slot.harvested_j = static_cast<double>(arrivals) * cfg.harvest_q_j;
        e = step_energy(e, dl_total + spent, cfg.slot_t_s, slot.harvested_j,
                        cfg.e_max_j);
        slot.end_energy_j = e;

        if (t >= warmup) {
            sum_e += slot.end_energy_j;
            sum_tput += slot.throughput_bps;
            if (slot.idle) ++idle_n;
            if (slot.backhaul_power_w > 0.0) ++backhaul_n;
            ++counted;
        }
        if (trace) {
            slot.gains = std::move(gains);
            slot.gains.pop_back();
            trace->push_back(std::move(slot));
        }
    }

    RunMetrics m;
    m.slot_count = n_slots;
    m.seed = seed;
    m.terminal_energy_j = e;
    if (counted > 0) {
        m.mean_remaining_energy_j = sum_e / static_cast<double>(counted);
        m.mean_sum_throughput_bps = sum_tput / static_cast<double>(counted);
        m.idle_fraction = static_cast<double>(idle_n) /
                          static_cast<double>(counted);
        m.backhaul_use_fraction = static_cast<double>(backhaul_n) /
                                  static_cast<double>(counted);
    }
    return m;
}

} // namespace sbsim
