#include "sbsim/actions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sbsim/popularity.hpp"

namespace sbsim {

double Action::downlink_total() const {
    double s = 0.0;
    for (double p : per_user_powers) s += p;
    return s;
}

double Action::worst_case_power() const {
    double dl = downlink_total();
    return dl > 0.0 ? dl + backhaul_budget : 0.0;
}

namespace {

Action make_action(std::vector<double> powers, double backhaul_budget,
                   double eps) {
    Action a;
    a.per_user_powers = std::move(powers);
    double dl = a.downlink_total();
    a.backhaul_budget = dl > 0.0 ? backhaul_budget : 0.0;
    a.total_power = dl + eps * a.backhaul_budget;
    return a;
}

void sort_and_check(ActionSet& set, double p_max) {
    std::sort(set.actions.begin(), set.actions.end(),
              [](const Action& x, const Action& y) {
                  if (x.total_power != y.total_power)
                      return x.total_power < y.total_power;
                  return x.per_user_powers < y.per_user_powers;
              });
    set.actions.erase(
        std::unique(set.actions.begin(), set.actions.end(),
                    [](const Action& x, const Action& y) {
                        return x.per_user_powers == y.per_user_powers;
                    }),
        set.actions.end());
    if (set.actions.empty() || !set.actions.front().is_idle())
        throw std::logic_error("ActionSet: missing the all-zero action");
    for (const Action& a : set.actions)
        if (a.worst_case_power() > p_max * (1.0 + 1e-12))
            throw std::logic_error("ActionSet: action exceeds P_max");
}

} // namespace

ActionSet build_action_set(const SystemConfig& config) {
    const std::size_t levels = config.power_levels;
    if (levels < 2)
        throw std::invalid_argument("build_action_set: need >= 2 levels");

    ZipfCatalog cat(config.zipf_s, config.catalog_size, config.cache_size);
    const double eps =
        backhaul_access_probability(miss_probability(cat), config.n_users);
    const double p_b = config.backhaul_power_avg_w();
    const double dl_budget = config.p_max_w - p_b;
    if (!(dl_budget > 0.0))
        throw std::invalid_argument(
            "build_action_set: backhaul budget leaves no downlink power");

    ActionSet set;
    set.mode = config.action_mode;
    set.levels = levels;
    set.eps_backhaul = eps;

    const std::size_t n = config.n_users;
    set.actions.push_back(make_action(std::vector<double>(n, 0.0), p_b, eps));

    if (config.action_mode == ActionMode::EqualSplit) {
        for (std::size_t l = 1; l < levels; ++l) {
            double dl_total = static_cast<double>(l) * dl_budget /
                              static_cast<double>(levels - 1);
            std::vector<double> powers(n, dl_total / static_cast<double>(n));
            set.actions.push_back(make_action(std::move(powers), p_b, eps));
        }
    } else {
        if (n > 3)
            throw std::invalid_argument(
                "build_action_set: exhaustive mode requires n_users <= 3");
        std::vector<std::size_t> idx(n, 0);
        while (true) {
            std::vector<double> powers(n);
            double dl = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                powers[i] = static_cast<double>(idx[i]) * dl_budget /
                            static_cast<double>(levels - 1);
                dl += powers[i];
            }
            if (dl > 0.0 && dl <= dl_budget * (1.0 + 1e-12))
                set.actions.push_back(make_action(std::move(powers), p_b, eps));
            std::size_t i = 0;
            while (i < n && ++idx[i] == levels) idx[i++] = 0;
            if (i == n) break;
        }
    }

    sort_and_check(set, config.p_max_w);
    return set;
}

std::vector<std::size_t> feasible_actions(std::size_t grid_index,
                                          const ActionSet& set,
                                          const EnergyGrid& grid,
                                          double slot_t) {
    const double e = grid.energy_at(grid_index);
    std::vector<std::size_t> out;
    out.reserve(set.size());
    for (std::size_t a = 0; a < set.size(); ++a) {
        double drain = set.actions[a].worst_case_power() * slot_t;
        if (drain <= e * (1.0 + 1e-12) + 1e-18) out.push_back(a);
    }
    return out;
}

TransitionRow action_transition_row(double e, const Action& action,
                                    double eps_backhaul,
                                    const EnergyGrid& grid,
                                    const HarvestDistribution& harvest) {
    if (action.is_idle())
        return transition_row_from_energy(e, 0.0, grid, harvest);

    const double dl = action.downlink_total();
    TransitionRow hit = transition_row_from_energy(e, dl, grid, harvest);
    TransitionRow miss = transition_row_from_energy(
        e, dl + action.backhaul_budget, grid, harvest);

    TransitionRow mix;
    mix.entries.reserve(hit.entries.size() + miss.entries.size());
    for (auto& [idx, w] : hit.entries)
        mix.entries.emplace_back(idx, (1.0 - eps_backhaul) * w);
    for (auto& [idx, w] : miss.entries)
        mix.entries.emplace_back(idx, eps_backhaul * w);
    std::sort(mix.entries.begin(), mix.entries.end());
    std::vector<std::pair<std::size_t, double>> merged;
    merged.reserve(mix.entries.size());
    for (const auto& ent : mix.entries) {
        if (ent.second == 0.0) continue;
        if (!merged.empty() && merged.back().first == ent.first)
            merged.back().second += ent.second;
        else
            merged.push_back(ent);
    }
    mix.entries = std::move(merged);
    return mix;
}

} // namespace sbsim
