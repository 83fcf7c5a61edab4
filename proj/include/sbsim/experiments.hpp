#pragma once

#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "sbsim/config.hpp"
#include "sbsim/simulator.hpp"
#include "sbsim/solver.hpp"

namespace sbsim {

inline constexpr const char* kToolVersion = "sbsim 0.1.0";

/// One value-iteration solve shared across seeds and policies at a sweep
/// point. Reused whenever the solver-relevant config (including resolved
/// distances) hashes identically.
class SolveCache {
  public:
    struct Solved {
        DpProblem problem;
        SolveResult result;
        Solved(DpProblem p, SolveResult r)
            : problem(std::move(p)), result(std::move(r)) {}
    };

    std::shared_ptr<const Solved> get_or_solve(
        const SystemConfig& config, const std::vector<double>& distances);

    std::size_t size() const;

  private:
    mutable std::mutex mu_;
    std::unordered_map<std::uint64_t, std::shared_ptr<const Solved>> cache_;
};

/// Mean and half-width of the 95% normal confidence interval over samples.
struct MeanCi {
    double mean = 0.0;
    double ci95 = 0.0;
};
MeanCi mean_ci(const std::vector<double>& samples);

/// Format a double with 9 significant digits for CSV output.
std::string fmt9(double v);

/// Writers shared by the CLI and the experiment runners. Output CSV bytes
/// depend only on the resolved config, never on wall-clock state.
void write_trace_csv(const std::string& path,
                     const std::vector<SlotOutcome>& trace);
void write_manifest(const std::string& dir, const std::string& experiment,
                    const SystemConfig& config,
                    const std::vector<std::string>& outputs);

/// solve: value-iterate and persist the policy snapshot.
void run_solve(const SystemConfig& config, const std::string& snapshot_path,
               std::ostream& log);

/// simulate: one run (trace + metrics) under dp or baseline.
void run_simulate(const SystemConfig& config, PolicyKind policy,
                  const std::string& snapshot_path, const std::string& out_dir,
                  std::ostream& log);

/// Energy-dynamics trace at M = 80, lambda = 0.1/s.
void run_fig2(SystemConfig config, const std::string& out_dir,
              std::ostream& log);

/// Mean remaining energy vs n_users for several (M, lambda) curves.
void run_fig3(SystemConfig config, const std::string& out_dir,
              std::ostream& log);

/// dp-lookahead vs baseline sum throughput vs n_users at lambda = 2/s.
void run_fig4(SystemConfig config, const std::string& out_dir,
              std::ostream& log);

/// Cache-size / harvest-amount trade-off mesh at n_users = 15.
void run_fig5(SystemConfig config, const std::string& out_dir,
              std::ostream& log);

/// Quick oracle/property sweep for the CLI; returns the failure count.
int run_validate_suite(std::ostream& out);

} // namespace sbsim
