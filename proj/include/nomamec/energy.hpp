#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>

#include "nomamec/noma.hpp"
#include "nomamec/sysmodel.hpp"

namespace nomamec {
namespace energy {

// The per-user expected-energy expression multiplies the MEC term by (1-y_i)
// as printed, which charges MEC energy even to users computing locally and
// double-scales by the allocation. `Consistent` (default) replaces that
// coefficient with (1-x_i) so MEC energy accrues exactly for offloaded tasks;
// `AsPrinted` keeps the printed form for fidelity experiments.
enum class FormulaMode { Consistent, AsPrinted };

struct EnergyOptions {
  FormulaMode formula_mode = FormulaMode::Consistent;
  // Strict C4 requires sum(y) = 1 over all users; the relaxed default
  // requires sum(y) = 1 over offloading users (0 when everyone is local).
  bool strict_c4 = false;
  // Also flag T_loc > latency_limit as infeasible for local computers.
  bool strict_local_latency = true;
  // Infeasible decisions cost this multiple of the all-local expected energy
  // instead of throwing, so learning stays total.
  double infeasible_penalty_scale = 10.0;
};

// Request probabilities Pr_i^j, one row per user over tasks. Every row sums
// to 1: each user requests exactly one task per slot in expectation.
struct PopularityMatrix {
  std::vector<std::vector<double>> probs;
  int slot = 0;

  int n_users() const { return static_cast<int>(probs.size()); }
  int n_tasks() const {
    return probs.empty() ? 0 : static_cast<int>(probs[0].size());
  }
  void validate() const;

  static PopularityMatrix uniform(int n_users, int n_tasks, int slot = 0);
  // All rows equal to the given task distribution.
  static PopularityMatrix shared(const std::vector<double>& task_probs,
                                 int n_users, int slot = 0);
};

struct UserEnergy {
  double local_j = 0.0;
  double offload_j = 0.0;
  double mec_j = 0.0;
  double total() const { return local_j + offload_j + mec_j; }
};

struct EnergyBreakdown {
  std::vector<double> per_user;
  std::vector<UserEnergy> components;
  double total = 0.0;
  bool feasible = true;
  std::vector<Constraint> violated;
};

// --- Formula primitives -----------------------------------------------------

double local_time(const TaskSpec& task, double local_cpu_hz);
double local_energy(const TaskSpec& task, double local_cpu_hz,
                    double p_local_w);
// Throws InfeasibleDecision when y_frac <= 0 (an offloaded task with no
// allocated resources).
double mec_time(const TaskSpec& task, double y_frac, double c_mec_hz);
double mec_energy(const TaskSpec& task, double y_frac,
                  const SystemConfig& cfg);
// T_offload + T_mec <= latency_limit, boundary inclusive.
bool check_latency(double t_offload_s, double t_mec_s,
                   const SystemConfig& cfg);

// --- Decision evaluation ----------------------------------------------------

// Violated constraints of C1..C6 (plus the local-latency check when enabled).
// Empty result means feasible.
std::vector<Constraint> check_constraints(const DecisionVector& decision,
                                          const ChannelState& chan,
                                          const std::vector<TaskSpec>& tasks,
                                          const SystemConfig& cfg,
                                          const EnergyOptions& opts = {});

// Expected energy of one user for one slot. Throws InfeasibleDecision when
// the decision violates any constraint.
double expected_user_energy(int user, const DecisionVector& decision,
                            const PopularityMatrix& pop,
                            const ChannelState& chan,
                            const std::vector<TaskSpec>& tasks,
                            const SystemConfig& cfg,
                            const EnergyOptions& opts = {});

// Never throws on infeasibility: an infeasible decision yields a zeroed
// breakdown with feasible=false and the violated constraint list, so learning
// code can substitute the penalty.
EnergyBreakdown total_energy(const DecisionVector& decision,
                             const PopularityMatrix& pop,
                             const ChannelState& chan,
                             const std::vector<TaskSpec>& tasks,
                             const SystemConfig& cfg,
                             const EnergyOptions& opts = {});

// Expected energy when every user computes locally and nothing is cached.
// Reference magnitude for the infeasibility penalty.
double all_local_energy(const PopularityMatrix& pop,
                        const std::vector<TaskSpec>& tasks,
                        const SystemConfig& cfg);
double user_all_local_energy(int user, const PopularityMatrix& pop,
                             const std::vector<TaskSpec>& tasks,
                             const SystemConfig& cfg);

// breakdown.total when feasible, penalty_scale * all_local_energy otherwise.
double penalized_total(const EnergyBreakdown& breakdown,
                       const PopularityMatrix& pop,
                       const std::vector<TaskSpec>& tasks,
                       const SystemConfig& cfg, const EnergyOptions& opts = {});

// --- Exhaustive oracle ------------------------------------------------------

// Number of decision candidates brute_force_optimum would enumerate.
std::uint64_t brute_force_combinations(const SystemConfig& cfg);

// Exhaustively enumerates feasible decisions (y on the 1/n_freq_slices grid)
// and returns the minimizer of total_energy; ties broken by lexicographic
// (x, y, z) order. Throws SizeError when the candidate count exceeds
// max_combinations.
std::pair<DecisionVector, double> brute_force_optimum(
    const PopularityMatrix& pop, const ChannelState& chan,
    const std::vector<TaskSpec>& tasks, const SystemConfig& cfg,
    const EnergyOptions& opts = {}, std::uint64_t max_combinations = 1000000);

// CSV rows: slot,user,local_J,offload_J,mec_J,total_J,feasible.
void write_breakdown_csv_header(std::ostream& out);
void write_breakdown_csv(std::ostream& out, int slot,
                         const EnergyBreakdown& breakdown);

}  // namespace energy
}  // namespace nomamec
