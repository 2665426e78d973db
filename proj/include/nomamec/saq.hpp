#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nomamec/env.hpp"
#include "nomamec/rng.hpp"
#include "nomamec/sysmodel.hpp"

namespace nomamec {
namespace saq {

using StateId = std::int64_t;
using ActionId = int;

// The tabular configuration behind a StateId: offload bits plus the owner of
// each computing-resource slice. Cache bits are folded in only when the
// codec runs with table2_strict = false.
struct DecisionConfig {
  std::vector<std::uint8_t> local_bits;  // x_i
  std::vector<int> slice_owner;          // length n_freq_slices, values [0, n_users)
  std::vector<std::uint8_t> cached;      // length n_tasks, empty when not folded

  bool operator==(const DecisionConfig&) const = default;
};

// Mixed-radix bijection between decision configurations and [0, n_states):
// X bits, then slice-owner digits (base n_users), then the rank of the cache
// combination when folded. n_states = 2^n_users * n_users^n_freq_slices in
// the default table2_strict mode.
//
// Actions index 2 * n_users * n_freq_slices elementary moves. The first
// n_users * n_freq_slices reassign slice (a / n_users) to user (a % n_users);
// the second block holds the n_users offload-bit flips, then the n_tasks
// cache toggles when folded; remaining ids are rejected as infeasible.
class StateCodec {
 public:
  StateCodec(const SystemConfig& cfg, bool table2_strict = true);

  std::int64_t n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  bool table2_strict() const { return table2_strict_; }

  StateId encode(const DecisionConfig& config) const;
  DecisionConfig decode(StateId id) const;

  // Canonical config of a decision vector (slices assigned in ascending user
  // order). Throws InfeasibleDecision when y is not representable on the
  // slice grid.
  StateId encode_decision(const DecisionVector& d) const;
  DecisionConfig config_of_decision(const DecisionVector& d) const;

  // y_i = owned slices / n_freq_slices; local users keep y = 0 unless
  // strict_c4 (their slices are idle either way). Cache bits come from the
  // folded Z part or stay zero for the caller to overlay.
  DecisionVector to_decision(const DecisionConfig& config,
                             bool strict_c4 = false) const;

  bool action_feasible(const DecisionConfig& config, ActionId a) const;
  DecisionConfig apply_action(const DecisionConfig& config, ActionId a) const;
  std::vector<ActionId> feasible_actions(const DecisionConfig& config) const;

  // Start-of-episode configuration: everyone local, all slices on user 0,
  // nothing cached.
  DecisionConfig initial_config() const;

 private:
  int n_users_;
  int n_slices_;
  int n_tasks_;
  int cache_slots_;
  bool table2_strict_;
  std::int64_t x_radix_;
  std::int64_t y_radix_;
  std::int64_t z_radix_;
  std::int64_t n_states_;
  int n_actions_;
  std::vector<std::vector<std::uint8_t>> z_combos_;  // rank -> cache bits
};

// Dense state x action value table.
struct QTable {
  std::int64_t n_states = 0;
  int n_actions = 0;
  std::vector<double> values;        // row-major [state][action]
  std::vector<std::uint32_t> visits;
  double gamma = 0.1;  // learning rate
  double beta = 0.9;   // discount factor
  double eps = 0.1;    // exploration rate (for bookkeeping)

  QTable() = default;
  QTable(std::int64_t states, int actions, double gamma_lr,
         double beta_discount, std::uint64_t cell_guard = 50000000);

  double& at(StateId s, ActionId a) {
    return values[static_cast<std::size_t>(s) * n_actions + a];
  }
  double at(StateId s, ActionId a) const {
    return values[static_cast<std::size_t>(s) * n_actions + a];
  }
  double max_value(StateId s) const;
};

// r = prev - cur; positive when energy drops.
double reward(double prev_energy, double cur_energy);

// Q(s,a) <- (1-gamma) Q(s,a) + gamma [r + beta max_a' Q(s',a')].
void q_update(QTable& q, StateId s, ActionId a, double r, StateId s_next);

// Argmax over feasible actions with probability 1-eps (ties -> lowest id),
// uniform over feasible actions otherwise.
ActionId select_action_eps_greedy(const QTable& q, const StateCodec& codec,
                                  const DecisionConfig& config, double eps,
                                  Rng& rng);

// Greedy action per state over the full action range (ties -> lowest id).
std::vector<ActionId> extract_policy(const QTable& q);

struct SaqOptions {
  bool table2_strict = true;
  double gamma_lr = 0.1;
  double beta_discount = 0.9;
  double eps_start = 0.5;
  double eps_end = 0.01;  // linear decay over episodes
  int episodes = 500;
  std::uint64_t table_cell_guard = 50000000;
};

struct SaqResult {
  QTable table;
  std::vector<double> episode_energy;  // mean per-slot energy per episode
  DecisionConfig final_config;
};

// Per slot: observe config, pick an eps-greedy action, apply it, overlay the
// greedy cache (table2_strict), evaluate the energy, reward the drop and
// update Q. Episodes restart from the initial config.
SaqResult train_saq(const EnergyEnvironment& env, const SaqOptions& options,
                    std::uint64_t seed);

struct GreedyRollout {
  std::vector<double> energy;          // per slot
  std::vector<DecisionConfig> configs;
  double mean_energy = 0.0;
  double steady_energy = 0.0;  // mean over the final half of the rollout
};

GreedyRollout greedy_rollout(const EnergyEnvironment& env,
                             const StateCodec& codec, const QTable& q,
                             const DecisionConfig& start, int slots);

// Binary persistence: magic "QTBL1", dims header, row-major doubles.
void save_qtable(std::ostream& out, const QTable& q);
QTable load_qtable(std::istream& in);
void save_qtable_file(const std::string& path, const QTable& q);
QTable load_qtable_file(const std::string& path);

// CSV: episode,mean_energy_J.
void write_energy_trace_csv(std::ostream& out,
                            const std::vector<double>& episode_energy);

}  // namespace saq
}  // namespace nomamec
