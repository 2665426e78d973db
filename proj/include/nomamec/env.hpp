#pragma once

#include "nomamec/energy.hpp"
#include "nomamec/sysmodel.hpp"

namespace nomamec {

// Per-slot request probabilities for the whole horizon, tagged with how they
// were produced (walk, walk-per-user, lstm, uniform, static).
struct PopularitySeries {
  std::vector<energy::PopularityMatrix> slots;
  std::string source = "static";

  int length() const { return static_cast<int>(slots.size()); }
};

// All rows of every slot equal to the given per-slot task distributions.
PopularitySeries shared_popularity(const std::vector<std::vector<double>>& per_slot,
                                   int n_users);

// One independent random-walk popularity series per user.
PopularitySeries per_user_walk_popularity(const SystemConfig& cfg, int length,
                                          double step_scale, Rng& rng);

enum class ChannelMode {
  Static,   // one fading realization reused for every slot
  PerSlot,  // fading redrawn i.i.d. each slot
};

// Immutable slot-indexed scenario: topology, tasks, channel realizations and
// popularity, with decision evaluation on top. Everything is precomputed at
// construction, so concurrent reads are safe.
class EnergyEnvironment {
 public:
  EnergyEnvironment(SystemConfig cfg, std::vector<TaskSpec> tasks,
                    Topology topo, PopularitySeries popularity,
                    ChannelMode channel_mode, std::uint64_t channel_seed,
                    energy::EnergyOptions opts = {});

  // Convenience constructor generating topology/tasks/popularity from the
  // config seed; popularity is a shared random walk unless step_scale == 0,
  // in which case it stays uniform.
  static EnergyEnvironment make(const SystemConfig& cfg,
                                ChannelMode channel_mode,
                                double popularity_step_scale,
                                energy::EnergyOptions opts = {});

  const SystemConfig& cfg() const { return cfg_; }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  const Topology& topology() const { return topo_; }
  const energy::EnergyOptions& options() const { return opts_; }
  int horizon() const { return cfg_.horizon_slots; }

  const energy::PopularityMatrix& popularity(int slot) const;
  const ChannelState& channel(int slot) const;

  energy::EnergyBreakdown evaluate(int slot, const DecisionVector& d) const;
  // Scalar for learning: total when feasible, scaled all-local penalty else.
  double penalized(int slot, const DecisionVector& d) const;
  double penalized_user(int slot, const energy::EnergyBreakdown& b,
                        int user) const;

  // Tasks ranked by slot popularity (summed over users), descending;
  // ties by ascending task id.
  std::vector<int> popularity_ranking(int slot) const;
  // Sets z to the top-min(c_cache_slots, n_tasks) tasks of the slot.
  DecisionVector with_greedy_cache(int slot, DecisionVector d) const;

 private:
  SystemConfig cfg_;
  std::vector<TaskSpec> tasks_;
  Topology topo_;
  PopularitySeries popularity_;
  std::vector<ChannelState> channels_;
  energy::EnergyOptions opts_;
};

// Scenario pieces derived from cfg.rng_seed with fixed stream tags, shared by
// EnergyEnvironment::make and callers that need to substitute one input
// (e.g. a predicted popularity series) while keeping the rest paired.
Topology default_topology(const SystemConfig& cfg);
std::vector<TaskSpec> default_tasks(const SystemConfig& cfg);
std::uint64_t default_channel_seed(const SystemConfig& cfg);
Rng default_popularity_rng(const SystemConfig& cfg);

// Slice counts of an equal split of n_slices among the offloading members
// (decode order, strongest first); remainder slices go to the strongest
// channels. Returns per-member counts.
std::vector<int> equal_split_slices(int n_members, int n_slices);

// Full decision for given offload flags: equal-split y over offloaders on
// the slice grid, optional greedy cache.
DecisionVector equal_split_decision(const std::vector<std::uint8_t>& x,
                                    const ChannelState& chan,
                                    const SystemConfig& cfg);

}  // namespace nomamec
