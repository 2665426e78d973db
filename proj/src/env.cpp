#include "nomamec/env.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "nomamec/lstm.hpp"

namespace nomamec {

PopularitySeries shared_popularity(
    const std::vector<std::vector<double>>& per_slot, int n_users) {
  PopularitySeries series;
  series.slots.reserve(per_slot.size());
  for (std::size_t t = 0; t < per_slot.size(); ++t)
    series.slots.push_back(energy::PopularityMatrix::shared(
        per_slot[t], n_users, static_cast<int>(t)));
  return series;
}

PopularitySeries per_user_walk_popularity(const SystemConfig& cfg, int length,
                                          double step_scale, Rng& rng) {
  std::vector<lstm::SeriesDataset> walks;
  walks.reserve(cfg.n_users);
  for (int i = 0; i < cfg.n_users; ++i)
    walks.push_back(
        lstm::random_walk_series(cfg.n_tasks, length, step_scale, rng));
  PopularitySeries series;
  series.source = "walk-per-user";
  series.slots.reserve(length);
  for (int t = 0; t < length; ++t) {
    energy::PopularityMatrix m;
    m.slot = t;
    for (int i = 0; i < cfg.n_users; ++i) {
      const auto& v = walks[i].series[t];
      m.probs.emplace_back(v.data(), v.data() + v.size());
    }
    m.validate();
    series.slots.push_back(std::move(m));
  }
  return series;
}

EnergyEnvironment::EnergyEnvironment(SystemConfig cfg,
                                     std::vector<TaskSpec> tasks,
                                     Topology topo,
                                     PopularitySeries popularity,
                                     ChannelMode channel_mode,
                                     std::uint64_t channel_seed,
                                     energy::EnergyOptions opts)
    : cfg_(std::move(cfg)),
      tasks_(std::move(tasks)),
      topo_(std::move(topo)),
      popularity_(std::move(popularity)),
      opts_(opts) {
  cfg_.validate();
  if (static_cast<int>(topo_.user_positions.size()) != cfg_.n_users)
    throw std::invalid_argument("environment: topology size mismatch");
  if (popularity_.length() < cfg_.horizon_slots)
    throw std::invalid_argument("environment: popularity series too short");
  channels_.reserve(cfg_.horizon_slots);
  for (int t = 0; t < cfg_.horizon_slots; ++t) {
    const int draw_slot = channel_mode == ChannelMode::Static ? 0 : t;
    ChannelState chan = draw_channel(cfg_, topo_, draw_slot, channel_seed);
    chan.slot = t;
    channels_.push_back(std::move(chan));
  }
}

Topology default_topology(const SystemConfig& cfg) {
  Rng rng = Rng::stream(cfg.rng_seed, 0x746f706fULL);  // "topo"
  return generate_topology(cfg, rng);
}

std::vector<TaskSpec> default_tasks(const SystemConfig& cfg) {
  Rng rng = Rng::stream(cfg.rng_seed, 0x7461736bULL);  // "task"
  return generate_tasks(cfg, rng);
}

std::uint64_t default_channel_seed(const SystemConfig& cfg) {
  return Rng::stream(cfg.rng_seed, 0x6368616eULL).next_u64();  // "chan"
}

Rng default_popularity_rng(const SystemConfig& cfg) {
  return Rng::stream(cfg.rng_seed, 0x706f7075ULL);  // "popu"
}

EnergyEnvironment EnergyEnvironment::make(const SystemConfig& cfg,
                                          ChannelMode channel_mode,
                                          double popularity_step_scale,
                                          energy::EnergyOptions opts) {
  Rng pop_rng = default_popularity_rng(cfg);
  Topology topo = default_topology(cfg);
  std::vector<TaskSpec> tasks = default_tasks(cfg);

  PopularitySeries pop;
  if (popularity_step_scale > 0.0) {
    lstm::SeriesDataset walk = lstm::random_walk_series(
        cfg.n_tasks, cfg.horizon_slots, popularity_step_scale, pop_rng);
    std::vector<std::vector<double>> per_slot;
    per_slot.reserve(walk.series.size());
    for (const auto& v : walk.series)
      per_slot.emplace_back(v.data(), v.data() + v.size());
    pop = shared_popularity(per_slot, cfg.n_users);
    pop.source = "walk";
  } else {
    pop.slots.assign(cfg.horizon_slots, energy::PopularityMatrix::uniform(
                                            cfg.n_users, cfg.n_tasks));
    for (int t = 0; t < cfg.horizon_slots; ++t) pop.slots[t].slot = t;
    pop.source = "uniform";
  }
  return EnergyEnvironment(cfg, std::move(tasks), std::move(topo),
                           std::move(pop), channel_mode,
                           default_channel_seed(cfg), opts);
}

const energy::PopularityMatrix& EnergyEnvironment::popularity(int slot) const {
  return popularity_.slots.at(slot);
}

const ChannelState& EnergyEnvironment::channel(int slot) const {
  return channels_.at(slot);
}

energy::EnergyBreakdown EnergyEnvironment::evaluate(
    int slot, const DecisionVector& d) const {
  return energy::total_energy(d, popularity(slot), channel(slot), tasks_, cfg_,
                              opts_);
}

double EnergyEnvironment::penalized(int slot, const DecisionVector& d) const {
  return energy::penalized_total(evaluate(slot, d), popularity(slot), tasks_,
                                 cfg_, opts_);
}

double EnergyEnvironment::penalized_user(int slot,
                                         const energy::EnergyBreakdown& b,
                                         int user) const {
  if (b.feasible) return b.per_user[user];
  return opts_.infeasible_penalty_scale *
         energy::user_all_local_energy(user, popularity(slot), tasks_, cfg_);
}

std::vector<int> EnergyEnvironment::popularity_ranking(int slot) const {
  const auto& pop = popularity(slot);
  std::vector<double> mass(cfg_.n_tasks, 0.0);
  for (int i = 0; i < cfg_.n_users; ++i)
    for (int j = 0; j < cfg_.n_tasks; ++j) mass[j] += pop.probs[i][j];
  std::vector<int> order(cfg_.n_tasks);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mass[a] > mass[b]; });
  return order;
}

DecisionVector EnergyEnvironment::with_greedy_cache(int slot,
                                                    DecisionVector d) const {
  d.z.assign(cfg_.n_tasks, 0);
  const auto order = popularity_ranking(slot);
  const int take = std::min(cfg_.c_cache_slots, cfg_.n_tasks);
  for (int k = 0; k < take; ++k) d.z[order[k]] = 1;
  return d;
}

std::vector<int> equal_split_slices(int n_members, int n_slices) {
  std::vector<int> counts(n_members, 0);
  if (n_members == 0) return counts;
  const int base = n_slices / n_members;
  const int rem = n_slices % n_members;
  for (int k = 0; k < n_members; ++k) counts[k] = base + (k < rem ? 1 : 0);
  return counts;
}

DecisionVector equal_split_decision(const std::vector<std::uint8_t>& x,
                                    const ChannelState& chan,
                                    const SystemConfig& cfg) {
  DecisionVector d;
  d.x = x;
  d.y.assign(cfg.n_users, 0.0);
  d.z.assign(cfg.n_tasks, 0);
  const noma::UplinkSet ups = noma::build_uplink_set(d, chan, cfg);
  const auto counts = equal_split_slices(ups.size(), cfg.n_freq_slices);
  for (int p = 0; p < ups.size(); ++p)
    d.y[ups.members[p]] =
        static_cast<double>(counts[p]) / cfg.n_freq_slices;
  return d;
}

}  // namespace nomamec
