#include "nomamec/sysmodel.hpp"

#include <algorithm>
#include <cmath>

namespace nomamec {

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::C1: return "C1";
    case Constraint::C2: return "C2";
    case Constraint::C3: return "C3";
    case Constraint::C4: return "C4";
    case Constraint::C5: return "C5";
    case Constraint::C6: return "C6";
    case Constraint::LocalLatency: return "local-latency";
  }
  return "?";
}

void SystemConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  require(n_users >= 1, "n_users must be >= 1");
  require(n_tasks >= 1, "n_tasks must be >= 1");
  require(n_freq_slices >= 1, "n_freq_slices must be >= 1");
  require(horizon_slots >= 1, "horizon_slots must be >= 1");
  require(c_cache_slots >= 0, "c_cache_slots must be >= 0");
  require(c_cache_slots <= n_tasks, "c_cache_slots must be <= n_tasks");
  require(bandwidth_hz > 0, "bandwidth_hz must be > 0");
  require(noise_power_w > 0, "noise_power_w must be > 0");
  require(c_mec_hz > 0, "c_mec_hz must be > 0");
  require(local_cpu_hz > 0, "local_cpu_hz must be > 0");
  require(p_local_w > 0, "p_local_w must be > 0");
  require(p_mec_w > 0, "p_mec_w must be > 0");
  require(user_tx_power_w > 0, "user_tx_power_w must be > 0");
  require(latency_limit_s > 0, "latency_limit_s must be > 0");
  require(area_side_m > 0, "area_side_m must be > 0");
  require(pathloss_exponent > 0, "pathloss_exponent must be > 0");
  require(task_input_kb_min > 0, "task_input_kb_min must be > 0");
  require(task_input_kb_max >= task_input_kb_min,
          "task_input_kb_max must be >= task_input_kb_min");
  require(task_cycles_per_bit_min > 0, "task_cycles_per_bit_min must be > 0");
  require(task_cycles_per_bit_max >= task_cycles_per_bit_min,
          "task_cycles_per_bit_max must be >= task_cycles_per_bit_min");
  require(task_result_ratio > 0 && task_result_ratio <= 1.0,
          "task_result_ratio must be in (0, 1]");
  require(c_cache_bytes >= 0, "c_cache_bytes must be >= 0");
}

void TaskSpec::validate() const {
  if (!(input_bits > 0)) throw ConfigError("task: input_bits must be > 0");
  if (!(cycles > 0)) throw ConfigError("task: cycles must be > 0");
  if (!(result_bits > 0) || result_bits > input_bits)
    throw ConfigError("task: result_bits must be in (0, input_bits]");
}

double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

int DecisionVector::n_offloading() const {
  int n = 0;
  for (auto xi : x) n += (xi == 0);
  return n;
}

Topology generate_topology(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  Topology topo;
  topo.user_positions.reserve(cfg.n_users);
  for (int i = 0; i < cfg.n_users; ++i) {
    Point2 p;
    p.x = rng.uniform(0.0, cfg.area_side_m);
    p.y = rng.uniform(0.0, cfg.area_side_m);
    topo.user_positions.push_back(p);
  }
  topo.ap_position = {cfg.area_side_m / 2.0, cfg.area_side_m / 2.0};
  return topo;
}

double path_gain(double distance_m, double exponent) {
  // Clamp below 1 m to avoid the path-loss singularity at the AP.
  const double d = std::max(distance_m, 1.0);
  return std::pow(d, -exponent);
}

ChannelState draw_channel(const SystemConfig& cfg, const Topology& topo,
                          int slot, std::uint64_t channel_seed) {
  ChannelState chan;
  chan.slot = slot;
  chan.gains.reserve(topo.user_positions.size());
  Rng rng = Rng::stream(channel_seed, static_cast<std::uint64_t>(slot));
  for (const auto& pos : topo.user_positions) {
    const double d = distance(pos, topo.ap_position);
    const double fading = rng.exponential(1.0);
    chan.gains.push_back(path_gain(d, cfg.pathloss_exponent) *
                         std::max(fading, 1e-300));
  }
  return chan;
}

std::vector<TaskSpec> generate_tasks(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<TaskSpec> tasks;
  tasks.reserve(cfg.n_tasks);
  for (int j = 0; j < cfg.n_tasks; ++j) {
    TaskSpec t;
    t.id = j;
    const double kb = rng.uniform(cfg.task_input_kb_min, cfg.task_input_kb_max);
    const double cpb =
        rng.uniform(cfg.task_cycles_per_bit_min, cfg.task_cycles_per_bit_max);
    t.input_bits = kb * kBitsPerKb;
    t.cycles = t.input_bits * cpb;
    t.result_bits = t.input_bits * cfg.task_result_ratio;
    t.validate();
    tasks.push_back(t);
  }
  return tasks;
}

}  // namespace nomamec
