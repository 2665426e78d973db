#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nomamec/rng.hpp"

namespace nomamec {

// ---------------------------------------------------------------------------
// Errors shared across modules
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The six constraints of the resource allocation problem, plus the local
// latency check which is enforced only under strict_local_latency.
enum class Constraint { C1, C2, C3, C4, C5, C6, LocalLatency };

std::string to_string(Constraint c);

struct InfeasibleDecision : std::runtime_error {
  InfeasibleDecision(const std::string& what, std::vector<Constraint> v)
      : std::runtime_error(what), violated(std::move(v)) {}
  std::vector<Constraint> violated;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Task input sizes are configured in kilobytes; 1 KB = 1000 bytes = 8000 bits.
inline constexpr double kBitsPerKb = 8000.0;

// All physical and network constants of one scenario. Units are SI: Hz, W,
// seconds, meters, bits. Defaults follow the standard desk-scale setup
// (20 MHz bandwidth, -95 dBm noise, 10 GHz edge server, 1 GHz user CPUs,
// 20 dBm uplink transmit power).
struct SystemConfig {
  int n_users = 3;
  int n_tasks = 5;
  double bandwidth_hz = 20e6;
  double noise_power_w = 3.1622776601683794e-13;  // -95 dBm
  double c_mec_hz = 10e9;
  int c_cache_slots = 2;
  double local_cpu_hz = 1e9;
  double p_local_w = 0.5;
  double p_mec_w = 5.0;
  double user_tx_power_w = 0.1;  // 20 dBm
  double latency_limit_s = 10.0;
  int n_freq_slices = 4;
  double area_side_m = 300.0;
  double pathloss_exponent = 3.0;
  int horizon_slots = 200;
  std::uint64_t rng_seed = 1;

  // Task generator ranges.
  double task_input_kb_min = 300.0;
  double task_input_kb_max = 800.0;
  double task_cycles_per_bit_min = 1000.0;
  double task_cycles_per_bit_max = 1500.0;
  double task_result_ratio = 0.1;

  // Optional byte-weighted cache capacity; 0 disables it and the slot-count
  // constraint C5 applies alone.
  double c_cache_bytes = 0.0;

  // Throws ConfigError when any invariant is violated.
  void validate() const;
};

// One computation task: input size, CPU demand and result size, all fixed
// for the lifetime of a scenario.
struct TaskSpec {
  int id = 0;  // index in [0, n_tasks)
  double input_bits = 0.0;
  double cycles = 0.0;
  double result_bits = 0.0;

  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

// Fixed user/AP placement for a scenario.
struct Topology {
  std::vector<Point2> user_positions;
  Point2 ap_position;
};

// Per-slot channel power gains |h_i(t)|^2, one per user.
struct ChannelState {
  std::vector<double> gains;
  int slot = 0;
};

// One slot's joint decision: offload flags x (1 = local, 0 = offload),
// computing-resource fractions y, cache flags z.
struct DecisionVector {
  std::vector<std::uint8_t> x;  // length n_users
  std::vector<double> y;        // length n_users, multiples of 1/n_freq_slices
  std::vector<std::uint8_t> z;  // length n_tasks

  int n_offloading() const;
};

// ---------------------------------------------------------------------------
// Generators. All are pure functions of (cfg, seed[, slot]).
// ---------------------------------------------------------------------------

// n_users uniform points inside the square of side area_side_m; AP at center.
Topology generate_topology(const SystemConfig& cfg, Rng& rng);

// Distance term of the channel gain: max(d, 1m)^(-exponent).
double path_gain(double distance_m, double exponent);

// Path loss times unit-mean exponential (Rayleigh power) fading, redrawn
// i.i.d. per slot. The stream is derived from (channel_seed, slot), so the
// same pair always yields the same gains.
ChannelState draw_channel(const SystemConfig& cfg, const Topology& topo,
                          int slot, std::uint64_t channel_seed);

// n_tasks tasks with input size uniform in [task_input_kb_min, max] KB and
// cycles = input_bits * U[cycles_per_bit_min, max]; result = ratio * input.
std::vector<TaskSpec> generate_tasks(const SystemConfig& cfg, Rng& rng);

}  // namespace nomamec
