#pragma once

#include "nomamec/sysmodel.hpp"

namespace nomamec {
namespace noma {

// The offloading users of one slot in SIC decoding order: gains sorted
// non-increasing, ties broken by ascending user index. Position 0 is decoded
// first and sees every later member as interference.
struct UplinkSet {
  std::vector<int> members;      // user indices, decode order
  std::vector<double> gains;     // matching |h|^2
  std::vector<double> tx_powers;  // matching rho_i

  int size() const { return static_cast<int>(members.size()); }
  bool empty() const { return members.empty(); }
  // Rank of a user in the set, or -1 when the user computes locally.
  int position_of(int user) const;
};

UplinkSet build_uplink_set(const DecisionVector& decision,
                           const ChannelState& chan, const SystemConfig& cfg);

// Achievable uplink rate (bits/s) of the member at `position`:
//   B * log2(1 + rho |h|^2 / (sum of later members' rho |h|^2 + sigma^2)).
double noma_rate(const UplinkSet& set, int position, const SystemConfig& cfg);

// pi_j / R_i. Throws std::domain_error for rate <= 0.
double offload_time(const TaskSpec& task, double rate_bps);

// rho_i * pi_j / R_i = tx_power * offload_time.
double offload_energy(const TaskSpec& task, double rate_bps,
                      double tx_power_w);

}  // namespace noma
}  // namespace nomamec
