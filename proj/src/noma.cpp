#include "nomamec/noma.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nomamec {
namespace noma {

int UplinkSet::position_of(int user) const {
  for (int p = 0; p < size(); ++p)
    if (members[p] == user) return p;
  return -1;
}

UplinkSet build_uplink_set(const DecisionVector& decision,
                           const ChannelState& chan, const SystemConfig& cfg) {
  if (static_cast<int>(decision.x.size()) != cfg.n_users ||
      static_cast<int>(chan.gains.size()) != cfg.n_users)
    throw std::invalid_argument("build_uplink_set: dimension mismatch");

  UplinkSet set;
  for (int i = 0; i < cfg.n_users; ++i)
    if (decision.x[i] == 0) set.members.push_back(i);

  std::stable_sort(set.members.begin(), set.members.end(),
                   [&](int a, int b) { return chan.gains[a] > chan.gains[b]; });

  set.gains.reserve(set.members.size());
  set.tx_powers.reserve(set.members.size());
  for (int u : set.members) {
    set.gains.push_back(chan.gains[u]);
    set.tx_powers.push_back(cfg.user_tx_power_w);
  }
  return set;
}

double noma_rate(const UplinkSet& set, int position, const SystemConfig& cfg) {
  if (set.empty() || position < 0 || position >= set.size())
    throw std::invalid_argument("noma_rate: bad position");
  double interference = 0.0;
  for (int l = position + 1; l < set.size(); ++l)
    interference += set.tx_powers[l] * set.gains[l];
  const double sinr = set.tx_powers[position] * set.gains[position] /
                      (interference + cfg.noise_power_w);
  return cfg.bandwidth_hz * std::log2(1.0 + sinr);
}

double offload_time(const TaskSpec& task, double rate_bps) {
  if (!(rate_bps > 0)) throw std::domain_error("offload_time: rate must be > 0");
  return task.input_bits / rate_bps;
}

double offload_energy(const TaskSpec& task, double rate_bps,
                      double tx_power_w) {
  if (!(tx_power_w > 0))
    throw std::domain_error("offload_energy: tx_power must be > 0");
  return tx_power_w * offload_time(task, rate_bps);
}

}  // namespace noma
}  // namespace nomamec
