#include "nomamec/saq.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace nomamec {
namespace saq {

namespace {

std::int64_t checked_pow(std::int64_t base, int exp, const char* what) {
  std::int64_t v = 1;
  for (int k = 0; k < exp; ++k) {
    if (v > std::numeric_limits<std::int64_t>::max() / base)
      throw SizeError(std::string(what) + ": state space overflows");
    v *= base;
  }
  return v;
}

}  // namespace

StateCodec::StateCodec(const SystemConfig& cfg, bool table2_strict)
    : n_users_(cfg.n_users),
      n_slices_(cfg.n_freq_slices),
      n_tasks_(cfg.n_tasks),
      cache_slots_(cfg.c_cache_slots),
      table2_strict_(table2_strict) {
  cfg.validate();
  x_radix_ = checked_pow(2, n_users_, "codec");
  y_radix_ = checked_pow(n_users_, n_slices_, "codec");
  z_radix_ = 1;
  if (!table2_strict_) {
    if (n_tasks_ > 30) throw SizeError("codec: too many tasks to fold");
    for (int mask = 0; mask < (1 << n_tasks_); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) > cache_slots_)
        continue;
      std::vector<std::uint8_t> z(n_tasks_, 0);
      for (int j = 0; j < n_tasks_; ++j) z[j] = (mask >> j) & 1;
      z_combos_.push_back(std::move(z));
    }
    z_radix_ = static_cast<std::int64_t>(z_combos_.size());
    // The second action block must hold the bit flips and cache toggles.
    if (n_users_ + n_tasks_ > n_users_ * n_slices_)
      throw SizeError(
          "codec: folded cache actions do not fit the action space; "
          "use table2_strict");
  }
  if (x_radix_ > std::numeric_limits<std::int64_t>::max() / y_radix_ ||
      x_radix_ * y_radix_ >
          std::numeric_limits<std::int64_t>::max() / z_radix_)
    throw SizeError("codec: state space overflows");
  n_states_ = x_radix_ * y_radix_ * z_radix_;
  n_actions_ = 2 * n_users_ * n_slices_;
}

StateId StateCodec::encode(const DecisionConfig& config) const {
  if (static_cast<int>(config.local_bits.size()) != n_users_ ||
      static_cast<int>(config.slice_owner.size()) != n_slices_)
    throw std::invalid_argument("codec: config dimension mismatch");
  std::int64_t x_part = 0;
  for (int i = n_users_ - 1; i >= 0; --i) {
    if (config.local_bits[i] > 1)
      throw InfeasibleDecision("codec: non-binary offload bit",
                               {Constraint::C1});
    x_part = x_part * 2 + config.local_bits[i];
  }
  std::int64_t y_part = 0;
  for (int k = n_slices_ - 1; k >= 0; --k) {
    const int owner = config.slice_owner[k];
    if (owner < 0 || owner >= n_users_)
      throw std::invalid_argument("codec: slice owner out of range");
    y_part = y_part * n_users_ + owner;
  }
  std::int64_t z_part = 0;
  if (!table2_strict_) {
    if (static_cast<int>(config.cached.size()) != n_tasks_)
      throw std::invalid_argument("codec: cache bits missing");
    const auto it =
        std::find(z_combos_.begin(), z_combos_.end(), config.cached);
    if (it == z_combos_.end())
      throw InfeasibleDecision("codec: cache combination exceeds capacity",
                               {Constraint::C5});
    z_part = it - z_combos_.begin();
  }
  return (z_part * y_radix_ + y_part) * x_radix_ + x_part;
}

DecisionConfig StateCodec::decode(StateId id) const {
  if (id < 0 || id >= n_states_)
    throw std::invalid_argument("codec: state id out of range");
  DecisionConfig config;
  std::int64_t x_part = id % x_radix_;
  std::int64_t rest = id / x_radix_;
  std::int64_t y_part = rest % y_radix_;
  std::int64_t z_part = rest / y_radix_;
  config.local_bits.resize(n_users_);
  for (int i = 0; i < n_users_; ++i) {
    config.local_bits[i] = static_cast<std::uint8_t>(x_part % 2);
    x_part /= 2;
  }
  config.slice_owner.resize(n_slices_);
  for (int k = 0; k < n_slices_; ++k) {
    config.slice_owner[k] = static_cast<int>(y_part % n_users_);
    y_part /= n_users_;
  }
  if (!table2_strict_) config.cached = z_combos_[z_part];
  return config;
}

DecisionConfig StateCodec::config_of_decision(const DecisionVector& d) const {
  if (static_cast<int>(d.x.size()) != n_users_ ||
      static_cast<int>(d.y.size()) != n_users_)
    throw std::invalid_argument("codec: decision dimension mismatch");
  DecisionConfig config;
  config.local_bits = d.x;
  config.slice_owner.reserve(n_slices_);
  int assigned = 0;
  for (int i = 0; i < n_users_; ++i) {
    const double scaled = d.y[i] * n_slices_;
    const int count = static_cast<int>(std::lround(scaled));
    if (std::abs(scaled - count) > 1e-9 * n_slices_ || count < 0)
      throw InfeasibleDecision("codec: y not on the slice grid",
                               {Constraint::C2});
    for (int k = 0; k < count; ++k) config.slice_owner.push_back(i);
    assigned += count;
  }
  if (assigned > n_slices_)
    throw InfeasibleDecision("codec: allocation exceeds the slice budget",
                             {Constraint::C4});
  // Unallocated slices park on the lowest user index.
  while (static_cast<int>(config.slice_owner.size()) < n_slices_)
    config.slice_owner.insert(config.slice_owner.begin(), 0);
  std::sort(config.slice_owner.begin(), config.slice_owner.end());
  if (!table2_strict_) config.cached = d.z;
  return config;
}

StateId StateCodec::encode_decision(const DecisionVector& d) const {
  return encode(config_of_decision(d));
}

DecisionVector StateCodec::to_decision(const DecisionConfig& config,
                                       bool strict_c4) const {
  DecisionVector d;
  d.x = config.local_bits;
  d.y.assign(n_users_, 0.0);
  for (int owner : config.slice_owner) d.y[owner] += 1.0 / n_slices_;
  if (!strict_c4) {
    // Slices parked on local users are idle; the decision exposes them as
    // unallocated.
    for (int i = 0; i < n_users_; ++i)
      if (d.x[i] == 1) d.y[i] = 0.0;
  }
  if (!table2_strict_ && !config.cached.empty())
    d.z = config.cached;
  else
    d.z.assign(n_tasks_, 0);
  return d;
}

bool StateCodec::action_feasible(const DecisionConfig& config,
                                 ActionId a) const {
  if (a < 0 || a >= n_actions_) return false;
  const int reassigns = n_users_ * n_slices_;
  if (a < reassigns) return true;  // reassign slice to user, always valid
  const int b = a - reassigns;
  if (b < n_users_) return true;  // offload-bit flip
  if (table2_strict_) return false;
  const int toggle = b - n_users_;
  if (toggle >= n_tasks_) return false;
  int cached = 0;
  for (auto zj : config.cached) cached += zj;
  // Toggling on must stay within the cache budget.
  return config.cached[toggle] == 1 || cached < cache_slots_;
}

DecisionConfig StateCodec::apply_action(const DecisionConfig& config,
                                        ActionId a) const {
  if (!action_feasible(config, a))
    throw std::invalid_argument("codec: infeasible action");
  DecisionConfig next = config;
  const int reassigns = n_users_ * n_slices_;
  if (a < reassigns) {
    next.slice_owner[a / n_users_] = a % n_users_;
    return next;
  }
  const int b = a - reassigns;
  if (b < n_users_) {
    next.local_bits[b] ^= 1;
    return next;
  }
  next.cached[b - n_users_] ^= 1;
  return next;
}

std::vector<ActionId> StateCodec::feasible_actions(
    const DecisionConfig& config) const {
  std::vector<ActionId> actions;
  actions.reserve(n_actions_);
  for (ActionId a = 0; a < n_actions_; ++a)
    if (action_feasible(config, a)) actions.push_back(a);
  return actions;
}

DecisionConfig StateCodec::initial_config() const {
  DecisionConfig config;
  config.local_bits.assign(n_users_, 1);
  config.slice_owner.assign(n_slices_, 0);
  if (!table2_strict_) config.cached.assign(n_tasks_, 0);
  return config;
}

QTable::QTable(std::int64_t states, int actions, double gamma_lr,
               double beta_discount, std::uint64_t cell_guard)
    : n_states(states),
      n_actions(actions),
      gamma(gamma_lr),
      beta(beta_discount) {
  if (states < 1 || actions < 1)
    throw std::invalid_argument("qtable: empty dimensions");
  const std::uint64_t cells =
      static_cast<std::uint64_t>(states) * static_cast<std::uint64_t>(actions);
  if (cells > cell_guard)
    throw SizeError("qtable: " + std::to_string(states) + " x " +
                    std::to_string(actions) + " exceeds the cell guard of " +
                    std::to_string(cell_guard));
  values.assign(cells, 0.0);
  visits.assign(cells, 0);
}

double QTable::max_value(StateId s) const {
  const double* row = values.data() + static_cast<std::size_t>(s) * n_actions;
  return *std::max_element(row, row + n_actions);
}

double reward(double prev_energy, double cur_energy) {
  return prev_energy - cur_energy;
}

void q_update(QTable& q, StateId s, ActionId a, double r, StateId s_next) {
  if (s < 0 || s >= q.n_states || s_next < 0 || s_next >= q.n_states ||
      a < 0 || a >= q.n_actions)
    throw std::invalid_argument("q_update: index out of range");
  double& cell = q.at(s, a);
  cell = (1.0 - q.gamma) * cell + q.gamma * (r + q.beta * q.max_value(s_next));
  ++q.visits[static_cast<std::size_t>(s) * q.n_actions + a];
}

ActionId select_action_eps_greedy(const QTable& q, const StateCodec& codec,
                                  const DecisionConfig& config, double eps,
                                  Rng& rng) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw std::invalid_argument("select_action: eps outside [0,1]");
  const auto actions = codec.feasible_actions(config);
  if (actions.empty())
    throw std::logic_error("select_action: no feasible action");
  if (eps > 0.0 && rng.uniform() < eps)
    return actions[rng.index(actions.size())];
  const StateId s = codec.encode(config);
  ActionId best = actions[0];
  double best_value = q.at(s, best);
  for (ActionId a : actions) {
    const double v = q.at(s, a);
    if (v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

std::vector<ActionId> extract_policy(const QTable& q) {
  std::vector<ActionId> policy(q.n_states, 0);
  for (StateId s = 0; s < q.n_states; ++s) {
    const double* row =
        q.values.data() + static_cast<std::size_t>(s) * q.n_actions;
    policy[s] = static_cast<ActionId>(
        std::max_element(row, row + q.n_actions) - row);
  }
  return policy;
}

namespace {

// Decision the environment evaluates for a config: the induced (x, y) plus
// the slot's greedy cache when z is not part of the state.
DecisionVector realized_decision(const EnergyEnvironment& env,
                                 const StateCodec& codec,
                                 const DecisionConfig& config, int slot) {
  DecisionVector d = codec.to_decision(config, env.options().strict_c4);
  if (codec.table2_strict()) d = env.with_greedy_cache(slot, d);
  return d;
}

}  // namespace

SaqResult train_saq(const EnergyEnvironment& env, const SaqOptions& options,
                    std::uint64_t seed) {
  const StateCodec codec(env.cfg(), options.table2_strict);
  SaqResult result;
  result.table = QTable(codec.n_states(), codec.n_actions(), options.gamma_lr,
                        options.beta_discount, options.table_cell_guard);
  Rng rng = Rng::stream(seed, 0x736171ULL);  // "saq"

  const int horizon = env.horizon();
  for (int episode = 0; episode < options.episodes; ++episode) {
    const double eps =
        options.episodes > 1
            ? options.eps_start + (options.eps_end - options.eps_start) *
                                      episode / (options.episodes - 1)
            : options.eps_end;
    result.table.eps = eps;

    DecisionConfig config = codec.initial_config();
    StateId state = codec.encode(config);
    double prev_energy =
        env.penalized(0, realized_decision(env, codec, config, 0));
    double episode_sum = prev_energy;

    for (int slot = 1; slot < horizon; ++slot) {
      const ActionId action =
          select_action_eps_greedy(result.table, codec, config, eps, rng);
      DecisionConfig next = codec.apply_action(config, action);
      const StateId next_state = codec.encode(next);
      const double cur_energy =
          env.penalized(slot, realized_decision(env, codec, next, slot));
      q_update(result.table, state, action, reward(prev_energy, cur_energy),
               next_state);
      config = std::move(next);
      state = next_state;
      prev_energy = cur_energy;
      episode_sum += cur_energy;
    }
    result.episode_energy.push_back(episode_sum / horizon);
    result.final_config = config;
  }
  return result;
}

GreedyRollout greedy_rollout(const EnergyEnvironment& env,
                             const StateCodec& codec, const QTable& q,
                             const DecisionConfig& start, int slots) {
  GreedyRollout out;
  DecisionConfig config = start;
  Rng rng(0);  // eps = 0: never consulted
  for (int t = 0; t < slots; ++t) {
    const int slot = t % env.horizon();
    const ActionId action =
        select_action_eps_greedy(q, codec, config, 0.0, rng);
    config = codec.apply_action(config, action);
    out.energy.push_back(
        env.penalized(slot, realized_decision(env, codec, config, slot)));
    out.configs.push_back(config);
  }
  if (!out.energy.empty()) {
    double sum = 0.0;
    for (double e : out.energy) sum += e;
    out.mean_energy = sum / out.energy.size();
    const std::size_t half = out.energy.size() / 2;
    double tail = 0.0;
    for (std::size_t k = half; k < out.energy.size(); ++k)
      tail += out.energy[k];
    out.steady_energy = tail / (out.energy.size() - half);
  }
  return out;
}

// --- persistence -------------------------------------------------------------

namespace {
constexpr char kMagic[5] = {'Q', 'T', 'B', 'L', '1'};
}

void save_qtable(std::ostream& out, const QTable& q) {
  out.write(kMagic, sizeof kMagic);
  const std::int64_t dims[2] = {q.n_states, q.n_actions};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  const double hyper[3] = {q.gamma, q.beta, q.eps};
  out.write(reinterpret_cast<const char*>(hyper), sizeof hyper);
  out.write(reinterpret_cast<const char*>(q.values.data()),
            static_cast<std::streamsize>(q.values.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(q.visits.data()),
            static_cast<std::streamsize>(q.visits.size() * sizeof(std::uint32_t)));
  if (!out) throw NumericError("save_qtable: write failed");
}

QTable load_qtable(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw NumericError("load_qtable: bad magic");
  std::int64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  double hyper[3];
  in.read(reinterpret_cast<char*>(hyper), sizeof hyper);
  if (!in || dims[0] < 1 || dims[1] < 1 ||
      dims[1] > std::numeric_limits<int>::max())
    throw NumericError("load_qtable: bad header");
  QTable q(dims[0], static_cast<int>(dims[1]), hyper[0], hyper[1]);
  q.eps = hyper[2];
  in.read(reinterpret_cast<char*>(q.values.data()),
          static_cast<std::streamsize>(q.values.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(q.visits.data()),
          static_cast<std::streamsize>(q.visits.size() * sizeof(std::uint32_t)));
  if (!in) throw NumericError("load_qtable: truncated file");
  return q;
}

void save_qtable_file(const std::string& path, const QTable& q) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("save_qtable: cannot open " + path);
  save_qtable(out, q);
}

QTable load_qtable_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericError("load_qtable: cannot open " + path);
  return load_qtable(in);
}

void write_energy_trace_csv(std::ostream& out,
                            const std::vector<double>& episode_energy) {
  const auto prec = out.precision(12);
  out << "episode,mean_energy_J\n";
  for (std::size_t e = 0; e < episode_energy.size(); ++e)
    out << e << ',' << episode_energy[e] << '\n';
  out.precision(prec);
}

}  // namespace saq
}  // namespace nomamec
