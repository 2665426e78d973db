#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "nomamec/energy.hpp"
#include "nomamec/saq.hpp"

using namespace nomamec;
using namespace nomamec::saq;

namespace {

SystemConfig tiny_cfg() {
  SystemConfig cfg;
  cfg.n_users = 2;
  cfg.n_tasks = 3;
  cfg.n_freq_slices = 2;
  cfg.c_cache_slots = 1;
  cfg.horizon_slots = 100;
  // Equal task costs keep the popularity-greedy cache optimal, so learning
  // quality is measured on the offload/allocation choice alone.
  cfg.task_input_kb_min = cfg.task_input_kb_max = 500.0;
  cfg.task_cycles_per_bit_min = cfg.task_cycles_per_bit_max = 1000.0;
  return cfg;
}

// Static environment: one channel realization, one popularity vector.
EnergyEnvironment static_env(const SystemConfig& cfg) {
  return EnergyEnvironment::make(cfg, ChannelMode::Static, 0.0);
}

DecisionConfig random_config(const StateCodec& codec, const SystemConfig& cfg,
                             Rng& rng) {
  DecisionConfig config;
  for (int i = 0; i < cfg.n_users; ++i)
    config.local_bits.push_back(static_cast<std::uint8_t>(rng.index(2)));
  for (int k = 0; k < cfg.n_freq_slices; ++k)
    config.slice_owner.push_back(static_cast<int>(rng.index(cfg.n_users)));
  if (!codec.table2_strict()) config.cached.assign(cfg.n_tasks, 0);
  return config;
}

}  // namespace

TEST_CASE("state space sizes follow the 2^Nu * Nu^Nf formula") {
  const std::vector<std::pair<int, int>> cases = {{2, 2}, {3, 2}, {3, 4}};
  for (const auto& [nu, nf] : cases) {
    SystemConfig cfg;
    cfg.n_users = nu;
    cfg.n_freq_slices = nf;
    const StateCodec codec(cfg);
    std::int64_t expected = 1;
    for (int i = 0; i < nu; ++i) expected *= 2;
    std::int64_t y_part = 1;
    for (int k = 0; k < nf; ++k) y_part *= nu;
    CHECK(codec.n_states() == expected * y_part);
    CHECK(codec.n_actions() == 2 * nu * nf);
  }
}

TEST_CASE("all-zero decision encodes to state 0") {
  SystemConfig cfg = tiny_cfg();
  const StateCodec codec(cfg);
  DecisionVector d;
  d.x.assign(cfg.n_users, 0);
  d.y.assign(cfg.n_users, 0.0);
  d.z.assign(cfg.n_tasks, 0);
  CHECK(codec.encode_decision(d) == 0);
}

TEST_CASE("X and Y parts span the documented ranges") {
  SystemConfig cfg;
  cfg.n_users = 3;
  cfg.n_freq_slices = 4;
  const StateCodec codec(cfg);
  CHECK(codec.n_states() == 8 * 81);
  // Highest configuration: every bit set, every slice on the last user.
  DecisionConfig top;
  top.local_bits.assign(3, 1);
  top.slice_owner.assign(4, 2);
  CHECK(codec.encode(top) == codec.n_states() - 1);
}

TEST_CASE("encode/decode is a bijection over the full state range") {
  SystemConfig cfg = tiny_cfg();
  {
    const StateCodec codec(cfg, /*table2_strict=*/true);
    REQUIRE(codec.n_states() <= 100000);
    for (StateId s = 0; s < codec.n_states(); ++s)
      CHECK(codec.encode(codec.decode(s)) == s);
  }
  {
    // Folding needs the cache toggles to fit the second action block.
    cfg.n_tasks = 2;
    cfg.c_cache_slots = 1;
    const StateCodec codec(cfg, /*table2_strict=*/false);
    REQUIRE(codec.n_states() <= 100000);
    for (StateId s = 0; s < codec.n_states(); ++s)
      CHECK(codec.encode(codec.decode(s)) == s);
  }
}

TEST_CASE("relaxed-feasible decisions round-trip through the codec") {
  SystemConfig cfg = tiny_cfg();
  const StateCodec codec(cfg);
  Rng rng(101);
  int checked = 0;
  while (checked < 10000) {
    // Random offload pattern with all slices on the offloaders.
    DecisionVector d;
    d.x.clear();
    for (int i = 0; i < cfg.n_users; ++i)
      d.x.push_back(static_cast<std::uint8_t>(rng.index(2)));
    std::vector<int> off;
    for (int i = 0; i < cfg.n_users; ++i)
      if (d.x[i] == 0) off.push_back(i);
    d.y.assign(cfg.n_users, 0.0);
    if (!off.empty()) {
      for (int k = 0; k < cfg.n_freq_slices; ++k)
        d.y[off[rng.index(off.size())]] += 1.0 / cfg.n_freq_slices;
      bool starved = false;
      for (int i : off)
        if (d.y[i] == 0.0) starved = true;
      if (starved) continue;  // not relaxed-feasible; irrelevant here
    }
    d.z.assign(cfg.n_tasks, 0);
    const DecisionVector back =
        codec.to_decision(codec.decode(codec.encode_decision(d)));
    CHECK(back.x == d.x);
    for (int i = 0; i < cfg.n_users; ++i)
      CHECK(back.y[i] == doctest::Approx(d.y[i]).epsilon(1e-12));
    ++checked;
  }
}

TEST_CASE("off-grid allocations are rejected by the codec") {
  SystemConfig cfg = tiny_cfg();
  const StateCodec codec(cfg);
  DecisionVector d;
  d.x = {0, 1};
  d.y = {0.7, 0.0};  // not a multiple of 1/2
  d.z = {0, 0, 0};
  CHECK_THROWS_AS(codec.encode_decision(d), InfeasibleDecision);
}

TEST_CASE("folded mode carries cache bits through the state") {
  SystemConfig cfg = tiny_cfg();
  cfg.n_tasks = 2;  // flips + toggles must fit the second action block
  cfg.c_cache_slots = 1;
  const StateCodec codec(cfg, /*table2_strict=*/false);
  DecisionConfig config;
  config.local_bits = {1, 0};
  config.slice_owner = {1, 1};
  config.cached = {0, 1};
  const StateId s = codec.encode(config);
  CHECK(codec.decode(s) == config);
  // Over-capacity cache combinations are not representable.
  config.cached = {1, 1};
  CHECK_THROWS_AS(codec.encode(config), InfeasibleDecision);
}

TEST_CASE("actions are elementary moves that stay in the state space") {
  SystemConfig cfg = tiny_cfg();
  const StateCodec codec(cfg);
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const DecisionConfig config = random_config(codec, cfg, rng);
    for (ActionId a = 0; a < codec.n_actions(); ++a) {
      if (!codec.action_feasible(config, a)) continue;
      const DecisionConfig next = codec.apply_action(config, a);
      const StateId s = codec.encode(next);
      CHECK(s >= 0);
      CHECK(s < codec.n_states());
      // Elementary: at most one bit or one slice changed.
      int changes = 0;
      for (int i = 0; i < cfg.n_users; ++i)
        changes += config.local_bits[i] != next.local_bits[i];
      for (int k = 0; k < cfg.n_freq_slices; ++k)
        changes += config.slice_owner[k] != next.slice_owner[k];
      CHECK(changes <= 1);
    }
  }
}

TEST_CASE("cache toggles are rejected in table2-strict mode") {
  SystemConfig cfg = tiny_cfg();
  const StateCodec codec(cfg);
  const DecisionConfig config = codec.initial_config();
  const int reassigns = cfg.n_users * cfg.n_freq_slices;
  for (ActionId a = reassigns + cfg.n_users; a < codec.n_actions(); ++a)
    CHECK_FALSE(codec.action_feasible(config, a));
}

TEST_CASE("reward is the energy drop") {
  CHECK(reward(5.0, 3.0) == 2.0);
  CHECK(reward(3.0, 3.0) == 0.0);
  CHECK(reward(1.0, 4.0) == -3.0);
}

TEST_CASE("Q update follows the printed rule") {
  QTable q(4, 2, 0.5, 0.9);
  q_update(q, 1, 0, 1.0, 2);
  CHECK(q.at(1, 0) == doctest::Approx(0.5));  // (1-0.5)*0 + 0.5*(1 + 0.9*0)

  QTable q2(4, 2, 1.0, 0.0);
  q_update(q2, 0, 1, 7.5, 3);
  CHECK(q2.at(0, 1) == doctest::Approx(7.5));  // gamma=1, beta=0 -> r

  QTable q3(4, 2, 0.5, 0.9);
  q_update(q3, 2, 0, 0.0, 2);
  CHECK(q3.at(2, 0) == 0.0);  // zero reward on a zero table is a fixed point
}

TEST_CASE("repeated updates contract onto the Bellman target") {
  QTable q(2, 2, 0.25, 0.5);
  q.at(1, 0) = 4.0;
  q.at(1, 1) = 6.0;
  const double target = 2.0 + 0.5 * 6.0;  // r + beta max Q(s')
  double prev_gap = std::abs(q.at(0, 0) - target);
  for (int k = 0; k < 40; ++k) {
    q_update(q, 0, 0, 2.0, 1);
    const double gap = std::abs(q.at(0, 0) - target);
    CHECK(gap <= prev_gap * 0.7500001);  // rate (1 - gamma)
    prev_gap = gap;
  }
  CHECK(q.at(0, 0) == doctest::Approx(target).epsilon(1e-4));
}

TEST_CASE("eps-greedy selection: argmax, tie-break, exploration") {
  SystemConfig cfg = tiny_cfg();
  const StateCodec codec(cfg);
  const DecisionConfig config = codec.initial_config();
  const StateId s = codec.encode(config);
  QTable q(codec.n_states(), codec.n_actions(), 0.1, 0.9);
  Rng rng(5);

  // All-zero table: lowest feasible action id wins at eps = 0.
  CHECK(select_action_eps_greedy(q, codec, config, 0.0, rng) == 0);

  // Unique maximum is found.
  q.at(s, 3) = 1.0;
  CHECK(select_action_eps_greedy(q, codec, config, 0.0, rng) == 3);

  // Two equal maxima: the lower id.
  q.at(s, 5) = 1.0;
  CHECK(select_action_eps_greedy(q, codec, config, 0.0, rng) == 3);

  // eps = 1: empirical frequencies are uniform over feasible actions.
  const auto feasible = codec.feasible_actions(config);
  std::map<ActionId, int> counts;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k)
    counts[select_action_eps_greedy(q, codec, config, 1.0, rng)]++;
  const double expected = static_cast<double>(draws) / feasible.size();
  for (ActionId a : feasible) {
    CHECK(counts[a] > expected * 0.9);
    CHECK(counts[a] < expected * 1.1);
  }
}

TEST_CASE("policy extraction takes the row argmax with tie-break") {
  QTable q(3, 4, 0.1, 0.9);
  q.at(1, 2) = 5.0;
  const auto policy = extract_policy(q);
  CHECK(policy[0] == 0);  // all-zero row
  CHECK(policy[1] == 2);
  CHECK(policy[2] == 0);
}

TEST_CASE("the table-size guard rejects huge instances") {
  SystemConfig cfg;
  cfg.n_users = 6;
  cfg.n_freq_slices = 12;
  const StateCodec codec(cfg);
  CHECK_THROWS_AS(QTable(codec.n_states(), codec.n_actions(), 0.1, 0.9),
                  SizeError);
}

TEST_CASE("training is deterministic per seed") {
  SystemConfig cfg = tiny_cfg();
  cfg.horizon_slots = 40;
  const EnergyEnvironment env = static_env(cfg);
  SaqOptions opt;
  opt.episodes = 30;
  const SaqResult a = train_saq(env, opt, 99);
  const SaqResult b = train_saq(env, opt, 99);
  CHECK(a.episode_energy == b.episode_energy);
  const SaqResult c = train_saq(env, opt, 100);
  CHECK(a.episode_energy != c.episode_energy);
}

TEST_CASE("greedy policy approaches the brute-force optimum") {
  SystemConfig cfg = tiny_cfg();
  cfg.horizon_slots = 100;
  SaqOptions opt;
  opt.episodes = 300;

  int within = 0;
  const int seeds = 3;
  for (int seed = 1; seed <= seeds; ++seed) {
    SystemConfig c = cfg;
    c.rng_seed = seed;
    const EnergyEnvironment env = static_env(c);
    const auto [best, best_energy] = energy::brute_force_optimum(
        env.popularity(0), env.channel(0), env.tasks(), c, env.options());

    const SaqResult res = train_saq(env, opt, seed);
    const StateCodec codec(c);
    const auto rollout =
        greedy_rollout(env, codec, res.table, codec.initial_config(), 60);
    if (rollout.steady_energy <= 1.10 * best_energy) ++within;
  }
  CHECK(within >= 2);  // the acceptance suite runs the 20-seed version
}

TEST_CASE("zero exploration and discount degenerate to a one-step bandit") {
  SystemConfig cfg = tiny_cfg();
  cfg.horizon_slots = 2;  // one action per episode
  cfg.rng_seed = 21;
  const EnergyEnvironment env = static_env(cfg);
  const StateCodec codec(cfg);

  SaqOptions opt;
  opt.episodes = 1;
  opt.eps_start = 0.0;
  opt.eps_end = 0.0;
  opt.gamma_lr = 0.5;
  opt.beta_discount = 0.0;
  const SaqResult res = train_saq(env, opt, 21);

  // Exactly one update happened: Q(s0, a0) = gamma * immediate reward with
  // a0 the first feasible action of the all-zero row.
  const DecisionConfig start = codec.initial_config();
  const StateId s0 = codec.encode(start);
  const ActionId a0 = codec.feasible_actions(start).front();
  DecisionVector before = codec.to_decision(start);
  before = env.with_greedy_cache(0, before);
  DecisionVector after = codec.to_decision(codec.apply_action(start, a0));
  after = env.with_greedy_cache(1, after);
  const double r = env.penalized(0, before) - env.penalized(1, after);
  CHECK(res.table.at(s0, a0) == doctest::Approx(0.5 * r).epsilon(1e-12));

  std::int64_t updates = 0;
  for (auto v : res.table.visits) updates += v;
  CHECK(updates == 1);
}

TEST_CASE("episode-mean energy trends downward while learning") {
  SystemConfig cfg = tiny_cfg();
  cfg.rng_seed = 7;
  cfg.horizon_slots = 80;
  const EnergyEnvironment env = static_env(cfg);
  SaqOptions opt;
  opt.episodes = 200;
  const SaqResult res = train_saq(env, opt, 7);
  const auto mean_over = [&](int from, int to) {
    double s = 0.0;
    for (int e = from; e < to; ++e) s += res.episode_energy[e];
    return s / (to - from);
  };
  CHECK(mean_over(150, 200) <= mean_over(0, 50) * 1.001);
}

TEST_CASE("q-tables round-trip through the binary format") {
  QTable q(6, 3, 0.2, 0.8);
  q.at(2, 1) = -1.5;
  q.at(5, 0) = 3.25;
  q.visits[7] = 42;
  q.eps = 0.05;
  std::stringstream buf;
  save_qtable(buf, q);
  const QTable back = load_qtable(buf);
  CHECK(back.n_states == 6);
  CHECK(back.n_actions == 3);
  CHECK(back.values == q.values);
  CHECK(back.visits == q.visits);
  CHECK(back.gamma == q.gamma);
  CHECK(back.eps == q.eps);

  std::stringstream junk("QTBLX");
  CHECK_THROWS_AS(load_qtable(junk), NumericError);
}

TEST_CASE("energy traces serialize to CSV") {
  std::ostringstream out;
  write_energy_trace_csv(out, {2.5, 1.25});
  CHECK(out.str() == "episode,mean_energy_J\n0,2.5\n1,1.25\n");
}
