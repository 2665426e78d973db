#include "nomamec/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "nomamec/csv.hpp"
#include "nomamec/lstm.hpp"

namespace nomamec {
namespace harness {

Algorithm parse_algorithm(const std::string& name) {
  if (name == "saq") return Algorithm::Saq;
  if (name == "bla-maq") return Algorithm::BlaMaq;
  if (name == "full-local") return Algorithm::FullLocal;
  if (name == "full-offload") return Algorithm::FullOffload;
  if (name == "conventional-mec") return Algorithm::ConventionalMec;
  throw ConfigError("unknown algorithm '" + name + "'");
}

SweepVar parse_sweep_var(const std::string& name) {
  if (name == "task_input_bits") return SweepVar::TaskInputBits;
  if (name == "c_mec_hz") return SweepVar::CMecHz;
  if (name == "c_cache_slots") return SweepVar::CCacheSlots;
  if (name == "learning_rate") return SweepVar::LearningRate;
  if (name == "none") return SweepVar::None;
  throw ConfigError("unknown sweep variable '" + name + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Saq: return "saq";
    case Algorithm::BlaMaq: return "bla-maq";
    case Algorithm::FullLocal: return "full-local";
    case Algorithm::FullOffload: return "full-offload";
    case Algorithm::ConventionalMec: return "conventional-mec";
  }
  return "?";
}

std::string to_string(SweepVar v) {
  switch (v) {
    case SweepVar::TaskInputBits: return "task_input_bits";
    case SweepVar::CMecHz: return "c_mec_hz";
    case SweepVar::CCacheSlots: return "c_cache_slots";
    case SweepVar::LearningRate: return "learning_rate";
    case SweepVar::None: return "none";
  }
  return "?";
}

void ExperimentPlan::validate() const {
  if (scenario.empty()) throw ConfigError("plan: empty scenario name");
  if (seeds.empty()) throw ConfigError("plan: need at least one seed");
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t j = i + 1; j < seeds.size(); ++j)
      if (seeds[i] == seeds[j]) throw ConfigError("plan: duplicate seeds");
  if (sweep == SweepVar::None) {
    if (!sweep_values.empty())
      throw ConfigError("plan: sweep values given without a sweep variable");
  } else {
    if (sweep_values.empty()) throw ConfigError("plan: empty sweep values");
    for (std::size_t k = 1; k < sweep_values.size(); ++k)
      if (!(sweep_values[k] > sweep_values[k - 1]))
        throw ConfigError("plan: sweep values must be strictly increasing");
  }
}

void ResultRow::validate() const {
  if (!std::isfinite(mean_energy_j) || mean_energy_j < 0.0)
    throw NumericError("result row: bad mean energy");
  if (!std::isfinite(wall_time_s) || wall_time_s < 0.0)
    throw NumericError("result row: bad wall time");
  if (episodes_to_converge < 0)
    throw NumericError("result row: bad convergence episode");
}

SystemConfig apply_sweep(const SystemConfig& base, SweepVar var, double value) {
  SystemConfig cfg = base;
  switch (var) {
    case SweepVar::TaskInputBits:
      cfg.task_input_kb_min = value;
      cfg.task_input_kb_max = value;
      break;
    case SweepVar::CMecHz:
      cfg.c_mec_hz = value;
      break;
    case SweepVar::CCacheSlots:
      cfg.c_cache_slots = static_cast<int>(std::lround(value));
      break;
    case SweepVar::LearningRate:
    case SweepVar::None:
      break;
  }
  cfg.validate();
  return cfg;
}

BaselineTrace baseline_full_local(const EnergyEnvironment& env) {
  const SystemConfig& cfg = env.cfg();
  DecisionVector d;
  d.x.assign(cfg.n_users, 1);
  d.y.assign(cfg.n_users, 0.0);
  d.z.assign(cfg.n_tasks, 0);
  BaselineTrace trace;
  double sum = 0.0;
  for (int t = 0; t < env.horizon(); ++t) {
    trace.slots.push_back(env.evaluate(t, d));
    if (!trace.slots.back().feasible) ++trace.infeasible_slots;
    sum += energy::penalized_total(trace.slots.back(), env.popularity(t),
                                   env.tasks(), cfg, env.options());
  }
  trace.mean_energy = sum / env.horizon();
  return trace;
}

BaselineTrace baseline_full_offload(const EnergyEnvironment& env) {
  const SystemConfig& cfg = env.cfg();
  std::vector<std::uint8_t> x(cfg.n_users, 0);
  BaselineTrace trace;
  double sum = 0.0;
  for (int t = 0; t < env.horizon(); ++t) {
    const DecisionVector d = equal_split_decision(x, env.channel(t), cfg);
    trace.slots.push_back(env.evaluate(t, d));
    if (!trace.slots.back().feasible) ++trace.infeasible_slots;
    sum += energy::penalized_total(trace.slots.back(), env.popularity(t),
                                   env.tasks(), cfg, env.options());
  }
  trace.mean_energy = sum / env.horizon();
  return trace;
}

saq::SaqResult baseline_conventional_mec(const SystemConfig& cfg,
                                         const saq::SaqOptions& options,
                                         ChannelMode channel_mode,
                                         double popularity_step_scale,
                                         const energy::EnergyOptions& opts,
                                         std::uint64_t seed) {
  SystemConfig no_cache = cfg;
  no_cache.c_cache_slots = 0;
  const EnergyEnvironment env = EnergyEnvironment::make(
      no_cache, channel_mode, popularity_step_scale, opts);
  return saq::train_saq(env, options, seed);
}

int episodes_to_converge(const std::vector<double>& episode_energy, int window,
                         double rel_tol) {
  if (episode_energy.empty()) return 0;
  const int n = static_cast<int>(episode_energy.size());
  auto smoothed = [&](int e) {
    const int from = std::max(0, e - window + 1);
    double s = 0.0;
    for (int k = from; k <= e; ++k) s += episode_energy[k];
    return s / (e - from + 1);
  };
  const double final_value = smoothed(n - 1);
  const double tol = rel_tol * std::max(std::abs(final_value), 1e-12);
  for (int e = 0; e < n; ++e)
    if (std::abs(smoothed(e) - final_value) <= tol) return e + 1;
  return n;
}

namespace {

struct CellOutput {
  ResultRow row;
  std::vector<double> trace;          // per-episode energy (learners)
  lstm::TrainResult lstm_result;      // when an LSTM was trained
  bool has_lstm = false;
};

PopularitySeries lstm_predicted_popularity(const SystemConfig& cfg,
                                           const ExperimentPlan& plan,
                                           double learning_rate,
                                           lstm::TrainResult* out_result) {
  Rng pop_rng = default_popularity_rng(cfg);
  // Twice the horizon of history to learn from, then roll the predictor
  // forward closed-loop over the run horizon.
  lstm::SeriesDataset history = lstm::random_walk_series(
      cfg.n_tasks, 2 * cfg.horizon_slots, plan.popularity_step_scale, pop_rng);
  lstm::TrainOptions topt;
  topt.hidden_size = plan.lstm_hidden;
  topt.epochs = plan.lstm_epochs;
  topt.lr = learning_rate;
  topt.goal = plan.lstm_goal;
  topt.mode = lstm::TrainMode::Bptt;
  Rng init_rng = Rng::stream(cfg.rng_seed, 0x6c73746dULL);  // "lstm"
  lstm::TrainResult trained = lstm::train(history, topt, init_rng);
  const auto preds =
      lstm::predict_horizon(trained.params, history, cfg.horizon_slots);
  std::vector<std::vector<double>> per_slot;
  per_slot.reserve(preds.size());
  for (const auto& v : preds)
    per_slot.emplace_back(v.data(), v.data() + v.size());
  if (out_result) *out_result = std::move(trained);
  PopularitySeries series = shared_popularity(per_slot, cfg.n_users);
  series.source = "lstm";
  return series;
}

CellOutput run_cell_impl(const ExperimentPlan& plan, const SystemConfig& base,
                         double sweep_value, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SystemConfig cfg = apply_sweep(base, plan.sweep, sweep_value);
  cfg.rng_seed = seed;

  CellOutput out;
  const double lstm_lr =
      plan.sweep == SweepVar::LearningRate ? sweep_value : plan.lstm_lr;
  const bool use_lstm = plan.popularity == PopularitySource::Lstm ||
                        plan.sweep == SweepVar::LearningRate;

  // One popularity series per cell; every environment variant (including the
  // no-cache one) pairs against it.
  const PopularitySeries series = [&]() {
    if (use_lstm) {
      out.has_lstm = true;
      return lstm_predicted_popularity(cfg, plan, lstm_lr, &out.lstm_result);
    }
    Rng pop_rng = default_popularity_rng(cfg);
    if (plan.popularity == PopularitySource::WalkPerUser)
      return per_user_walk_popularity(cfg, cfg.horizon_slots,
                                      plan.popularity_step_scale, pop_rng);
    if (plan.popularity == PopularitySource::Uniform) {
      PopularitySeries uniform;
      uniform.source = "uniform";
      for (int t = 0; t < cfg.horizon_slots; ++t) {
        auto m = energy::PopularityMatrix::uniform(cfg.n_users, cfg.n_tasks);
        m.slot = t;
        uniform.slots.push_back(std::move(m));
      }
      return uniform;
    }
    lstm::SeriesDataset walk = lstm::random_walk_series(
        cfg.n_tasks, cfg.horizon_slots, plan.popularity_step_scale, pop_rng);
    std::vector<std::vector<double>> per_slot;
    per_slot.reserve(walk.series.size());
    for (const auto& v : walk.series)
      per_slot.emplace_back(v.data(), v.data() + v.size());
    PopularitySeries shared = shared_popularity(per_slot, cfg.n_users);
    shared.source = "walk";
    return shared;
  }();

  auto build_env = [&](const SystemConfig& c) {
    return EnergyEnvironment(c, default_tasks(c), default_topology(c), series,
                             plan.channel_mode, default_channel_seed(c),
                             plan.energy_opts);
  };
  const EnergyEnvironment env = build_env(cfg);

  double mean_energy = 0.0;
  int converged = 0;
  switch (plan.algorithm) {
    case Algorithm::Saq: {
      const saq::SaqResult res = saq::train_saq(env, plan.saq_opts, seed);
      const saq::StateCodec codec(cfg, plan.saq_opts.table2_strict);
      const auto rollout = saq::greedy_rollout(
          env, codec, res.table, codec.initial_config(), env.horizon());
      mean_energy = rollout.steady_energy;
      converged = episodes_to_converge(res.episode_energy);
      out.trace = res.episode_energy;
      break;
    }
    case Algorithm::ConventionalMec: {
      SystemConfig no_cache = cfg;
      no_cache.c_cache_slots = 0;
      const EnergyEnvironment env0 = build_env(no_cache);
      const saq::SaqResult res = saq::train_saq(env0, plan.saq_opts, seed);
      const saq::StateCodec codec(no_cache, plan.saq_opts.table2_strict);
      const auto rollout = saq::greedy_rollout(
          env0, codec, res.table, codec.initial_config(), env0.horizon());
      mean_energy = rollout.steady_energy;
      converged = episodes_to_converge(res.episode_energy);
      out.trace = res.episode_energy;
      break;
    }
    case Algorithm::BlaMaq: {
      const bla::BlaResult res = bla::run_bla_maq(env, plan.bla_opts, seed);
      mean_energy = res.tail_mean_energy;
      converged = episodes_to_converge(res.episode_energy);
      out.trace = res.episode_energy;
      break;
    }
    case Algorithm::FullLocal:
      mean_energy = baseline_full_local(env).mean_energy;
      break;
    case Algorithm::FullOffload:
      mean_energy = baseline_full_offload(env).mean_energy;
      break;
  }

  const auto t1 = std::chrono::steady_clock::now();
  out.row.scenario = plan.scenario;
  out.row.algorithm = to_string(plan.algorithm);
  out.row.sweep_value = sweep_value;
  out.row.seed = seed;
  out.row.mean_energy_j = mean_energy;
  out.row.episodes_to_converge = converged;
  out.row.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
  out.row.validate();
  return out;
}

std::string fig_file_name(SweepVar var) {
  switch (var) {
    case SweepVar::TaskInputBits: return "fig_energy_vs_tasksize.csv";
    case SweepVar::CMecHz: return "fig_energy_vs_cmec.csv";
    case SweepVar::CCacheSlots: return "fig_energy_vs_cache.csv";
    case SweepVar::LearningRate: return "fig_lstm_loss.csv";
    case SweepVar::None: return "fig_convergence.csv";
  }
  return "fig.csv";
}

}  // namespace

ResultRow run_cell(const ExperimentPlan& plan, const SystemConfig& base,
                   double sweep_value, std::uint64_t seed) {
  return run_cell_impl(plan, base, sweep_value, seed).row;
}

std::vector<ResultRow> run_plan(const ExperimentPlan& plan,
                                const SystemConfig& base) {
  plan.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(plan.out_dir, ec);
  if (ec)
    throw ConfigError("plan: cannot create output dir '" + plan.out_dir + "'");

  const std::vector<double> values =
      plan.sweep == SweepVar::None ? std::vector<double>{0.0}
                                   : plan.sweep_values;

  std::vector<ResultRow> rows;
  // trace/lstm outputs keyed by (value index, seed index)
  std::vector<std::vector<CellOutput>> cells(values.size());

  for (std::size_t v = 0; v < values.size(); ++v) {
    for (const std::uint64_t seed : plan.seeds) {
      cells[v].push_back(run_cell_impl(plan, base, values[v], seed));
      rows.push_back(cells[v].back().row);
    }
  }

  const fs::path dir(plan.out_dir);
  {
    csv::Writer w((dir / "results.csv").string());
    w.row("scenario", "algorithm", "sweep_value", "seed", "mean_energy_J",
          "episodes_to_converge", "wall_time_s");
    for (const auto& r : rows)
      w.row(r.scenario, r.algorithm, r.sweep_value, r.seed, r.mean_energy_j,
            r.episodes_to_converge, r.wall_time_s);
  }

  if (plan.sweep == SweepVar::None) {
    // Convergence figure: per-episode mean +- std across seeds.
    const auto& outs = cells[0];
    std::size_t episodes = 0;
    for (const auto& c : outs) episodes = std::max(episodes, c.trace.size());
    if (episodes > 0) {
      csv::Writer w((dir / fig_file_name(SweepVar::None)).string());
      w.row("episode", "mean_energy_J_mean", "mean_energy_J_std", "seeds");
      for (std::size_t e = 0; e < episodes; ++e) {
        double sum = 0.0, sq = 0.0;
        int n = 0;
        for (const auto& c : outs) {
          if (e >= c.trace.size()) continue;
          sum += c.trace[e];
          sq += c.trace[e] * c.trace[e];
          ++n;
        }
        const double mean = sum / n;
        const double var = n > 1 ? std::max(0.0, sq / n - mean * mean) : 0.0;
        w.row(e, mean, std::sqrt(var), n);
      }
    }
  } else if (plan.sweep == SweepVar::LearningRate) {
    // Per-epoch LSTM losses averaged over seeds, one block per learning rate.
    csv::Writer w((dir / fig_file_name(plan.sweep)).string());
    w.row("learning_rate", "epoch", "train_loss_mean", "test_loss_mean",
          "seeds");
    for (std::size_t v = 0; v < values.size(); ++v) {
      std::size_t epochs = 0;
      for (const auto& c : cells[v])
        if (c.has_lstm) epochs = std::max(epochs, c.lstm_result.train_loss.size());
      for (std::size_t e = 0; e < epochs; ++e) {
        double train_sum = 0.0, test_sum = 0.0;
        int n = 0;
        for (const auto& c : cells[v]) {
          if (!c.has_lstm || e >= c.lstm_result.train_loss.size()) continue;
          train_sum += c.lstm_result.train_loss[e];
          test_sum += c.lstm_result.test_loss[e];
          ++n;
        }
        if (n > 0) w.row(values[v], e, train_sum / n, test_sum / n, n);
      }
    }
  } else {
    csv::Writer w((dir / fig_file_name(plan.sweep)).string());
    w.row("sweep_value", "mean_energy_J_mean", "mean_energy_J_std", "seeds");
    for (std::size_t v = 0; v < values.size(); ++v) {
      double sum = 0.0, sq = 0.0;
      for (const auto& c : cells[v]) {
        sum += c.row.mean_energy_j;
        sq += c.row.mean_energy_j * c.row.mean_energy_j;
      }
      const int n = static_cast<int>(cells[v].size());
      const double mean = sum / n;
      const double var = n > 1 ? std::max(0.0, sq / n - mean * mean) : 0.0;
      w.row(values[v], mean, std::sqrt(var), n);
    }
  }
  return rows;
}

}  // namespace harness
}  // namespace nomamec
