#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nomamec/bla.hpp"
#include "nomamec/energy.hpp"
#include "nomamec/env.hpp"
#include "nomamec/saq.hpp"

namespace nomamec {
namespace harness {

enum class Algorithm { Saq, BlaMaq, FullLocal, FullOffload, ConventionalMec };
enum class SweepVar { TaskInputBits, CMecHz, CCacheSlots, LearningRate, None };
enum class PopularitySource { Walk, WalkPerUser, Lstm, Uniform };

Algorithm parse_algorithm(const std::string& name);
SweepVar parse_sweep_var(const std::string& name);
std::string to_string(Algorithm a);
std::string to_string(SweepVar v);

struct ExperimentPlan {
  std::string scenario = "default";
  Algorithm algorithm = Algorithm::Saq;
  SweepVar sweep = SweepVar::None;
  std::vector<double> sweep_values;  // empty only when sweep == None
  std::vector<std::uint64_t> seeds;
  std::string out_dir = ".";

  energy::EnergyOptions energy_opts;
  saq::SaqOptions saq_opts;
  bla::BlaOptions bla_opts;
  PopularitySource popularity = PopularitySource::Walk;
  double popularity_step_scale = 0.05;
  ChannelMode channel_mode = ChannelMode::Static;
  // LSTM predictor settings (popularity == Lstm or a learning_rate sweep).
  int lstm_epochs = 200;
  double lstm_lr = 0.01;
  int lstm_hidden = 16;
  double lstm_goal = 0.0;  // early-stopping loss target, 0 disables

  void validate() const;  // throws ConfigError
};

struct ResultRow {
  std::string scenario;
  std::string algorithm;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  double mean_energy_j = 0.0;
  int episodes_to_converge = 0;
  double wall_time_s = 0.0;

  void validate() const;  // energy finite and >= 0
};

struct BaselineTrace {
  std::vector<energy::EnergyBreakdown> slots;
  double mean_energy = 0.0;
  int infeasible_slots = 0;
};

// x = all ones: everything computed locally, cache ignored.
BaselineTrace baseline_full_local(const EnergyEnvironment& env);

// x = all zeros: equal-split allocation over the slice grid, no caching.
BaselineTrace baseline_full_offload(const EnergyEnvironment& env);

// The SAQ allocator with the cache capacity forced to zero. Shares the
// caller's seed so runs pair with the cache-aided one.
saq::SaqResult baseline_conventional_mec(const SystemConfig& cfg,
                                         const saq::SaqOptions& options,
                                         ChannelMode channel_mode,
                                         double popularity_step_scale,
                                         const energy::EnergyOptions& opts,
                                         std::uint64_t seed);

// First episode whose trailing-window mean is within 5% of the final one.
int episodes_to_converge(const std::vector<double>& episode_energy,
                         int window = 50, double rel_tol = 0.05);

// Single cell of a plan: builds the environment for (sweep value, seed) and
// runs the algorithm. Exposed for tests.
ResultRow run_cell(const ExperimentPlan& plan, const SystemConfig& base,
                   double sweep_value, std::uint64_t seed);

// Runs every (sweep value, seed) cell, writes results.csv plus the per-figure
// aggregate CSVs into plan.out_dir, and returns the rows.
std::vector<ResultRow> run_plan(const ExperimentPlan& plan,
                                const SystemConfig& base);

// Sweep applied to a config (task_input_bits values are in KB).
SystemConfig apply_sweep(const SystemConfig& base, SweepVar var, double value);

}  // namespace harness
}  // namespace nomamec
