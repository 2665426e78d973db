#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nomamec/config.hpp"
#include "nomamec/harness.hpp"

namespace {

using nomamec::ConfigError;
using nomamec::NumericError;
using nomamec::SizeError;

// "var=v1,v2,..." -> (var, values)
std::pair<std::string, std::vector<double>> parse_sweep(
    const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    if (spec == "none") return {"none", {}};
    throw ConfigError("--sweep expects var=v1,v2,... or none");
  }
  std::pair<std::string, std::vector<double>> out;
  out.first = spec.substr(0, eq);
  std::stringstream ss(spec.substr(eq + 1));
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.second.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("--sweep: bad value '" + cell + "'");
    }
  }
  if (out.second.empty()) throw ConfigError("--sweep: no values given");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      seeds.push_back(static_cast<std::uint64_t>(std::stoull(cell)));
    } catch (const std::exception&) {
      throw ConfigError("--seeds: bad value '" + cell + "'");
    }
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Cache-aided NOMA mobile edge computing simulator: energy model, "
      "LSTM popularity prediction, SAQ-learning and BLA multi-agent "
      "offloading with CSV outputs"};
  app.name("simulate");

  std::string config_path;
  std::string algorithm = "saq";
  std::string sweep_spec = "none";
  std::string seeds_spec = "1";
  std::string out_dir = "results";
  std::string formula_mode = "consistent";
  std::string popularity = "walk";
  std::string channel = "static";
  std::string scenario = "default";
  bool strict_c4 = false;
  bool table2_strict = true;
  int episodes = -1;
  int bla_steps = -1;
  double lstm_lr = 0.01;
  int lstm_epochs = 200;
  double lstm_goal = 0.0;

  app.add_option("--config", config_path,
                 "Flat key=value config file (see README)");
  app.add_option("--algorithm", algorithm,
                 "saq | bla-maq | full-local | full-offload | conventional-mec")
      ->capture_default_str();
  app.add_option("--sweep", sweep_spec,
                 "Sweep spec var=v1,v2,... with var in {task_input_bits, "
                 "c_mec_hz, c_cache_slots, learning_rate} or 'none'")
      ->capture_default_str();
  app.add_option("--seeds", seeds_spec, "Comma-separated run seeds")
      ->capture_default_str();
  app.add_option("--out", out_dir, "Output directory for CSV files")
      ->capture_default_str();
  app.add_option("--formula-mode", formula_mode,
                 "Per-user energy formula: consistent | printed")
      ->capture_default_str();
  app.add_flag("--strict-c4,!--no-strict-c4", strict_c4,
               "Require sum(y)=1 over all users as printed");
  app.add_flag("--table2-strict,!--no-table2-strict", table2_strict,
               "Keep cache bits out of the Q-table state (printed sizing)");
  app.add_option("--popularity", popularity,
                 "Popularity source: walk | walk-per-user | lstm | uniform")
      ->capture_default_str();
  app.add_option("--channel", channel,
                 "Fading realization: static (one draw per run) | per-slot")
      ->capture_default_str();
  app.add_option("--scenario", scenario, "Scenario label for result rows")
      ->capture_default_str();
  app.add_option("--episodes", episodes, "Override training episode count");
  app.add_option("--bla-steps", bla_steps, "Override BLA steps per episode");
  app.add_option("--lstm-lr", lstm_lr, "LSTM learning rate")
      ->capture_default_str();
  app.add_option("--lstm-epochs", lstm_epochs, "LSTM training epochs")
      ->capture_default_str();
  app.add_option("--lstm-goal", lstm_goal,
                 "Early-stopping loss target for LSTM training (0 = off)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    nomamec::SystemConfig cfg;
    if (!config_path.empty()) {
      cfg = nomamec::load_config(config_path);
    } else {
      nomamec::apply_env_overrides(cfg);
      cfg.validate();
    }

    nomamec::harness::ExperimentPlan plan;
    plan.scenario = scenario;
    plan.algorithm = nomamec::harness::parse_algorithm(algorithm);
    const auto [sweep_var, sweep_values] = parse_sweep(sweep_spec);
    plan.sweep = nomamec::harness::parse_sweep_var(sweep_var);
    plan.sweep_values = sweep_values;
    plan.seeds = parse_seeds(seeds_spec);
    plan.out_dir = out_dir;
    if (formula_mode == "consistent")
      plan.energy_opts.formula_mode = nomamec::energy::FormulaMode::Consistent;
    else if (formula_mode == "printed")
      plan.energy_opts.formula_mode = nomamec::energy::FormulaMode::AsPrinted;
    else
      throw ConfigError("--formula-mode must be consistent or printed");
    plan.energy_opts.strict_c4 = strict_c4;
    plan.saq_opts.table2_strict = table2_strict;
    if (episodes > 0) plan.saq_opts.episodes = episodes;
    if (bla_steps > 0) plan.bla_opts.steps_per_episode = bla_steps;
    if (popularity == "walk")
      plan.popularity = nomamec::harness::PopularitySource::Walk;
    else if (popularity == "walk-per-user")
      plan.popularity = nomamec::harness::PopularitySource::WalkPerUser;
    else if (popularity == "lstm")
      plan.popularity = nomamec::harness::PopularitySource::Lstm;
    else if (popularity == "uniform")
      plan.popularity = nomamec::harness::PopularitySource::Uniform;
    else
      throw ConfigError(
          "--popularity must be walk, walk-per-user, lstm or uniform");
    if (channel == "static")
      plan.channel_mode = nomamec::ChannelMode::Static;
    else if (channel == "per-slot")
      plan.channel_mode = nomamec::ChannelMode::PerSlot;
    else
      throw ConfigError("--channel must be static or per-slot");
    plan.lstm_lr = lstm_lr;
    plan.lstm_epochs = lstm_epochs;
    plan.lstm_goal = lstm_goal;

    const auto rows = nomamec::harness::run_plan(plan, cfg);
    std::cout << "wrote " << rows.size() << " result rows to " << out_dir
              << "/results.csv\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SizeError& e) {
    std::cerr << "size error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
