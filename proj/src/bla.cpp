#include "nomamec/bla.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace nomamec {
namespace bla {

namespace {

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

void check_beta_params(double x, double alpha, double beta) {
  if (!(alpha > 0) || !(beta > 0))
    throw std::domain_error("beta: parameters must be > 0");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("beta: x must be in [0,1]");
}

}  // namespace

double beta_pdf(double x, double alpha, double beta) {
  check_beta_params(x, alpha, beta);
  const double log_b = log_beta(alpha, beta);
  if (x == 0.0) {
    if (alpha < 1.0) return std::numeric_limits<double>::infinity();
    return alpha == 1.0 ? std::exp(-log_b) : 0.0;
  }
  if (x == 1.0) {
    if (beta < 1.0) return std::numeric_limits<double>::infinity();
    return beta == 1.0 ? std::exp(-log_b) : 0.0;
  }
  return std::exp((alpha - 1.0) * std::log(x) +
                  (beta - 1.0) * std::log1p(-x) - log_b);
}

double beta_cdf(double x, double alpha, double beta) {
  check_beta_params(x, alpha, beta);
  return boost::math::ibeta(alpha, beta, x);
}

double beta_cdf_complement(double x, double alpha, double beta) {
  check_beta_params(x, alpha, beta);
  return boost::math::ibetac(alpha, beta, x);
}

double beta_cdf_integer_sum(double x, int alpha, int beta) {
  check_beta_params(x, alpha, beta);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const int n = alpha + beta - 1;
  // First term k = alpha of the binomial tail, then the ratio recurrence
  // C(n,k+1)/C(n,k) * x/(1-x).
  double log_term = std::lgamma(n + 1.0) - std::lgamma(alpha + 1.0) -
                    std::lgamma(n - alpha + 1.0) + alpha * std::log(x) +
                    (n - alpha) * std::log1p(-x);
  double term = std::exp(log_term);
  double sum = 0.0;
  const double odds = x / (1.0 - x);
  for (int k = alpha; k <= n; ++k) {
    sum += term;
    term *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  return std::min(sum, 1.0);
}

ArmAction sample_and_select(const BetaArmState& arm, Rng& rng) {
  const double x1 = rng.beta(static_cast<double>(arm.a1),
                             static_cast<double>(arm.b1));
  const double x2 = rng.beta(static_cast<double>(arm.a2),
                             static_cast<double>(arm.b2));
  return x1 > x2 ? ArmAction::Local : ArmAction::Offload;
}

BetaArmState update_arm(BetaArmState arm, ArmAction action, Outcome outcome) {
  if (action == ArmAction::Local) {
    (outcome == Outcome::Reward ? arm.a1 : arm.b1) += 1;
  } else {
    (outcome == Outcome::Reward ? arm.a2 : arm.b2) += 1;
  }
  return arm;
}

LogFactorialTable::LogFactorialTable(std::int64_t max_n) {
  table_.resize(static_cast<std::size_t>(std::max<std::int64_t>(max_n, 1)) + 1);
  for (std::size_t n = 0; n < table_.size(); ++n)
    table_[n] = std::lgamma(static_cast<double>(n) + 1.0);
}

namespace {

void check_arm(const BetaArmState& arm) {
  if (arm.a1 < 1 || arm.b1 < 1 || arm.a2 < 1 || arm.b2 < 1)
    throw std::domain_error("bla: arm parameters must be >= 1");
}

// Sum of positive terms given the log of the first term and the ratio
// term_{i+1}/term_i as a function of i. Falls back to log-sum-exp when the
// anchor term underflows.
template <typename RatioFn, typename LogTermFn>
double sum_by_recurrence(std::int64_t n_terms, double log_first,
                         RatioFn ratio, LogTermFn log_term) {
  if (n_terms <= 0) return 0.0;
  if (log_first > -700.0) {
    double term = std::exp(log_first);
    double sum = 0.0;
    for (std::int64_t i = 0; i < n_terms; ++i) {
      sum += term;
      if (i + 1 < n_terms) term *= ratio(i);
    }
    if (sum > 0.0 && std::isnormal(sum)) return sum;
  }
  // Slow path: all terms in log space.
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < n_terms; ++i)
    max_log = std::max(max_log, log_term(i));
  if (!std::isfinite(max_log)) return 0.0;
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_terms; ++i)
    acc += std::exp(log_term(i) - max_log);
  return std::exp(max_log) * acc;
}

}  // namespace

double p_arm1_closed_form(const BetaArmState& arm,
                          const LogFactorialTable& lf) {
  check_arm(arm);
  const std::int64_t a1 = arm.a1, b1 = arm.b1, a2 = arm.a2, b2 = arm.b2;
  if (a1 == a2 && b1 == b2) return 0.5;  // symmetric arms

  const double log_pref = lf(a1 + b1 - 1) + lf(a2 + b2 - 1) - lf(a1 - 1) -
                          lf(b1 - 1) - lf(a1 + b1 + a2 + b2 - 2);
  // Summand at j (j runs a2 .. a2+b2-1).
  auto log_u = [&](std::int64_t j) {
    return lf(j + a1 - 1) + lf(b1 + a2 + b2 - j - 2) - lf(j) -
           lf(a2 + b2 - 1 - j);
  };
  auto ratio = [&](std::int64_t i) {
    const std::int64_t j = a2 + i;
    return static_cast<double>(j + a1) * static_cast<double>(a2 + b2 - 1 - j) /
           (static_cast<double>(j + 1) *
            static_cast<double>(b1 + a2 + b2 - j - 2));
  };
  const double sum = sum_by_recurrence(
      b2, log_pref + log_u(a2), ratio,
      [&](std::int64_t i) { return log_pref + log_u(a2 + i); });
  return std::clamp(sum, 0.0, 1.0);
}

double p_arm1_closed_form(const BetaArmState& arm) {
  check_arm(arm);
  if (arm.param_sum() > 1000000)
    throw SizeError("p_arm1_closed_form: parameter sum exceeds 1e6");
  LogFactorialTable lf(arm.param_sum());
  return p_arm1_closed_form(arm, lf);
}

double superiority_form_a(const BetaArmState& arm,
                          const LogFactorialTable& lf) {
  check_arm(arm);
  const std::int64_t a1 = arm.a1, b1 = arm.b1, a2 = arm.a2, b2 = arm.b2;
  // t_0 = Gamma(b1+b2) Gamma(a2+b2) / (Gamma(a2+b1+b2) Gamma(b2)).
  const double log_t0 =
      lf(b1 + b2 - 1) + lf(a2 + b2 - 1) - lf(a2 + b1 + b2 - 1) - lf(b2 - 1);
  auto ratio = [&](std::int64_t i) {
    return static_cast<double>(a2 + i) * static_cast<double>(b1 + i) /
           (static_cast<double>(a2 + b1 + b2 + i) * static_cast<double>(i + 1));
  };
  auto log_term = [&](std::int64_t i) {
    // B(a2+i, b1+b2) / ((b1+i) B(1+i, b1) B(a2, b2)) via log-factorials.
    return lf(a2 + i - 1) + lf(b1 + b2 - 1) - lf(a2 + i + b1 + b2 - 1) -
           std::log(static_cast<double>(b1 + i)) -
           (lf(i) + lf(b1 - 1) - lf(i + b1)) -
           (lf(a2 - 1) + lf(b2 - 1) - lf(a2 + b2 - 1));
  };
  return std::clamp(sum_by_recurrence(a1, log_t0, ratio, log_term), 0.0, 1.0);
}

double superiority_form_b(const BetaArmState& arm,
                          const LogFactorialTable& lf) {
  check_arm(arm);
  const std::int64_t a1 = arm.a1, b1 = arm.b1, a2 = arm.a2, b2 = arm.b2;
  const double log_t0 =
      lf(a1 + a2 - 1) + lf(a1 + b1 - 1) - lf(a1 + a2 + b1 - 1) - lf(a1 - 1);
  auto ratio = [&](std::int64_t i) {
    return static_cast<double>(b1 + i) * static_cast<double>(a2 + i) /
           (static_cast<double>(a1 + a2 + b1 + i) * static_cast<double>(i + 1));
  };
  auto log_term = [&](std::int64_t i) {
    return lf(b1 + i - 1) + lf(a1 + a2 - 1) - lf(b1 + i + a1 + a2 - 1) -
           std::log(static_cast<double>(a2 + i)) -
           (lf(i) + lf(a2 - 1) - lf(i + a2)) -
           (lf(a1 - 1) + lf(b1 - 1) - lf(a1 + b1 - 1));
  };
  return std::clamp(sum_by_recurrence(b2, log_t0, ratio, log_term), 0.0, 1.0);
}

double exact_superiority_prob(const BetaArmState& arm) {
  check_arm(arm);
  if (arm.param_sum() > 1000000)
    throw SizeError("exact_superiority_prob: parameter sum exceeds 1e6");
  LogFactorialTable lf(arm.param_sum());
  const double pa = superiority_form_a(arm, lf);
  const double pb = superiority_form_b(arm, lf);
  if (std::abs(pa - pb) > 1e-10)
    throw NumericError("exact_superiority_prob: summation forms disagree");
  return 0.5 * (pa + pb);
}

SelfCorrection self_correction_check(const BetaArmState& arm, double r1,
                                     double r2) {
  check_arm(arm);
  if (!(r1 > 0.0 && r1 < 1.0) || !(r2 > 0.0 && r2 < 1.0))
    throw std::domain_error("self_correction_check: r1, r2 must be in (0,1)");
  const double a1 = static_cast<double>(arm.a1);
  const double b1 = static_cast<double>(arm.b1);

  auto p1 = [&](double a, double b) { return beta_cdf_complement(r2, a, b); };
  SelfCorrection out;
  out.current = p1(a1, b1);
  const double p_plus = p1(a1 + 1.0, b1);
  const double p_minus = p1(a1, b1 + 1.0);
  out.expected_next = r1 * p_plus + (1.0 - r1) * p_minus;
  out.increased = out.expected_next > out.current;
  const double mean = a1 / (a1 + b1);
  out.mean_below_r1 = mean < r1;

  // Effects below the floating-point resolution of the three probabilities
  // cannot be distinguished from the exact-boundary case.
  const double noise =
      1e-13 * std::max({out.current, p_plus, p_minus}) + 1e-300;
  const double diff = out.expected_next - out.current;
  if (std::abs(diff) <= noise)
    out.consistent = true;
  else
    out.consistent = (diff > 0.0) == out.mean_below_r1;
  return out;
}

BanditTrajectory convergence_check(double r1, double r2, int steps, Rng& rng,
                                   int record_points) {
  if (r1 == r2)
    throw std::invalid_argument("convergence_check: requires r1 != r2");
  if (!(r1 >= 0.0 && r1 <= 1.0) || !(r2 >= 0.0 && r2 <= 1.0))
    throw std::domain_error("convergence_check: r1, r2 must be in [0,1]");
  if (steps < 0) throw std::invalid_argument("convergence_check: steps < 0");

  LogFactorialTable lf(steps + 8);
  BanditTrajectory traj;
  BetaArmState arm;
  const int stride = std::max(1, steps / std::max(record_points, 1));
  traj.step.push_back(0);
  traj.p_local.push_back(p_arm1_closed_form(arm, lf));
  for (int t = 1; t <= steps; ++t) {
    const ArmAction action = sample_and_select(arm, rng);
    const double r = action == ArmAction::Local ? r1 : r2;
    const Outcome outcome =
        rng.uniform() < r ? Outcome::Reward : Outcome::Penalty;
    arm = update_arm(arm, action, outcome);
    if (action == ArmAction::Local) ++traj.local_pulls;
    if (t % stride == 0 || t == steps) {
      traj.step.push_back(t);
      traj.p_local.push_back(p_arm1_closed_form(arm, lf));
      traj.action.push_back(action);
    }
  }
  traj.final_state = arm;
  traj.final_p_local = traj.p_local.back();
  return traj;
}

void write_trajectory_csv(std::ostream& out, const BanditTrajectory& traj) {
  const auto prec = out.precision(12);
  out << "step,p_local_closed_form,action_taken\n";
  for (std::size_t k = 0; k < traj.step.size(); ++k) {
    out << traj.step[k] << ',' << traj.p_local[k] << ',';
    if (k == 0)
      out << "none";  // priors only, no action yet
    else
      out << (traj.action[k - 1] == ArmAction::Local ? "local" : "offload");
    out << '\n';
  }
  out.precision(prec);
}

int energy_bin(double energy_j, const BlaOptions& options) {
  const double lo = std::log(options.bin_min_j);
  const double hi = std::log(options.bin_max_j);
  const double e = std::log(std::clamp(energy_j, options.bin_min_j,
                                       options.bin_max_j));
  const int bin = static_cast<int>((e - lo) / (hi - lo) * options.energy_bins);
  return std::clamp(bin, 0, options.energy_bins - 1);
}

BlaResult run_bla_maq(const EnergyEnvironment& env, const BlaOptions& options,
                      std::uint64_t seed) {
  const SystemConfig& cfg = env.cfg();
  if (options.energy_bins < 1 || options.episodes < 1 ||
      options.steps_per_episode < 1)
    throw std::invalid_argument("run_bla_maq: bad options");

  BlaResult result;
  result.agents.resize(cfg.n_users);
  for (int i = 0; i < cfg.n_users; ++i) {
    result.agents[i].user = i;
    result.agents[i].arms.assign(options.energy_bins, BetaArmState{});
  }

  Rng rng = Rng::stream(seed, 0x626c61ULL);  // "bla"

  // Start from everyone computing locally; initial states come from that
  // decision's per-user energies.
  std::vector<std::uint8_t> x(cfg.n_users, 1);
  DecisionVector d = equal_split_decision(x, env.channel(0), cfg);
  d = env.with_greedy_cache(0, d);
  energy::EnergyBreakdown b = env.evaluate(0, d);
  std::vector<double> prev_energy(cfg.n_users, 0.0);
  double prev_total = 0.0;
  for (int i = 0; i < cfg.n_users; ++i) {
    prev_energy[i] = env.penalized_user(0, b, i);
    prev_total += prev_energy[i];
    result.agents[i].state_bin = energy_bin(prev_energy[i], options);
  }

  const std::int64_t total_steps =
      static_cast<std::int64_t>(options.episodes) * options.steps_per_episode;
  const std::int64_t tail_start = total_steps - std::max<std::int64_t>(
      1, total_steps / 10);
  std::int64_t global_step = 0;
  double tail_energy_sum = 0.0;
  std::int64_t tail_energy_count = 0;

  for (int episode = 0; episode < options.episodes; ++episode) {
    double episode_sum = 0.0;
    for (int step = 0; step < options.steps_per_episode; ++step) {
      const int slot = static_cast<int>(global_step % env.horizon());
      for (int i = 0; i < cfg.n_users; ++i) {
        BlaAgent& agent = result.agents[i];
        agent.last_action =
            sample_and_select(agent.arms[agent.state_bin], rng);
        x[i] = agent.last_action == ArmAction::Local ? 1 : 0;
        ++agent.step_count;
        if (agent.last_action == ArmAction::Local) ++agent.local_count;
        if (global_step >= tail_start) {
          ++agent.tail_step_count;
          if (agent.last_action == ArmAction::Local) ++agent.tail_local_count;
        }
      }

      d = equal_split_decision(x, env.channel(slot), cfg);
      d = env.with_greedy_cache(slot, d);
      b = env.evaluate(slot, d);

      double cur_total = 0.0;
      for (int i = 0; i < cfg.n_users; ++i)
        cur_total += env.penalized_user(slot, b, i);
      episode_sum += cur_total;
      if (global_step >= tail_start) {
        tail_energy_sum += cur_total;
        ++tail_energy_count;
      }

      for (int i = 0; i < cfg.n_users; ++i) {
        BlaAgent& agent = result.agents[i];
        const double cur = env.penalized_user(slot, b, i);
        const double drop = options.team_reward ? prev_total - cur_total
                                                : prev_energy[i] - cur;
        const Outcome outcome = drop > options.reward_threshold
                                    ? Outcome::Reward
                                    : Outcome::Penalty;
        agent.arms[agent.state_bin] =
            update_arm(agent.arms[agent.state_bin], agent.last_action, outcome);
        prev_energy[i] = cur;
        agent.state_bin = energy_bin(cur, options);
      }
      prev_total = cur_total;
      ++global_step;
    }
    result.episode_energy.push_back(episode_sum / options.steps_per_episode);
  }

  result.final_x = x;
  result.tail_mean_energy =
      tail_energy_count > 0 ? tail_energy_sum / tail_energy_count : 0.0;
  result.final_p_local.resize(cfg.n_users);
  for (int i = 0; i < cfg.n_users; ++i) {
    const BlaAgent& agent = result.agents[i];
    result.final_p_local[i] =
        agent.tail_step_count > 0
            ? static_cast<double>(agent.tail_local_count) /
                  static_cast<double>(agent.tail_step_count)
            : 0.5;
  }
  return result;
}

void write_arm_table_csv(std::ostream& out, const BlaResult& result) {
  out << "agent,state_bin,a1,b1,a2,b2\n";
  for (const auto& agent : result.agents)
    for (std::size_t bin = 0; bin < agent.arms.size(); ++bin) {
      const auto& arm = agent.arms[bin];
      out << agent.user << ',' << bin << ',' << arm.a1 << ',' << arm.b1 << ','
          << arm.a2 << ',' << arm.b2 << '\n';
    }
}

}  // namespace bla
}  // namespace nomamec
