#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nomamec/env.hpp"
#include "nomamec/rng.hpp"
#include "nomamec/sysmodel.hpp"

namespace nomamec {
namespace bla {

// Beta posteriors of the two offloading actions: arm 1 = local computing,
// arm 2 = offload computing. All parameters start at 1 (uniform priors) and
// exactly one is incremented per update.
struct BetaArmState {
  std::int64_t a1 = 1, b1 = 1, a2 = 1, b2 = 1;

  std::int64_t param_sum() const { return a1 + b1 + a2 + b2; }
};

enum class ArmAction { Local, Offload };
enum class Outcome { Reward, Penalty };

// --- Beta distribution primitives -------------------------------------------

// x^(a-1) (1-x)^(b-1) / B(a,b), computed through log-gamma.
double beta_pdf(double x, double alpha, double beta);

// Regularized incomplete Beta I_x(a,b).
double beta_cdf(double x, double alpha, double beta);

// Upper tail 1 - I_x(a,b) computed directly, keeping relative precision for
// small tails.
double beta_cdf_complement(double x, double alpha, double beta);

// Integer-parameter CDF via the binomial tail identity
//   I_x(a,b) = sum_{k=a}^{a+b-1} C(a+b-1,k) x^k (1-x)^(a+b-1-k);
// the independent cross-check route for beta_cdf.
double beta_cdf_integer_sum(double x, int alpha, int beta);

// --- Action selection and update ---------------------------------------------

// Draw X1 ~ Beta(a1,b1), X2 ~ Beta(a2,b2); local iff X1 > X2.
ArmAction sample_and_select(const BetaArmState& arm, Rng& rng);

// Reward bumps alpha of the taken arm, penalty bumps beta; the other arm is
// untouched.
BetaArmState update_arm(BetaArmState arm, ArmAction action, Outcome outcome);

// Log-factorial lookup for the closed forms; shared across evaluations so
// repeated queries stay cheap.
class LogFactorialTable {
 public:
  explicit LogFactorialTable(std::int64_t max_n);
  double operator()(std::int64_t n) const { return table_[n]; }
  std::int64_t max_n() const { return static_cast<std::int64_t>(table_.size()) - 1; }

 private:
  std::vector<double> table_;
};

// P(arm 1 selected) as the factorial sum
//   pref * sum_{j=a2}^{a2+b2-1} (j+a1-1)! (b1+a2+b2-j-2)! / (j! (a2+b2-1-j)!),
// evaluated with one log-space anchor term and exact ratio recurrences.
// Throws SizeError when the parameter sum exceeds 1e6.
double p_arm1_closed_form(const BetaArmState& arm);
double p_arm1_closed_form(const BetaArmState& arm, const LogFactorialTable& lf);

// P(X1 > X2) by each of the two printed summation forms (over i < a1 and
// over i < b2).
double superiority_form_a(const BetaArmState& arm, const LogFactorialTable& lf);
double superiority_form_b(const BetaArmState& arm, const LogFactorialTable& lf);

// Evaluates both forms and returns their common value; throws NumericError
// when they disagree beyond 1e-10.
double exact_superiority_prob(const BetaArmState& arm);

// --- Self-correction of the selection probability -----------------------------

// p1 here is the threshold probability P(X1 > r2) = 1 - I_{r2}(a1, b1); the
// expected value after one local-arm pull is
//   r1 p1(a1+1, b1) + (1-r1) p1(a1, b1+1).
struct SelfCorrection {
  double current = 0.0;
  double expected_next = 0.0;
  bool increased = false;           // expected_next > current
  bool mean_below_r1 = false;       // a1/(a1+b1) < r1
  bool consistent = false;          // increased iff mean_below_r1 (eps band)
};

SelfCorrection self_correction_check(const BetaArmState& arm, double r1,
                                     double r2);

// --- Two-armed Bernoulli bandit convergence ------------------------------------

struct BanditTrajectory {
  std::vector<int> step;        // recorded step indices (0 = priors only)
  std::vector<double> p_local;  // closed-form P(local) at each record
  std::vector<ArmAction> action;  // action taken at each recorded step > 0
  BetaArmState final_state;
  double final_p_local = 0.0;
  std::int64_t local_pulls = 0;
};

// Pure BLA on arms with reward probabilities r1 (local) and r2 (offload).
// Requires r1 != r2. The closed-form trajectory is recorded at ~record_points
// evenly spaced steps plus the final step.
BanditTrajectory convergence_check(double r1, double r2, int steps, Rng& rng,
                                   int record_points = 200);

void write_trajectory_csv(std::ostream& out, const BanditTrajectory& traj);

// --- Multi-agent offloading loop ------------------------------------------------

struct BlaOptions {
  int episodes = 1;
  int steps_per_episode = 5000;
  // Outcome mapping: reward iff own-energy drop exceeds this threshold.
  double reward_threshold = 0.0;
  // Reward on the summed energy drop instead of the agent's own.
  bool team_reward = false;
  // Per-agent state: own last energy bucketed into log-spaced bins.
  int energy_bins = 8;
  double bin_min_j = 1e-4;
  double bin_max_j = 1e4;
};

struct BlaAgent {
  int user = 0;
  std::vector<BetaArmState> arms;  // one per energy bin
  int state_bin = 0;
  ArmAction last_action = ArmAction::Local;
  std::int64_t local_count = 0;
  std::int64_t step_count = 0;
  std::int64_t tail_local_count = 0;  // over the final 10% of steps
  std::int64_t tail_step_count = 0;
};

struct BlaResult {
  std::vector<BlaAgent> agents;
  std::vector<double> episode_energy;     // mean per episode
  std::vector<double> final_p_local;      // per agent, tail selection rate
  std::vector<std::uint8_t> final_x;      // last offloading vector
  double tail_mean_energy = 0.0;          // mean over the final 10% of steps
};

// Episodes x steps x agents: every agent picks local/offload from its current
// bin's arm, the joint X gets an equal-split allocation over offloaders and a
// greedy popularity cache, and each agent's arm is updated from its own
// energy change.
BlaResult run_bla_maq(const EnergyEnvironment& env, const BlaOptions& options,
                      std::uint64_t seed);

// CSV: agent,state_bin,a1,b1,a2,b2.
void write_arm_table_csv(std::ostream& out, const BlaResult& result);

int energy_bin(double energy_j, const BlaOptions& options);

}  // namespace bla
}  // namespace nomamec
