#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "nomamec/rng.hpp"
#include "nomamec/sysmodel.hpp"

namespace nomamec {
namespace lstm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct TrainingDiverged : NumericError {
  TrainingDiverged(const std::string& what, int epoch_)
      : NumericError(what), epoch(epoch_) {}
  int epoch;
};

// Gate weights operate on the concatenation [h_{t-1}, x_t]; the regression
// matrix w_out maps the hidden output to the predicted popularity vector.
struct LstmParams {
  int input_size = 0;
  int hidden_size = 0;
  int output_size = 0;
  Matrix w_f, w_i, w_c, w_o;  // hidden x (hidden + input)
  Vector b_f, b_i, b_c, b_o;  // hidden
  Matrix w_out;               // output x hidden

  // Uniform [-0.1, 0.1] entries.
  static LstmParams random_init(int input_size, int hidden_size,
                                int output_size, Rng& rng);
  void validate() const;
};

// Cell/hidden state plus the gate activations of the last step.
struct LstmState {
  Vector c, h;
  Vector f, i, d, o;

  static LstmState zero(int hidden_size);
};

// Popularity time series: one probability vector per slot, train/test split
// at `split` (slots [0, split) train, the rest test).
struct SeriesDataset {
  std::vector<Vector> series;
  int split = 0;

  int length() const { return static_cast<int>(series.size()); }
  void validate() const;
};

// p(t+1) = renormalize(clamp(p(t) + N(0, step_scale), 1e-4)); p(0) uniform.
// split defaults to 80% of the length.
SeriesDataset random_walk_series(int n_tasks, int length, double step_scale,
                                 Rng& rng);

LstmState forward_step(const LstmParams& params, const LstmState& state,
                       const Vector& x);

struct Prediction {
  Vector raw;        // w_out * h, used for the loss
  Vector projected;  // clamped to >= 0 and renormalized (uniform when all 0)
};

Prediction predict(const LstmParams& params, const LstmState& state);

// Sum of squared errors over components.
double loss(const Vector& pred, const Vector& target);

// One online step of the output-regression rule:
//   w_out += 2 mu (x_t - x_hat) (o .* tanh(C))^T.
void rtrl_update_output(LstmParams& params, const LstmState& state,
                        const Vector& raw_pred, const Vector& target,
                        double lr);

// Forward-mode sensitivities of (C_t, o_t, h_t) w.r.t. every element of w_c,
// carried across slots. Column p corresponds to w_c element (p % hidden,
// p / hidden) in column-major order.
struct CandidateSensitivities {
  Matrix s_c, s_o, s_h;  // hidden x (hidden * (hidden + input))

  static CandidateSensitivities zero(int hidden_size, int input_size);
};

// Advances the sensitivities through the step (prev -> cur via input x) and
// applies the candidate-weight update
//   w_c += 2 mu (x_t - x_hat)^T w_out dh_t/dw_c.
// `prev` and `cur` must be the states around the same forward_step call.
void rtrl_update_candidate(LstmParams& params, CandidateSensitivities& sens,
                           const LstmState& prev, const LstmState& cur,
                           const Vector& x, const Vector& raw_pred,
                           const Vector& target, double lr);

// Same recursion without the weight update; used by gradient checks.
void advance_candidate_sensitivities(const LstmParams& params,
                                     CandidateSensitivities& sens,
                                     const LstmState& prev,
                                     const LstmState& cur, const Vector& x);

struct Gradients {
  Matrix w_f, w_i, w_c, w_o;
  Vector b_f, b_i, b_c, b_o;
  Matrix w_out;

  static Gradients zero(const LstmParams& params);
};

// Full-sequence gradients of sum_t loss(raw_t, targets[t]) from a zero
// initial state. Also returns the total loss.
Gradients bptt(const LstmParams& params, const std::vector<Vector>& inputs,
               const std::vector<Vector>& targets, double* total_loss = nullptr);

// Window variant for truncated training: starts from `initial`, backs the
// gradient up over exactly [first, first+count) and reports the carried-out
// state. Gradients do not flow past `initial`.
Gradients bptt_window(const LstmParams& params, const LstmState& initial,
                      const std::vector<Vector>& inputs,
                      const std::vector<Vector>& targets, int first, int count,
                      LstmState* final_state, double* window_loss);

enum class TrainMode { Bptt, Rtrl, Hybrid };

struct TrainOptions {
  int hidden_size = 32;
  int epochs = 200;
  double lr = 0.01;  // step on the per-pair mean gradient of each window
  // Truncated-BPTT window: the hidden state runs through the whole training
  // sequence, gradients stop at window boundaries, one update per window.
  // Anything >= the sequence length gives single full-sequence updates.
  int bptt_window = 20;
  // RTRL schedule mu_t = rtrl_lr0 / t with t the global online step count.
  double rtrl_lr0 = 1.0;
  TrainMode mode = TrainMode::Hybrid;
  // Early-stopping target on the per-epoch training loss; 0 disables it.
  double goal = 0.0;
};

struct TrainResult {
  LstmParams params;
  std::vector<double> train_loss;  // per epoch, summed over train slots
  std::vector<double> test_loss;   // per epoch, summed over test slots
  int epochs_run = 0;
};

// Stage one trains on the train split (BPTT for the gate weights; w_out and
// w_c switch to the online rules in Rtrl/Hybrid modes); stage two evaluates
// the test split each epoch. Throws TrainingDiverged on nonfinite loss.
TrainResult train(const SeriesDataset& dataset, const TrainOptions& options,
                  Rng& rng);

// Closed-loop rollout: consumes the whole series, then feeds projected
// predictions back as inputs for `horizon` slots.
std::vector<Vector> predict_horizon(const LstmParams& params,
                                    const SeriesDataset& dataset, int horizon);

// Versioned binary weights: magic "LSTM1", shape header, little-endian
// 64-bit floats.
void save_weights(std::ostream& out, const LstmParams& params);
LstmParams load_weights(std::istream& in);
void save_weights_file(const std::string& path, const LstmParams& params);
LstmParams load_weights_file(const std::string& path);

// CSV: epoch,train_loss,test_loss.
void write_loss_csv(std::ostream& out, const TrainResult& result);

}  // namespace lstm
}  // namespace nomamec
