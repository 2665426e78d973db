#include "nomamec/lstm.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace nomamec {
namespace lstm {

namespace {

// Saturating-safe activations: pre-activations clamped to +-30 before
// exponentiation.
double sigmoid(double z) {
  z = std::clamp(z, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-z));
}

double tanh_safe(double z) { return std::tanh(std::clamp(z, -30.0, 30.0)); }

Vector sigmoid_vec(Vector z) {
  for (int k = 0; k < z.size(); ++k) z[k] = sigmoid(z[k]);
  return z;
}

Vector tanh_vec(Vector z) {
  for (int k = 0; k < z.size(); ++k) z[k] = tanh_safe(z[k]);
  return z;
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-0.1, 0.1);
  return m;
}

Vector random_vector(int n, Rng& rng) {
  Vector v(n);
  for (int k = 0; k < n; ++k) v[k] = rng.uniform(-0.1, 0.1);
  return v;
}

}  // namespace

LstmParams LstmParams::random_init(int input_size, int hidden_size,
                                   int output_size, Rng& rng) {
  if (input_size < 1 || hidden_size < 1 || output_size < 1)
    throw std::invalid_argument("lstm: sizes must be >= 1");
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.output_size = output_size;
  const int cols = hidden_size + input_size;
  p.w_f = random_matrix(hidden_size, cols, rng);
  p.w_i = random_matrix(hidden_size, cols, rng);
  p.w_c = random_matrix(hidden_size, cols, rng);
  p.w_o = random_matrix(hidden_size, cols, rng);
  p.b_f = random_vector(hidden_size, rng);
  p.b_i = random_vector(hidden_size, rng);
  p.b_c = random_vector(hidden_size, rng);
  p.b_o = random_vector(hidden_size, rng);
  p.w_out = random_matrix(output_size, hidden_size, rng);
  return p;
}

void LstmParams::validate() const {
  const int cols = hidden_size + input_size;
  auto check = [&](const Matrix& m, int r, int c, const char* name) {
    if (m.rows() != r || m.cols() != c || !m.allFinite())
      throw std::invalid_argument(std::string("lstm: bad ") + name);
  };
  check(w_f, hidden_size, cols, "w_f");
  check(w_i, hidden_size, cols, "w_i");
  check(w_c, hidden_size, cols, "w_c");
  check(w_o, hidden_size, cols, "w_o");
  check(w_out, output_size, hidden_size, "w_out");
  for (const Vector* b : {&b_f, &b_i, &b_c, &b_o})
    if (b->size() != hidden_size || !b->allFinite())
      throw std::invalid_argument("lstm: bad bias");
}

LstmState LstmState::zero(int hidden_size) {
  LstmState s;
  s.c = Vector::Zero(hidden_size);
  s.h = Vector::Zero(hidden_size);
  s.f = Vector::Constant(hidden_size, 0.5);
  s.i = Vector::Constant(hidden_size, 0.5);
  s.d = Vector::Zero(hidden_size);
  s.o = Vector::Constant(hidden_size, 0.5);
  return s;
}

void SeriesDataset::validate() const {
  if (length() < 2) throw std::invalid_argument("series: need >= 2 slots");
  const auto n = series[0].size();
  for (const auto& v : series) {
    if (v.size() != n) throw std::invalid_argument("series: ragged slots");
    double sum = 0.0;
    for (int k = 0; k < v.size(); ++k) {
      if (!(v[k] >= 0.0 && v[k] <= 1.0))
        throw std::invalid_argument("series: entry outside [0,1]");
      sum += v[k];
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("series: slot does not sum to 1");
  }
  if (split < 2 || split > length())
    throw std::invalid_argument("series: bad split");
}

SeriesDataset random_walk_series(int n_tasks, int length, double step_scale,
                                 Rng& rng) {
  if (length < 2) throw std::invalid_argument("random_walk: length < 2");
  if (!(step_scale > 0.0 && step_scale <= 0.5))
    throw std::invalid_argument("random_walk: step_scale must be in (0, 0.5]");
  SeriesDataset ds;
  ds.series.reserve(length);
  Vector p = Vector::Constant(n_tasks, 1.0 / n_tasks);
  ds.series.push_back(p);
  for (int t = 1; t < length; ++t) {
    Vector q = p;
    for (int k = 0; k < n_tasks; ++k)
      q[k] = std::max(q[k] + rng.gaussian(0.0, step_scale), 1e-4);
    q /= q.sum();
    ds.series.push_back(q);
    p = q;
  }
  ds.split = std::max(2, static_cast<int>(0.8 * length));
  return ds;
}

LstmState forward_step(const LstmParams& p, const LstmState& state,
                       const Vector& x) {
  if (x.size() != p.input_size || state.h.size() != p.hidden_size)
    throw std::invalid_argument("forward_step: shape mismatch");
  Vector u(p.hidden_size + p.input_size);
  u << state.h, x;
  LstmState next;
  next.f = sigmoid_vec(p.w_f * u + p.b_f);
  next.i = sigmoid_vec(p.w_i * u + p.b_i);
  next.d = tanh_vec(p.w_c * u + p.b_c);
  next.c = next.f.cwiseProduct(state.c) + next.i.cwiseProduct(next.d);
  next.o = sigmoid_vec(p.w_o * u + p.b_o);
  next.h = next.o.cwiseProduct(tanh_vec(next.c));
  return next;
}

Prediction predict(const LstmParams& p, const LstmState& state) {
  Prediction out;
  out.raw = p.w_out * state.h;
  out.projected = out.raw.cwiseMax(0.0);
  const double sum = out.projected.sum();
  if (sum > 0.0)
    out.projected /= sum;
  else
    out.projected = Vector::Constant(out.raw.size(), 1.0 / out.raw.size());
  return out;
}

double loss(const Vector& pred, const Vector& target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("loss: length mismatch");
  return (pred - target).squaredNorm();
}

void rtrl_update_output(LstmParams& p, const LstmState& state,
                        const Vector& raw_pred, const Vector& target,
                        double lr) {
  const Vector err = target - raw_pred;  // x_t - x_hat
  p.w_out += 2.0 * lr * err * state.h.transpose();
}

CandidateSensitivities CandidateSensitivities::zero(int hidden_size,
                                                    int input_size) {
  CandidateSensitivities s;
  const int n_params = hidden_size * (hidden_size + input_size);
  s.s_c = Matrix::Zero(hidden_size, n_params);
  s.s_o = Matrix::Zero(hidden_size, n_params);
  s.s_h = Matrix::Zero(hidden_size, n_params);
  return s;
}

void advance_candidate_sensitivities(const LstmParams& p,
                                     CandidateSensitivities& sens,
                                     const LstmState& prev,
                                     const LstmState& cur, const Vector& x) {
  const int H = p.hidden_size;
  const auto wf_h = p.w_f.leftCols(H);
  const auto wi_h = p.w_i.leftCols(H);
  const auto wc_h = p.w_c.leftCols(H);
  const auto wo_h = p.w_o.leftCols(H);

  Vector u(H + p.input_size);
  u << prev.h, x;

  // Pre-activation sensitivities through h_{t-1}; the candidate gate also
  // carries the direct local term d(w_c u)/d(w_c[a,b]) = u[b] on row a.
  Matrix dz_f = wf_h * sens.s_h;
  Matrix dz_i = wi_h * sens.s_h;
  Matrix dz_c = wc_h * sens.s_h;
  Matrix dz_o = wo_h * sens.s_h;
  for (int b = 0; b < u.size(); ++b)
    for (int a = 0; a < H; ++a) dz_c(a, b * H + a) += u[b];

  const Eigen::ArrayXd sf = (cur.f.array() * (1.0 - cur.f.array()));
  const Eigen::ArrayXd si = (cur.i.array() * (1.0 - cur.i.array()));
  const Eigen::ArrayXd sd = (1.0 - cur.d.array().square());
  const Eigen::ArrayXd so = (cur.o.array() * (1.0 - cur.o.array()));

  Matrix df = (dz_f.array().colwise() * sf).matrix();
  Matrix di = (dz_i.array().colwise() * si).matrix();
  Matrix dd = (dz_c.array().colwise() * sd).matrix();
  Matrix do_ = (dz_o.array().colwise() * so).matrix();

  Matrix s_c_new = (df.array().colwise() * prev.c.array()).matrix() +
                   (sens.s_c.array().colwise() * cur.f.array()).matrix() +
                   (di.array().colwise() * cur.d.array()).matrix() +
                   (dd.array().colwise() * cur.i.array()).matrix();

  const Eigen::ArrayXd tanh_c = cur.c.unaryExpr([](double v) {
                                       return tanh_safe(v);
                                     }).array();
  const Eigen::ArrayXd dtanh = (1.0 - tanh_c.square()) * cur.o.array();

  sens.s_h = (do_.array().colwise() * tanh_c).matrix() +
             (s_c_new.array().colwise() * dtanh).matrix();
  sens.s_c = std::move(s_c_new);
  sens.s_o = std::move(do_);
}

void rtrl_update_candidate(LstmParams& p, CandidateSensitivities& sens,
                           const LstmState& prev, const LstmState& cur,
                           const Vector& x, const Vector& raw_pred,
                           const Vector& target, double lr) {
  advance_candidate_sensitivities(p, sens, prev, cur, x);
  const Vector err = target - raw_pred;
  const Vector delta = p.w_out.transpose() * err;  // dLoss/dh up to -2
  const Eigen::RowVectorXd grad = delta.transpose() * sens.s_h;
  Eigen::Map<Eigen::RowVectorXd> flat(p.w_c.data(), p.w_c.size());
  flat += 2.0 * lr * grad;
}

Gradients Gradients::zero(const LstmParams& p) {
  Gradients g;
  const int cols = p.hidden_size + p.input_size;
  g.w_f = Matrix::Zero(p.hidden_size, cols);
  g.w_i = Matrix::Zero(p.hidden_size, cols);
  g.w_c = Matrix::Zero(p.hidden_size, cols);
  g.w_o = Matrix::Zero(p.hidden_size, cols);
  g.b_f = Vector::Zero(p.hidden_size);
  g.b_i = Vector::Zero(p.hidden_size);
  g.b_c = Vector::Zero(p.hidden_size);
  g.b_o = Vector::Zero(p.hidden_size);
  g.w_out = Matrix::Zero(p.output_size, p.hidden_size);
  return g;
}

Gradients bptt_window(const LstmParams& p, const LstmState& initial,
                      const std::vector<Vector>& inputs,
                      const std::vector<Vector>& targets, int first, int count,
                      LstmState* final_state, double* window_loss) {
  if (inputs.size() != targets.size())
    throw std::invalid_argument("bptt: need equally many inputs and targets");
  if (first < 0 || count < 1 ||
      first + count > static_cast<int>(inputs.size()))
    throw std::invalid_argument("bptt: bad window");
  const int T = count;
  const int H = p.hidden_size;

  std::vector<LstmState> states;
  states.reserve(T + 1);
  states.push_back(initial);
  std::vector<Vector> raws;
  raws.reserve(T);
  double loss_sum = 0.0;
  for (int t = 0; t < T; ++t) {
    states.push_back(forward_step(p, states.back(), inputs[first + t]));
    raws.push_back(p.w_out * states.back().h);
    loss_sum += (raws.back() - targets[first + t]).squaredNorm();
  }
  if (window_loss) *window_loss = loss_sum;
  if (final_state) *final_state = states.back();

  Gradients g = Gradients::zero(p);
  Vector dh_next = Vector::Zero(H);
  Vector dc_next = Vector::Zero(H);
  for (int t = T - 1; t >= 0; --t) {
    const LstmState& s = states[t + 1];
    const LstmState& s_prev = states[t];
    Vector u(H + p.input_size);
    u << s_prev.h, inputs[first + t];
    const Vector tanh_c = tanh_vec(s.c);

    const Vector e = 2.0 * (raws[t] - targets[first + t]);
    g.w_out += e * s.h.transpose();

    const Vector dh = p.w_out.transpose() * e + dh_next;
    const Vector dc =
        dh.cwiseProduct(s.o)
            .cwiseProduct((1.0 - tanh_c.array().square()).matrix()) +
        dc_next;

    const Vector do_pre = dh.cwiseProduct(tanh_c)
                              .cwiseProduct(s.o)
                              .cwiseProduct((1.0 - s.o.array()).matrix());
    const Vector df_pre = dc.cwiseProduct(s_prev.c)
                              .cwiseProduct(s.f)
                              .cwiseProduct((1.0 - s.f.array()).matrix());
    const Vector di_pre = dc.cwiseProduct(s.d)
                              .cwiseProduct(s.i)
                              .cwiseProduct((1.0 - s.i.array()).matrix());
    const Vector dd_pre = dc.cwiseProduct(s.i).cwiseProduct(
        (1.0 - s.d.array().square()).matrix());

    g.w_f += df_pre * u.transpose();
    g.w_i += di_pre * u.transpose();
    g.w_c += dd_pre * u.transpose();
    g.w_o += do_pre * u.transpose();
    g.b_f += df_pre;
    g.b_i += di_pre;
    g.b_c += dd_pre;
    g.b_o += do_pre;

    dh_next = p.w_f.leftCols(H).transpose() * df_pre +
              p.w_i.leftCols(H).transpose() * di_pre +
              p.w_c.leftCols(H).transpose() * dd_pre +
              p.w_o.leftCols(H).transpose() * do_pre;
    dc_next = dc.cwiseProduct(s.f);
  }
  return g;
}

Gradients bptt(const LstmParams& p, const std::vector<Vector>& inputs,
               const std::vector<Vector>& targets, double* total_loss) {
  if (inputs.empty())
    throw std::invalid_argument("bptt: empty sequence");
  return bptt_window(p, LstmState::zero(p.hidden_size), inputs, targets, 0,
                     static_cast<int>(inputs.size()), nullptr, total_loss);
}

namespace {

double evaluate_split_loss(const LstmParams& p,
                           const std::vector<Vector>& series, int from_pair,
                           int to_pair) {
  LstmState state = LstmState::zero(p.hidden_size);
  double sum = 0.0;
  for (int t = 0; t < to_pair; ++t) {
    state = forward_step(p, state, series[t]);
    if (t >= from_pair) sum += (p.w_out * state.h - series[t + 1]).squaredNorm();
  }
  return sum;
}

}  // namespace

TrainResult train(const SeriesDataset& dataset, const TrainOptions& options,
                  Rng& rng) {
  dataset.validate();
  if (options.epochs < 1) throw std::invalid_argument("train: epochs < 1");
  const int n = static_cast<int>(dataset.series[0].size());
  const int n_train_pairs = dataset.split - 1;
  const int n_pairs = dataset.length() - 1;

  std::vector<Vector> inputs(dataset.series.begin(),
                             dataset.series.begin() + n_train_pairs);
  std::vector<Vector> targets(dataset.series.begin() + 1,
                              dataset.series.begin() + 1 + n_train_pairs);

  TrainResult result;
  result.params = LstmParams::random_init(n, options.hidden_size, n, rng);
  long long rtrl_step = 0;

  if (options.bptt_window < 1)
    throw std::invalid_argument("train: bptt_window < 1");

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double train_loss = 0.0;
    if (options.mode == TrainMode::Bptt || options.mode == TrainMode::Hybrid) {
      // Truncated BPTT: the state threads through the whole training
      // sequence, one update per window on the per-pair mean gradient.
      LstmState carried = LstmState::zero(options.hidden_size);
      for (int first = 0; first < n_train_pairs;
           first += options.bptt_window) {
        const int count =
            std::min(options.bptt_window, n_train_pairs - first);
        double window_loss = 0.0;
        LstmState next = carried;
        Gradients g = bptt_window(result.params, carried, inputs, targets,
                                  first, count, &next, &window_loss);
        train_loss += window_loss;
        carried = std::move(next);
        const double step = options.lr / count;
        result.params.w_f -= step * g.w_f;
        result.params.w_i -= step * g.w_i;
        result.params.w_o -= step * g.w_o;
        result.params.b_f -= step * g.b_f;
        result.params.b_i -= step * g.b_i;
        result.params.b_c -= step * g.b_c;
        result.params.b_o -= step * g.b_o;
        if (options.mode == TrainMode::Bptt) {
          result.params.w_c -= step * g.w_c;
          result.params.w_out -= step * g.w_out;
        }
      }
    }
    if (options.mode == TrainMode::Rtrl || options.mode == TrainMode::Hybrid) {
      // Online pass: the regression and candidate weights follow the
      // per-slot rules with the mu_t = 1/t schedule.
      LstmState state = LstmState::zero(options.hidden_size);
      CandidateSensitivities sens =
          CandidateSensitivities::zero(options.hidden_size, n);
      double online_loss = 0.0;
      for (int t = 0; t < n_train_pairs; ++t) {
        const LstmState prev = state;
        state = forward_step(result.params, state, inputs[t]);
        const Vector raw = result.params.w_out * state.h;
        online_loss += (raw - targets[t]).squaredNorm();
        ++rtrl_step;
        const double mu = options.rtrl_lr0 / static_cast<double>(rtrl_step);
        rtrl_update_candidate(result.params, sens, prev, state, inputs[t], raw,
                              targets[t], mu);
        rtrl_update_output(result.params, state, raw, targets[t], mu);
      }
      if (options.mode == TrainMode::Rtrl) train_loss = online_loss;
    }

    if (!std::isfinite(train_loss))
      throw TrainingDiverged(
          "train: loss diverged at epoch " + std::to_string(epoch), epoch);

    result.train_loss.push_back(train_loss);
    result.test_loss.push_back(evaluate_split_loss(
        result.params, dataset.series, n_train_pairs, n_pairs));
    result.epochs_run = epoch + 1;
    if (options.goal > 0.0 && train_loss <= options.goal) break;
  }
  return result;
}

std::vector<Vector> predict_horizon(const LstmParams& p,
                                    const SeriesDataset& dataset,
                                    int horizon) {
  if (horizon < 0) throw std::invalid_argument("predict_horizon: horizon < 0");
  LstmState state = LstmState::zero(p.hidden_size);
  for (const auto& x : dataset.series) state = forward_step(p, state, x);
  std::vector<Vector> out;
  out.reserve(horizon);
  for (int k = 0; k < horizon; ++k) {
    const Vector next = predict(p, state).projected;
    out.push_back(next);
    if (k + 1 < horizon) state = forward_step(p, state, next);
  }
  return out;
}

// --- persistence ------------------------------------------------------------

namespace {

constexpr char kMagic[5] = {'L', 'S', 'T', 'M', '1'};

void put_i32(std::ostream& out, std::int32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::int32_t get_i32(std::istream& in) {
  std::int32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void get_matrix(std::istream& in, Matrix& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void put_vector(std::ostream& out, const Vector& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_vector(std::istream& in, Vector& v) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_weights(std::ostream& out, const LstmParams& p) {
  p.validate();
  out.write(kMagic, sizeof kMagic);
  put_i32(out, p.input_size);
  put_i32(out, p.hidden_size);
  put_i32(out, p.output_size);
  put_matrix(out, p.w_f);
  put_matrix(out, p.w_i);
  put_matrix(out, p.w_c);
  put_matrix(out, p.w_o);
  put_vector(out, p.b_f);
  put_vector(out, p.b_i);
  put_vector(out, p.b_c);
  put_vector(out, p.b_o);
  put_matrix(out, p.w_out);
  if (!out) throw NumericError("save_weights: write failed");
}

LstmParams load_weights(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw NumericError("load_weights: bad magic");
  LstmParams p;
  p.input_size = get_i32(in);
  p.hidden_size = get_i32(in);
  p.output_size = get_i32(in);
  if (p.input_size < 1 || p.hidden_size < 1 || p.output_size < 1)
    throw NumericError("load_weights: bad shape header");
  const int cols = p.hidden_size + p.input_size;
  p.w_f.resize(p.hidden_size, cols);
  p.w_i.resize(p.hidden_size, cols);
  p.w_c.resize(p.hidden_size, cols);
  p.w_o.resize(p.hidden_size, cols);
  p.b_f.resize(p.hidden_size);
  p.b_i.resize(p.hidden_size);
  p.b_c.resize(p.hidden_size);
  p.b_o.resize(p.hidden_size);
  p.w_out.resize(p.output_size, p.hidden_size);
  get_matrix(in, p.w_f);
  get_matrix(in, p.w_i);
  get_matrix(in, p.w_c);
  get_matrix(in, p.w_o);
  get_vector(in, p.b_f);
  get_vector(in, p.b_i);
  get_vector(in, p.b_c);
  get_vector(in, p.b_o);
  get_matrix(in, p.w_out);
  if (!in) throw NumericError("load_weights: truncated file");
  p.validate();
  return p;
}

void save_weights_file(const std::string& path, const LstmParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("save_weights: cannot open " + path);
  save_weights(out, p);
}

LstmParams load_weights_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericError("load_weights: cannot open " + path);
  return load_weights(in);
}

void write_loss_csv(std::ostream& out, const TrainResult& result) {
  const auto prec = out.precision(12);
  out << "epoch,train_loss,test_loss\n";
  for (std::size_t e = 0; e < result.train_loss.size(); ++e)
    out << e << ',' << result.train_loss[e] << ',' << result.test_loss[e]
        << '\n';
  out.precision(prec);
}

}  // namespace lstm
}  // namespace nomamec
