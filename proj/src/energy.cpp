#include "nomamec/energy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace nomamec {
namespace energy {

namespace {
constexpr double kSumTol = 1e-9;
}

void PopularityMatrix::validate() const {
  for (const auto& row : probs) {
    if (row.size() != probs[0].size())
      throw std::invalid_argument("popularity: ragged rows");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("popularity: entry outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTol)
      throw std::invalid_argument("popularity: row does not sum to 1");
  }
}

PopularityMatrix PopularityMatrix::uniform(int n_users, int n_tasks,
                                           int slot) {
  PopularityMatrix m;
  m.slot = slot;
  m.probs.assign(n_users, std::vector<double>(n_tasks, 1.0 / n_tasks));
  return m;
}

PopularityMatrix PopularityMatrix::shared(const std::vector<double>& task_probs,
                                          int n_users, int slot) {
  PopularityMatrix m;
  m.slot = slot;
  m.probs.assign(n_users, task_probs);
  m.validate();
  return m;
}

double local_time(const TaskSpec& task, double local_cpu_hz) {
  if (!(local_cpu_hz > 0))
    throw std::domain_error("local_time: cpu frequency must be > 0");
  return task.cycles / local_cpu_hz;
}

double local_energy(const TaskSpec& task, double local_cpu_hz,
                    double p_local_w) {
  return p_local_w * local_time(task, local_cpu_hz);
}

double mec_time(const TaskSpec& task, double y_frac, double c_mec_hz) {
  if (!(c_mec_hz > 0))
    throw std::domain_error("mec_time: server frequency must be > 0");
  if (!(y_frac > 0))
    throw InfeasibleDecision("mec_time: offloaded task with zero allocation",
                             {Constraint::C4});
  if (y_frac > 1.0) throw std::domain_error("mec_time: y_frac > 1");
  return task.cycles / (y_frac * c_mec_hz);
}

double mec_energy(const TaskSpec& task, double y_frac,
                  const SystemConfig& cfg) {
  return cfg.p_mec_w * mec_time(task, y_frac, cfg.c_mec_hz);
}

bool check_latency(double t_offload_s, double t_mec_s,
                   const SystemConfig& cfg) {
  return t_offload_s + t_mec_s <= cfg.latency_limit_s;
}

namespace {

bool on_grid(double y, int n_slices) {
  const double scaled = y * n_slices;
  return std::abs(scaled - std::round(scaled)) <= kSumTol * n_slices;
}

void check_dimensions(const DecisionVector& d, const ChannelState& chan,
                      const std::vector<TaskSpec>& tasks,
                      const SystemConfig& cfg) {
  if (static_cast<int>(d.x.size()) != cfg.n_users ||
      static_cast<int>(d.y.size()) != cfg.n_users ||
      static_cast<int>(d.z.size()) != cfg.n_tasks ||
      static_cast<int>(chan.gains.size()) != cfg.n_users ||
      static_cast<int>(tasks.size()) != cfg.n_tasks)
    throw std::invalid_argument("energy: dimension mismatch");
}

}  // namespace

std::vector<Constraint> check_constraints(const DecisionVector& d,
                                          const ChannelState& chan,
                                          const std::vector<TaskSpec>& tasks,
                                          const SystemConfig& cfg,
                                          const EnergyOptions& opts) {
  check_dimensions(d, chan, tasks, cfg);
  std::vector<Constraint> violated;
  auto flag = [&](Constraint c) {
    if (std::find(violated.begin(), violated.end(), c) == violated.end())
      violated.push_back(c);
  };

  for (auto xi : d.x)
    if (xi > 1) flag(Constraint::C1);
  for (double yi : d.y)
    if (!(yi >= 0.0 && yi <= 1.0) || !on_grid(yi, cfg.n_freq_slices))
      flag(Constraint::C2);
  for (auto zj : d.z)
    if (zj > 1) flag(Constraint::C3);

  // C4: the allocation must cover the offloading users exactly. Under strict
  // C4 the fractions sum to 1 over everyone (idle shares may sit on local
  // users); the relaxed default confines them to the offloaders.
  const int n_up = d.n_offloading();
  double sum_all = 0.0, sum_off = 0.0;
  bool offloader_without_share = false, local_with_share = false;
  for (int i = 0; i < cfg.n_users; ++i) {
    sum_all += d.y[i];
    if (d.x[i] == 0) {
      sum_off += d.y[i];
      if (!(d.y[i] > 0.0)) offloader_without_share = true;
    } else if (d.y[i] > 0.0) {
      local_with_share = true;
    }
  }
  if (opts.strict_c4) {
    if (std::abs(sum_all - 1.0) > kSumTol) flag(Constraint::C4);
    if (n_up > 0 && offloader_without_share) flag(Constraint::C4);
  } else {
    if (n_up > 0) {
      if (std::abs(sum_off - 1.0) > kSumTol || offloader_without_share ||
          local_with_share)
        flag(Constraint::C4);
    } else if (sum_all > kSumTol) {
      flag(Constraint::C4);
    }
  }

  int cached = 0;
  double cached_bytes = 0.0;
  for (int j = 0; j < cfg.n_tasks; ++j) {
    if (d.z[j] == 1) {
      ++cached;
      cached_bytes += tasks[j].result_bits / 8.0;
    }
  }
  if (cached > cfg.c_cache_slots) flag(Constraint::C5);
  if (cfg.c_cache_bytes > 0 && cached_bytes > cfg.c_cache_bytes)
    flag(Constraint::C5);

  // C6 over every uncached task a user could request. Skipped for users whose
  // allocation is already invalid (no finite MEC time exists for them).
  const noma::UplinkSet ups = noma::build_uplink_set(d, chan, cfg);
  for (int p = 0; p < ups.size(); ++p) {
    const int i = ups.members[p];
    if (!(d.y[i] > 0.0)) continue;
    const double rate = noma_rate(ups, p, cfg);
    for (int j = 0; j < cfg.n_tasks; ++j) {
      if (d.z[j] == 1) continue;
      const double t_off = noma::offload_time(tasks[j], rate);
      const double t_mec = mec_time(tasks[j], d.y[i], cfg.c_mec_hz);
      if (!check_latency(t_off, t_mec, cfg)) {
        flag(Constraint::C6);
        break;
      }
    }
  }
  if (opts.strict_local_latency) {
    for (int i = 0; i < cfg.n_users; ++i) {
      if (d.x[i] != 1) continue;
      for (int j = 0; j < cfg.n_tasks; ++j) {
        if (d.z[j] == 1) continue;
        if (local_time(tasks[j], cfg.local_cpu_hz) > cfg.latency_limit_s) {
          flag(Constraint::LocalLatency);
          break;
        }
      }
    }
  }
  return violated;
}

namespace {

// Energy of one user assuming the decision already passed the constraint
// check; the uplink set is shared across users.
UserEnergy user_energy_unchecked(int user, const DecisionVector& d,
                                 const PopularityMatrix& pop,
                                 const noma::UplinkSet& ups,
                                 const std::vector<TaskSpec>& tasks,
                                 const SystemConfig& cfg,
                                 const EnergyOptions& opts) {
  UserEnergy e;
  const bool local = d.x[user] == 1;
  double rate = 0.0;
  if (!local) {
    const int pos = ups.position_of(user);
    rate = noma_rate(ups, pos, cfg);
  }
  const double y = d.y[user];
  for (int j = 0; j < static_cast<int>(tasks.size()); ++j) {
    const double w = pop.probs[user][j] * (d.z[j] == 1 ? 0.0 : 1.0);
    if (w == 0.0) continue;
    if (local) {
      e.local_j += w * local_energy(tasks[j], cfg.local_cpu_hz, cfg.p_local_w);
    } else {
      e.offload_j +=
          w * noma::offload_energy(tasks[j], rate, cfg.user_tx_power_w);
    }
    if (opts.formula_mode == FormulaMode::Consistent) {
      if (!local) e.mec_j += w * mec_energy(tasks[j], y, cfg);
    } else if (y > 0.0) {
      // Printed coefficient (1 - y_i); no term when no resources are held.
      e.mec_j += w * (1.0 - y) * mec_energy(tasks[j], y, cfg);
    }
  }
  return e;
}

}  // namespace

double expected_user_energy(int user, const DecisionVector& d,
                            const PopularityMatrix& pop,
                            const ChannelState& chan,
                            const std::vector<TaskSpec>& tasks,
                            const SystemConfig& cfg,
                            const EnergyOptions& opts) {
  if (user < 0 || user >= cfg.n_users)
    throw std::invalid_argument("expected_user_energy: bad user index");
  pop.validate();
  auto violated = check_constraints(d, chan, tasks, cfg, opts);
  if (!violated.empty())
    throw InfeasibleDecision("expected_user_energy: infeasible decision",
                             violated);
  const noma::UplinkSet ups = noma::build_uplink_set(d, chan, cfg);
  return user_energy_unchecked(user, d, pop, ups, tasks, cfg, opts).total();
}

EnergyBreakdown total_energy(const DecisionVector& d,
                             const PopularityMatrix& pop,
                             const ChannelState& chan,
                             const std::vector<TaskSpec>& tasks,
                             const SystemConfig& cfg,
                             const EnergyOptions& opts) {
  EnergyBreakdown out;
  out.per_user.assign(cfg.n_users, 0.0);
  out.components.assign(cfg.n_users, UserEnergy{});
  out.violated = check_constraints(d, chan, tasks, cfg, opts);
  out.feasible = out.violated.empty();
  if (!out.feasible) return out;

  const noma::UplinkSet ups = noma::build_uplink_set(d, chan, cfg);
  for (int i = 0; i < cfg.n_users; ++i) {
    out.components[i] = user_energy_unchecked(i, d, pop, ups, tasks, cfg, opts);
    out.per_user[i] = out.components[i].total();
    out.total += out.per_user[i];
  }
  return out;
}

double user_all_local_energy(int user, const PopularityMatrix& pop,
                             const std::vector<TaskSpec>& tasks,
                             const SystemConfig& cfg) {
  double e = 0.0;
  for (int j = 0; j < static_cast<int>(tasks.size()); ++j)
    e += pop.probs[user][j] *
         local_energy(tasks[j], cfg.local_cpu_hz, cfg.p_local_w);
  return e;
}

double all_local_energy(const PopularityMatrix& pop,
                        const std::vector<TaskSpec>& tasks,
                        const SystemConfig& cfg) {
  double e = 0.0;
  for (int i = 0; i < cfg.n_users; ++i)
    e += user_all_local_energy(i, pop, tasks, cfg);
  return e;
}

double penalized_total(const EnergyBreakdown& breakdown,
                       const PopularityMatrix& pop,
                       const std::vector<TaskSpec>& tasks,
                       const SystemConfig& cfg, const EnergyOptions& opts) {
  if (breakdown.feasible) return breakdown.total;
  return opts.infeasible_penalty_scale * all_local_energy(pop, tasks, cfg);
}

// --- brute force -------------------------------------------------------------

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// All splits of `total` slices into parts.size() non-negative parts, each
// part additionally >= min_part.
void enumerate_splits(int total, int min_part, std::vector<int>& parts,
                      std::size_t at, const std::function<void()>& emit) {
  if (at + 1 == parts.size()) {
    if (total >= min_part) {
      parts[at] = total;
      emit();
    }
    return;
  }
  for (int take = min_part; take <= total; ++take) {
    parts[at] = take;
    enumerate_splits(total - take, min_part, parts, at + 1, emit);
  }
}

bool lex_less(const DecisionVector& a, const DecisionVector& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

}  // namespace

std::uint64_t brute_force_combinations(const SystemConfig& cfg) {
  std::uint64_t z_count = 0;
  for (int m = 0; m <= cfg.c_cache_slots; ++m)
    z_count += binomial(cfg.n_tasks, m);
  std::uint64_t total = 0;
  for (int k = 0; k <= cfg.n_users; ++k) {
    const std::uint64_t x_choices = binomial(cfg.n_users, k);
    std::uint64_t y_choices;
    if (k == 0)
      y_choices = 1;
    else if (k > cfg.n_freq_slices)
      y_choices = 0;  // some offloader would get nothing
    else
      y_choices = binomial(cfg.n_freq_slices - 1, k - 1);
    total += x_choices * y_choices * z_count;
  }
  return total;
}

std::pair<DecisionVector, double> brute_force_optimum(
    const PopularityMatrix& pop, const ChannelState& chan,
    const std::vector<TaskSpec>& tasks, const SystemConfig& cfg,
    const EnergyOptions& opts, std::uint64_t max_combinations) {
  pop.validate();
  const int nu = cfg.n_users;
  const int nt = cfg.n_tasks;
  const int nf = cfg.n_freq_slices;

  std::uint64_t examined = 0;
  bool have_best = false;
  DecisionVector best;
  double best_energy = std::numeric_limits<double>::infinity();

  auto consider = [&](const DecisionVector& d) {
    if (++examined > max_combinations)
      throw SizeError("brute_force_optimum: combination guard exceeded (" +
                      std::to_string(max_combinations) + ")");
    const EnergyBreakdown b = total_energy(d, pop, chan, tasks, cfg, opts);
    if (!b.feasible) return;
    if (!have_best || b.total < best_energy ||
        (b.total == best_energy && lex_less(d, best))) {
      have_best = true;
      best = d;
      best_energy = b.total;
    }
  };

  std::vector<std::vector<std::uint8_t>> z_choices;
  for (int mask = 0; mask < (1 << nt); ++mask) {
    if (__builtin_popcount(mask) > cfg.c_cache_slots) continue;
    std::vector<std::uint8_t> z(nt, 0);
    for (int j = 0; j < nt; ++j) z[j] = (mask >> j) & 1;
    z_choices.push_back(std::move(z));
  }

  for (int xmask = 0; xmask < (1 << nu); ++xmask) {
    DecisionVector d;
    d.x.assign(nu, 0);
    d.y.assign(nu, 0.0);
    std::vector<int> offloaders;
    for (int i = 0; i < nu; ++i) {
      d.x[i] = (xmask >> i) & 1;
      if (d.x[i] == 0) offloaders.push_back(i);
    }
    const int n_up = static_cast<int>(offloaders.size());

    auto with_z = [&]() {
      for (const auto& z : z_choices) {
        d.z = z;
        consider(d);
      }
    };

    if (n_up == 0) {
      if (opts.strict_c4) {
        // Park all slices on each user in turn; only the printed formula
        // mode can tell the variants apart.
        for (int i = 0; i < nu; ++i) {
          std::fill(d.y.begin(), d.y.end(), 0.0);
          d.y[i] = 1.0;
          with_z();
        }
      } else {
        with_z();
      }
      continue;
    }
    if (n_up > nf) continue;  // no feasible allocation exists

    std::vector<int> parts(n_up, 0);
    enumerate_splits(nf, 1, parts, 0, [&]() {
      std::fill(d.y.begin(), d.y.end(), 0.0);
      for (int k = 0; k < n_up; ++k)
        d.y[offloaders[k]] = static_cast<double>(parts[k]) / nf;
      with_z();
    });
  }

  if (!have_best)
    throw NumericError("brute_force_optimum: no feasible decision exists");
  return {best, best_energy};
}

void write_breakdown_csv_header(std::ostream& out) {
  out << "slot,user,local_J,offload_J,mec_J,total_J,feasible\n";
}

void write_breakdown_csv(std::ostream& out, int slot,
                         const EnergyBreakdown& b) {
  const auto prec = out.precision(12);
  for (std::size_t i = 0; i < b.per_user.size(); ++i) {
    out << slot << ',' << i << ',' << b.components[i].local_j << ','
        << b.components[i].offload_j << ',' << b.components[i].mec_j << ','
        << b.per_user[i] << ',' << (b.feasible ? 1 : 0) << '\n';
  }
  out.precision(prec);
}

}  // namespace energy
}  // namespace nomamec
