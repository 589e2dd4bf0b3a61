#pragma once

// Tabular Q-learning scheduler choosing the post-processing family for each
// mini-batch, plus the uniform random baseline.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfwm/common.hpp"

namespace sfwm {

struct scheduler_config {
  std::size_t n_states = 5;
  double beta = 10.0;
  std::vector<double> bias = {-0.001, 0.001, 0.0, 0.0, 0.0};
  double alpha = 0.2;
  double gamma = 0.5;
  double epsilon0 = 1.0;
  double epsilon_hold = 8000;  // epochs with epsilon held at epsilon0
  double epsilon_decay = 2.5e-4;  // per epoch after the hold
  double epsilon_floor = 0.0;

  void validate() const {
    if (n_states == 0) throw parameter_error("scheduler needs at least one state");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw parameter_error("gamma must lie in [0, 1)");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw parameter_error("alpha must lie in (0, 1]");
    if (bias.size() != n_states) throw parameter_error("bias vector length must equal the number of states");
    if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0)) throw parameter_error("epsilon floor must lie in [0, 1]");
  }
};

// Rows are states, columns actions.
struct q_table {
  std::size_t n = 0;
  std::vector<double> values;

  q_table() = default;
  explicit q_table(std::size_t states) : n(states), values(states * states, 0.0) {}

  double& operator()(std::size_t s, std::size_t a) { return values[s * n + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values[s * n + a]; }
  std::vector<double> row(std::size_t s) const {
    return {values.begin() + static_cast<std::ptrdiff_t>(s * n), values.begin() + static_cast<std::ptrdiff_t>((s + 1) * n)};
  }
  double row_max(std::size_t s) const {
    return *std::max_element(values.begin() + static_cast<std::ptrdiff_t>(s * n),
                             values.begin() + static_cast<std::ptrdiff_t>((s + 1) * n));
  }
};

struct scheduler_state {
  std::size_t current_state = 0;
  std::vector<double> history;  // last batch accuracy seen under each state
  double epsilon = 1.0;
  std::size_t step = 0;
};

inline scheduler_state initial_scheduler_state(const scheduler_config& cfg, rng_t& rng) {
  cfg.validate();
  scheduler_state st;
  st.current_state = uniform_index(rng, cfg.n_states);
  st.history.assign(cfg.n_states, 0.0);
  st.epsilon = std::clamp(cfg.epsilon0, cfg.epsilon_floor, 1.0);
  return st;
}

// Exploration rate after `elapsed` epochs.
inline double epsilon_at(double elapsed, const scheduler_config& cfg) {
  const double decayed = cfg.epsilon0 - std::max(0.0, elapsed - cfg.epsilon_hold) * cfg.epsilon_decay;
  return std::clamp(decayed, cfg.epsilon_floor, 1.0);
}

// Lowest index wins ties.
inline std::size_t greedy_action(const q_table& q, std::size_t state) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.n; ++a)
    if (q(state, a) > q(state, best)) best = a;
  return best;
}

inline std::size_t select_action(const scheduler_state& st, const q_table& q, rng_t& rng) {
  const double u = uniform01(rng);
  if (u < 1.0 - st.epsilon) return greedy_action(q, st.current_state);
  return uniform_index(rng, q.n);
}

inline double compute_reward(double f, std::size_t next_state, const std::vector<double>& history,
                             const scheduler_config& cfg) {
  return cfg.beta * (f - history.at(next_state)) + f + cfg.bias.at(next_state);
}

inline void update_q(q_table& q, std::size_t s, std::size_t a, double r, std::size_t s_next,
                     const scheduler_config& cfg) {
  if (s >= q.n || a >= q.n || s_next >= q.n) throw parameter_error("Q-table index out of range");
  q(s, a) += cfg.alpha * (r + cfg.gamma * q.row_max(s_next) - q(s, a));
}

struct scheduler_record {
  std::size_t step = 0;
  std::size_t state = 0;
  std::size_t action = 0;
  double accuracy = 0;
  double reward = 0;
  double epsilon = 0;
  std::vector<double> q_row;
};

inline nlohmann::json to_json(const scheduler_record& r) {
  return {{"step", r.step},     {"s_t", r.state},       {"a_t", r.action}, {"f_t", r.accuracy},
          {"r_t", r.reward},    {"epsilon", r.epsilon}, {"q_row", r.q_row}};
}

// Consumes the accuracy f measured on the batch processed under `action`
// (which becomes s_{t+1}): reward, Q update, then the history write, then the
// exploration decay. `elapsed` is the epoch (or step) count for the decay.
inline scheduler_record scheduler_step(scheduler_state& st, q_table& q, std::size_t action, double f,
                                       const scheduler_config& cfg, double elapsed) {
  scheduler_record rec;
  rec.step = st.step;
  rec.state = st.current_state;
  rec.action = action;
  rec.accuracy = f;
  rec.epsilon = st.epsilon;
  rec.reward = compute_reward(f, action, st.history, cfg);
  update_q(q, st.current_state, action, rec.reward, action, cfg);
  rec.q_row = q.row(st.current_state);
  st.epsilon = epsilon_at(elapsed, cfg);
  st.history[action] = f;
  st.current_state = action;
  ++st.step;
  return rec;
}

inline std::size_t random_scheduler(rng_t& rng, std::size_t n_states = 5) { return uniform_index(rng, n_states); }

enum class scheduler_kind { rl, random };

// Uniform front end over both schedulers for the training loop.
class op_scheduler {
 public:
  op_scheduler(scheduler_kind kind, const scheduler_config& cfg, rng_t& rng)
      : kind_(kind), cfg_(cfg), q_(cfg.n_states), state_(initial_scheduler_state(cfg, rng)) {}

  std::size_t choose(rng_t& rng) {
    pending_ = kind_ == scheduler_kind::rl ? select_action(state_, q_, rng) : random_scheduler(rng, cfg_.n_states);
    return *pending_;
  }

  // Returns the trace record for RL scheduling, nothing for the random one.
  std::optional<scheduler_record> observe(double f, double elapsed) {
    if (!pending_) throw error("observe() called without a pending choice");
    const std::size_t a = *pending_;
    pending_.reset();
    if (kind_ != scheduler_kind::rl) {
      state_.history[a] = f;
      state_.current_state = a;
      ++state_.step;
      return std::nullopt;
    }
    return scheduler_step(state_, q_, a, f, cfg_, elapsed);
  }

  scheduler_kind kind() const noexcept { return kind_; }
  const q_table& table() const noexcept { return q_; }
  const scheduler_state& state() const noexcept { return state_; }

 private:
  scheduler_kind kind_;
  scheduler_config cfg_;
  q_table q_;
  scheduler_state state_;
  std::optional<std::size_t> pending_;
};

}  // namespace sfwm
