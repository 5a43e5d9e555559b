#include "cdelay/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cdelay {

namespace {

constexpr std::size_t kMaxTableEntries = std::size_t{1} << 27;

}  // namespace

AugTable::AugTable(int num_states, int num_actions, int delta, int lag_slots)
    : num_states_(num_states), num_actions_(num_actions), delta_(delta), lag_slots_(lag_slots) {
  if (num_states < 1 || num_actions < 1 || delta < 0 || lag_slots < 1)
    throw std::invalid_argument("AugTable: invalid dimensions");
  for (int i = 0; i < delta; ++i) {
    radix_ *= static_cast<std::size_t>(num_actions);
    if (radix_ > kMaxTableEntries) throw std::length_error("AugTable: action history too long");
  }
  rows_ = static_cast<std::size_t>(lag_slots) * num_states * radix_;
  if (rows_ * num_actions > kMaxTableEntries) throw std::length_error("AugTable: table too large");
  values_.assign(rows_ * num_actions, 0.0);
}

std::size_t AugTable::row(int base, std::span<const int> history, int lag_slot) const {
  if (base < 0 || base >= num_states_) throw std::out_of_range("AugTable: base index out of range");
  if (static_cast<int>(history.size()) != delta_)
    throw std::invalid_argument("AugTable: history length must equal delta");
  if (lag_slot < 0 || lag_slot >= lag_slots_) throw std::out_of_range("AugTable: lag slot out of range");
  std::size_t h = 0;
  for (int a : history) {
    if (a < 0 || a >= num_actions_) throw std::out_of_range("AugTable: action index out of range");
    h = h * num_actions_ + a;
  }
  return (static_cast<std::size_t>(lag_slot) * num_states_ + base) * radix_ + h;
}

std::size_t AugTable::row(const AugmentedState& x) const {
  if (!x.base.index) throw std::invalid_argument("AugTable: augmented state has no discrete base");
  std::vector<int> hist;
  hist.reserve(x.actions.size());
  for (const auto& a : x.actions) {
    if (!a.index) throw std::invalid_argument("AugTable: action has no discrete index");
    hist.push_back(*a.index);
  }
  const int slot = lag_slots_ > 1 ? x.lag - 1 : 0;
  return row(*x.base.index, hist, slot);
}

double AugTable::max_q(std::size_t r) const {
  auto v = row_values(r);
  return *std::max_element(v.begin(), v.end());
}

int AugTable::greedy(std::size_t r) const {
  auto v = row_values(r);
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double q_update(AugTable& table, std::size_t row, int action, double reward, std::size_t next_row,
                bool terminal, double lr, double gamma) {
  const double target = reward + (terminal ? 0.0 : gamma * table.max_q(next_row));
  double& q = table.q(row, action);
  q = (1.0 - lr) * q + lr * target;
  return q;
}

double q_update(AugTable& table, const ReplayTuple& t, double lr, double gamma) {
  if (!t.a.index) throw std::invalid_argument("q_update: tuple action has no discrete index");
  return q_update(table, table.row(t.x_now), *t.a.index, t.r, table.row(t.x_next), t.terminal, lr,
                  gamma);
}

// ------------------------------------------------------ AugmentedGridModel

namespace {

std::size_t history_radix(int delta) {
  std::size_t r = 1;
  for (int i = 0; i < delta; ++i) r *= GridWorld::kNumActions;
  return r;
}

}  // namespace

std::size_t AugmentedGridModel::num_rows() const {
  return static_cast<std::size_t>(GridWorld::kSize * GridWorld::kSize) * history_radix(delta);
}

int AugmentedGridModel::base_of(std::size_t row) const {
  return static_cast<int>(row / history_radix(delta));
}

std::vector<int> AugmentedGridModel::history_of(std::size_t row) const {
  std::size_t h = row % history_radix(delta);
  std::vector<int> out(delta);
  for (int i = delta - 1; i >= 0; --i) {
    out[i] = static_cast<int>(h % GridWorld::kNumActions);
    h /= GridWorld::kNumActions;
  }
  return out;
}

int AugmentedGridModel::current_cell(std::size_t row) const {
  int cell = base_of(row);
  for (int a : history_of(row)) cell = GridWorld::next_cell(cell, a);
  return cell;
}

bool AugmentedGridModel::absorbing(std::size_t row) const {
  return current_cell(row) == GridWorld::goal_cell();
}

AugmentedGridModel::Outcome AugmentedGridModel::transition(std::size_t row, int action) const {
  const int base = base_of(row);
  const auto hist = history_of(row);
  const int cur = current_cell(row);
  Outcome out;
  out.reward = GridWorld::reward(cur, action);
  out.terminal = cur != GridWorld::goal_cell() && GridWorld::next_cell(cur, action) == GridWorld::goal_cell();
  int next_base = base;
  std::size_t h = 0;
  if (delta == 0) {
    next_base = GridWorld::next_cell(base, action);
  } else {
    next_base = GridWorld::next_cell(base, hist[0]);
    for (int i = 1; i < delta; ++i) h = h * GridWorld::kNumActions + hist[i];
    h = h * GridWorld::kNumActions + action;
  }
  out.next_row = static_cast<std::size_t>(next_base) * history_radix(delta) + h;
  return out;
}

AugTable value_iteration_oracle(const GridWorld& env, int delta, double tol) {
  if (delta < 0) throw std::invalid_argument("value_iteration_oracle: delta must be >= 0");
  if (delta > kMaxTabularDelta)
    throw std::length_error("value_iteration_oracle: delta too large for an exact table");
  const double gamma = env.spec().discount;
  const AugmentedGridModel model{delta};
  AugTable q(env.spec().num_states, env.spec().num_actions, delta);
  AugTable next = q;
  const std::size_t rows = model.num_rows();
  for (int iter = 0; iter < 100000; ++iter) {
    double residual = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const bool absorbing = model.absorbing(r);
      for (int a = 0; a < q.num_actions(); ++a) {
        double v = 0.0;
        if (!absorbing) {
          const auto o = model.transition(r, a);
          v = o.reward + (o.terminal ? 0.0 : gamma * q.max_q(o.next_row));
        }
        residual = std::max(residual, std::abs(v - q.q(r, a)));
        next.q(r, a) = v;
      }
    }
    std::swap(q, next);
    if (residual < tol * (1.0 - gamma)) return q;
  }
  throw std::runtime_error("value_iteration_oracle: no convergence");
}

double bellman_residual(const AugTable& q, double gamma) {
  const AugmentedGridModel model{q.delta()};
  double residual = 0.0;
  for (std::size_t r = 0; r < model.num_rows(); ++r) {
    const bool absorbing = model.absorbing(r);
    for (int a = 0; a < q.num_actions(); ++a) {
      double v = 0.0;
      if (!absorbing) {
        const auto o = model.transition(r, a);
        v = o.reward + (o.terminal ? 0.0 : gamma * q.max_q(o.next_row));
      }
      residual = std::max(residual, std::abs(v - q.q(r, a)));
    }
  }
  return residual;
}

// ------------------------------------------------------------------ training

double epsilon_at(const TabularConfig& cfg, int episode) {
  const double span = cfg.anneal_fraction * cfg.episodes;
  const double frac = span > 0.0 ? episode / span : 1.0;
  if (frac >= 1.0) return cfg.eps_end;
  return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}

TabularResult train_tabular(const TabularConfig& cfg, bool keep_tuples) {
  const int delta = cfg.mode.delta();
  if (delta > kMaxTabularDelta) throw std::length_error("train_tabular: delta too large for a table");
  GridWorld env;
  const double gamma = env.spec().discount;
  const int lag_slots = cfg.mode.variant == SchedulerVariant::ordered && delta > 0 ? delta : 1;

  TabularResult out{AugTable(env.spec().num_states, env.spec().num_actions, delta, lag_slots), {}, {}, {}, {}};
  out.visits.assign(out.table.num_rows(), 0);
  out.returns.reserve(cfg.episodes);

  RngStreams rng(cfg.seed);
  Rollout rollout(env, RolloutConfig{cfg.mode, cfg.delays, cfg.warmup});
  rollout.set_replay_sink([&](const ReplayTuple& t) {
    const std::size_t r = out.table.row(t.x_now);
    q_update(out.table, r, *t.a.index, t.r, out.table.row(t.x_next), t.terminal, cfg.lr, gamma);
    ++out.visits[r];
    if (keep_tuples) out.tuples.push_back(t);
  });

  double eps = cfg.eps_start;
  const Policy policy = [&](const AugmentedState& x) {
    if (uniform01(rng.explore) < eps) return env.sample_action(rng.explore);
    return GridWorld::action(out.table.greedy(out.table.row(x)));
  };

  for (int e = 0; e < cfg.episodes; ++e) {
    eps = epsilon_at(cfg, e);
    rollout.begin_episode(rng.env(), rng.delay);
    while (!rollout.episode_done()) rollout.step(&policy, rng.delay, rng.explore);
    out.returns.push_back(rollout.episode_return());
    out.lengths.push_back(static_cast<int>(rollout.time()));
  }
  return out;
}

double greedy_agreement(const AugTable& learned, const AugTable& oracle,
                        const std::vector<std::size_t>& rows, double tie_tol) {
  if (rows.empty()) return 1.0;
  std::size_t match = 0;
  for (std::size_t r : rows) {
    const int a = learned.greedy(r);
    if (oracle.q(r, a) >= oracle.max_q(r) - tie_tol) ++match;
  }
  return static_cast<double>(match) / rows.size();
}

}  // namespace cdelay
