#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdelay/delay_channel.hpp"
#include "cdelay/env.hpp"
#include "cdelay/scheduler.hpp"

namespace cdelay {

/// Dense Q-table over augmented states of a discrete task.
///
/// Row index = (lag_slot * |S| + base) * |A|^delta + history, where the
/// history is read in mixed radix |A| with the oldest action most significant.
/// `lag_slots` is 1 unless the learner can tell how stale its anchor is
/// (the ordered agent), in which case slot = lag - 1.
class AugTable {
 public:
  /// Throws std::length_error when the table would not fit.
  AugTable(int num_states, int num_actions, int delta, int lag_slots = 1);

  std::size_t row(const AugmentedState& x) const;
  std::size_t row(int base, std::span<const int> history, int lag_slot = 0) const;

  double& q(std::size_t row, int action) { return values_[row * num_actions_ + action]; }
  double q(std::size_t row, int action) const { return values_[row * num_actions_ + action]; }
  std::span<const double> row_values(std::size_t row) const {
    return {values_.data() + row * num_actions_, static_cast<std::size_t>(num_actions_)};
  }
  double max_q(std::size_t row) const;
  /// Highest-valued action; ties go to the lowest index.
  int greedy(std::size_t row) const;

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int delta() const { return delta_; }
  int lag_slots() const { return lag_slots_; }
  std::size_t num_rows() const { return rows_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const AugTable&) const = default;

 private:
  int num_states_;
  int num_actions_;
  int delta_;
  int lag_slots_;
  std::size_t radix_ = 1;  // |A|^delta
  std::size_t rows_ = 0;
  std::vector<double> values_;
};

/// Q(x,a) <- (1 - lr) Q(x,a) + lr (r + gamma max_a' Q(x',a')); the bootstrap
/// term is dropped when `terminal`. Returns the new value.
double q_update(AugTable& table, std::size_t row, int action, double reward, std::size_t next_row,
                bool terminal, double lr, double gamma);
double q_update(AugTable& table, const ReplayTuple& tuple, double lr, double gamma);

/// Exact model of the gridworld lifted to augmented states
/// (cell, a_1, ..., a_delta). The reward and termination of action a are
/// those of the true current cell, obtained by replaying the history.
struct AugmentedGridModel {
  int delta = 0;

  struct Outcome {
    std::size_t next_row = 0;
    double reward = 0.0;
    bool terminal = false;
  };

  std::size_t num_rows() const;
  int base_of(std::size_t row) const;
  std::vector<int> history_of(std::size_t row) const;
  /// Current cell implied by the row (anchor replayed through its history).
  int current_cell(std::size_t row) const;
  /// True once the goal has been reached; such rows are absorbing with value 0.
  bool absorbing(std::size_t row) const;
  Outcome transition(std::size_t row, int action) const;
};

/// Largest delta for which the 5x5 augmented table is built exactly.
inline constexpr int kMaxTabularDelta = 2;

/// Optimal augmented Q-values by Jacobi value iteration, iterated until the
/// Bellman residual drops below `tol`. Throws std::length_error for
/// delta > kMaxTabularDelta.
AugTable value_iteration_oracle(const GridWorld& env, int delta, double tol);

/// Largest |T Q - Q| over every (row, action) of the augmented grid model.
double bellman_residual(const AugTable& q, double gamma);

struct TabularConfig {
  SchedulerMode mode;
  DelaySpec delays;
  int episodes = 1000;
  std::uint64_t seed = 1;
  double lr = 0.1;
  double eps_start = 1.0;
  double eps_end = 0.05;
  // Fraction of the episodes over which epsilon is annealed linearly.
  double anneal_fraction = 0.5;
  WarmupKind warmup = WarmupKind::noop;
};

struct TabularResult {
  AugTable table;
  std::vector<double> returns;
  std::vector<int> lengths;  // environment steps per episode
  // Number of updates applied to each row.
  std::vector<std::uint32_t> visits;
  // Every emitted replay tuple, in order (only when requested).
  std::vector<ReplayTuple> tuples;
};

double epsilon_at(const TabularConfig& cfg, int episode);

/// Q-learning on the gridworld through the delayed scheduler: epsilon-greedy
/// decisions, one update per emitted replay tuple.
TabularResult train_tabular(const TabularConfig& cfg, bool keep_tuples = false);

/// Fraction of `rows` on which the greedy action of `learned` is one of the
/// optimal actions of `oracle` (within `tie_tol`).
double greedy_agreement(const AugTable& learned, const AugTable& oracle,
                        const std::vector<std::size_t>& rows, double tie_tol = 1e-9);

}  // namespace cdelay
