#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cdelay/rng.hpp"

namespace cdelay {

/// Observation emitted by an environment. Tabular tasks also carry the
/// discrete cell index.
struct EnvState {
  std::vector<double> vec;
  std::optional<int> index;

  bool operator==(const EnvState&) const = default;
};

struct EnvAction {
  std::vector<double> vec;
  std::optional<int> index;

  bool operator==(const EnvAction&) const = default;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<Interval> action_bounds;
  int horizon = 1;
  double discount = 0.99;
  // Sizes of the discrete spaces; zero for continuous tasks.
  int num_states = 0;
  int num_actions = 0;

  bool discrete() const { return num_actions > 0; }
  void validate() const;
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  // True termination: no bootstrapping past this transition.
  bool terminated = false;
  // Time-limit cut; bootstrapping continues through it.
  bool truncated = false;

  bool done() const { return terminated || truncated; }
};

/// Delay-free episodic MDP. Implementations must be deterministic given the
/// reset seed and the action sequence.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual EnvState reset(std::uint64_t seed) = 0;
  /// Throws std::logic_error when the episode is already done.
  virtual StepResult step(const EnvAction& action) = 0;
  virtual EnvAction noop_action() const = 0;
  virtual EnvAction sample_action(Rng& rng) const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  int steps() const { return steps_; }
  bool done() const { return done_; }

 protected:
  int steps_ = 0;
  bool done_ = true;
};

/// 5x5 deterministic grid. Cell (x, y) has index x + 5 y; the agent starts at
/// (0, 0) and the goal is (4, 4). Every move costs -1; entering the goal pays
/// +10 and terminates. Moves into a wall leave the agent in place.
class GridWorld final : public Environment {
 public:
  enum Move : int { North = 0, East = 1, South = 2, West = 3 };

  static constexpr int kSize = 5;
  static constexpr int kNumActions = 4;
  static constexpr double kStepReward = -1.0;
  static constexpr double kGoalReward = 10.0;

  explicit GridWorld(int horizon = 50, double discount = 0.95);

  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(std::uint64_t seed) override;
  StepResult step(const EnvAction& action) override;
  EnvAction noop_action() const override { return action(North); }
  EnvAction sample_action(Rng& rng) const override;
  std::unique_ptr<Environment> clone() const override;

  static EnvAction action(int index);
  static EnvState cell_state(int cell);
  static int goal_cell() { return kSize * kSize - 1; }

  /// Pure transition on cell indices; the goal cell is absorbing.
  static int next_cell(int cell, int action);
  /// Reward for taking `action` in `cell` (0 once the goal is reached).
  static double reward(int cell, int action);

  int cell() const { return cell_; }

 private:
  EnvSpec spec_;
  int cell_ = 0;
};

/// Torque-limited pendulum. theta = 0 is upright and theta = pi hangs at rest.
/// Observation is (cos theta, sin theta, theta_dot).
class Pendulum final : public Environment {
 public:
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;

  explicit Pendulum(int horizon = 200, double discount = 0.99);

  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(std::uint64_t seed) override;
  StepResult step(const EnvAction& action) override;
  EnvAction noop_action() const override { return EnvAction{{0.0}, std::nullopt}; }
  EnvAction sample_action(Rng& rng) const override;
  std::unique_ptr<Environment> clone() const override;

  /// Places the pendulum in an arbitrary state and starts a fresh episode.
  EnvState set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }

  static double wrap_angle(double theta);

 private:
  EnvState observe() const;

  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

/// Builds an environment by name ("gridworld" or "pendulum").
std::unique_ptr<Environment> make_env(const std::string& name, int horizon = 0);

}  // namespace cdelay
