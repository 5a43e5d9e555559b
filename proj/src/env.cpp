#include "cdelay/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cdelay {

void EnvSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("EnvSpec: horizon must be >= 1");
  if (!(discount > 0.0 && discount < 1.0))
    throw std::invalid_argument("EnvSpec: discount must lie in (0, 1)");
  if (static_cast<int>(action_bounds.size()) != action_dim)
    throw std::invalid_argument("EnvSpec: one bound interval per action dimension");
}

// ---------------------------------------------------------------- GridWorld

GridWorld::GridWorld(int horizon, double discount) {
  spec_.name = "gridworld";
  spec_.state_dim = 2;
  spec_.action_dim = 1;
  spec_.action_bounds = {{0.0, kNumActions - 1.0}};
  spec_.horizon = horizon;
  spec_.discount = discount;
  spec_.num_states = kSize * kSize;
  spec_.num_actions = kNumActions;
  spec_.validate();
}

EnvAction GridWorld::action(int index) {
  if (index < 0 || index >= kNumActions)
    throw std::invalid_argument("GridWorld: action index out of range");
  return EnvAction{{static_cast<double>(index)}, index};
}

EnvState GridWorld::cell_state(int cell) {
  return EnvState{{static_cast<double>(cell % kSize), static_cast<double>(cell / kSize)}, cell};
}

int GridWorld::next_cell(int cell, int action) {
  if (cell == goal_cell()) return cell;
  int x = cell % kSize;
  int y = cell / kSize;
  switch (action) {
    case North: y = std::max(0, y - 1); break;
    case East: x = std::min(kSize - 1, x + 1); break;
    case South: y = std::min(kSize - 1, y + 1); break;
    case West: x = std::max(0, x - 1); break;
    default: throw std::invalid_argument("GridWorld: action index out of range");
  }
  return x + kSize * y;
}

double GridWorld::reward(int cell, int action) {
  if (cell == goal_cell()) return 0.0;
  return next_cell(cell, action) == goal_cell() ? kGoalReward : kStepReward;
}

EnvState GridWorld::reset(std::uint64_t /*seed*/) {
  cell_ = 0;
  steps_ = 0;
  done_ = false;
  return cell_state(cell_);
}

StepResult GridWorld::step(const EnvAction& a) {
  if (done_) throw std::logic_error("GridWorld: step called on a finished episode");
  if (!a.index) throw std::invalid_argument("GridWorld: discrete action index required");
  const int move = *a.index;
  StepResult out;
  out.reward = reward(cell_, move);
  cell_ = next_cell(cell_, move);
  ++steps_;
  out.terminated = cell_ == goal_cell();
  out.truncated = !out.terminated && steps_ >= spec_.horizon;
  out.state = cell_state(cell_);
  done_ = out.done();
  return out;
}

EnvAction GridWorld::sample_action(Rng& rng) const {
  return action(static_cast<int>(rng() % kNumActions));
}

std::unique_ptr<Environment> GridWorld::clone() const {
  return std::make_unique<GridWorld>(*this);
}

// ----------------------------------------------------------------- Pendulum

Pendulum::Pendulum(int horizon, double discount) {
  spec_.name = "pendulum";
  spec_.state_dim = 3;
  spec_.action_dim = 1;
  spec_.action_bounds = {{-kMaxTorque, kMaxTorque}};
  spec_.horizon = horizon;
  spec_.discount = discount;
  spec_.validate();
}

double Pendulum::wrap_angle(double theta) {
  constexpr double kPi = std::numbers::pi;
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w - kPi;
}

EnvState Pendulum::observe() const {
  return EnvState{{std::cos(theta_), std::sin(theta_), theta_dot_}, std::nullopt};
}

EnvState Pendulum::reset(std::uint64_t seed) {
  Rng rng(seed);
  theta_ = (2.0 * uniform01(rng) - 1.0) * std::numbers::pi;
  theta_dot_ = 2.0 * uniform01(rng) - 1.0;
  steps_ = 0;
  done_ = false;
  return observe();
}

EnvState Pendulum::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult Pendulum::step(const EnvAction& a) {
  if (done_) throw std::logic_error("Pendulum: step called on a finished episode");
  if (a.vec.size() != 1) throw std::invalid_argument("Pendulum: action must be one torque value");
  const double u = std::clamp(a.vec[0], -kMaxTorque, kMaxTorque);
  const double th = wrap_angle(theta_);
  StepResult out;
  out.reward = -(th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);

  const double accel =
      3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) + 3.0 / (kMass * kLength * kLength) * u;
  theta_dot_ = std::clamp(theta_dot_ + accel * kDt, -kMaxSpeed, kMaxSpeed);
  theta_ += theta_dot_ * kDt;
  ++steps_;
  out.truncated = steps_ >= spec_.horizon;
  out.state = observe();
  done_ = out.done();
  return out;
}

EnvAction Pendulum::sample_action(Rng& rng) const {
  return EnvAction{{(2.0 * uniform01(rng) - 1.0) * kMaxTorque}, std::nullopt};
}

std::unique_ptr<Environment> Pendulum::clone() const {
  return std::make_unique<Pendulum>(*this);
}

std::unique_ptr<Environment> make_env(const std::string& name, int horizon) {
  if (name == "gridworld") return std::make_unique<GridWorld>(horizon > 0 ? horizon : 50);
  if (name == "pendulum") return std::make_unique<Pendulum>(horizon > 0 ? horizon : 200);
  throw std::invalid_argument("unknown environment '" + name + "'");
}

}  // namespace cdelay
