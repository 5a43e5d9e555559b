#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdelay/delay_channel.hpp"
#include "cdelay/env.hpp"
#include "cdelay/mlp.hpp"
#include "cdelay/scheduler.hpp"

namespace cdelay {

struct SacHyper {
  double gamma = 0.99;
  double alpha = 0.2;
  // Target smoothing: target <- (1 - xi) online + xi target.
  double xi = 0.995;
  // Read the smoothing rule literally instead: target <- xi online + (1 - xi) target.
  bool literal_polyak = false;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  int batch_size = 256;
  std::size_t capacity = 1'000'000;
  int hidden = 64;
  // Gradient steps start once the replay buffer holds this many tuples.
  std::size_t warmup_transitions = 1000;
  double divergence_limit = 1e6;

  void validate() const;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replay tuple with every field flattened for batched network input.
struct Transition {
  Vector x;       // augmented state the action was chosen from
  Vector s;       // true state at decision time
  Vector a;
  double r = 0.0;
  Vector x_next;
  Vector s_next;
  bool terminal = false;

  static Transition from(const ReplayTuple& t);
};

/// Column-stacked minibatch.
struct FlatBatch {
  Matrix x, s, a, x_next, s_next;
  Vector r;
  Vector not_done;  // 0 at true termination, 1 otherwise (truncation bootstraps)

  static FlatBatch stack(const std::vector<const Transition*>& items);
  Eigen::Index size() const { return r.size(); }
};

/// Bounded FIFO with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const ReplayTuple& t) { push(Transition::from(t)); }
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const;  // i = 0 is the oldest

  /// Throws std::logic_error when fewer than `n` tuples are stored.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::vector<Transition> items_;
};

/// Counts network calls and checks their input widths.
struct WidthAudit {
  Eigen::Index actor_width = 0;
  Eigen::Index critic_width = 0;
  std::uint64_t actor_calls = 0;
  std::uint64_t critic_calls = 0;
  std::uint64_t violations = 0;

  void actor(Eigen::Index rows);
  void critic(Eigen::Index rows);
};

/// Tanh-squashed Gaussian policy over augmented states.
class Actor {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  struct Sample {
    Matrix mean;
    Matrix log_std;  // clamped
    Matrix noise;
    Matrix squashed;  // tanh(mean + std * noise)
    Matrix action;    // scaled to the bounds
    Vector log_prob;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> clamped;
  };

  Actor() = default;
  Actor(int in_dim, std::vector<Interval> bounds, int hidden);

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  int action_dim() const { return static_cast<int>(scale_.size()); }
  int in_dim() const { return net_.in_dim(); }
  const Vector& scale() const { return scale_; }
  const Vector& offset() const { return offset_; }

  /// Reparameterised sample for the given standard-normal noise.
  Sample sample(const Matrix& x, const Matrix& noise, Mlp::Cache& cache) const;
  Sample sample(const Matrix& x, const Matrix& noise) const;

  /// Log-density of an arbitrary in-bounds action (used by the quadrature check).
  double log_prob(std::span<const double> x, std::span<const double> action) const;

  EnvAction act(const AugmentedState& x, Rng& rng) const;
  EnvAction act_mean(const AugmentedState& x) const;

 private:
  Mlp net_;
  Vector scale_;
  Vector offset_;
};

/// Two Q-heads over (state, action) in the original state space, with
/// target copies.
class BetaCritic {
 public:
  BetaCritic() = default;
  BetaCritic(int state_dim, int action_dim, int hidden);

  Mlp& head(int i) { return heads_[i]; }
  const Mlp& head(int i) const { return heads_[i]; }
  Mlp& target(int i) { return targets_[i]; }
  const Mlp& target(int i) const { return targets_[i]; }
  int in_dim() const { return heads_[0].in_dim(); }

  void init(Rng& rng);
  void sync_targets();

 private:
  Mlp heads_[2];
  Mlp targets_[2];
};

/// y = r + gamma (not terminal) (q_target - alpha log pi).
double beta_critic_target(double r, double gamma, bool terminal, double target_q, double log_prob,
                          double alpha);

/// Batched critic targets; a' ~ pi(. | x_next) drawn with `noise`.
Vector beta_critic_targets(const FlatBatch& b, const Actor& actor, const BetaCritic& critic,
                           const SacHyper& h, const Matrix& noise, WidthAudit* audit = nullptr);

struct CriticLoss {
  double loss = 0.0;
  Vector grad[2];
};

/// Mean over the batch of 1/2 (Q_i(s, a) - y)^2, summed over both heads.
CriticLoss beta_critic_loss(const FlatBatch& b, const BetaCritic& critic, const Vector& targets,
                            WidthAudit* audit = nullptr);
CriticLoss beta_critic_loss(const FlatBatch& b, const Actor& actor, const BetaCritic& critic,
                            const SacHyper& h, const Matrix& noise, WidthAudit* audit = nullptr);

struct ActorLoss {
  double loss = 0.0;
  Vector grad;
};

/// Mean over the batch of alpha log pi(a | x) - min_i Q_i(s, a), a
/// reparameterised from the actor at x.
ActorLoss actor_loss(const FlatBatch& b, const Actor& actor, const BetaCritic& critic,
                     const SacHyper& h, const Matrix& noise, WidthAudit* audit = nullptr);

void soft_update(const Mlp& online, Mlp& target, double xi, bool literal = false);
void soft_update(BetaCritic& critic, double xi, bool literal = false);

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Actor, beta-critic, optimisers and the learner's private sampling stream.
class BpqlAgent {
 public:
  BpqlAgent(const EnvSpec& env, int delta, const SacHyper& h, Rng& init_rng);

  EnvAction act(const AugmentedState& x, Rng& explore);
  /// One critic step, one actor step, one target update.
  void update(const ReplayBuffer& replay);

  const Actor& actor() const { return actor_; }
  Actor& actor() { return actor_; }
  const BetaCritic& critic() const { return critic_; }
  BetaCritic& critic() { return critic_; }
  const WidthAudit& audit() const { return audit_; }
  const SacHyper& hyper() const { return h_; }
  double last_critic_loss() const { return last_critic_; }
  double last_actor_loss() const { return last_actor_; }
  long updates() const { return updates_; }

 private:
  SacHyper h_;
  Actor actor_;
  BetaCritic critic_;
  Adam actor_opt_;
  Adam critic_opt_[2];
  Rng rng_;
  WidthAudit audit_;
  double last_critic_ = 0.0;
  double last_actor_ = 0.0;
  long updates_ = 0;
};

struct BpqlConfig {
  std::string env = "pendulum";
  SchedulerMode mode;
  DelaySpec delays;
  SacHyper hyper;
  long total_steps = 100000;
  std::uint64_t seed = 1;
  int curve_window = 10;
};

struct CurvePoint {
  int episode = 0;
  long step = 0;
  double episode_return = 0.0;
  double avg_return = 0.0;  // trailing mean over curve_window episodes

  bool operator==(const CurvePoint&) const = default;
};

struct BpqlResult {
  std::vector<CurvePoint> curve;
  WidthAudit audit;
  long updates = 0;
  Actor actor;
  BetaCritic critic;

  /// Mean episode return over the last `episodes` episodes.
  double final_mean(int episodes) const;
};

/// Conservative-style BPQL training loop: scheduler-driven interaction, replay
/// emission, then one gradient step per environment step of the episode.
/// Throws DivergenceError if a loss exceeds the limit or parameters go non-finite.
BpqlResult train_bpql(const BpqlConfig& cfg);

/// Plain delay-free SAC loop without the delay machinery; the reference for
/// the o_max = 0 configuration.
BpqlResult train_sac_reference(const BpqlConfig& cfg);

/// Versioned text dump of every parameter array with shape headers.
void save_checkpoint(std::ostream& os, const Actor& actor, const BetaCritic& critic);
void load_checkpoint(std::istream& is, Actor& actor, BetaCritic& critic);

}  // namespace cdelay
