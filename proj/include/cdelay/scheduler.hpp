#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cdelay/delay_channel.hpp"
#include "cdelay/env.hpp"
#include "cdelay/rng.hpp"

namespace cdelay {

enum class SchedulerVariant { conservative, ordered, unordered, quantile_cutoff };

std::string to_string(SchedulerVariant v);
SchedulerVariant parse_variant(const std::string& name);

/// Time-indexing policy of the agent.
///
/// conservative     uses s_n exactly at n + o_max
/// ordered          uses states in generation order as soon as possible,
///                  switching to at most one new state per step
/// unordered        uses whichever state arrived most recently
/// quantile_cutoff  conservative with o_pmax < o_max; on overrun it keeps the
///                  previously used state
struct SchedulerMode {
  SchedulerVariant variant = SchedulerVariant::conservative;
  int o_max = 1;
  std::optional<int> o_pmax;

  /// Length of the action history carried by augmented states.
  int delta() const;
  void validate() const;
};

/// Decision time of the state generated at n under the conservative rule.
long conservative_tau(long n, int o_max);

/// Anchor state plus the action history that followed it.
///
/// Flattened layout is (base, a_oldest, ..., a_newest); tabular indexing uses
/// the same order with the oldest action most significant.
struct AugmentedState {
  EnvState base;
  std::vector<EnvAction> actions;
  // Decision time minus the anchor's generation time. Equals delta() in
  // conservative mode; the ordered agent may read it, the unordered agent may not.
  int lag = 0;

  std::vector<double> flatten() const;
  std::size_t flat_dim() const;
  bool operator==(const AugmentedState&) const = default;
};

/// Throws std::invalid_argument unless `history.size() == delta`.
AugmentedState build_augmented(EnvState anchor, std::vector<EnvAction> history, int delta);

/// Training record (x_t, s_t, a_t, r_t, x_{t+1}, s_{t+1}). The critic reads the
/// true states, the actor reads the augmented ones.
struct ReplayTuple {
  AugmentedState x_now;
  EnvState s_now;
  EnvAction a;
  double r = 0.0;
  AugmentedState x_next;
  EnvState s_next;
  bool terminal = false;

  bool operator==(const ReplayTuple&) const = default;
};

/// Window of per-time-step records needed to build augmented states and
/// replay tuples. Entry n holds s_n once observed, a_n once taken, and the
/// augmented state a_n was chosen from.
class TemporaryBuffer {
 public:
  struct Entry {
    long gen = 0;
    std::optional<TimedState> state;
    std::optional<EnvAction> action;
    std::optional<AugmentedState> input;
  };

  explicit TemporaryBuffer(int capacity);

  void reset();
  void put_state(const TimedState& ts);
  void put_decision(long t, EnvAction action, std::optional<AugmentedState> input);
  void put_input(long t, AugmentedState input);

  const Entry* find(long gen) const;
  /// a_gen, or `pad` for times before the episode started.
  const EnvAction& action_at(long gen, const EnvAction& pad) const;
  /// Drops every entry generated at or before `gen`.
  void pop_through(long gen);

  int capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  long front_gen() const { return front_; }

 private:
  Entry& ensure(long gen);

  int capacity_;
  long front_ = 1;
  std::deque<Entry> entries_;
};

/// Tuple for decision k = t - o_max, when both x_k and x_{k+1} exist; pops
/// every entry generated at or before t - 2 o_max. Missing states inside the
/// window are an internal fault (std::logic_error).
std::optional<ReplayTuple> emit_replay(TemporaryBuffer& buf, long t, int o_max);

using Policy = std::function<EnvAction(const AugmentedState&)>;

enum class WarmupKind { noop, random };

struct Decision {
  EnvAction action;
  std::optional<AugmentedState> input;
  bool warmup = true;
};

/// Chooses the usable state for each decision step and builds augmented states.
class Scheduler {
 public:
  explicit Scheduler(SchedulerMode mode);

  const SchedulerMode& mode() const { return mode_; }

  /// Channel-side choice of the anchor at time t; empty means "nothing usable
  /// yet". Conservative mode faults when its anchor is missing.
  std::optional<TimedState> select_anchor(DelayChannel& ch, long t) const;

  /// Anchor plus actions a_{t-delta}, ..., a_{t-1} (padded before time 1).
  AugmentedState materialize(const TimedState& anchor, const TemporaryBuffer& buf, long t,
                             const EnvAction& pad) const;

  /// One decision. Without a usable state, or without a policy, returns
  /// `idle` and never calls the policy.
  Decision decide(DelayChannel& ch, TemporaryBuffer& buf, long t, const Policy* policy,
                  const EnvAction& idle) const;

 private:
  SchedulerMode mode_;
};

/// Free-function forms of the decision rule.
EnvAction decide(const SchedulerMode& mode, DelayChannel& ch, TemporaryBuffer& buf, long t,
                 const Policy& policy, const EnvAction& idle);
EnvAction quantile_cutoff_decide(const SchedulerMode& mode, DelayChannel& ch, TemporaryBuffer& buf,
                                 long t, const Policy& policy, const EnvAction& idle);

struct RolloutConfig {
  SchedulerMode mode;
  DelaySpec delays;
  WarmupKind warmup = WarmupKind::noop;
};

struct StepRecord {
  long t = 0;
  EnvAction action;
  double reward = 0.0;
  bool warmup = true;
  std::optional<AugmentedState> input;
};

using ReplaySink = std::function<void(const ReplayTuple&)>;

/// Drives one environment through a delay channel under a scheduler.
///
/// Step t: advance the channel to t, decide a_t, emit the tuple for decision
/// t - 1 - lag (every state it needs has arrived by t), execute a_t and
/// enqueue s_{t+1}. `lag` is the largest possible delay. When the episode
/// ends the remaining tuples are drained as if the agent waited for the last
/// observations.
class Rollout {
 public:
  Rollout(Environment& env, RolloutConfig cfg);

  void set_replay_sink(ReplaySink sink) { sink_ = std::move(sink); }
  void set_log(EventLog* log);

  void begin_episode(std::uint64_t env_seed, Rng& delay_rng);
  /// A null policy disables the learner: augmented states are not built and
  /// the idle action is taken.
  StepRecord step(const Policy* policy, Rng& delay_rng, Rng& explore_rng);

  bool episode_done() const { return done_; }
  double episode_return() const { return return_; }
  long time() const { return t_; }
  int emission_lag() const { return lag_; }
  std::uint64_t tuples_emitted() const { return tuples_; }

  const DelayChannel& channel() const { return channel_; }
  const TemporaryBuffer& buffer() const { return buffer_; }
  const Scheduler& scheduler() const { return scheduler_; }

 private:
  void ingest(long t);
  void emit(long t);
  void drain();

  Environment& env_;
  RolloutConfig cfg_;
  Scheduler scheduler_;
  DelayChannel channel_;
  TemporaryBuffer buffer_;
  ReplaySink sink_;
  EnvAction idle_;
  int lag_ = 0;
  long t_ = 0;
  bool done_ = true;
  double return_ = 0.0;
  std::uint64_t tuples_ = 0;
};

}  // namespace cdelay
