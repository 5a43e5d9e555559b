#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdelay/env.hpp"
#include "cdelay/rng.hpp"

namespace cdelay {

/// Distribution of observation delays with finite support {1, ..., o_max}.
///
/// `pmf[d - 1]` is the probability of delay d. The delay-free configuration is
/// the single exception: o_max = 0 with all mass on delay 0.
struct DelaySpec {
  int o_max = 1;
  std::vector<double> pmf{1.0};

  static DelaySpec uniform(int o_max);
  /// All mass on `delay`; support bound `o_max` defaults to the delay itself.
  static DelaySpec point(int delay, int o_max = 0);
  static DelaySpec custom(std::vector<double> pmf);
  static DelaySpec none();

  bool delay_free() const { return o_max == 0; }
  double prob(int delay) const;
  /// Largest delay carrying positive mass.
  int max_delay() const;
  /// Throws std::invalid_argument unless the pmf is a distribution over the support.
  void validate() const;
};

/// Draws a delay by inverting the cumulative distribution.
int sample_delay(const DelaySpec& spec, Rng& rng);

/// Probability that a delay is at most `tau_minus_n`, i.e. that a state
/// generated `tau_minus_n` steps ago has already arrived.
double m_probability(const DelaySpec& spec, int tau_minus_n);

/// A generated state together with its channel timing. The delay is simulator
/// knowledge; agents must not read it.
struct TimedState {
  EnvState state;
  // Reward received on entering this state (the reward of the previous action).
  double reward_in = 0.0;
  // Entering this state ended the episode by true termination.
  bool terminal = false;
  long gen_time = 0;
  int delay = 0;
  long obs_time = 0;
};

enum class EventKind { gen, obs, use };

struct Event {
  long t = 0;
  EventKind kind = EventKind::gen;
  long gen_time = 0;
  int delay = 0;

  bool operator==(const Event&) const = default;
};

std::string to_string(EventKind kind);
std::string to_string(const Event& e);

/// Plain CSV event log: a versioned comment line, optional `# key=value`
/// metadata lines, a column header row, then one `t,kind,gen_time,delay` row
/// per event.
struct EventLog {
  std::map<std::string, std::string> meta;
  std::vector<Event> events;

  void add(long t, EventKind kind, long gen, int delay) { events.push_back({t, kind, gen, delay}); }
  void write_csv(std::ostream& os) const;
  static EventLog read_csv(std::istream& is);
  static EventLog read_file(const std::string& path);
};

/// Random-delay observation channel.
///
/// States travel in a min-heap keyed by observation time, holding at most
/// o_max + 1 entries, so each per-step operation costs O(log o_max)
/// comparisons. The states themselves sit in a ring indexed by generation
/// time; arrivals are flagged there as observed, and the schedulers draw them
/// in generation order. Observed states older than one already handed out
/// are discarded.
class DelayChannel {
 public:
  explicit DelayChannel(DelaySpec spec);

  const DelaySpec& spec() const { return spec_; }

  /// Clears all buffers; observations never cross episode boundaries.
  void reset();

  /// Enqueues the state generated at time `n` with a freshly sampled delay.
  TimedState push_generated(EnvState s, double reward_in, bool terminal, long n, Rng& rng);
  /// Same with a scripted delay (trace replay).
  TimedState push_with_delay(EnvState s, double reward_in, bool terminal, long n, int delay);

  /// Moves to time t = now + 1 and returns every state observed at t, sorted
  /// by generation time. The list stays valid until the next call.
  std::span<const TimedState> advance_to(long t);

  /// Ordered rule: switch to s_{u+1} if it has been observed, otherwise keep
  /// using s_u. Empty until the first state is usable.
  std::optional<TimedState> next_usable_ordered();

  /// Observed-order rule: the most recently observed state, ties going to the
  /// larger generation time. Empty until something has been observed.
  std::optional<TimedState> next_usable_unordered();

  /// Removes and returns the observed state generated at `gen`, discarding any
  /// observed state generated earlier. Empty if `gen` has not been observed.
  std::optional<TimedState> take_observed(long gen);

  /// The state most recently returned by one of the selection calls.
  const std::optional<TimedState>& current() const { return current_; }

  long now() const { return now_; }
  long last_used_gen() const { return current_ ? current_->gen_time : 0; }
  long last_generated() const { return last_gen_; }
  std::size_t in_flight_size() const { return in_flight_.size(); }
  std::size_t observed_size() const { return num_observed_; }

  /// Heap comparisons performed since construction.
  std::uint64_t comparisons() const { return comparisons_; }

  void set_log(EventLog* log) { log_ = log; }

 private:
  // (obs_time, gen_time) packed into one integer with the same order:
  // obs_time * (o_max + 1) + (o_max - delay).
  using Key = long;
  Key key_of(long obs_time, int delay) const { return obs_time * (spec_.o_max + 1) + (spec_.o_max - delay); }
  long obs_of(Key k) const { return k / (spec_.o_max + 1); }
  long gen_of(Key k) const { return obs_of(k) - (spec_.o_max - k % (spec_.o_max + 1)); }
  struct Slot {
    TimedState ts;
    bool live = false;      // in flight or observed
    bool observed = false;
  };

  Slot& slot(long gen) { return slots_[static_cast<std::size_t>(gen) % slots_.size()]; }
  void grow();
  void enqueue(TimedState ts);
  std::optional<TimedState> mark_used(const TimedState& ts);
  Slot* observed_slot(long gen);
  void release(Slot& s);
  void discard_below(long gen);

  DelaySpec spec_;
  std::vector<Slot> slots_;
  std::vector<Key> in_flight_;   // min-heap on packed keys
  std::size_t num_observed_ = 0;
  long floor_ = 1;  // observed states generated earlier are never handed out
  std::vector<TimedState> arrived_;  // grows, never shrinks; reused for storage
  std::size_t num_arrived_ = 0;
  std::optional<TimedState> latest_;   // most recent arrival
  std::optional<TimedState> current_;
  long now_ = 0;
  long last_gen_ = 0;
  std::uint64_t comparisons_ = 0;
  EventLog* log_ = nullptr;
};

}  // namespace cdelay
