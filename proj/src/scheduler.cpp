#include "cdelay/scheduler.hpp"

#include <stdexcept>

namespace cdelay {

std::string to_string(SchedulerVariant v) {
  switch (v) {
    case SchedulerVariant::conservative: return "conservative";
    case SchedulerVariant::ordered: return "ordered";
    case SchedulerVariant::unordered: return "unordered";
    case SchedulerVariant::quantile_cutoff: return "quantile_cutoff";
  }
  return "?";
}

SchedulerVariant parse_variant(const std::string& name) {
  if (name == "conservative") return SchedulerVariant::conservative;
  if (name == "ordered") return SchedulerVariant::ordered;
  if (name == "unordered") return SchedulerVariant::unordered;
  if (name == "quantile_cutoff" || name == "quantile") return SchedulerVariant::quantile_cutoff;
  throw std::invalid_argument("unknown scheduler mode '" + name + "'");
}

int SchedulerMode::delta() const {
  return variant == SchedulerVariant::quantile_cutoff ? o_pmax.value_or(o_max) : o_max;
}

void SchedulerMode::validate() const {
  if (o_max < 0) throw std::invalid_argument("SchedulerMode: o_max must be >= 0");
  if (o_max == 0 && variant != SchedulerVariant::conservative && variant != SchedulerVariant::ordered)
    throw std::invalid_argument("SchedulerMode: o_max = 0 only exists for the delay-free agent");
  if (variant == SchedulerVariant::quantile_cutoff) {
    if (!o_pmax) throw std::invalid_argument("SchedulerMode: quantile_cutoff needs o_pmax");
    if (*o_pmax < 1 || *o_pmax > o_max)
      throw std::invalid_argument("SchedulerMode: o_pmax must lie in {1, ..., o_max}");
  }
}

long conservative_tau(long n, int o_max) {
  if (n <= 0) throw std::invalid_argument("conservative_tau: n must be > 0");
  if (o_max < 1) throw std::invalid_argument("conservative_tau: o_max must be >= 1");
  return n + o_max;
}

// ----------------------------------------------------------- AugmentedState

std::vector<double> AugmentedState::flatten() const {
  std::vector<double> out;
  out.reserve(flat_dim());
  out.insert(out.end(), base.vec.begin(), base.vec.end());
  for (const auto& a : actions) out.insert(out.end(), a.vec.begin(), a.vec.end());
  return out;
}

std::size_t AugmentedState::flat_dim() const {
  std::size_t n = base.vec.size();
  for (const auto& a : actions) n += a.vec.size();
  return n;
}

AugmentedState build_augmented(EnvState anchor, std::vector<EnvAction> history, int delta) {
  if (delta < 0 || static_cast<int>(history.size()) != delta)
    throw std::invalid_argument("build_augmented: history length must equal delta");
  return AugmentedState{std::move(anchor), std::move(history), delta};
}

// ---------------------------------------------------------- TemporaryBuffer

TemporaryBuffer::TemporaryBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("TemporaryBuffer: capacity must be >= 1");
}

void TemporaryBuffer::reset() {
  entries_.clear();
  front_ = 1;
}

TemporaryBuffer::Entry& TemporaryBuffer::ensure(long gen) {
  if (gen < front_) throw std::logic_error("TemporaryBuffer: entry already popped");
  while (static_cast<long>(entries_.size()) <= gen - front_) {
    entries_.push_back(Entry{front_ + static_cast<long>(entries_.size()), {}, {}, {}});
  }
  if (static_cast<int>(entries_.size()) > capacity_)
    throw std::logic_error("TemporaryBuffer: window exceeds capacity");
  return entries_[gen - front_];
}

void TemporaryBuffer::put_state(const TimedState& ts) { ensure(ts.gen_time).state = ts; }

void TemporaryBuffer::put_decision(long t, EnvAction action, std::optional<AugmentedState> input) {
  auto& e = ensure(t);
  e.action = std::move(action);
  e.input = std::move(input);
}

void TemporaryBuffer::put_input(long t, AugmentedState input) { ensure(t).input = std::move(input); }

const TemporaryBuffer::Entry* TemporaryBuffer::find(long gen) const {
  if (gen < front_ || gen - front_ >= static_cast<long>(entries_.size())) return nullptr;
  return &entries_[gen - front_];
}

const EnvAction& TemporaryBuffer::action_at(long gen, const EnvAction& pad) const {
  if (gen < 1) return pad;
  const Entry* e = find(gen);
  if (!e || !e->action) throw std::logic_error("TemporaryBuffer: action history missing");
  return *e->action;
}

void TemporaryBuffer::pop_through(long gen) {
  while (!entries_.empty() && front_ <= gen) {
    entries_.pop_front();
    ++front_;
  }
  if (entries_.empty() && front_ <= gen) front_ = gen + 1;
}

std::optional<ReplayTuple> emit_replay(TemporaryBuffer& buf, long t, int o_max) {
  const long k = t - o_max;
  std::optional<ReplayTuple> out;
  if (k >= 1) {
    const auto* now = buf.find(k);
    const auto* next = buf.find(k + 1);
    if (now && now->input && now->action && next && next->input) {
      if (!now->state || !next->state)
        throw std::logic_error("emit_replay: state missing from the replay window");
      out = ReplayTuple{*now->input,           now->state->state,         *now->action,
                        next->state->reward_in, *next->input,              next->state->state,
                        next->state->terminal};
    }
  }
  buf.pop_through(t - 2L * o_max);
  return out;
}

// ---------------------------------------------------------------- Scheduler

Scheduler::Scheduler(SchedulerMode mode) : mode_(mode) { mode_.validate(); }

std::optional<TimedState> Scheduler::select_anchor(DelayChannel& ch, long t) const {
  const int d = mode_.delta();
  switch (mode_.variant) {
    case SchedulerVariant::conservative: {
      if (t <= d) return std::nullopt;
      auto s = ch.take_observed(t - d);
      if (!s)
        throw std::logic_error("conservative scheduler: state generated at " + std::to_string(t - d) +
                               " unobserved at its maximum delay");
      return s;
    }
    case SchedulerVariant::ordered: return ch.next_usable_ordered();
    case SchedulerVariant::unordered: return ch.next_usable_unordered();
    case SchedulerVariant::quantile_cutoff: {
      if (t <= d) return std::nullopt;
      if (auto s = ch.take_observed(t - d)) return s;
      return ch.current();
    }
  }
  return std::nullopt;
}

AugmentedState Scheduler::materialize(const TimedState& anchor, const TemporaryBuffer& buf, long t,
                                      const EnvAction& pad) const {
  const int d = mode_.delta();
  AugmentedState x;
  x.base = anchor.state;
  x.actions.reserve(d);
  for (long n = t - d; n < t; ++n) x.actions.push_back(buf.action_at(n, pad));
  x.lag = static_cast<int>(t - anchor.gen_time);
  return x;
}

Decision Scheduler::decide(DelayChannel& ch, TemporaryBuffer& buf, long t, const Policy* policy,
                           const EnvAction& idle) const {
  Decision out{idle, std::nullopt, true};
  auto anchor = select_anchor(ch, t);
  if (!anchor) return out;
  out.warmup = false;
  if (policy) {
    out.input = materialize(*anchor, buf, t, idle);
    out.action = (*policy)(*out.input);
  }
  return out;
}

EnvAction decide(const SchedulerMode& mode, DelayChannel& ch, TemporaryBuffer& buf, long t,
                 const Policy& policy, const EnvAction& idle) {
  Scheduler s(mode);
  auto d = s.decide(ch, buf, t, &policy, idle);
  buf.put_decision(t, d.action, d.input);
  return d.action;
}

EnvAction quantile_cutoff_decide(const SchedulerMode& mode, DelayChannel& ch, TemporaryBuffer& buf,
                                 long t, const Policy& policy, const EnvAction& idle) {
  if (mode.variant != SchedulerVariant::quantile_cutoff || !mode.o_pmax)
    throw std::invalid_argument("quantile_cutoff_decide: mode needs o_pmax");
  return decide(mode, ch, buf, t, policy, idle);
}

// ------------------------------------------------------------------ Rollout

namespace {

int emission_lag_for(const RolloutConfig& cfg) { return std::max(cfg.mode.o_max, cfg.delays.o_max); }

}  // namespace

Rollout::Rollout(Environment& env, RolloutConfig cfg)
    : env_(env),
      cfg_(std::move(cfg)),
      scheduler_(cfg_.mode),
      channel_(cfg_.delays),
      buffer_(2 * emission_lag_for(cfg_) + 3),
      idle_(env.noop_action()),
      lag_(emission_lag_for(cfg_)) {
  if (cfg_.delays.max_delay() > cfg_.mode.o_max)
    throw std::invalid_argument("Rollout: delay support exceeds the scheduler's o_max");
  if (cfg_.mode.o_max == 0 && !cfg_.delays.delay_free())
    throw std::invalid_argument("Rollout: the delay-free agent needs a delay-free channel");
}

void Rollout::set_log(EventLog* log) { channel_.set_log(log); }

void Rollout::begin_episode(std::uint64_t env_seed, Rng& delay_rng) {
  channel_.reset();
  buffer_.reset();
  t_ = 0;
  return_ = 0.0;
  done_ = false;
  EnvState s0 = env_.reset(env_seed);
  channel_.push_generated(std::move(s0), 0.0, false, 1, delay_rng);
}

void Rollout::ingest(long t) {
  for (auto& ts : channel_.advance_to(t)) buffer_.put_state(ts);
}

void Rollout::emit(long t) {
  if (!sink_) {
    buffer_.pop_through(t - 2L * lag_);
    return;
  }
  if (auto tuple = emit_replay(buffer_, t, lag_)) {
    ++tuples_;
    sink_(*tuple);
  }
}

StepRecord Rollout::step(const Policy* policy, Rng& delay_rng, Rng& explore_rng) {
  if (done_) throw std::logic_error("Rollout: step called on a finished episode");
  ++t_;
  ingest(t_);

  Decision d = scheduler_.decide(channel_, buffer_, t_, policy, idle_);
  if (d.warmup && cfg_.warmup == WarmupKind::random) d.action = env_.sample_action(explore_rng);
  buffer_.put_decision(t_, d.action, d.input);
  emit(t_ - 1);

  StepResult r = env_.step(d.action);
  return_ += r.reward;
  channel_.push_generated(std::move(r.state), r.reward, r.terminated, t_ + 1, delay_rng);
  StepRecord rec{t_, std::move(d.action), r.reward, d.warmup, std::move(d.input)};
  if (r.done()) {
    done_ = true;
    if (sink_) drain();
  }
  return rec;
}

void Rollout::drain() {
  const long last = t_;
  for (long s = last + 1; s <= last + 1 + lag_; ++s) {
    ingest(s);
    if (s == last + 1) {
      // x_{T+1}: what the agent would have fed the policy next.
      if (auto anchor = scheduler_.select_anchor(channel_, s))
        buffer_.put_input(s, scheduler_.materialize(*anchor, buffer_, s, idle_));
    }
    emit(s - 1);
  }
}

}  // namespace cdelay
