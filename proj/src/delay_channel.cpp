#include "cdelay/delay_channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cdelay {

// ---------------------------------------------------------------- DelaySpec

DelaySpec DelaySpec::uniform(int o_max) {
  if (o_max < 1) throw std::invalid_argument("DelaySpec::uniform: o_max must be >= 1");
  return DelaySpec{o_max, std::vector<double>(o_max, 1.0 / o_max)};
}

DelaySpec DelaySpec::point(int delay, int o_max) {
  if (o_max == 0) o_max = delay;
  if (delay < 1 || delay > o_max)
    throw std::invalid_argument("DelaySpec::point: delay must lie in {1, ..., o_max}");
  std::vector<double> pmf(o_max, 0.0);
  pmf[delay - 1] = 1.0;
  return DelaySpec{o_max, std::move(pmf)};
}

DelaySpec DelaySpec::custom(std::vector<double> pmf) {
  DelaySpec spec{static_cast<int>(pmf.size()), std::move(pmf)};
  spec.validate();
  return spec;
}

DelaySpec DelaySpec::none() { return DelaySpec{0, {1.0}}; }

double DelaySpec::prob(int delay) const {
  if (delay_free()) return delay == 0 ? 1.0 : 0.0;
  if (delay < 1 || delay > o_max) return 0.0;
  return pmf[delay - 1];
}

int DelaySpec::max_delay() const {
  if (delay_free()) return 0;
  for (int d = o_max; d >= 1; --d)
    if (pmf[d - 1] > 0.0) return d;
  return 0;
}

void DelaySpec::validate() const {
  if (delay_free()) {
    if (pmf.size() != 1 || pmf[0] != 1.0)
      throw std::invalid_argument("DelaySpec: delay-free spec must be a point mass at 0");
    return;
  }
  if (o_max < 1) throw std::invalid_argument("DelaySpec: o_max must be >= 1");
  if (static_cast<int>(pmf.size()) != o_max)
    throw std::invalid_argument("DelaySpec: pmf needs exactly o_max entries (delays 1..o_max)");
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument("DelaySpec: pmf entries must be finite and non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("DelaySpec: pmf must sum to 1 within 1e-12");
}

int sample_delay(const DelaySpec& spec, Rng& rng) {
  if (spec.delay_free()) return 0;
  const double u = uniform01(rng);
  double cdf = 0.0;
  for (int d = 1; d <= spec.o_max; ++d) {
    cdf += spec.pmf[d - 1];
    if (u < cdf) return d;
  }
  // Rounding left a sliver above the accumulated mass.
  return spec.max_delay();
}

double m_probability(const DelaySpec& spec, int tau_minus_n) {
  if (tau_minus_n < 0) throw std::invalid_argument("m_probability: tau - n must be >= 0");
  if (spec.delay_free()) return 1.0;
  double total = 0.0;
  for (int d = 1; d <= std::min(tau_minus_n, spec.o_max); ++d) total += spec.pmf[d - 1];
  return tau_minus_n >= spec.o_max ? 1.0 : total;
}

// ------------------------------------------------------------------- Events

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::gen: return "gen";
    case EventKind::obs: return "obs";
    case EventKind::use: return "use";
  }
  return "?";
}

std::string to_string(const Event& e) {
  std::ostringstream os;
  os << e.t << ',' << to_string(e.kind) << ',' << e.gen_time << ',' << e.delay;
  return os.str();
}

void EventLog::write_csv(std::ostream& os) const {
  os << "# cdelay-events v1\n";
  for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
  os << "t,kind,gen_time,delay\n";
  for (const auto& e : events) os << to_string(e) << '\n';
}

namespace {

EventKind parse_kind(const std::string& s) {
  if (s == "gen") return EventKind::gen;
  if (s == "obs") return EventKind::obs;
  if (s == "use") return EventKind::use;
  throw std::invalid_argument("event log: unknown event kind '" + s + "'");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

EventLog EventLog::read_csv(std::istream& is) {
  EventLog log;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos)
        log.meta[trim(line.substr(1, eq - 1))] = trim(line.substr(eq + 1));
      continue;
    }
    if (line.rfind("t,", 0) == 0) continue;  // column header
    std::istringstream row(line);
    std::string t, kind, gen, delay;
    if (!std::getline(row, t, ',') || !std::getline(row, kind, ',') || !std::getline(row, gen, ',') ||
        !std::getline(row, delay))
      throw std::invalid_argument("event log: malformed row at line " + std::to_string(lineno));
    try {
      log.add(std::stol(t), parse_kind(trim(kind)), std::stol(gen), std::stoi(delay));
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("event log: bad value at line " + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
  return log;
}

EventLog EventLog::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open event log '" + path + "'");
  return read_csv(in);
}

// ------------------------------------------------------------- DelayChannel

DelayChannel::DelayChannel(DelaySpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  // Under every scheduler a state leaves the channel within o_max + 1 steps of
  // its generation; a caller that never consumes makes the ring grow instead.
  slots_.resize(2 * static_cast<std::size_t>(spec_.o_max) + 4);
  in_flight_.reserve(spec_.o_max + 2);
  arrived_.reserve(spec_.o_max + 2);
}

void DelayChannel::reset() {
  for (auto& s : slots_) s.live = s.observed = false;
  in_flight_.clear();
  num_observed_ = 0;
  floor_ = 1;
  num_arrived_ = 0;
  latest_.reset();
  current_.reset();
  now_ = 0;
  last_gen_ = 0;
}

TimedState DelayChannel::push_generated(EnvState s, double reward_in, bool terminal, long n,
                                        Rng& rng) {
  return push_with_delay(std::move(s), reward_in, terminal, n, sample_delay(spec_, rng));
}

TimedState DelayChannel::push_with_delay(EnvState s, double reward_in, bool terminal, long n,
                                         int delay) {
  if (n != last_gen_ + 1)
    throw std::logic_error("DelayChannel: generation times must increase by one");
  const int lo = spec_.delay_free() ? 0 : 1;
  if (delay < lo || delay > spec_.o_max)
    throw std::invalid_argument("DelayChannel: delay outside the support {1, ..., o_max}");
  if (n + delay <= now_) throw std::logic_error("DelayChannel: state would arrive in the past");
  last_gen_ = n;
  TimedState ts{std::move(s), reward_in, terminal, n, delay, n + delay};
  if (log_) log_->add(n, EventKind::gen, n, delay);
  enqueue(ts);
  return ts;
}

void DelayChannel::grow() {
  std::vector<Slot> old(slots_.size() * 2);
  old.swap(slots_);
  for (auto& s : old)
    if (s.live) slot(s.ts.gen_time) = std::move(s);
}

void DelayChannel::enqueue(TimedState ts) {
  if (slot(ts.gen_time).live) grow();
  Slot& s = slot(ts.gen_time);
  s.live = true;
  s.observed = false;
  const Key k = key_of(ts.obs_time, ts.delay);
  s.ts = std::move(ts);
  auto later = [this](Key a, Key b) {
    ++comparisons_;
    return a > b;
  };
  in_flight_.push_back(k);
  std::push_heap(in_flight_.begin(), in_flight_.end(), later);
}

DelayChannel::Slot* DelayChannel::observed_slot(long gen) {
  Slot& s = slot(gen);
  return s.live && s.observed && s.ts.gen_time == gen ? &s : nullptr;
}

void DelayChannel::release(Slot& s) {
  if (s.observed) --num_observed_;
  s.live = s.observed = false;
}

void DelayChannel::discard_below(long gen) {
  for (; floor_ < gen; ++floor_)
    if (Slot* s = observed_slot(floor_)) release(*s);
}

std::span<const TimedState> DelayChannel::advance_to(long t) {
  if (t != now_ + 1) throw std::logic_error("DelayChannel: time must advance by exactly one step");
  now_ = t;
  auto later = [this](Key a, Key b) {
    ++comparisons_;
    return a > b;
  };
  num_arrived_ = 0;
  // The heap pops equal observation times in generation order already.
  while (!in_flight_.empty() && obs_of(in_flight_.front()) <= t) {
    std::pop_heap(in_flight_.begin(), in_flight_.end(), later);
    const long gen = gen_of(in_flight_.back());
    in_flight_.pop_back();
    Slot& s = slot(gen);
    if (log_) log_->add(t, EventKind::obs, gen, s.ts.delay);
    // Assigning into a kept element reuses its storage.
    if (num_arrived_ < arrived_.size())
      arrived_[num_arrived_] = s.ts;
    else
      arrived_.push_back(s.ts);
    ++num_arrived_;
    if (gen < floor_) {
      // Superseded before it arrived; it can never be used.
      release(s);
    } else {
      s.observed = true;
      ++num_observed_;
    }
  }
  if (num_arrived_ > 0) latest_ = arrived_[num_arrived_ - 1];
  return {arrived_.data(), num_arrived_};
}

std::optional<TimedState> DelayChannel::mark_used(const TimedState& ts) {
  if (log_ && (!current_ || current_->gen_time != ts.gen_time))
    log_->add(now_, EventKind::use, ts.gen_time, ts.delay);
  current_ = ts;
  return current_;
}

std::optional<TimedState> DelayChannel::next_usable_ordered() {
  const long want = last_used_gen() + 1;
  if (Slot* s = observed_slot(want)) {
    discard_below(want);
    auto out = mark_used(s->ts);
    release(*s);
    floor_ = want + 1;
    return out;
  }
  return current_;
}

std::optional<TimedState> DelayChannel::next_usable_unordered() {
  if (!latest_) return std::nullopt;
  // Everything observed so far is superseded by the latest arrival.
  discard_below(last_gen_ + 1);
  return mark_used(*latest_);
}

std::optional<TimedState> DelayChannel::take_observed(long gen) {
  discard_below(gen);
  Slot* s = observed_slot(gen);
  if (!s) return std::nullopt;
  auto out = mark_used(s->ts);
  release(*s);
  floor_ = gen + 1;
  return out;
}

}  // namespace cdelay
