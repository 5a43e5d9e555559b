#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "cdelay/delay_channel.hpp"

using namespace cdelay;

namespace {

EnvState dummy(long n) { return EnvState{{static_cast<double>(n)}, static_cast<int>(n)}; }

// Channel preloaded with scripted delays d[0], d[1], ... for n = 1, 2, ...
// pushed one per step the way the rollout does it.
struct Script {
  DelayChannel ch;
  std::vector<int> delays;
  long pushed = 0;

  Script(int o_max, std::vector<int> d) : ch(DelaySpec::uniform(o_max)), delays(std::move(d)) { push_next(); }

  void push_next() {
    if (pushed < static_cast<long>(delays.size())) {
      ++pushed;
      ch.push_with_delay(dummy(pushed), 0.0, false, pushed, delays[pushed - 1]);
    }
  }
  std::vector<TimedState> step(long t) {
    const auto got = ch.advance_to(t);
    return {got.begin(), got.end()};
  }
};

std::vector<long> gens(std::span<const TimedState> v) {
  std::vector<long> out;
  for (const auto& s : v) out.push_back(s.gen_time);
  return out;
}

}  // namespace

TEST(DelaySpec, Constructors) {
  const DelaySpec u = DelaySpec::uniform(4);
  EXPECT_EQ(u.o_max, 4);
  EXPECT_DOUBLE_EQ(u.prob(2), 0.25);
  EXPECT_DOUBLE_EQ(u.prob(5), 0.0);
  const DelaySpec p = DelaySpec::point(3);
  EXPECT_EQ(p.o_max, 3);
  EXPECT_EQ(p.max_delay(), 3);
  const DelaySpec q = DelaySpec::point(2, 5);
  EXPECT_EQ(q.o_max, 5);
  EXPECT_EQ(q.max_delay(), 2);
  EXPECT_THROW(DelaySpec::point(0), std::invalid_argument);
  EXPECT_THROW(DelaySpec::uniform(0), std::invalid_argument);
  EXPECT_EQ(DelaySpec::none().max_delay(), 0);
}

TEST(DelaySpec, ValidateChecksMass) {
  EXPECT_THROW(DelaySpec::custom({0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(DelaySpec::custom({1.2, -0.2}), std::invalid_argument);
  EXPECT_THROW(DelaySpec::custom({}), std::invalid_argument);
  EXPECT_NO_THROW(DelaySpec::custom({0.25, 0.25, 0.5}));
  DelaySpec off{3, {0.5, 0.5}};
  EXPECT_THROW(off.validate(), std::invalid_argument);
}

TEST(SampleDelay, PointMassIsConstant) {
  Rng rng(1);
  const DelaySpec p = DelaySpec::point(3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample_delay(p, rng), 3);
  const DelaySpec one = DelaySpec::uniform(1);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample_delay(one, rng), 1);
}

TEST(SampleDelay, UniformFrequencies) {
  Rng rng(2024);
  const DelaySpec u = DelaySpec::uniform(5);
  std::vector<int> counts(6, 0);
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const int d = sample_delay(u, rng);
    ASSERT_GE(d, 1);
    ASSERT_LE(d, 5);
    ++counts[d];
  }
  for (int d = 1; d <= 5; ++d) EXPECT_NEAR(counts[d] / static_cast<double>(n), 0.2, 0.005) << "delay " << d;
}

TEST(SampleDelay, SkewedFrequencies) {
  Rng rng(5);
  const DelaySpec s = DelaySpec::custom({0.7, 0.0, 0.3});
  int ones = 0, twos = 0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const int d = sample_delay(s, rng);
    ones += d == 1;
    twos += d == 2;
  }
  EXPECT_EQ(twos, 0);
  EXPECT_NEAR(ones / static_cast<double>(n), 0.7, 0.005);
}

TEST(MProbability, PartialSums) {
  const DelaySpec u = DelaySpec::uniform(3);
  EXPECT_NEAR(m_probability(u, 2), 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(m_probability(u, 0), 0.0);
  EXPECT_DOUBLE_EQ(m_probability(u, 3), 1.0);
  EXPECT_DOUBLE_EQ(m_probability(u, 9), 1.0);
  const DelaySpec c = DelaySpec::custom({0.1, 0.2, 0.3, 0.4});
  EXPECT_DOUBLE_EQ(m_probability(c, 4), 1.0);
  EXPECT_NEAR(m_probability(c, 2), 0.3, 1e-15);
  EXPECT_THROW(m_probability(c, -1), std::invalid_argument);
}

TEST(DelayChannel, PushReportsObservationTime) {
  DelayChannel ch(DelaySpec::uniform(3));
  const TimedState a = ch.push_with_delay(dummy(1), 0.0, false, 1, 2);
  EXPECT_EQ(a.gen_time, 1);
  EXPECT_EQ(a.obs_time, 3);
  const TimedState b = ch.push_with_delay(dummy(2), -1.0, false, 2, 3);
  EXPECT_EQ(b.obs_time, 5);
  EXPECT_DOUBLE_EQ(b.reward_in, -1.0);
}

TEST(DelayChannel, PushRejectsBadInput) {
  DelayChannel ch(DelaySpec::uniform(3));
  EXPECT_THROW(ch.push_with_delay(dummy(2), 0.0, false, 2, 1), std::logic_error);
  ch.push_with_delay(dummy(1), 0.0, false, 1, 1);
  EXPECT_THROW(ch.push_with_delay(dummy(1), 0.0, false, 1, 1), std::logic_error);
  EXPECT_THROW(ch.push_with_delay(dummy(2), 0.0, false, 2, 0), std::invalid_argument);
  EXPECT_THROW(ch.push_with_delay(dummy(2), 0.0, false, 2, 4), std::invalid_argument);
}

TEST(DelayChannel, AdvanceRequiresUnitSteps) {
  DelayChannel ch(DelaySpec::uniform(3));
  EXPECT_THROW(ch.advance_to(2), std::logic_error);
  ch.advance_to(1);
  EXPECT_THROW(ch.advance_to(1), std::logic_error);
}

TEST(DelayChannel, ReorderedArrivals) {
  // Delays 2, 3, 1 for s_1, s_2, s_3.
  Script s(3, {2, 3, 1});
  EXPECT_TRUE(s.step(1).empty());
  s.push_next();
  EXPECT_TRUE(s.step(2).empty());
  s.push_next();
  EXPECT_EQ(gens(s.step(3)), (std::vector<long>{1}));
  EXPECT_EQ(gens(s.step(4)), (std::vector<long>{3}));
  EXPECT_EQ(gens(s.step(5)), (std::vector<long>{2}));
}

TEST(DelayChannel, SimultaneousArrivalsSortedByGeneration) {
  Script s(3, {2, 1});
  s.step(1);
  s.push_next();
  s.step(2);
  EXPECT_EQ(gens(s.step(3)), (std::vector<long>{1, 2}));
}

TEST(DelayChannel, OrderedSwitchingOneStatePerStep) {
  Script s(3, {2, 3, 1});
  std::vector<std::optional<long>> used;
  for (long t = 1; t <= 7; ++t) {
    s.step(t);
    const auto u = s.ch.next_usable_ordered();
    used.push_back(u ? std::optional<long>(u->gen_time) : std::nullopt);
    s.push_next();
  }
  const std::vector<std::optional<long>> want{std::nullopt, std::nullopt, 1, 1, 2, 3, 3};
  EXPECT_EQ(used, want);
}

TEST(DelayChannel, OrderedDrainsBacklogOnePerStep) {
  // s_1 slow, s_2 and s_3 arrive before it.
  Script s(3, {3, 1, 1});
  std::vector<long> used;
  for (long t = 1; t <= 7; ++t) {
    s.step(t);
    if (auto u = s.ch.next_usable_ordered()) used.push_back(u->gen_time);
    s.push_next();
  }
  EXPECT_EQ(used, (std::vector<long>{1, 2, 3, 3}));
}

TEST(DelayChannel, UnorderedTakesLatestArrival) {
  Script s(3, {2, 3, 1});
  std::vector<long> used;
  for (long t = 1; t <= 5; ++t) {
    s.step(t);
    if (auto u = s.ch.next_usable_unordered()) used.push_back(u->gen_time);
    s.push_next();
  }
  EXPECT_EQ(used, (std::vector<long>{1, 3, 2}));
}

TEST(DelayChannel, UnorderedTieGoesToLargerGeneration) {
  Script s(3, {2, 1});
  s.step(1);
  s.push_next();
  s.step(2);
  EXPECT_FALSE(s.ch.next_usable_unordered().has_value());
  s.step(3);
  EXPECT_EQ(s.ch.next_usable_unordered()->gen_time, 2);
}

TEST(DelayChannel, TakeObservedDiscardsOlder) {
  Script s(3, {1, 1, 1});
  for (long t = 1; t <= 3; ++t) {
    s.step(t);
    s.push_next();
  }
  EXPECT_EQ(s.ch.observed_size(), 2u);
  EXPECT_FALSE(s.ch.take_observed(3).has_value());
  EXPECT_EQ(s.ch.observed_size(), 0u);
}

TEST(DelayChannel, ConservationAndAvailabilityBound) {
  DelayChannel ch(DelaySpec::uniform(6));
  Rng rng(77);
  std::multiset<long> seen;
  std::map<long, long> gen_to_obs;
  const long total = 5000;
  ch.push_generated(dummy(1), 0.0, false, 1, rng);
  for (long t = 1; t <= total + 6; ++t) {
    for (const auto& s : ch.advance_to(t)) {
      seen.insert(s.gen_time);
      gen_to_obs[s.gen_time] = t;
      EXPECT_EQ(s.obs_time, t);
      EXPECT_LE(t, s.gen_time + 6);
      EXPECT_GE(t, s.gen_time + 1);
    }
    if (t < total) ch.push_generated(dummy(t + 1), 0.0, false, t + 1, rng);
  }
  EXPECT_EQ(seen.size(), static_cast<std::size_t>(total));
  for (long n = 1; n <= total; ++n) EXPECT_EQ(seen.count(n), 1u) << n;
  EXPECT_EQ(ch.in_flight_size(), 0u);
}

TEST(DelayChannel, OrderedNeverSkipsInRandomRun) {
  DelayChannel ch(DelaySpec::uniform(5));
  Rng rng(9);
  long last = 0;
  ch.push_generated(dummy(1), 0.0, false, 1, rng);
  for (long t = 1; t <= 3000; ++t) {
    ch.advance_to(t);
    if (auto u = ch.next_usable_ordered()) {
      EXPECT_TRUE(u->gen_time == last || u->gen_time == last + 1);
      last = u->gen_time;
    }
    ch.push_generated(dummy(t + 1), 0.0, false, t + 1, rng);
  }
  EXPECT_GT(last, 2900);
}

TEST(DelayChannel, ComparisonsGrowLogarithmically) {
  // Comparisons per step for k in flight should scale like log k, not k.
  auto per_step = [](int o_max) {
    DelayChannel ch(DelaySpec::uniform(o_max));
    Rng rng(3);
    const long steps = 20000;
    ch.push_generated(dummy(1), 0.0, false, 1, rng);
    for (long t = 1; t <= steps; ++t) {
      ch.advance_to(t);
      ch.take_observed(t - o_max);
      ch.push_generated(dummy(t + 1), 0.0, false, t + 1, rng);
    }
    return static_cast<double>(ch.comparisons()) / steps;
  };
  const double c8 = per_step(8);
  const double c64 = per_step(64);
  // log2 ratio is 2; a linear scan would give 8.
  EXPECT_LT(c64 / c8, 3.0);
  EXPECT_GT(c64, c8);
}

TEST(DelayChannel, ResetClearsEverything) {
  Script s(3, {3, 3});
  s.step(1);
  s.push_next();
  s.ch.reset();
  EXPECT_EQ(s.ch.in_flight_size(), 0u);
  EXPECT_EQ(s.ch.now(), 0);
  EXPECT_EQ(s.ch.last_used_gen(), 0);
  EXPECT_NO_THROW(s.ch.push_with_delay(dummy(1), 0.0, false, 1, 1));
  EXPECT_EQ(gens(s.ch.advance_to(1)).size(), 0u);
  EXPECT_EQ(gens(s.ch.advance_to(2)), (std::vector<long>{1}));
}

TEST(DelayChannel, DelayFreeArrivesImmediately) {
  DelayChannel ch(DelaySpec::none());
  Rng rng(1);
  ch.push_generated(dummy(1), 0.0, false, 1, rng);
  EXPECT_EQ(gens(ch.advance_to(1)), (std::vector<long>{1}));
  EXPECT_EQ(ch.take_observed(1)->gen_time, 1);
}

TEST(EventLog, CsvRoundTrip) {
  EventLog log;
  log.meta["mode"] = "ordered";
  log.meta["o_max"] = "3";
  log.add(1, EventKind::gen, 1, 2);
  log.add(3, EventKind::obs, 1, 2);
  log.add(3, EventKind::use, 1, 2);
  std::stringstream ss;
  log.write_csv(ss);
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("# cdelay-events v1\n", 0), 0u);
  const EventLog back = EventLog::read_csv(ss);
  EXPECT_EQ(back.events, log.events);
  EXPECT_EQ(back.meta, log.meta);
}

TEST(EventLog, RejectsUnknownKind) {
  std::stringstream ss("t,kind,gen_time,delay\n1,lost,1,1\n");
  EXPECT_THROW(EventLog::read_csv(ss), std::invalid_argument);
}

TEST(EventLog, ChannelLogsFirstUseOnly) {
  Script s(3, {2, 3, 1});
  EventLog log;
  s.ch.set_log(&log);
  for (long t = 1; t <= 6; ++t) {
    s.step(t);
    s.ch.next_usable_ordered();
    s.push_next();
  }
  std::vector<Event> uses;
  for (const auto& e : log.events)
    if (e.kind == EventKind::use) uses.push_back(e);
  ASSERT_EQ(uses.size(), 3u);
  EXPECT_EQ(uses[0].t, 3);
  EXPECT_EQ(uses[1].t, 5);
  EXPECT_EQ(uses[2].t, 6);
}
