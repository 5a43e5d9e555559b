#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdelay/harness.hpp"

using namespace cdelay;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cdelay_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig grid_config(LearnerKind learner, int episodes) {
  RunConfig c;
  c.env = "gridworld";
  c.mode = {SchedulerVariant::conservative, 2, std::nullopt};
  c.learner = learner;
  c.episodes = episodes;
  c.final_window = 100;
  return c;
}

}  // namespace

TEST(NormalizedScore, Values) {
  EXPECT_NEAR(normalized_score(3679.8, -58.7, 3279.2), 1.12, 0.005);
  EXPECT_DOUBLE_EQ(normalized_score(5.0, 1.0, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(normalized_score(1.0, 1.0, 5.0), 0.0);
  EXPECT_THROW(normalized_score(1.0, 2.0, 2.0), std::domain_error);
}

TEST(RunConfig, ParsesJsonWithDefaults) {
  const auto j = nlohmann::json::parse(R"({
    "env": {"name": "pendulum"},
    "scheduler": {"mode": "conservative", "o_max": 3},
    "delay": {"kind": "custom", "pmf": [0.5, 0.25, 0.25]},
    "learner": {"kind": "bpql"},
    "bpql": {"batch_size": 32, "hidden": 16},
    "seeds": [4, 5],
    "total_steps": 400
  })");
  const RunConfig c = RunConfig::from_json(j);
  EXPECT_EQ(c.env, "pendulum");
  EXPECT_EQ(c.learner, LearnerKind::bpql);
  EXPECT_EQ(c.sac.batch_size, 32);
  EXPECT_DOUBLE_EQ(c.sac.alpha, 0.2);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_DOUBLE_EQ(c.delays().prob(2), 0.25);
  const RunConfig back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(RunConfig, DescriptiveErrors) {
  auto expect_error = [](const char* text, const char* needle) {
    try {
      RunConfig::from_json(nlohmann::json::parse(text));
      ADD_FAILURE() << "accepted " << text;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_error(R"({"seeds": []})", "seeds");
  expect_error(R"({"env": {"name": "cartpole"}})", "env.name");
  expect_error(R"({"scheduler": {"mode": "eager"}})", "eager");
  expect_error(R"({"scheduler": {"o_max": 2}, "delay": {"kind": "uniform"}, "learner": {"kind": "bpql"}})", "learner");
  expect_error(R"({"scheduler": {"o_max": 2}, "delay": {"kind": "custom", "pmf": [0.2, 0.2, 0.6]}})", "support");
  expect_error(R"({"scheduler": {"o_max": 3}, "learner": {"kind": "tabular"}})", "delta");
  expect_error(R"({"episodes": "many"})", "config");
  expect_error(R"({"warmup": "sleep"})", "warmup");
}

TEST(Run, RandomLearnerBelowTabular) {
  RunConfig random = grid_config(LearnerKind::random, 100);
  RunConfig tab = grid_config(LearnerKind::tabular, 3000);
  const RunResult r = run(random);
  const RunResult t = run(tab);
  EXPECT_LT(r.mean, t.mean);
}

TEST(Run, ArtifactsAreReproducible) {
  RunConfig c = grid_config(LearnerKind::tabular, 200);
  c.seeds = {1, 2, 3, 4, 5};
  c.workers = 3;
  const fs::path a = scratch_dir("repro_a"), b = scratch_dir("repro_b");
  c.out_dir = a.string();
  const RunResult ra = run(c);
  c.out_dir = b.string();
  c.workers = 1;
  run(c);
  for (const char* f : {"returns.csv", "curve.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  // summary.json embeds the config, whose worker count and out_dir differ.
  auto sa = nlohmann::json::parse(slurp(a / "summary.json"));
  auto sb = nlohmann::json::parse(slurp(b / "summary.json"));
  sa.erase("config");
  sb.erase("config");
  EXPECT_EQ(sa, sb);
  EXPECT_TRUE(fs::exists(a / "timing.json"));

  EXPECT_EQ(ra.seeds.size(), 5u);
  EXPECT_FALSE(ra.std_flagged);
  EXPECT_GT(ra.std, 0.0);
  EXPECT_EQ(sa["curves"], 5);
  EXPECT_NE(sa["final_mean_pm"].get<std::string>().find("±"), std::string::npos);
}

TEST(Run, CsvSchemas) {
  RunConfig c = grid_config(LearnerKind::none, 3);
  c.seeds = {7};
  const fs::path d = scratch_dir("schema");
  c.out_dir = d.string();
  const RunResult r = run(c);
  EXPECT_TRUE(r.std_flagged);
  std::istringstream returns(slurp(d / "returns.csv"));
  std::string line;
  std::getline(returns, line);
  EXPECT_EQ(line, "# cdelay-returns v1");
  std::getline(returns, line);
  EXPECT_EQ(line, "episode,return,mode,o_max,seed");
  std::getline(returns, line);
  EXPECT_EQ(line.substr(0, 2), "1,");
  EXPECT_NE(line.find(",conservative,2,7"), std::string::npos);
  std::istringstream curve(slurp(d / "curve.csv"));
  std::getline(curve, line);
  EXPECT_EQ(line.rfind("# cdelay-curve v1", 0), 0u);
  std::getline(curve, line);
  EXPECT_EQ(line, "step,avg_return,mode,o_max,seed");
}

TEST(Run, DivergenceIsRecordedPerSeed) {
  RunConfig c;
  c.env = "pendulum";
  c.learner = LearnerKind::bpql;
  c.mode = {SchedulerVariant::conservative, 1, std::nullopt};
  c.sac.hidden = 8;
  c.sac.batch_size = 8;
  c.sac.warmup_transitions = 50;
  c.sac.divergence_limit = 1e-9;
  c.total_steps = 400;
  c.seeds = {1, 2};
  const RunResult r = run(c);
  ASSERT_EQ(r.seeds.size(), 2u);
  EXPECT_EQ(r.failures(), 2u);
  EXPECT_NE(r.seeds[0].error.find("diverged"), std::string::npos);
}

TEST(SeedIsolation, DelayStreamDoesNotTouchConservativeActions) {
  // Same env and explore streams, different delay streams.
  auto actions = [](std::uint64_t delay_seed) {
    GridWorld env;
    RngStreams rng(5);
    Rng delay(delay_seed);
    Rollout r(env, RolloutConfig{{SchedulerVariant::conservative, 4, std::nullopt}, DelaySpec::uniform(4)});
    const Policy p = [&](const AugmentedState&) { return env.sample_action(rng.explore); };
    std::vector<EnvAction> out;
    for (int e = 0; e < 20; ++e) {
      r.begin_episode(rng.env(), delay);
      while (!r.episode_done()) out.push_back(r.step(&p, delay, rng.explore).action);
    }
    return out;
  };
  EXPECT_EQ(actions(1), actions(2));
}

TEST(SeedIsolation, StreamsAreDistinct) {
  RngStreams a(1);
  EXPECT_NE(a.env(), a.delay());
  RngStreams b(1), c(2);
  EXPECT_EQ(b.explore(), RngStreams(1).explore());
  EXPECT_NE(b.init(), c.init());
}

TEST(Equivalence, IdenticalUnderRandomPolicy) {
  EquivalenceConfig c;
  c.o_max = 3;
  c.delays = DelaySpec::uniform(3);
  c.steps = 3000;
  const auto rep = equivalence_check(c);
  EXPECT_TRUE(rep.identical) << rep.detail;
  EXPECT_EQ(rep.steps_compared, 3000);
  EXPECT_GT(rep.tuples_compared, 2000);
}

TEST(Equivalence, IdenticalUnderActorPolicy) {
  Rng rng(3);
  Actor actor(3 + 3, {Interval{-2, 2}}, 8);
  actor.net().init_uniform(rng);
  EquivalenceConfig c;
  c.env = "pendulum";
  c.policy = {PolicySpec::Kind::actor, nullptr, &actor};
  c.o_max = 3;
  c.delays = DelaySpec::uniform(3);
  c.steps = 1000;
  const auto rep = equivalence_check(c);
  EXPECT_TRUE(rep.identical) << rep.detail;
}

TEST(Equivalence, SupportBeyondMaximumIsReported) {
  EquivalenceConfig c;
  c.o_max = 3;
  c.delays = DelaySpec::uniform(4);
  const auto rep = equivalence_check(c);
  EXPECT_TRUE(rep.precondition_violated);
  EXPECT_FALSE(rep.identical);
}

TEST(Equivalence, UnorderedDiverges) {
  EquivalenceConfig c;
  c.o_max = 3;
  c.delays = DelaySpec::uniform(3);
  c.variant = SchedulerVariant::unordered;
  const auto rep = equivalence_check(c);
  EXPECT_FALSE(rep.identical);
  ASSERT_TRUE(rep.first_divergence.has_value());
  EXPECT_LT(*rep.first_divergence, 100);
}

TEST(Equivalence, OrderedOnRandomDelaysDiverges) {
  EquivalenceConfig c;
  c.o_max = 3;
  c.delays = DelaySpec::uniform(3);
  c.variant = SchedulerVariant::ordered;
  const auto rep = equivalence_check(c);
  EXPECT_FALSE(rep.identical);
}

TEST(Bench, ZeroStepsIsEmpty) {
  BenchConfig c;
  c.steps = 0;
  const BenchTimings t = bench_overhead(c);
  EXPECT_EQ(t.steps, 0);
  EXPECT_DOUBLE_EQ(t.ratio, 0.0);
  EXPECT_DOUBLE_EQ(bench_per_step("gridworld", 4, 0, 1, 1), 0.0);
}

TEST(Bench, ReportsTimings) {
  BenchConfig c;
  c.o_max = 5;
  c.steps = 20000;
  c.repeats = 1;
  const BenchTimings t = bench_overhead(c);
  EXPECT_GT(t.conservative_seconds, 0.0);
  EXPECT_GT(t.constant_seconds, 0.0);
  EXPECT_GT(t.ratio, 0.0);
}

TEST(Golden, ShippedTracesPass) {
  for (const char* f : {"ordered_reorder.csv", "conservative_o3.csv"}) {
    const GoldenResult r = golden_trace(std::string(CDELAY_DATA_DIR) + "/golden/" + f);
    EXPECT_TRUE(r.pass) << f << ": " << r.detail;
  }
}

TEST(Golden, ReorderedUseTimes) {
  const GoldenResult r = golden_trace(std::string(CDELAY_DATA_DIR) + "/golden/ordered_reorder.csv");
  std::vector<long> use_t;
  for (const auto& e : r.produced.events)
    if (e.kind == EventKind::use) use_t.push_back(e.t);
  EXPECT_EQ(use_t, (std::vector<long>{3, 5, 6}));
}

TEST(Golden, ConservativeUseTimes) {
  const GoldenResult r = golden_trace(std::string(CDELAY_DATA_DIR) + "/golden/conservative_o3.csv");
  int uses = 0;
  for (const auto& e : r.produced.events) {
    if (e.kind != EventKind::use) continue;
    ++uses;
    EXPECT_EQ(e.t, e.gen_time + 3);
  }
  EXPECT_EQ(uses, 7);
}

TEST(Golden, EmptyTraceIsVacuousPass) {
  EXPECT_TRUE(golden_trace(EventLog{}).pass);
}

TEST(Golden, MismatchNamesFirstDifference) {
  EventLog log = EventLog::read_file(std::string(CDELAY_DATA_DIR) + "/golden/ordered_reorder.csv");
  log.events.back().t = 7;
  const GoldenResult r = golden_trace(log);
  EXPECT_FALSE(r.pass);
  EXPECT_NE(r.detail.find("event 9"), std::string::npos) << r.detail;
}

TEST(RunConfig, ShippedConfigsParse) {
  for (const char* f : {"gridworld_tabular.json", "pendulum_bpql.json"}) {
    const RunConfig c = RunConfig::from_file(std::string(CDELAY_DATA_DIR) + "/configs/" + f);
    EXPECT_EQ(c.seeds.size(), 5u) << f;
  }
}
