#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdelay/bpql.hpp"
#include "cdelay/delay_channel.hpp"
#include "cdelay/scheduler.hpp"
#include "cdelay/tabular.hpp"
#include "json.hpp"

namespace cdelay {

enum class LearnerKind { tabular, bpql, random, none };

std::string to_string(LearnerKind k);
LearnerKind parse_learner(const std::string& name);

/// Delay distribution as written in a config file.
struct DelayConfig {
  std::string kind = "uniform";  // uniform | point | custom | none
  int delay = 0;                 // point only; 0 means o_max
  std::vector<double> pmf;       // custom only

  DelaySpec resolve(int o_max) const;
};

/// Experiment description. JSON schema:
///
///   {
///     "env":       {"name": "gridworld" | "pendulum", "horizon": 0},
///     "scheduler": {"mode": "conservative", "o_max": 3, "o_pmax": 2},
///     "delay":     {"kind": "uniform" | "point" | "custom" | "none", "delay": 3, "pmf": [..]},
///     "learner":   {"kind": "tabular" | "bpql" | "random" | "none",
///                   "lr": 0.1, "eps_start": 1.0, "eps_end": 0.05, "anneal_fraction": 0.5},
///     "bpql":      {"gamma": 0.99, "alpha": 0.2, "xi": 0.995, "literal_polyak": false,
///                   "lr_actor": 3e-4, "lr_critic": 3e-4, "batch_size": 256,
///                   "capacity": 1000000, "hidden": 64, "warmup_transitions": 1000},
///     "warmup":    "noop" | "random",
///     "seeds":     [1, 2, 3],
///     "episodes":  1000,        // tabular, random, none
///     "total_steps": 100000,    // bpql
///     "final_window": 100,
///     "workers":   1,
///     "out_dir":   "runs/example"
///   }
///
/// Every key is optional; absent keys keep the defaults below.
struct RunConfig {
  std::string env = "gridworld";
  int horizon = 0;
  SchedulerMode mode;
  DelayConfig delay;
  LearnerKind learner = LearnerKind::tabular;
  double lr = 0.1;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double anneal_fraction = 0.5;
  SacHyper sac;
  WarmupKind warmup = WarmupKind::noop;
  std::vector<std::uint64_t> seeds{1};
  int episodes = 1000;
  long total_steps = 100000;
  int final_window = 100;
  int workers = 1;
  std::string out_dir;

  DelaySpec delays() const { return delay.resolve(mode.o_max); }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);
  nlohmann::json to_json() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<double> returns;  // per episode
  std::vector<long> steps;      // cumulative environment steps at episode end
  double final_mean = 0.0;
  bool failed = false;
  std::string error;
  double seconds = 0.0;
};

struct RunResult {
  std::vector<SeedResult> seeds;
  double mean = 0.0;
  double std = 0.0;
  // Fewer than two successful seeds: std is reported as 0 and flagged.
  bool std_flagged = false;
  double seconds = 0.0;

  std::size_t failures() const;
};

/// Executes every seed on a worker pool. With a non-empty out_dir writes
/// returns.csv, curve.csv, summary.json and timing.json there.
RunResult run(const RunConfig& cfg);
SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed);

void write_returns_csv(std::ostream& os, const RunConfig& cfg, const RunResult& res);
void write_curve_csv(std::ostream& os, const RunConfig& cfg, const RunResult& res, int window = 10);
nlohmann::json summary_json(const RunConfig& cfg, const RunResult& res);

/// (r_alg - r_random) / (r_free - r_random). Throws std::domain_error when
/// r_free and r_random coincide.
double normalized_score(double r_alg, double r_random, double r_free);

/// Policy driving both runs of an equivalence check.
struct PolicySpec {
  enum class Kind { random, table, actor } kind = Kind::random;
  const AugTable* table = nullptr;  // greedy lookup (gridworld)
  const Actor* actor = nullptr;     // stochastic sample through the explore stream
};

struct EquivalenceConfig {
  std::string env = "gridworld";
  PolicySpec policy;
  int o_max = 3;
  DelaySpec delays = DelaySpec::uniform(3);
  long steps = 10000;
  std::uint64_t seed = 1;
  // Scheduler run on the random-delay channel.
  SchedulerVariant variant = SchedulerVariant::conservative;
};

struct EquivalenceReport {
  bool identical = false;
  bool precondition_violated = false;
  long steps_compared = 0;
  long tuples_compared = 0;
  std::optional<long> first_divergence;  // global step index, 1-based
  std::string detail;
};

/// Runs the chosen scheduler on the random-delay channel next to the ordered
/// scheduler on a constant o_max channel, sharing env, policy and init streams,
/// and compares augmented states, actions, rewards and replay tuples step by step.
EquivalenceReport equivalence_check(const EquivalenceConfig& cfg);

struct BenchConfig {
  std::string env = "gridworld";
  int o_max = 20;
  long steps = 1000000;
  int repeats = 3;
  std::uint64_t seed = 1;
};

struct BenchTimings {
  long steps = 0;
  double conservative_seconds = 0.0;  // min over repeats
  double constant_seconds = 0.0;
  double ratio = 0.0;  // conservative / constant; 0 when nothing ran
};

/// Scheduler-only wall clock with the learner disabled: a constant policy is
/// fed augmented states and replay tuples go to a discarding sink. Conservative
/// on uniform delays against ordered on constant o_max delays.
BenchTimings bench_overhead(const BenchConfig& cfg);
/// Seconds per step of the conservative channel and anchor path alone (null
/// policy, no augmented states), min over repeats.
double bench_per_step(const std::string& env, int o_max, long steps, int repeats, std::uint64_t seed);

struct GoldenResult {
  bool pass = false;
  std::size_t events = 0;
  std::string detail;  // first differing event on failure
  EventLog produced;
};

/// Re-simulates the delays scripted in a trace (its gen rows) under the
/// trace's `mode` and `o_max` metadata and compares the full event schedule.
GoldenResult golden_trace(const EventLog& expected);
GoldenResult golden_trace(const std::string& path);

}  // namespace cdelay
