#include "cdelay/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace cdelay {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean_of_tail(const std::vector<double>& v, int window) {
  if (v.empty()) return 0.0;
  const auto n = std::min<std::size_t>(v.size(), static_cast<std::size_t>(std::max(window, 1)));
  double sum = 0.0;
  for (std::size_t i = v.size() - n; i < v.size(); ++i) sum += v[i];
  return sum / static_cast<double>(n);
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::tabular: return "tabular";
    case LearnerKind::bpql: return "bpql";
    case LearnerKind::random: return "random";
    case LearnerKind::none: return "none";
  }
  return "?";
}

LearnerKind parse_learner(const std::string& name) {
  if (name == "tabular") return LearnerKind::tabular;
  if (name == "bpql") return LearnerKind::bpql;
  if (name == "random") return LearnerKind::random;
  if (name == "none") return LearnerKind::none;
  throw std::invalid_argument("unknown learner '" + name + "'");
}

DelaySpec DelayConfig::resolve(int o_max) const {
  if (kind == "uniform") return o_max == 0 ? DelaySpec::none() : DelaySpec::uniform(o_max);
  if (kind == "point") return DelaySpec::point(delay > 0 ? delay : o_max, o_max);
  if (kind == "custom") return DelaySpec::custom(pmf);
  if (kind == "none") return DelaySpec::none();
  throw std::invalid_argument("unknown delay kind '" + kind + "'");
}

// ---------------------------------------------------------------- config

void RunConfig::validate() const {
  if (env != "gridworld" && env != "pendulum") throw std::invalid_argument("env.name: unknown environment '" + env + "'");
  if (horizon < 0) throw std::invalid_argument("env.horizon: must be non-negative");
  mode.validate();
  const DelaySpec d = delays();
  d.validate();
  if (d.max_delay() > mode.o_max)
    throw std::invalid_argument("delay: support exceeds scheduler.o_max");
  if (seeds.empty()) throw std::invalid_argument("seeds: must be non-empty");
  if (workers < 1) throw std::invalid_argument("workers: must be positive");
  if (final_window < 1) throw std::invalid_argument("final_window: must be positive");
  switch (learner) {
    case LearnerKind::tabular:
      if (env != "gridworld") throw std::invalid_argument("learner: tabular needs the gridworld");
      if (mode.delta() > kMaxTabularDelta) throw std::invalid_argument("scheduler: delta too large for a table");
      [[fallthrough]];
    case LearnerKind::random:
    case LearnerKind::none:
      if (episodes < 1) throw std::invalid_argument("episodes: must be positive");
      break;
    case LearnerKind::bpql:
      if (env != "pendulum") throw std::invalid_argument("learner: bpql needs a continuous-action env");
      if (total_steps < 1) throw std::invalid_argument("total_steps: must be positive");
      sac.validate();
      break;
  }
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  RunConfig c;
  try {
    if (j.contains("env")) {
      const json& e = j.at("env");
      read_opt(e, "name", c.env);
      read_opt(e, "horizon", c.horizon);
    }
    if (j.contains("scheduler")) {
      const json& s = j.at("scheduler");
      if (s.contains("mode")) c.mode.variant = parse_variant(s.at("mode").get<std::string>());
      read_opt(s, "o_max", c.mode.o_max);
      if (s.contains("o_pmax") && !s.at("o_pmax").is_null()) c.mode.o_pmax = s.at("o_pmax").get<int>();
    }
    if (j.contains("delay")) {
      const json& d = j.at("delay");
      read_opt(d, "kind", c.delay.kind);
      read_opt(d, "delay", c.delay.delay);
      read_opt(d, "pmf", c.delay.pmf);
    }
    if (j.contains("learner")) {
      const json& l = j.at("learner");
      if (l.contains("kind")) c.learner = parse_learner(l.at("kind").get<std::string>());
      read_opt(l, "lr", c.lr);
      read_opt(l, "eps_start", c.eps_start);
      read_opt(l, "eps_end", c.eps_end);
      read_opt(l, "anneal_fraction", c.anneal_fraction);
    }
    if (j.contains("bpql")) {
      const json& b = j.at("bpql");
      read_opt(b, "gamma", c.sac.gamma);
      read_opt(b, "alpha", c.sac.alpha);
      read_opt(b, "xi", c.sac.xi);
      read_opt(b, "literal_polyak", c.sac.literal_polyak);
      read_opt(b, "lr_actor", c.sac.lr_actor);
      read_opt(b, "lr_critic", c.sac.lr_critic);
      read_opt(b, "batch_size", c.sac.batch_size);
      read_opt(b, "capacity", c.sac.capacity);
      read_opt(b, "hidden", c.sac.hidden);
      read_opt(b, "warmup_transitions", c.sac.warmup_transitions);
    }
    if (j.contains("warmup")) {
      const auto w = j.at("warmup").get<std::string>();
      if (w == "noop") c.warmup = WarmupKind::noop;
      else if (w == "random") c.warmup = WarmupKind::random;
      else throw std::invalid_argument("warmup: expected noop or random, got '" + w + "'");
    }
    read_opt(j, "seeds", c.seeds);
    read_opt(j, "episodes", c.episodes);
    read_opt(j, "total_steps", c.total_steps);
    read_opt(j, "final_window", c.final_window);
    read_opt(j, "workers", c.workers);
    read_opt(j, "out_dir", c.out_dir);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config '" + path + "': " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["env"] = {{"name", env}, {"horizon", horizon}};
  j["scheduler"] = {{"mode", to_string(mode.variant)}, {"o_max", mode.o_max}};
  j["scheduler"]["o_pmax"] = mode.o_pmax ? json(*mode.o_pmax) : json(nullptr);
  j["delay"] = {{"kind", delay.kind}, {"delay", delay.delay}, {"pmf", delay.pmf}};
  j["learner"] = {{"kind", to_string(learner)}, {"lr", lr}, {"eps_start", eps_start},
                  {"eps_end", eps_end}, {"anneal_fraction", anneal_fraction}};
  j["bpql"] = {{"gamma", sac.gamma},         {"alpha", sac.alpha},
               {"xi", sac.xi},               {"literal_polyak", sac.literal_polyak},
               {"lr_actor", sac.lr_actor},   {"lr_critic", sac.lr_critic},
               {"batch_size", sac.batch_size}, {"capacity", sac.capacity},
               {"hidden", sac.hidden},       {"warmup_transitions", sac.warmup_transitions}};
  j["warmup"] = warmup == WarmupKind::noop ? "noop" : "random";
  j["seeds"] = seeds;
  j["episodes"] = episodes;
  j["total_steps"] = total_steps;
  j["final_window"] = final_window;
  j["workers"] = workers;
  j["out_dir"] = out_dir;
  return j;
}

// ---------------------------------------------------------------- run

std::size_t RunResult::failures() const {
  return static_cast<std::size_t>(std::count_if(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.failed; }));
}

namespace {

void fill_from_rollout(const RunConfig& cfg, std::uint64_t seed, SeedResult& out) {
  RngStreams rng(seed);
  auto env = make_env(cfg.env, cfg.horizon);
  Rollout rollout(*env, RolloutConfig{cfg.mode, cfg.delays(), cfg.warmup});
  const Policy random_policy = [&](const AugmentedState&) { return env->sample_action(rng.explore); };
  const Policy* policy = cfg.learner == LearnerKind::random ? &random_policy : nullptr;
  long steps = 0;
  for (int e = 0; e < cfg.episodes; ++e) {
    rollout.begin_episode(rng.env(), rng.delay);
    while (!rollout.episode_done()) rollout.step(policy, rng.delay, rng.explore);
    steps += rollout.time();
    out.returns.push_back(rollout.episode_return());
    out.steps.push_back(steps);
  }
}

}  // namespace

SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed) {
  SeedResult out;
  out.seed = seed;
  const auto start = Clock::now();
  try {
    switch (cfg.learner) {
      case LearnerKind::tabular: {
        TabularConfig t;
        t.mode = cfg.mode;
        t.delays = cfg.delays();
        t.episodes = cfg.episodes;
        t.seed = seed;
        t.lr = cfg.lr;
        t.eps_start = cfg.eps_start;
        t.eps_end = cfg.eps_end;
        t.anneal_fraction = cfg.anneal_fraction;
        t.warmup = cfg.warmup;
        const TabularResult r = train_tabular(t);
        out.returns = r.returns;
        long steps = 0;
        for (int len : r.lengths) out.steps.push_back(steps += len);
        break;
      }
      case LearnerKind::bpql: {
        BpqlConfig b;
        b.env = cfg.env;
        b.mode = cfg.mode;
        b.delays = cfg.delays();
        b.hyper = cfg.sac;
        b.total_steps = cfg.total_steps;
        b.seed = seed;
        const BpqlResult r = train_bpql(b);
        for (const auto& p : r.curve) {
          out.returns.push_back(p.episode_return);
          out.steps.push_back(p.step);
        }
        break;
      }
      case LearnerKind::random:
      case LearnerKind::none: fill_from_rollout(cfg, seed, out); break;
    }
    out.final_mean = mean_of_tail(out.returns, cfg.final_window);
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  out.seconds = seconds_since(start);
  return out;
}

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  RunResult res;
  res.seeds.resize(cfg.seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) res.seeds[i] = run_seed(cfg, cfg.seeds[i]);
  };
  const int n_workers = std::min<int>(cfg.workers, static_cast<int>(cfg.seeds.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> finals;
  for (const auto& s : res.seeds)
    if (!s.failed) finals.push_back(s.final_mean);
  if (!finals.empty()) {
    double sum = 0.0;
    for (double f : finals) sum += f;
    res.mean = sum / static_cast<double>(finals.size());
  }
  if (finals.size() >= 2) {
    double ss = 0.0;
    for (double f : finals) ss += (f - res.mean) * (f - res.mean);
    res.std = std::sqrt(ss / static_cast<double>(finals.size() - 1));
  } else {
    res.std_flagged = true;
  }
  res.seconds = seconds_since(start);

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    {
      std::ofstream os(dir / "returns.csv");
      write_returns_csv(os, cfg, res);
    }
    {
      std::ofstream os(dir / "curve.csv");
      write_curve_csv(os, cfg, res);
    }
    {
      std::ofstream os(dir / "summary.json");
      os << summary_json(cfg, res).dump(2) << '\n';
    }
    {
      json t;
      t["total_seconds"] = res.seconds;
      for (const auto& s : res.seeds) t["seeds"].push_back({{"seed", s.seed}, {"seconds", s.seconds}});
      std::ofstream os(dir / "timing.json");
      os << t.dump(2) << '\n';
    }
  }
  return res;
}

void write_returns_csv(std::ostream& os, const RunConfig& cfg, const RunResult& res) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "# cdelay-returns v1\n";
  os << "episode,return,mode,o_max,seed\n";
  const std::string mode = to_string(cfg.mode.variant);
  for (const auto& s : res.seeds)
    for (std::size_t e = 0; e < s.returns.size(); ++e)
      os << e + 1 << ',' << s.returns[e] << ',' << mode << ',' << cfg.mode.o_max << ',' << s.seed << '\n';
  os.precision(old);
}

void write_curve_csv(std::ostream& os, const RunConfig& cfg, const RunResult& res, int window) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "# cdelay-curve v1 window=" << window << '\n';
  os << "step,avg_return,mode,o_max,seed\n";
  const std::string mode = to_string(cfg.mode.variant);
  for (const auto& s : res.seeds) {
    double sum = 0.0;
    for (std::size_t e = 0; e < s.returns.size(); ++e) {
      sum += s.returns[e];
      if (e >= static_cast<std::size_t>(window)) sum -= s.returns[e - window];
      const auto n = std::min<std::size_t>(e + 1, static_cast<std::size_t>(window));
      os << s.steps[e] << ',' << sum / static_cast<double>(n) << ',' << mode << ',' << cfg.mode.o_max << ','
         << s.seed << '\n';
    }
  }
  os.precision(old);
}

json summary_json(const RunConfig& cfg, const RunResult& res) {
  json j;
  j["format"] = "cdelay-summary v1";
  j["config"] = cfg.to_json();
  j["curves"] = res.seeds.size();
  j["final_window"] = cfg.final_window;
  j["mean"] = res.mean;
  j["std"] = res.std;
  j["std_flagged"] = res.std_flagged;
  j["failures"] = res.failures();
  for (const auto& s : res.seeds) {
    json e{{"seed", s.seed}, {"episodes", s.returns.size()}, {"final_mean", s.final_mean}, {"failed", s.failed}};
    if (s.failed) e["error"] = s.error;
    j["seeds"].push_back(e);
  }
  std::ostringstream pm;
  pm << std::fixed << std::setprecision(2) << res.mean << " ± " << res.std;
  j["final_mean_pm"] = pm.str();
  return j;
}

double normalized_score(double r_alg, double r_random, double r_free) {
  const double denom = r_free - r_random;
  if (denom == 0.0 || !std::isfinite(denom))
    throw std::domain_error("normalized_score: delay-free and random returns coincide");
  return (r_alg - r_random) / denom;
}

// ---------------------------------------------------------------- equivalence

namespace {

Policy make_policy(const PolicySpec& spec, const Environment& env, Rng& explore) {
  switch (spec.kind) {
    case PolicySpec::Kind::random:
      return [&env, &explore](const AugmentedState&) { return env.sample_action(explore); };
    case PolicySpec::Kind::table: {
      if (!spec.table) throw std::invalid_argument("equivalence: table policy without a table");
      const AugTable* table = spec.table;
      return [table](const AugmentedState& x) { return GridWorld::action(table->greedy(table->row(x))); };
    }
    case PolicySpec::Kind::actor: {
      if (!spec.actor) throw std::invalid_argument("equivalence: actor policy without an actor");
      const Actor* actor = spec.actor;
      return [actor, &explore](const AugmentedState& x) { return actor->act(x, explore); };
    }
  }
  throw std::invalid_argument("equivalence: unknown policy kind");
}

std::string describe(const AugmentedState& x) {
  std::ostringstream os;
  os << "base=(";
  for (std::size_t i = 0; i < x.base.vec.size(); ++i) os << (i ? "," : "") << x.base.vec[i];
  os << ") actions=" << x.actions.size() << " lag=" << x.lag;
  return os.str();
}

struct Lane {
  std::unique_ptr<Environment> env;
  RngStreams rng;
  std::unique_ptr<Rollout> rollout;
  std::vector<ReplayTuple> tuples;
  Policy policy;

  Lane(const std::string& env_name, std::uint64_t seed, const SchedulerMode& mode, const DelaySpec& delays,
       const PolicySpec& spec)
      : env(make_env(env_name)), rng(seed) {
    rollout = std::make_unique<Rollout>(*env, RolloutConfig{mode, delays, WarmupKind::noop});
    rollout->set_replay_sink([this](const ReplayTuple& t) { tuples.push_back(t); });
    policy = make_policy(spec, *env, rng.explore);
  }
};

}  // namespace

EquivalenceReport equivalence_check(const EquivalenceConfig& cfg) {
  EquivalenceReport rep;
  try {
    cfg.delays.validate();
  } catch (const std::invalid_argument& e) {
    rep.precondition_violated = true;
    rep.detail = std::string("invalid delay pmf: ") + e.what();
    return rep;
  }
  if (cfg.o_max < 1 || cfg.delays.delay_free() || cfg.delays.max_delay() > cfg.o_max) {
    rep.precondition_violated = true;
    rep.detail = "delay support must lie in {1.." + std::to_string(cfg.o_max) + "}";
    return rep;
  }

  SchedulerMode test_mode{cfg.variant, cfg.o_max, std::nullopt};
  SchedulerMode ref_mode{SchedulerVariant::ordered, cfg.o_max, std::nullopt};
  Lane test(cfg.env, cfg.seed, test_mode, cfg.delays, cfg.policy);
  Lane ref(cfg.env, cfg.seed, ref_mode, DelaySpec::point(cfg.o_max), cfg.policy);

  auto diverge = [&](long step, std::string what) {
    rep.first_divergence = step;
    rep.detail = std::move(what);
  };

  long step = 0;
  while (step < cfg.steps && !rep.first_divergence) {
    const std::uint64_t seed_a = test.rng.env();
    const std::uint64_t seed_b = ref.rng.env();
    test.rollout->begin_episode(seed_a, test.rng.delay);
    ref.rollout->begin_episode(seed_b, ref.rng.delay);
    while (step < cfg.steps) {
      ++step;
      StepRecord a, b;
      try {
        a = test.rollout->step(&test.policy, test.rng.delay, test.rng.explore);
      } catch (const std::logic_error& e) {
        diverge(step, std::string("scheduler failure: ") + e.what());
        break;
      }
      b = ref.rollout->step(&ref.policy, ref.rng.delay, ref.rng.explore);
      ++rep.steps_compared;
      if (a.warmup != b.warmup) {
        diverge(step, "warmup flag differs");
        break;
      }
      if (a.input != b.input) {
        diverge(step, "augmented state differs: " + (a.input ? describe(*a.input) : "none") + " vs " +
                          (b.input ? describe(*b.input) : "none"));
        break;
      }
      if (a.action != b.action) {
        diverge(step, "action differs");
        break;
      }
      if (a.reward != b.reward) {
        diverge(step, "reward differs");
        break;
      }
      const bool done_a = test.rollout->episode_done();
      const bool done_b = ref.rollout->episode_done();
      if (done_a != done_b) {
        diverge(step, "episode end differs");
        break;
      }
      if (test.tuples.size() != ref.tuples.size()) {
        diverge(step, "replay tuple count differs");
        break;
      }
      for (std::size_t i = 0; i < test.tuples.size(); ++i) {
        if (!(test.tuples[i] == ref.tuples[i])) {
          diverge(step, "replay tuple differs");
          break;
        }
        ++rep.tuples_compared;
      }
      test.tuples.clear();
      ref.tuples.clear();
      if (rep.first_divergence || done_a) break;
    }
  }
  rep.identical = !rep.first_divergence;
  if (rep.identical) rep.detail = "identical";
  return rep;
}

// ---------------------------------------------------------------- bench

namespace {

// One benchmarked scheduler. With `full` it does its whole job for a constant
// policy: anchor choice, augmented states and replay tuples into a discarding
// sink. Otherwise only the channel and anchor path runs (null policy).
class BenchLane {
 public:
  BenchLane(const std::string& env_name, const SchedulerMode& mode, const DelaySpec& delays, std::uint64_t seed,
            bool full)
      : env_(make_env(env_name)),
        rng_(seed),
        rollout_(*env_, RolloutConfig{mode, delays, WarmupKind::noop}),
        fixed_(env_->noop_action()),
        full_(full) {
    constant_ = [this](const AugmentedState&) { return fixed_; };
    if (full_) rollout_.set_replay_sink([this](const ReplayTuple&) { ++sunk_; });
  }

  // Wall clock of the next `steps` steps, continuing the current episode.
  double run(long steps) {
    const auto start = Clock::now();
    for (long done = 0; done < steps; ++done) {
      if (rollout_.episode_done()) rollout_.begin_episode(rng_.env(), rng_.delay);
      rollout_.step(full_ ? &constant_ : nullptr, rng_.delay, rng_.explore);
    }
    return seconds_since(start);
  }

 private:
  std::unique_ptr<Environment> env_;
  RngStreams rng_;
  Rollout rollout_;
  EnvAction fixed_;
  Policy constant_;
  bool full_;
  std::uint64_t sunk_ = 0;
};

// Lanes advance in alternating chunks so that drift in machine speed hits
// them alike.
constexpr long kBenchChunk = 10000;

}  // namespace

BenchTimings bench_overhead(const BenchConfig& cfg) {
  BenchTimings out;
  out.steps = std::max<long>(cfg.steps, 0);
  if (out.steps == 0) return out;
  const SchedulerMode cons{SchedulerVariant::conservative, cfg.o_max, std::nullopt};
  const SchedulerMode ord{SchedulerVariant::ordered, cfg.o_max, std::nullopt};
  double best_cons = std::numeric_limits<double>::infinity();
  double best_const = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(cfg.repeats, 1); ++r) {
    BenchLane a(cfg.env, cons, DelaySpec::uniform(cfg.o_max), cfg.seed, true);
    BenchLane b(cfg.env, ord, DelaySpec::point(cfg.o_max), cfg.seed, true);
    double ta = 0.0, tb = 0.0;
    for (long done = 0; done < out.steps; done += kBenchChunk) {
      const long n = std::min(kBenchChunk, out.steps - done);
      ta += a.run(n);
      tb += b.run(n);
    }
    best_cons = std::min(best_cons, ta);
    best_const = std::min(best_const, tb);
  }
  out.conservative_seconds = best_cons;
  out.constant_seconds = best_const;
  out.ratio = best_const > 0.0 ? best_cons / best_const : 0.0;
  return out;
}

double bench_per_step(const std::string& env, int o_max, long steps, int repeats, std::uint64_t seed) {
  if (steps <= 0) return 0.0;
  const SchedulerMode cons{SchedulerVariant::conservative, o_max, std::nullopt};
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(repeats, 1); ++r)
    best = std::min(best, BenchLane(env, cons, DelaySpec::uniform(o_max), seed, false).run(steps));
  return best / static_cast<double>(steps);
}

// ---------------------------------------------------------------- golden

GoldenResult golden_trace(const EventLog& expected) {
  GoldenResult res;
  res.events = expected.events.size();
  if (expected.events.empty()) {
    res.pass = true;
    res.detail = "empty trace";
    return res;
  }
  auto meta = [&](const std::string& key) -> const std::string& {
    auto it = expected.meta.find(key);
    if (it == expected.meta.end()) throw std::invalid_argument("golden trace lacks '" + key + "' metadata");
    return it->second;
  };
  const SchedulerMode mode{parse_variant(meta("mode")), std::stoi(meta("o_max")), std::nullopt};
  mode.validate();

  std::vector<int> delays;  // delays[n - 1] for the state generated at n
  for (const Event& e : expected.events) {
    if (e.kind != EventKind::gen) continue;
    if (e.gen_time != static_cast<long>(delays.size()) + 1)
      throw std::invalid_argument("golden trace: gen rows must list n = 1, 2, ... in order");
    delays.push_back(e.delay);
  }
  const long count = static_cast<long>(delays.size());

  DelayChannel ch(DelaySpec::uniform(mode.o_max));
  Scheduler sched(mode);
  res.produced.meta = expected.meta;
  ch.set_log(&res.produced);
  if (count > 0) ch.push_with_delay(EnvState{{0.0}, 0}, 0.0, false, 1, delays[0]);
  const long horizon = count + mode.o_max;
  for (long t = 1; t <= horizon; ++t) {
    ch.advance_to(t);
    sched.select_anchor(ch, t);
    if (t + 1 <= count)
      ch.push_with_delay(EnvState{{static_cast<double>(t)}, static_cast<int>(t)}, 0.0, false, t + 1,
                         delays[static_cast<std::size_t>(t)]);
  }

  const auto& got = res.produced.events;
  const auto& want = expected.events;
  const std::size_t n = std::min(got.size(), want.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(got[i] == want[i])) {
      res.detail = "event " + std::to_string(i + 1) + ": expected " + to_string(want[i]) + ", got " + to_string(got[i]);
      return res;
    }
  }
  if (got.size() != want.size()) {
    res.detail = "event count: expected " + std::to_string(want.size()) + ", got " + std::to_string(got.size());
    if (got.size() > n) res.detail += "; first extra " + to_string(got[n]);
    else res.detail += "; first missing " + to_string(want[n]);
    return res;
  }
  res.pass = true;
  res.detail = "match";
  return res;
}

GoldenResult golden_trace(const std::string& path) { return golden_trace(EventLog::read_file(path)); }

}  // namespace cdelay
