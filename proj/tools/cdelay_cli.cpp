#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdelay/harness.hpp"

using namespace cdelay;

namespace {

int cmd_run(const std::string& config_path, const std::vector<std::uint64_t>& seeds, const std::string& out,
            const std::string& mode, int o_max, int workers) {
  nlohmann::json j = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config '" + config_path + "'");
    in >> j;
  }
  if (!seeds.empty()) j["seeds"] = seeds;
  if (!out.empty()) j["out_dir"] = out;
  if (!mode.empty()) j["scheduler"]["mode"] = mode;
  if (o_max >= 0) j["scheduler"]["o_max"] = o_max;
  if (workers > 0) j["workers"] = workers;
  const RunConfig cfg = RunConfig::from_json(j);
  const RunResult res = run(cfg);
  for (const auto& s : res.seeds) {
    std::cout << "seed " << s.seed << ": ";
    if (s.failed) std::cout << "FAILED (" << s.error << ")\n";
    else std::cout << "final mean " << s.final_mean << " over " << s.returns.size() << " episodes\n";
  }
  std::cout << "mean " << res.mean << " std " << res.std << (res.std_flagged ? " (fewer than 2 seeds)" : "") << '\n';
  return res.failures() == 0 ? 0 : 1;
}

int cmd_equivalence(const std::string& env, int o_max, long steps, const std::vector<std::uint64_t>& seeds,
                    const std::string& mode, const std::vector<double>& pmf) {
  int failures = 0;
  for (std::uint64_t seed : seeds) {
    EquivalenceConfig cfg;
    cfg.env = env;
    cfg.o_max = o_max;
    cfg.delays = pmf.empty() ? DelaySpec::uniform(o_max) : DelaySpec::custom(pmf);
    cfg.steps = steps;
    cfg.seed = seed;
    cfg.variant = mode.empty() ? SchedulerVariant::conservative : parse_variant(mode);
    const EquivalenceReport rep = equivalence_check(cfg);
    std::cout << "seed " << seed << ": ";
    if (rep.precondition_violated) {
      std::cout << "precondition violated: " << rep.detail << '\n';
      ++failures;
    } else if (rep.identical) {
      std::cout << "identical over " << rep.steps_compared << " steps, " << rep.tuples_compared << " tuples\n";
    } else {
      std::cout << "diverged at step " << *rep.first_divergence << ": " << rep.detail << '\n';
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_bench(const std::string& env, int o_max, long steps, int repeats, double max_ratio) {
  BenchConfig cfg;
  cfg.env = env;
  cfg.o_max = o_max;
  cfg.steps = steps;
  cfg.repeats = repeats;
  const BenchTimings t = bench_overhead(cfg);
  std::cout << "steps " << t.steps << "\nconservative " << t.conservative_seconds << " s\nconstant     "
            << t.constant_seconds << " s\nratio        " << t.ratio << '\n';
  return t.steps == 0 || t.ratio <= max_ratio ? 0 : 1;
}

int cmd_golden(const std::vector<std::string>& files) {
  int failures = 0;
  for (const auto& f : files) {
    const GoldenResult r = golden_trace(f);
    std::cout << f << ": " << (r.pass ? "PASS" : "FAIL") << " (" << r.events << " events, " << r.detail << ")\n";
    if (!r.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-delay RL simulator: experiments and verification checks"};
  app.require_subcommand(1);

  std::string config, out, mode, env = "gridworld";
  std::vector<std::uint64_t> seeds;
  int o_max = -1, workers = 0, repeats = 3;
  long steps = 10000;
  double max_ratio = 1.05;
  std::vector<double> pmf;
  std::vector<std::string> files;
  double r_alg = 0, r_random = 0, r_free = 0;

  auto* run_cmd = app.add_subcommand("run", "Train or evaluate over a list of seeds");
  run_cmd->add_option("-c,--config", config, "JSON config file");
  run_cmd->add_option("-s,--seeds", seeds, "Seed list (overrides the config)");
  run_cmd->add_option("-o,--out", out, "Output directory (overrides the config)");
  run_cmd->add_option("-m,--mode", mode, "Scheduler mode (overrides the config)");
  run_cmd->add_option("--o-max", o_max, "Maximum delay (overrides the config)");
  run_cmd->add_option("-j,--workers", workers, "Worker threads");

  auto* eq_cmd = app.add_subcommand("equivalence", "Compare a random-delay run with the constant-delay run");
  eq_cmd->add_option("--env", env, "gridworld or pendulum");
  eq_cmd->add_option("--o-max", o_max, "Maximum delay")->required();
  eq_cmd->add_option("--steps", steps, "Steps per seed");
  eq_cmd->add_option("-s,--seeds", seeds, "Seed list");
  eq_cmd->add_option("-m,--mode", mode, "Scheduler on the random channel (default conservative)");
  eq_cmd->add_option("--pmf", pmf, "Delay pmf over 1..K (default uniform over 1..o_max)");

  auto* bench_cmd = app.add_subcommand("bench", "Scheduler-only runtime, random vs constant delays");
  bench_cmd->add_option("--env", env, "gridworld or pendulum");
  bench_cmd->add_option("--o-max", o_max, "Maximum delay")->required();
  bench_cmd->add_option("--steps", steps, "Scheduler steps");
  bench_cmd->add_option("--repeats", repeats, "Interleaved repeats");
  bench_cmd->add_option("--max-ratio", max_ratio, "Fail above this ratio");

  auto* golden_cmd = app.add_subcommand("golden", "Check event traces against the re-simulated schedule");
  golden_cmd->add_option("files", files, "Trace CSV files")->required();

  auto* score_cmd = app.add_subcommand("score", "Delay-free normalized score");
  score_cmd->add_option("r_alg", r_alg)->required();
  score_cmd->add_option("r_random", r_random)->required();
  score_cmd->add_option("r_free", r_free)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(config, seeds, out, mode, o_max, workers);
    if (*eq_cmd) return cmd_equivalence(env, o_max, steps, seeds.empty() ? std::vector<std::uint64_t>{1} : seeds, mode, pmf);
    if (*bench_cmd) return cmd_bench(env, o_max, steps, repeats, max_ratio);
    if (*golden_cmd) return cmd_golden(files);
    if (*score_cmd) {
      std::cout << normalized_score(r_alg, r_random, r_free) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
