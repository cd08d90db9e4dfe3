// Command-line front end: generate instances, run experiments, score a
// matching against an instance, and re-aggregate existing reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "smlab/error.hpp"
#include "smlab/report_io.hpp"

namespace fs = std::filesystem;
using namespace smlab;

namespace {

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> algo;
  std::optional<std::string> variant;
  std::optional<std::string> pref;
  std::optional<std::string> grid;
  std::optional<int> agents;
  std::optional<long> episodes;
  std::optional<int> steps;
  std::optional<int> repeats;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> count;
  std::optional<std::int64_t> instance_seed_base;
  std::optional<int> window;
  std::optional<double> sigma;
  std::string out_dir = ".";
  bool trace = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path,
                  "JSON config file; explicit flags override its values");
  cmd->add_option("--algo", f.algo, "marl | bls | ha | dcf");
  cmd->add_option("--variant", f.variant, "SM | SMI | SMT");
  cmd->add_option("--pref", f.pref, "symmetric | asymmetric");
  cmd->add_option("--grid", f.grid, "grid size as RxC, e.g. 3x3");
  cmd->add_option("--agents", f.agents, "total agent count (even; both sides)");
  cmd->add_option("--episodes", f.episodes, "training episodes per run");
  cmd->add_option("--steps", f.steps, "steps per episode");
  cmd->add_option("--repeats", f.repeats, "runs per instance");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--workers", f.workers, "parallel runs");
  cmd->add_option("--count", f.count, "number of instances");
  cmd->add_option("--instance-seed-base", f.instance_seed_base,
                  "first instance seed (instances use base..base+count-1)");
  cmd->add_option("--window", f.window, "outcome persistence window (steps)");
  cmd->add_option("--sigma", f.sigma, "reward noise standard deviation");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_flag("--trace", f.trace,
                "dump the greedy evaluation trajectory per marl run");
}

std::pair<int, int> parse_grid(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos) x = s.find('X');
  if (x == std::string::npos) {
    throw ValidationError("--grid expects RxC, e.g. 3x3");
  }
  int rows = std::stoi(s.substr(0, x));
  int cols = std::stoi(s.substr(x + 1));
  if (rows < 1 || cols < 1) throw ValidationError("--grid dimensions must be >= 1");
  return {rows, cols};
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig c;
  if (f.config_path) c = load_config_file(*f.config_path);
  if (f.algo) c.algorithm = algorithm_from_string(*f.algo);
  if (f.variant) c.variant = variant_from_string(*f.variant);
  if (f.pref) c.pref_type = pref_type_from_string(*f.pref);
  if (f.grid) {
    auto [rows, cols] = parse_grid(*f.grid);
    c.rows = rows;
    c.cols = cols;
  }
  if (f.agents) {
    if (*f.agents < 2 || *f.agents % 2 != 0) {
      throw ValidationError("--agents must be an even count >= 2");
    }
    c.n_side = *f.agents / 2;
  }
  if (f.episodes) c.episodes = *f.episodes;
  if (f.steps) c.steps_per_episode = *f.steps;
  if (f.repeats) c.repeats = *f.repeats;
  if (f.seed) c.seed = *f.seed;
  if (f.workers) c.workers = *f.workers;
  if (f.window) c.outcome_window = *f.window;
  if (f.sigma) c.noise_sigma = *f.sigma;
  if (f.count || f.instance_seed_base) {
    int count = f.count.value_or(
        std::max<int>(1, static_cast<int>(c.instance_seeds.size())));
    std::int64_t base = f.instance_seed_base.value_or(1);
    c.instance_seeds.clear();
    for (int k = 0; k < count; ++k) c.instance_seeds.push_back(base + k);
  }
  return c;
}

int cmd_gen(const CommonFlags& flags) {
  ExperimentConfig c = build_config(flags);
  fs::create_directories(flags.out_dir);
  for (std::int64_t s : c.instance_seeds) {
    Instance inst = generate_instance(c.variant, c.pref_type, c.n_side, s);
    fs::path path = fs::path(flags.out_dir) /
                    ("instance_" + std::string(to_string(c.variant)) + "_" +
                     to_string(c.pref_type) + "_n" + std::to_string(c.n_side) +
                     "_seed" + std::to_string(s) + ".json");
    save_instance_file(inst, path.string());
    std::cout << path.string() << '\n';
  }
  return 0;
}

void write_trace(const ExperimentConfig& c, const Instance& inst,
                 std::vector<SarsaLearner<TrainScalar>>& learners,
                 const fs::path& path) {
  GridWorld env(c.grid_config(inst.seed), inst);
  Rng unused(0);
  std::ofstream out(path);
  const auto* step_out = &env.reset(mix_seed({c.seed, 0x05u}));
  dump_trajectory_line(out, env.state(), {});
  std::vector<int> actions(env.num_agents());
  for (int t = 0; t < c.steps_per_episode; ++t) {
    for (int a = 0; a < env.num_agents(); ++a) {
      actions[a] = learners[a].select(step_out->observations[a], 0.0, unused);
    }
    step_out = &env.step(actions);
    dump_trajectory_line(out, env.state(), step_out->rewards);
  }
}

int cmd_run(const CommonFlags& flags) {
  ExperimentConfig c = build_config(flags);
  c.validate();
  fs::create_directories(flags.out_dir);

  OutcomeReport report = run_experiment(c);

  fs::path dir(flags.out_dir);
  save_report_file(report, (dir / "report.json").string());
  {
    std::ofstream csv(dir / "report.csv");
    write_report_csv(report, csv);
  }
  for (const RunRecord& r : report.runs) {
    if (r.curve.empty()) continue;
    std::ofstream curve(dir / ("curve_seed" + std::to_string(r.instance_seed) +
                               "_rep" + std::to_string(r.repeat) + ".csv"));
    write_curve_csv(r, 100, curve);
  }
  if (flags.trace && c.algorithm == Algorithm::Marl) {
    for (std::int64_t s : c.instance_seeds) {
      for (int rep = 0; rep < c.repeats; ++rep) {
        Instance inst = generate_instance(c.variant, c.pref_type, c.n_side, s);
        std::uint64_t run_seed =
            mix_seed({c.seed, 0x06u, static_cast<std::uint64_t>(s),
                      static_cast<std::uint64_t>(rep),
                      static_cast<std::uint64_t>(c.algorithm)});
        TrainResult tr = train_marl(c, inst, run_seed);
        write_trace(c, inst, tr.learners,
                    dir / ("trace_seed" + std::to_string(s) + "_rep" +
                           std::to_string(rep) + ".jsonl"));
      }
    }
  }

  int failed = report.aggregates.failed;
  std::cout << "runs: " << report.aggregates.runs << "  failed: " << failed
            << "  stability%: " << report.aggregates.stability_pct << '\n';
  for (const RunRecord& r : report.runs) {
    if (!r.ok) {
      std::cerr << "run (seed " << r.instance_seed << ", repeat " << r.repeat
                << ") failed: " << r.error << '\n';
    }
  }
  return failed == 0 ? 0 : 1;
}

int cmd_score(const std::string& instance_path, const std::string& matching_path,
              const std::string& out_path) {
  Instance inst = load_instance_file(instance_path);
  Matching m = load_matching_file(matching_path);
  OutcomeMetrics metrics =
      compute_metrics(inst, m, inst.n_side <= kEnumerationLimit);
  if (out_path.empty()) {
    write_metrics_json(metrics, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw Error("cannot open for writing: " + out_path);
    write_metrics_json(metrics, out);
  }
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_dir) {
  OutcomeReport report = load_report_file(in_path);
  reaggregate(report);
  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  save_report_file(report, (dir / "report.json").string());
  std::ofstream csv(dir / "report.csv");
  write_report_csv(report, csv);
  std::cout << (dir / "report.json").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized stable-matching laboratory"};
  app.require_subcommand(1);

  CommonFlags gen_flags, run_flags;
  CLI::App* gen = app.add_subcommand("gen", "generate problem instances");
  add_common_flags(gen, gen_flags);
  CLI::App* run = app.add_subcommand("run", "run an experiment");
  add_common_flags(run, run_flags);

  std::string score_instance, score_matching, score_out;
  CLI::App* score =
      app.add_subcommand("score", "score a matching file against an instance");
  score->add_option("--instance", score_instance, "instance JSON file")
      ->required();
  score->add_option("--matching", score_matching, "matching JSON file")
      ->required();
  score->add_option("--out", score_out, "write metrics JSON here (default stdout)");

  std::string report_in, report_out = ".";
  CLI::App* rep =
      app.add_subcommand("report", "re-aggregate a report from its run records");
  rep->add_option("--in", report_in, "existing report.json")->required();
  rep->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_flags);
    if (run->parsed()) return cmd_run(run_flags);
    if (score->parsed()) return cmd_score(score_instance, score_matching, score_out);
    if (rep->parsed()) return cmd_report(report_in, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
