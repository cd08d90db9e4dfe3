#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smlab/baselines.hpp"
#include "smlab/gridworld.hpp"
#include "smlab/learner.hpp"
#include "smlab/metrics.hpp"

namespace smlab {

/// Scalar used by the training fast path. Everything is written against the
/// templated learner, so the numeric tests exercise the same code in double
/// precision; runs are deterministic either way. Single precision roughly
/// halves training wall-clock on SIMD hardware.
using TrainScalar = float;

enum class Algorithm { Marl, Bls, Ha, Dcf };
const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct LearnerHyper {
  double lr = 1e-4;
  double gamma = 0.9;
  double eps0 = 1.0;
  double eps_floor = 0.05;
  double eps_tau = 0.0;  // <= 0: derived so exploration bottoms out near 80%
  int replay_batch = 32;
  int buffer_episodes = 10;
  bool update_on_fresh = true;
  std::vector<int> hidden{50, 25};
};

/// Everything a run needs, so identical configs give identical reports
/// (wall clock aside).
struct ExperimentConfig {
  Variant variant = Variant::SM;
  PrefType pref_type = PrefType::Symmetric;
  int n_side = 4;
  std::vector<std::int64_t> instance_seeds{1};

  int rows = 3;
  int cols = 3;
  std::uint64_t start_cell_seed = 0;

  Algorithm algorithm = Algorithm::Marl;
  long episodes = 20000;
  int steps_per_episode = 300;
  int repeats = 5;
  int outcome_window = 50;
  double noise_sigma = 0.1;
  double unmatched_penalty = -1.0;
  LearnerHyper learner;

  std::uint64_t seed = 1;
  int workers = 1;

  EpsilonSchedule schedule() const;

  /// Start cells are drawn once per instance and reused across repeats.
  GridConfig grid_config(std::int64_t instance_seed) const;

  void validate() const;
};

struct RunRecord {
  std::int64_t instance_seed = 0;
  int repeat = 0;
  std::uint64_t run_seed = 0;
  bool ok = false;
  std::string error;
  Matching matching;
  OutcomeMetrics metrics;
  long episodes = 0;  // training episodes for marl; rounds/steps for baselines
  double wall_clock_s = 0.0;
  std::vector<double> curve;  // marl: per-episode mean reward per agent-step
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

/// Aggregation conventions: instability measures average over unstable runs
/// only; the cost measures average over all (successful) runs; percentages
/// are over the runs where the underlying quantity is defined.
struct Aggregates {
  int runs = 0;
  int failed = 0;
  double stability_pct = 0.0;
  std::optional<MeanStd> doi, roi, md;
  std::optional<MeanStd> regret, egalitarian, set_equality;
  std::optional<double> msm_pct;
  std::optional<double> mm_pct;
};

Aggregates aggregate(const std::vector<RunRecord>& runs);

struct OutcomeReport {
  ExperimentConfig config;
  std::vector<RunRecord> runs;
  Aggregates aggregates;
  double total_wall_clock_s = 0.0;
};

struct TrainResult {
  std::vector<SarsaLearner<TrainScalar>> learners;
  std::vector<double> curve;
};

/// Episode loop: reset, epsilon-greedy stepping, per-step SARSA + replay
/// updates for every agent in id order, epsilon advanced per episode.
/// Deterministic given (config, instance, run_seed).
TrainResult train_marl(const ExperimentConfig& config, const Instance& instance,
                       std::uint64_t run_seed);

/// One greedy evaluation episode; a pair is in the outcome iff it stayed
/// matched through every one of the final outcome_window steps. Agents
/// without such a persistent partner are unmatched.
Matching extract_outcome(const ExperimentConfig& config, const Instance& instance,
                         std::vector<SarsaLearner<TrainScalar>>& learners);

/// Policy-driven core of extract_outcome: the callback maps
/// (agent id, step, observation) to an action.
using PolicyFn = std::function<int(int, int, const ObsIndices&)>;
Matching extract_outcome_policy(const ExperimentConfig& config,
                                const Instance& instance, const PolicyFn& policy);

/// A single (instance seed, repeat) run of the configured algorithm.
/// Failures are captured in the record, not thrown.
RunRecord execute_run(const ExperimentConfig& config, std::int64_t instance_seed,
                      int repeat);

/// All (instance seed, repeat) runs, scored and aggregated. Independent runs
/// execute in parallel on config.workers threads; records are assembled in
/// deterministic job order regardless of scheduling.
OutcomeReport run_experiment(const ExperimentConfig& config);

}  // namespace smlab
