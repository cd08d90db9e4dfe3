#include "smlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "smlab/error.hpp"

namespace smlab {

namespace {

// Stream tags for deriving independent rng seeds from a run seed.
enum : std::uint64_t {
  kTagInit = 0x01,
  kTagReplay = 0x02,
  kTagAction = 0x03,
  kTagEpisode = 0x04,
  kTagEval = 0x05,
  kTagRun = 0x06,
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  double dev = 0.0;
  for (double x : xs) dev += (x - r.mean) * (x - r.mean);
  r.stddev = std::sqrt(dev / static_cast<double>(xs.size()));
  return r;
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Marl: return "marl";
    case Algorithm::Bls: return "bls";
    case Algorithm::Ha: return "ha";
    case Algorithm::Dcf: return "dcf";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), ::tolower);
  if (t == "marl") return Algorithm::Marl;
  if (t == "bls") return Algorithm::Bls;
  if (t == "ha") return Algorithm::Ha;
  if (t == "dcf") return Algorithm::Dcf;
  throw ValidationError("unknown algorithm '" + s + "' (marl, bls, ha, dcf)");
}

EpsilonSchedule ExperimentConfig::schedule() const {
  EpsilonSchedule s;
  s.eps0 = learner.eps0;
  s.floor = learner.eps_floor;
  s.tau = learner.eps_tau > 0.0
              ? learner.eps_tau
              : EpsilonSchedule::tau_for(episodes, 0.8, 0.06, learner.eps0);
  return s;
}

GridConfig ExperimentConfig::grid_config(std::int64_t instance_seed) const {
  GridConfig g;
  g.rows = rows;
  g.cols = cols;
  g.steps_per_episode = steps_per_episode;
  g.noise_sigma = noise_sigma;
  g.unmatched_penalty = unmatched_penalty;
  g.start_cells = draw_start_cells(
      rows, cols, n_side,
      mix_seed({start_cell_seed, static_cast<std::uint64_t>(instance_seed)}));
  return g;
}

void ExperimentConfig::validate() const {
  if (n_side < 1) throw ValidationError("config: n_side must be >= 1");
  if (rows < 1 || cols < 1) throw ValidationError("config: grid must be nonempty");
  if (episodes < 1) throw ValidationError("config: episodes must be positive");
  if (steps_per_episode < 1) {
    throw ValidationError("config: steps_per_episode must be positive");
  }
  if (repeats < 1) throw ValidationError("config: repeats must be positive");
  if (outcome_window < 1) {
    throw ValidationError("config: outcome window must be positive");
  }
  if (instance_seeds.empty()) {
    throw ValidationError("config: at least one instance seed required");
  }
  if (noise_sigma < 0.0) throw ValidationError("config: noise_sigma must be >= 0");
}

TrainResult train_marl(const ExperimentConfig& config, const Instance& instance,
                       std::uint64_t run_seed) {
  GridWorld env(config.grid_config(instance.seed), instance);
  const int agents = env.num_agents();
  const int steps = config.steps_per_episode;
  const EpsilonSchedule schedule = config.schedule();

  LearnerOptions opts;
  opts.hidden = config.learner.hidden;
  opts.adam.lr = config.learner.lr;
  opts.gamma = config.learner.gamma;
  opts.replay_batch = config.learner.replay_batch;
  opts.buffer_episodes = config.learner.buffer_episodes;
  opts.update_on_fresh = config.learner.update_on_fresh;

  TrainResult result;
  result.learners.reserve(agents);
  std::vector<Rng> action_rng;
  for (int a = 0; a < agents; ++a) {
    result.learners.emplace_back(
        env.observation_size(), env.num_actions(), opts,
        mix_seed({run_seed, kTagInit, static_cast<std::uint64_t>(a)}),
        mix_seed({run_seed, kTagReplay, static_cast<std::uint64_t>(a)}));
    action_rng.emplace_back(
        mix_seed({run_seed, kTagAction, static_cast<std::uint64_t>(a)}));
  }

  result.curve.reserve(config.episodes);
  std::vector<int> actions(agents), next_actions(agents);
  std::vector<ObsIndices> prev_obs;
  Transition tr;

  for (long e = 0; e < config.episodes; ++e) {
    const double eps = schedule.at(static_cast<double>(e));
    const auto& start = env.reset(
        mix_seed({run_seed, kTagEpisode, static_cast<std::uint64_t>(e)}));
    prev_obs = start.observations;
    for (int a = 0; a < agents; ++a) {
      result.learners[a].begin_episode();
      actions[a] = result.learners[a].select(prev_obs[a], eps, action_rng[a]);
    }

    double reward_sum = 0.0;
    for (int t = 0; t < steps; ++t) {
      const auto& out = env.step(actions);
      for (double r : out.rewards) reward_sum += r;
      const bool terminal = (t == steps - 1);
      if (!terminal) {
        for (int a = 0; a < agents; ++a) {
          next_actions[a] =
              result.learners[a].select(out.observations[a], eps, action_rng[a]);
        }
      }
      for (int a = 0; a < agents; ++a) {
        tr.obs = prev_obs[a];
        tr.next_obs = out.observations[a];
        tr.action = actions[a];
        tr.next_action = terminal ? 0 : next_actions[a];
        tr.reward = out.rewards[a];
        tr.terminal = terminal;
        result.learners[a].observe(tr);
      }
      if (!terminal) {
        prev_obs = out.observations;
        actions.swap(next_actions);
      }
    }
    result.curve.push_back(reward_sum / (static_cast<double>(steps) * agents));
  }
  return result;
}

Matching extract_outcome_policy(const ExperimentConfig& config,
                                const Instance& instance, const PolicyFn& policy) {
  GridWorld env(config.grid_config(instance.seed), instance);
  const int agents = env.num_agents();
  const int steps = config.steps_per_episode;
  const int window = std::min(config.outcome_window, steps);

  std::vector<int> actions(agents);
  const auto* out = &env.reset(mix_seed({config.seed, kTagEval}));

  constexpr int kBroken = -2;
  std::vector<int> persistent(agents, kBroken);
  for (int t = 0; t < steps; ++t) {
    for (int a = 0; a < agents; ++a) {
      actions[a] = policy(a, t, out->observations[a]);
    }
    out = &env.step(actions);
    if (t == steps - window) persistent = env.state().matched_with;
    if (t > steps - window) {
      for (int a = 0; a < agents; ++a) {
        if (persistent[a] != env.state().matched_with[a]) persistent[a] = kBroken;
      }
    }
  }

  Matching m = Matching::empty(instance.n_side);
  for (int i = 0; i < instance.n_side; ++i) {
    if (persistent[i] != kBroken && persistent[i] != kNoAgent) {
      m.match(i, persistent[i] - instance.n_side);
    }
  }
  return m;
}

Matching extract_outcome(const ExperimentConfig& config, const Instance& instance,
                         std::vector<SarsaLearner<TrainScalar>>& learners) {
  Rng unused_rng(0);  // greedy selection draws nothing at eps = 0
  return extract_outcome_policy(
      config, instance, [&](int agent, int, const ObsIndices& obs) {
        return learners[agent].select(obs, 0.0, unused_rng);
      });
}

RunRecord execute_run(const ExperimentConfig& config, std::int64_t instance_seed,
                      int repeat) {
  RunRecord rec;
  rec.instance_seed = instance_seed;
  rec.repeat = repeat;
  rec.run_seed = mix_seed({config.seed, kTagRun,
                           static_cast<std::uint64_t>(instance_seed),
                           static_cast<std::uint64_t>(repeat),
                           static_cast<std::uint64_t>(config.algorithm)});
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Instance instance = generate_instance(config.variant, config.pref_type,
                                          config.n_side, instance_seed);
    switch (config.algorithm) {
      case Algorithm::Marl: {
        TrainResult trained = train_marl(config, instance, rec.run_seed);
        rec.matching = extract_outcome(config, instance, trained.learners);
        rec.curve = std::move(trained.curve);
        rec.episodes = config.episodes;
        break;
      }
      case Algorithm::Bls: {
        rec.matching = bls(instance);
        rec.episodes = 0;
        break;
      }
      case Algorithm::Ha: {
        Rng rng(rec.run_seed);
        long steps = 0;
        rec.matching = hoepman(instance, rng, &steps);
        rec.episodes = steps;
        break;
      }
      case Algorithm::Dcf: {
        Rng rng(rec.run_seed);
        long rounds = 0;
        rec.matching = dcf(instance, rng, &rounds);
        rec.episodes = rounds;
        break;
      }
    }
    rec.metrics = compute_metrics(instance, rec.matching,
                                  config.n_side <= kEnumerationLimit);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.wall_clock_s = elapsed_s(t0);
  return rec;
}

Aggregates aggregate(const std::vector<RunRecord>& runs) {
  Aggregates agg;
  agg.runs = static_cast<int>(runs.size());

  std::vector<double> doi, roi, md, regret, egal, seteq, mm;
  int ok_count = 0, stable_count = 0, msm_defined = 0, msm_true = 0;
  for (const RunRecord& r : runs) {
    if (!r.ok) {
      ++agg.failed;
      continue;
    }
    ++ok_count;
    const OutcomeMetrics& m = r.metrics;
    if (m.stable) {
      ++stable_count;
    } else {
      doi.push_back(m.doi);
      roi.push_back(m.roi);
      md.push_back(m.md);
    }
    if (m.regret) regret.push_back(*m.regret);
    egal.push_back(m.egalitarian);
    seteq.push_back(m.set_equality);
    if (m.is_msm) {
      ++msm_defined;
      if (*m.is_msm) ++msm_true;
    }
    if (m.mm_fraction) mm.push_back(*m.mm_fraction);
  }
  if (ok_count > 0) {
    agg.stability_pct = 100.0 * stable_count / ok_count;
    if (!doi.empty()) {
      agg.doi = mean_std(doi);
      agg.roi = mean_std(roi);
      agg.md = mean_std(md);
    }
    if (!regret.empty()) agg.regret = mean_std(regret);
    agg.egalitarian = mean_std(egal);
    agg.set_equality = mean_std(seteq);
    if (msm_defined > 0) agg.msm_pct = 100.0 * msm_true / msm_defined;
    if (!mm.empty()) agg.mm_pct = 100.0 * mean_std(mm).mean;
  }
  return agg;
}

OutcomeReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  struct Job {
    std::int64_t instance_seed;
    int repeat;
  };
  std::vector<Job> jobs;
  for (std::int64_t s : config.instance_seeds) {
    for (int r = 0; r < config.repeats; ++r) jobs.push_back({s, r});
  }

  std::vector<RunRecord> records(jobs.size());
  std::atomic<size_t> next{0};
  const int workers =
      std::max(1, std::min(config.workers, static_cast<int>(jobs.size())));
  auto work = [&] {
    while (true) {
      size_t k = next.fetch_add(1);
      if (k >= jobs.size()) break;
      records[k] = execute_run(config, jobs[k].instance_seed, jobs[k].repeat);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  OutcomeReport report;
  report.config = config;
  report.runs = std::move(records);
  report.aggregates = aggregate(report.runs);
  report.total_wall_clock_s = elapsed_s(t0);
  return report;
}

}  // namespace smlab
