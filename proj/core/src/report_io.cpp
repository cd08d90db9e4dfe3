#include "smlab/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "smlab/error.hpp"

namespace smlab {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json learner_to_json(const LearnerHyper& h) {
  return json{{"lr", h.lr},
              {"gamma", h.gamma},
              {"eps0", h.eps0},
              {"eps_floor", h.eps_floor},
              {"eps_tau", h.eps_tau},
              {"replay_batch", h.replay_batch},
              {"buffer_episodes", h.buffer_episodes},
              {"update_on_fresh", h.update_on_fresh},
              {"hidden", h.hidden}};
}

LearnerHyper learner_from_json(const json& j) {
  LearnerHyper h;
  h.lr = j.value("lr", h.lr);
  h.gamma = j.value("gamma", h.gamma);
  h.eps0 = j.value("eps0", h.eps0);
  h.eps_floor = j.value("eps_floor", h.eps_floor);
  h.eps_tau = j.value("eps_tau", h.eps_tau);
  h.replay_batch = j.value("replay_batch", h.replay_batch);
  h.buffer_episodes = j.value("buffer_episodes", h.buffer_episodes);
  h.update_on_fresh = j.value("update_on_fresh", h.update_on_fresh);
  h.hidden = j.value("hidden", h.hidden);
  return h;
}

json config_to_json(const ExperimentConfig& c) {
  return json{{"format", "smlab-config/1"},
              {"variant", to_string(c.variant)},
              {"pref_type", to_string(c.pref_type)},
              {"n_side", c.n_side},
              {"instance_seeds", c.instance_seeds},
              {"rows", c.rows},
              {"cols", c.cols},
              {"start_cell_seed", c.start_cell_seed},
              {"algorithm", to_string(c.algorithm)},
              {"episodes", c.episodes},
              {"steps_per_episode", c.steps_per_episode},
              {"repeats", c.repeats},
              {"outcome_window", c.outcome_window},
              {"noise_sigma", c.noise_sigma},
              {"unmatched_penalty", c.unmatched_penalty},
              {"learner", learner_to_json(c.learner)},
              {"seed", c.seed},
              {"workers", c.workers}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("variant")) c.variant = variant_from_string(j["variant"]);
  if (j.contains("pref_type")) c.pref_type = pref_type_from_string(j["pref_type"]);
  c.n_side = j.value("n_side", c.n_side);
  if (j.contains("instance_seeds")) {
    c.instance_seeds = j["instance_seeds"].get<std::vector<std::int64_t>>();
  }
  c.rows = j.value("rows", c.rows);
  c.cols = j.value("cols", c.cols);
  c.start_cell_seed = j.value("start_cell_seed", c.start_cell_seed);
  if (j.contains("algorithm")) {
    c.algorithm = algorithm_from_string(j["algorithm"]);
  }
  c.episodes = j.value("episodes", c.episodes);
  c.steps_per_episode = j.value("steps_per_episode", c.steps_per_episode);
  c.repeats = j.value("repeats", c.repeats);
  c.outcome_window = j.value("outcome_window", c.outcome_window);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.unmatched_penalty = j.value("unmatched_penalty", c.unmatched_penalty);
  if (j.contains("learner")) c.learner = learner_from_json(j["learner"]);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  return c;
}

json matching_to_json(const Matching& m) {
  return json{{"partner_of_1", m.partner_of_1}, {"partner_of_2", m.partner_of_2}};
}

Matching matching_from_json(const json& j) {
  Matching m = Matching::from_partners_of_1(
      j.at("partner_of_1").get<std::vector<int>>());
  if (j.contains("partner_of_2")) {
    auto p2 = j["partner_of_2"].get<std::vector<int>>();
    if (p2 != m.partner_of_2) {
      throw ValidationError("matching document: sides are inconsistent");
    }
  }
  return m;
}

json metrics_to_json(const OutcomeMetrics& m) {
  json j{{"stable", m.stable},
         {"blocking_pairs", m.blocking_pairs},
         {"doi", m.doi},
         {"roi", m.roi},
         {"md", m.md},
         {"egalitarian", m.egalitarian},
         {"set_equality", m.set_equality}};
  j["regret"] = m.regret ? json(*m.regret) : json(nullptr);
  j["is_msm"] = m.is_msm ? json(*m.is_msm) : json(nullptr);
  j["mm_fraction"] = m.mm_fraction ? json(*m.mm_fraction) : json(nullptr);
  return j;
}

OutcomeMetrics metrics_from_json(const json& j) {
  OutcomeMetrics m;
  m.stable = j.at("stable").get<bool>();
  m.blocking_pairs = j.at("blocking_pairs").get<int>();
  m.doi = j.at("doi").get<int>();
  m.roi = j.at("roi").get<double>();
  m.md = j.at("md").get<double>();
  m.egalitarian = j.at("egalitarian").get<int>();
  m.set_equality = j.at("set_equality").get<int>();
  if (!j.at("regret").is_null()) m.regret = j["regret"].get<int>();
  if (!j.at("is_msm").is_null()) m.is_msm = j["is_msm"].get<bool>();
  if (!j.at("mm_fraction").is_null()) {
    m.mm_fraction = j["mm_fraction"].get<double>();
  }
  return m;
}

json mean_std_to_json(const std::optional<MeanStd>& v) {
  if (!v) return nullptr;
  return json{{"mean", v->mean}, {"std", v->stddev}};
}

std::optional<MeanStd> mean_std_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return MeanStd{j.at("mean").get<double>(), j.at("std").get<double>()};
}

json aggregates_to_json(const Aggregates& a) {
  json j{{"runs", a.runs},
         {"failed", a.failed},
         {"stability_pct", a.stability_pct},
         {"doi", mean_std_to_json(a.doi)},
         {"roi", mean_std_to_json(a.roi)},
         {"md", mean_std_to_json(a.md)},
         {"regret", mean_std_to_json(a.regret)},
         {"egalitarian", mean_std_to_json(a.egalitarian)},
         {"set_equality", mean_std_to_json(a.set_equality)}};
  j["msm_pct"] = a.msm_pct ? json(*a.msm_pct) : json(nullptr);
  j["mm_pct"] = a.mm_pct ? json(*a.mm_pct) : json(nullptr);
  return j;
}

Aggregates aggregates_from_json(const json& j) {
  Aggregates a;
  a.runs = j.at("runs").get<int>();
  a.failed = j.at("failed").get<int>();
  a.stability_pct = j.at("stability_pct").get<double>();
  a.doi = mean_std_from_json(j.at("doi"));
  a.roi = mean_std_from_json(j.at("roi"));
  a.md = mean_std_from_json(j.at("md"));
  a.regret = mean_std_from_json(j.at("regret"));
  a.egalitarian = mean_std_from_json(j.at("egalitarian"));
  a.set_equality = mean_std_from_json(j.at("set_equality"));
  if (!j.at("msm_pct").is_null()) a.msm_pct = j["msm_pct"].get<double>();
  if (!j.at("mm_pct").is_null()) a.mm_pct = j["mm_pct"].get<double>();
  return a;
}

json run_to_json(const RunRecord& r) {
  json j{{"instance_seed", r.instance_seed},
         {"repeat", r.repeat},
         {"run_seed", r.run_seed},
         {"ok", r.ok},
         {"episodes", r.episodes},
         {"wall_clock_s", r.wall_clock_s}};
  if (r.ok) {
    j["matching"] = matching_to_json(r.matching);
    j["metrics"] = metrics_to_json(r.metrics);
  } else {
    j["error"] = r.error;
  }
  return j;
}

RunRecord run_from_json(const json& j) {
  RunRecord r;
  r.instance_seed = j.at("instance_seed").get<std::int64_t>();
  r.repeat = j.at("repeat").get<int>();
  r.run_seed = j.at("run_seed").get<std::uint64_t>();
  r.ok = j.at("ok").get<bool>();
  r.episodes = j.at("episodes").get<long>();
  r.wall_clock_s = j.at("wall_clock_s").get<double>();
  if (r.ok) {
    r.matching = matching_from_json(j.at("matching"));
    r.metrics = metrics_from_json(j.at("metrics"));
  } else {
    r.error = j.value("error", "");
  }
  return r;
}

}  // namespace

void save_config(const ExperimentConfig& config, std::ostream& out) {
  out << config_to_json(config).dump(2) << '\n';
}

ExperimentConfig load_config(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config document: parse error: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  return load_config(in);
}

void save_report(const OutcomeReport& report, std::ostream& out) {
  json j{{"format", "smlab-report/1"},
         {"config", config_to_json(report.config)},
         {"aggregates", aggregates_to_json(report.aggregates)},
         {"total_wall_clock_s", report.total_wall_clock_s}};
  json runs = json::array();
  for (const RunRecord& r : report.runs) runs.push_back(run_to_json(r));
  j["runs"] = std::move(runs);
  out << j.dump(2) << '\n';
}

OutcomeReport load_report(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report document: parse error: ") + e.what());
  }
  if (!j.contains("format") || j["format"] != "smlab-report/1") {
    throw ValidationError("report document: missing or unknown format tag");
  }
  OutcomeReport r;
  r.config = config_from_json(j.at("config"));
  r.aggregates = aggregates_from_json(j.at("aggregates"));
  r.total_wall_clock_s = j.at("total_wall_clock_s").get<double>();
  for (const json& rj : j.at("runs")) r.runs.push_back(run_from_json(rj));
  return r;
}

void save_report_file(const OutcomeReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  save_report(report, out);
  if (!out) throw Error("write failed: " + path);
}

OutcomeReport load_report_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  return load_report(in);
}

void reaggregate(OutcomeReport& report) {
  report.aggregates = aggregate(report.runs);
}

namespace {

const char* kCsvColumns =
    "row_type,instance_seed,repeat,run_seed,algorithm,ok,stable,"
    "blocking_pairs,doi,roi,md,regret,egalitarian,set_equality,is_msm,"
    "mm_fraction,episodes,wall_clock_s";

}  // namespace

void write_report_csv(const OutcomeReport& report, std::ostream& out) {
  out << "# smlab-report/1 csv: run rows, then aggregate rows.\n"
      << "# aggregate rows: agg_pct carries stability% (stable), msm% (is_msm) "
         "and mm% (mm_fraction);\n"
      << "# agg_mean_unstable/agg_std_unstable carry doi/roi/md over unstable "
         "runs; agg_mean_all/agg_std_all carry regret/egalitarian/set_equality "
         "over all runs.\n";
  out << kCsvColumns << '\n';
  const char* algo = to_string(report.config.algorithm);
  for (const RunRecord& r : report.runs) {
    out << "run," << r.instance_seed << ',' << r.repeat << ',' << r.run_seed
        << ',' << algo << ',' << (r.ok ? 1 : 0) << ',';
    if (r.ok) {
      const OutcomeMetrics& m = r.metrics;
      out << (m.stable ? 1 : 0) << ',' << m.blocking_pairs << ',' << m.doi
          << ',' << fmt(m.roi) << ',' << fmt(m.md) << ','
          << (m.regret ? std::to_string(*m.regret) : "") << ','
          << m.egalitarian << ',' << m.set_equality << ','
          << (m.is_msm ? (*m.is_msm ? "1" : "0") : "") << ','
          << (m.mm_fraction ? fmt(*m.mm_fraction) : "");
    } else {
      out << ",,,,,,,,,";
    }
    out << ',' << r.episodes << ',' << fmt(r.wall_clock_s) << '\n';
  }

  const Aggregates& a = report.aggregates;
  out << "agg_pct,,,,"
      << algo << ",," << fmt(a.stability_pct) << ",,,,,,,,"
      << (a.msm_pct ? fmt(*a.msm_pct) : "") << ','
      << (a.mm_pct ? fmt(*a.mm_pct) : "") << ",,\n";

  auto agg_row = [&](const char* name, const std::optional<MeanStd>& doi,
                     const std::optional<MeanStd>& roi,
                     const std::optional<MeanStd>& md,
                     const std::optional<MeanStd>& regret,
                     const std::optional<MeanStd>& egal,
                     const std::optional<MeanStd>& seteq, bool mean) {
    auto cell = [&](const std::optional<MeanStd>& v) {
      return v ? fmt(mean ? v->mean : v->stddev) : std::string();
    };
    out << name << ",,,," << algo << ",,,," << cell(doi) << ',' << cell(roi)
        << ',' << cell(md) << ',' << cell(regret) << ',' << cell(egal) << ','
        << cell(seteq) << ",,,,\n";
  };
  agg_row("agg_mean_unstable", a.doi, a.roi, a.md, std::nullopt, std::nullopt,
          std::nullopt, true);
  agg_row("agg_std_unstable", a.doi, a.roi, a.md, std::nullopt, std::nullopt,
          std::nullopt, false);
  agg_row("agg_mean_all", std::nullopt, std::nullopt, std::nullopt, a.regret,
          a.egalitarian, a.set_equality, true);
  agg_row("agg_std_all", std::nullopt, std::nullopt, std::nullopt, a.regret,
          a.egalitarian, a.set_equality, false);
}

void write_curve_csv(const RunRecord& run, int block, std::ostream& out) {
  out << "episode,mean_reward\n";
  if (block < 1) block = 1;
  for (size_t start = 0; start < run.curve.size(); start += block) {
    size_t end = std::min(run.curve.size(), start + block);
    double sum = 0.0;
    for (size_t i = start; i < end; ++i) sum += run.curve[i];
    out << start << ',' << fmt(sum / static_cast<double>(end - start)) << '\n';
  }
}

void save_matching(const Matching& m, std::ostream& out) {
  json j = matching_to_json(m);
  j["format"] = "smlab-matching/1";
  out << j.dump(2) << '\n';
}

Matching load_matching(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("matching document: parse error: ") +
                          e.what());
  }
  return matching_from_json(j);
}

Matching load_matching_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  return load_matching(in);
}

void write_metrics_json(const OutcomeMetrics& m, std::ostream& out) {
  out << metrics_to_json(m).dump(2) << '\n';
}

}  // namespace smlab
