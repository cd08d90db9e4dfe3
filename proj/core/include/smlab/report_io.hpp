#pragma once

#include <iosfwd>
#include <string>

#include "smlab/harness.hpp"

namespace smlab {

/// Experiment configs and outcome reports travel as structured JSON
/// documents; reports additionally as CSV (one row per run plus aggregate
/// rows) and per-run plot-data files (episode vs mean reward).

void save_config(const ExperimentConfig& config, std::ostream& out);
ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

void save_report(const OutcomeReport& report, std::ostream& out);
OutcomeReport load_report(std::istream& in);
void save_report_file(const OutcomeReport& report, const std::string& path);
OutcomeReport load_report_file(const std::string& path);

/// Recomputes the aggregate block from the per-run records (the `report`
/// subcommand's re-aggregation path).
void reaggregate(OutcomeReport& report);

/// CSV layout (documented in the emitted header comment): run rows first,
/// then rows agg_pct, agg_mean_unstable, agg_std_unstable, agg_mean_all,
/// agg_std_all carrying the aggregate values in the matching columns.
/// Cells that do not apply stay empty.
void write_report_csv(const OutcomeReport& report, std::ostream& out);

/// Training curve downsampled by block means (one point per `block`
/// episodes). Header: episode,mean_reward.
void write_curve_csv(const RunRecord& run, int block, std::ostream& out);

/// Matching document used by the `score` subcommand.
void save_matching(const Matching& m, std::ostream& out);
Matching load_matching(std::istream& in);
Matching load_matching_file(const std::string& path);

void write_metrics_json(const OutcomeMetrics& m, std::ostream& out);

}  // namespace smlab
