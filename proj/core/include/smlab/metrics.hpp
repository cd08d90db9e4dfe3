#pragma once

#include <optional>

#include "smlab/matching.hpp"

namespace smlab {

/// Full outcome scorecard for one matching on one instance.
/// Instability measures (doi/roi/md) are 0 exactly when the matching is
/// stable. The median fields are only filled when stable-set enumeration is
/// feasible; is_msm additionally requires an odd number of stable matchings.
struct OutcomeMetrics {
  bool stable = false;
  int blocking_pairs = 0;
  int doi = 0;           // agents appearing in at least one blocking pair
  double roi = 0.0;      // blocking pairs / n_side^2
  double md = 0.0;       // largest utility gain available to a blocking agent
  std::optional<int> regret;  // empty for an empty matching
  int egalitarian = 0;
  int set_equality = 0;
  std::optional<bool> is_msm;
  std::optional<double> mm_fraction;
};

/// Number of distinct agents (both sides) that belong to some blocking pair.
int degree_of_instability(const Instance& inst, const Matching& m);

/// Blocking-pair count divided by n_side squared.
double ratio_of_instability(const Instance& inst, const Matching& m);

/// max over blocking agents x with blocking partner v of
/// utility(x, v) - utility(x, current partner of x); an unmatched blocking
/// agent contributes with current utility 0. Zero when stable.
double max_dissatisfaction(const Instance& inst, const Matching& m);

/// Worst matched rank across both sides: max over matched pairs (i, j) of
/// max(rank_i(j), rank_j(i)). Empty matching yields no value. A matched but
/// unacceptable partner counts as rank n_side + 1 (worse than any listed
/// partner); such matchings never come out of the baselines but can come out
/// of learned policies.
std::optional<int> regret_cost(const Instance& inst, const Matching& m);

/// Sum of both sides' matched ranks. Empty sum is 0.
int egalitarian_cost(const Instance& inst, const Matching& m);

/// |side-1 rank sum - side-2 rank sum| over matched pairs.
int set_equality_cost(const Instance& inst, const Matching& m);

struct MedianMatchStats {
  std::optional<bool> is_msm;  // empty when the stable-set size is even
  double mm_fraction = 0.0;    // agents matched to a median stable partner
};

/// Median-match statistics against the enumerated stable set. For an even
/// stable-set size K an agent counts as median-matched if its partner sits
/// at position K/2 or K/2+1 of its sorted stable-partner multiset.
/// Throws SizeGuardError when enumeration is infeasible.
MedianMatchStats median_match_stats(const Instance& inst, const Matching& m);

/// Convenience bundle. with_median_stats must be false when
/// inst.n_side > kEnumerationLimit.
OutcomeMetrics compute_metrics(const Instance& inst, const Matching& m,
                               bool with_median_stats);

}  // namespace smlab
