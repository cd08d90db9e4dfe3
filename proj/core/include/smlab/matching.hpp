#pragma once

#include <compare>
#include <optional>
#include <vector>

#include "smlab/instance.hpp"

namespace smlab {

inline constexpr int kUnmatched = -1;

/// A (possibly partial) one-to-one pairing between the two sides.
/// partner_of_1[i] is the side-2 index matched to side-1 agent i, or
/// kUnmatched; partner_of_2 is the inverse view. Both arrays are kept
/// mutually consistent.
struct Matching {
  std::vector<int> partner_of_1;
  std::vector<int> partner_of_2;

  static Matching empty(int n_side) {
    Matching m;
    m.partner_of_1.assign(n_side, kUnmatched);
    m.partner_of_2.assign(n_side, kUnmatched);
    return m;
  }

  /// Builds the inverse side from partner_of_1. Throws ContractViolation if
  /// the assignment is not injective or indices are out of range.
  static Matching from_partners_of_1(std::vector<int> p1);

  void match(int i, int j) {
    partner_of_1[i] = j;
    partner_of_2[j] = i;
  }

  int n_side() const { return static_cast<int>(partner_of_1.size()); }
  int matched_pairs() const;
  bool is_perfect() const { return matched_pairs() == n_side(); }

  /// Mutual consistency + one-to-one + index ranges.
  bool consistent() const;

  bool operator==(const Matching& other) const {
    return partner_of_1 == other.partner_of_1;
  }
  /// Canonical order: lexicographic on partner_of_1 (kUnmatched sorts first).
  bool operator<(const Matching& other) const {
    return partner_of_1 < other.partner_of_1;
  }
};

struct BlockingPair {
  int i;  // side-1 index
  int j;  // side-2 index
  auto operator<=>(const BlockingPair&) const = default;
};

/// All pairs (i, j) that block `matching`: mutually acceptable, not matched
/// to each other, and each of the two either is unmatched, holds an
/// unacceptable partner, or strictly prefers the other by utility. Under
/// ties this is the weak-stability notion (strict preference on both sides).
/// Output sorted lexicographically. Throws ContractViolation if the matching
/// is inconsistent or sized wrong for the instance.
std::vector<BlockingPair> find_blocking_pairs(const Instance& inst,
                                              const Matching& matching);

bool is_stable(const Instance& inst, const Matching& matching);

/// Deferred acceptance. proposing_side is 1 or 2. Proposers walk their list
/// in (utility desc, index asc) order and skip unacceptable partners;
/// receivers reject unacceptable proposers and keep the incumbent on ties.
/// Returns a (weakly) stable matching, proposer-optimal when preferences are
/// strict.
Matching gale_shapley(const Instance& inst, int proposing_side);

/// Exhaustive search over injective assignments (partial ones for SMI),
/// restricted to mutually acceptable pairs. Sorted canonically. Guarded:
/// throws SizeGuardError for n_side > 8.
std::vector<Matching> enumerate_stable_matchings(const Instance& inst);

inline constexpr int kEnumerationLimit = 8;

/// The matching assigning every agent the ((K+1)/2)-th of its stable
/// partners (sorted by that agent's utility, descending), where K is the
/// number of stable matchings. Empty when K is even. With ties the per-agent
/// medians can fail to assemble into a stable matching; that also yields
/// empty (cannot occur with strict preferences, where the median property
/// guarantees stability).
std::optional<Matching> median_stable_matching(const Instance& inst);

}  // namespace smlab
