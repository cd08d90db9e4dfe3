#pragma once

#include "smlab/matching.hpp"
#include "smlab/rng.hpp"

namespace smlab {

/// Centralized fairness baseline: the stable matching minimizing the
/// set-equality cost, ties broken by smaller egalitarian cost, then by
/// canonical order. Backed by the exhaustive enumerator, so it shares its
/// size guard (n_side <= 8).
Matching bls(const Instance& inst);

/// Distributed greedy weighted matching over the mutually-acceptable edge
/// set with edge weight utility_1(i,j) + utility_2(j,i). Agents repeatedly
/// point at their heaviest remaining neighbour and lock on mutual proposals;
/// the rng schedules who acts next and breaks ties between equal-weight
/// edges (a global random edge priority, so locally-best always has a unique
/// meaning). Result: a maximal matching with total weight at least half the
/// maximum. With distinct weights it equals the sequential greedy matching
/// regardless of scheduling. Deterministic given the rng state.
/// steps, if given, receives the number of processed proposal events.
Matching hoepman(const Instance& inst, Rng& rng, long* steps = nullptr);

/// Decentralized deferred-acceptance rounds. Every round visits all agents
/// in a fresh random order; an agent proposes to the best acceptable partner
/// that would accept it (receiver free, or strictly preferring the
/// proposer) and that it strictly prefers to its own tentative partner.
/// Displaced agents become free. Stops at the first round with no change;
/// the fixed point is a stable matching and is asserted as such.
/// Throws Error if 10 * n_side^2 rounds pass without reaching a fixed point
/// (random better-response paths converge with probability 1, so the cap is
/// a non-termination guard, not an expected outcome).
/// rounds, if given, receives the number of completed rounds.
Matching dcf(const Instance& inst, Rng& rng, long* rounds = nullptr);

}  // namespace smlab
