#include "smlab/baselines.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <vector>

#include "smlab/error.hpp"
#include "smlab/metrics.hpp"

namespace smlab {

Matching bls(const Instance& inst) {
  std::vector<Matching> stable = enumerate_stable_matchings(inst);
  // Stable matchings always exist for these variants, so stable is nonempty.
  const Matching* best = &stable.front();
  int best_d = set_equality_cost(inst, *best);
  int best_c = egalitarian_cost(inst, *best);
  for (const Matching& m : stable) {
    int d = set_equality_cost(inst, m);
    int c = egalitarian_cost(inst, m);
    if (d < best_d || (d == best_d && c < best_c)) {
      best = &m;
      best_d = d;
      best_c = c;
    }
    // Equal (d, c): keep the earlier one; the enumeration is canonically
    // sorted already.
  }
  return *best;
}

namespace {

struct Edge {
  int i;            // side-1 agent
  int j;            // side-2 agent
  double weight;
  std::uint64_t tiebreak;
};

// Global priority: heavier first, random rank among equal weights. A total
// order over edges is what guarantees the locally-best pointers always
// contain a mutual pair, so the process cannot stall.
bool edge_precedes(const Edge& a, const Edge& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  if (a.tiebreak != b.tiebreak) return a.tiebreak < b.tiebreak;
  return std::pair(a.i, a.j) < std::pair(b.i, b.j);
}

}  // namespace

Matching hoepman(const Instance& inst, Rng& rng, long* steps) {
  const int n = inst.n_side;
  const int total = 2 * n;

  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (inst.mutually_acceptable(i, j)) {
        edges.push_back({i, j, inst.utility_1(i, j) + inst.utility_2(j, i), 0});
      }
    }
  }
  for (Edge& e : edges) e.tiebreak = rng.next_u64();

  // Incidence lists by global agent id: side 1 is 0..n-1, side 2 is n..2n-1.
  std::vector<std::vector<int>> incident(total);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    incident[edges[e].i].push_back(e);
    incident[n + edges[e].j].push_back(e);
  }

  std::vector<int> matched_edge(total, -1);
  std::vector<int> target(total, -1);  // current proposal, by agent

  std::deque<int> queue;
  {
    std::vector<int> init(total);
    std::iota(init.begin(), init.end(), 0);
    rng.shuffle(init);
    queue.assign(init.begin(), init.end());
  }

  auto other_end = [&](const Edge& e, int agent) {
    return agent < n ? n + e.j : e.i;
  };

  long processed = 0;
  while (!queue.empty()) {
    int a = queue.front();
    queue.pop_front();
    if (matched_edge[a] != -1) continue;
    ++processed;

    int best = -1;
    for (int e : incident[a]) {
      if (matched_edge[other_end(edges[e], a)] != -1) continue;
      if (best == -1 || edge_precedes(edges[e], edges[best])) best = e;
    }
    if (best == -1) continue;  // no free neighbour left; stays unmatched

    int b = other_end(edges[best], a);
    target[a] = b;
    if (target[b] == a) {
      matched_edge[a] = best;
      matched_edge[b] = best;
      // Anyone who was pointing at the newly matched pair must re-aim.
      for (int z = 0; z < total; ++z) {
        if (matched_edge[z] == -1 && (target[z] == a || target[z] == b)) {
          target[z] = -1;
          queue.push_back(z);
        }
      }
    }
  }
  if (steps) *steps = processed;

  Matching m = Matching::empty(n);
  for (int i = 0; i < n; ++i) {
    if (matched_edge[i] != -1) m.match(i, edges[matched_edge[i]].j);
  }
  return m;
}

Matching dcf(const Instance& inst, Rng& rng, long* rounds_out) {
  const int n = inst.n_side;
  const long round_cap = 10L * n * n;

  Matching cur = Matching::empty(n);
  std::vector<int> order(2 * n);
  std::iota(order.begin(), order.end(), 0);

  long rounds = 0;
  bool changed = true;
  while (changed) {
    if (++rounds > round_cap) {
      throw Error("dcf: round cap exceeded without reaching a fixed point");
    }
    changed = false;
    rng.shuffle(order);
    for (int agent : order) {
      const bool side1 = agent < n;
      const int x = side1 ? agent : agent - n;
      const Mat<double>& mine = side1 ? inst.utility_1 : inst.utility_2;
      const Mat<double>& theirs = side1 ? inst.utility_2 : inst.utility_1;
      std::vector<int>& my_side = side1 ? cur.partner_of_1 : cur.partner_of_2;
      std::vector<int>& their_side = side1 ? cur.partner_of_2 : cur.partner_of_1;

      const int current = my_side[x];
      int best = -1;
      for (int y = 0; y < n; ++y) {
        if (y == current) continue;
        bool ok = inst.variant != Variant::SMI ||
                  (mine(x, y) >= 0.0 && theirs(y, x) >= 0.0);
        if (!ok) continue;
        // I must gain by moving (any acceptable partner beats being free).
        if (current != kUnmatched && mine(x, y) <= mine(x, current)) continue;
        // The receiver must accept: free, or strictly preferring me.
        int holder = their_side[y];
        if (holder != kUnmatched && theirs(y, x) <= theirs(y, holder)) continue;
        if (best == -1 || mine(x, y) > mine(x, best)) best = y;
      }
      if (best == -1) continue;

      if (current != kUnmatched) their_side[current] = kUnmatched;
      int displaced = their_side[best];
      if (displaced != kUnmatched) my_side[displaced] = kUnmatched;
      my_side[x] = best;
      their_side[best] = x;
      changed = true;
    }
  }
  if (rounds_out) *rounds_out = rounds;

  if (!is_stable(inst, cur)) {
    throw Error("dcf: fixed point is not stable (internal error)");
  }
  return cur;
}

}  // namespace smlab
