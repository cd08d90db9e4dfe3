#include "smlab/matching.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "smlab/error.hpp"

namespace smlab {

namespace {

void require_compatible(const Instance& inst, const Matching& m) {
  if (m.n_side() != inst.n_side ||
      static_cast<int>(m.partner_of_2.size()) != inst.n_side) {
    throw ContractViolation("matching does not match instance dimensions");
  }
  if (!m.consistent()) {
    throw ContractViolation("matching is inconsistent (mutuality violated)");
  }
}

// True when the pair would rather be together than stay as they are.
// The strict comparison on both sides makes this weak stability under ties.
bool pair_blocks(const Instance& inst, const Matching& m, int i, int j) {
  if (m.partner_of_1[i] == j) return false;
  if (!inst.mutually_acceptable(i, j)) return false;

  int cur_i = m.partner_of_1[i];
  bool i_improves = cur_i == kUnmatched || !inst.acceptable_1(i, cur_i) ||
                    inst.utility_1(i, j) > inst.utility_1(i, cur_i);
  if (!i_improves) return false;

  int cur_j = m.partner_of_2[j];
  bool j_improves = cur_j == kUnmatched || !inst.acceptable_2(j, cur_j) ||
                    inst.utility_2(j, i) > inst.utility_2(j, cur_j);
  return j_improves;
}

}  // namespace

Matching Matching::from_partners_of_1(std::vector<int> p1) {
  const int n = static_cast<int>(p1.size());
  Matching m;
  m.partner_of_1 = std::move(p1);
  m.partner_of_2.assign(n, kUnmatched);
  for (int i = 0; i < n; ++i) {
    int j = m.partner_of_1[i];
    if (j == kUnmatched) continue;
    if (j < 0 || j >= n) {
      throw ContractViolation("matching partner index out of range");
    }
    if (m.partner_of_2[j] != kUnmatched) {
      throw ContractViolation("matching is not one-to-one");
    }
    m.partner_of_2[j] = i;
  }
  return m;
}

int Matching::matched_pairs() const {
  return static_cast<int>(std::count_if(partner_of_1.begin(), partner_of_1.end(),
                                        [](int p) { return p != kUnmatched; }));
}

bool Matching::consistent() const {
  const int n = n_side();
  if (static_cast<int>(partner_of_2.size()) != n) return false;
  for (int i = 0; i < n; ++i) {
    int j = partner_of_1[i];
    if (j == kUnmatched) continue;
    if (j < 0 || j >= n || partner_of_2[j] != i) return false;
  }
  for (int j = 0; j < n; ++j) {
    int i = partner_of_2[j];
    if (i == kUnmatched) continue;
    if (i < 0 || i >= n || partner_of_1[i] != j) return false;
  }
  return true;
}

std::vector<BlockingPair> find_blocking_pairs(const Instance& inst,
                                              const Matching& matching) {
  require_compatible(inst, matching);
  std::vector<BlockingPair> out;
  for (int i = 0; i < inst.n_side; ++i) {
    for (int j = 0; j < inst.n_side; ++j) {
      if (pair_blocks(inst, matching, i, j)) {
        out.push_back({i, j});
      }
    }
  }
  return out;  // lexicographic by construction
}

bool is_stable(const Instance& inst, const Matching& matching) {
  require_compatible(inst, matching);
  for (int i = 0; i < inst.n_side; ++i) {
    for (int j = 0; j < inst.n_side; ++j) {
      if (pair_blocks(inst, matching, i, j)) return false;
    }
  }
  return true;
}

Matching gale_shapley(const Instance& inst, int proposing_side) {
  if (proposing_side != 1 && proposing_side != 2) {
    throw ContractViolation("gale_shapley: proposing_side must be 1 or 2");
  }
  const int n = inst.n_side;
  // Orient the matrices so that prop(p, r) is the proposer's utility for
  // receiver r and recv(r, p) the receiver's utility for proposer p.
  const Mat<double>& prop =
      proposing_side == 1 ? inst.utility_1 : inst.utility_2;
  const Mat<double>& recv =
      proposing_side == 1 ? inst.utility_2 : inst.utility_1;
  auto prop_ok = [&](int p, int r) {
    return inst.variant != Variant::SMI || prop(p, r) >= 0.0;
  };
  auto recv_ok = [&](int r, int p) {
    return inst.variant != Variant::SMI || recv(r, p) >= 0.0;
  };

  // Proposal order per proposer: utility descending, index ascending on ties.
  std::vector<std::vector<int>> order(n);
  for (int p = 0; p < n; ++p) {
    for (int r = 0; r < n; ++r) {
      if (prop_ok(p, r)) order[p].push_back(r);
    }
    std::stable_sort(order[p].begin(), order[p].end(), [&](int a, int b) {
      return prop(p, a) > prop(p, b);
    });
  }

  std::vector<int> next(n, 0);
  std::vector<int> held_by(n, kUnmatched);   // receiver -> proposer
  std::vector<int> engaged(n, kUnmatched);   // proposer -> receiver
  std::deque<int> free;
  for (int p = 0; p < n; ++p) free.push_back(p);

  while (!free.empty()) {
    int p = free.front();
    free.pop_front();
    bool placed = false;
    while (next[p] < static_cast<int>(order[p].size())) {
      int r = order[p][next[p]++];
      if (!recv_ok(r, p)) continue;
      int incumbent = held_by[r];
      if (incumbent == kUnmatched) {
        held_by[r] = p;
        engaged[p] = r;
        placed = true;
        break;
      }
      if (recv(r, p) > recv(r, incumbent)) {  // incumbent kept on ties
        held_by[r] = p;
        engaged[p] = r;
        engaged[incumbent] = kUnmatched;
        free.push_back(incumbent);
        placed = true;
        break;
      }
    }
    (void)placed;  // a proposer exhausting its list simply stays unmatched
  }

  Matching m = Matching::empty(n);
  for (int p = 0; p < n; ++p) {
    if (engaged[p] == kUnmatched) continue;
    if (proposing_side == 1) {
      m.match(p, engaged[p]);
    } else {
      m.match(engaged[p], p);
    }
  }
  return m;
}

namespace {

// Recursive enumeration over partial injective assignments for instances
// with unacceptable pairs. Prunes subtrees as soon as two already-decided
// agents form a blocking pair (their partners never change deeper down).
class PartialEnumerator {
 public:
  explicit PartialEnumerator(const Instance& inst) : inst_(inst) {}

  std::vector<Matching> run() {
    const int n = inst_.n_side;
    current_ = Matching::empty(n);
    assign(0);
    return std::move(found_);
  }

 private:
  void assign(int i) {
    const int n = inst_.n_side;
    if (i == n) {
      if (is_stable(inst_, current_)) found_.push_back(current_);
      return;
    }
    // Leaving i unmatched: no decided pair may block with i.
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      if (current_.partner_of_2[j] != kUnmatched &&
          pair_blocks(inst_, current_, i, j)) {
        ok = false;
      }
    }
    if (ok) assign(i + 1);

    for (int j = 0; j < n; ++j) {
      if (current_.partner_of_2[j] != kUnmatched) continue;
      if (!inst_.mutually_acceptable(i, j)) continue;
      current_.match(i, j);
      if (!partial_conflict(i, j)) assign(i + 1);
      current_.partner_of_1[i] = kUnmatched;
      current_.partner_of_2[j] = kUnmatched;
    }
  }

  // Any blocking pair among agents whose partners are already final?
  bool partial_conflict(int i, int j) {
    for (int i2 = 0; i2 < i; ++i2) {
      if (pair_blocks(inst_, current_, i2, j)) return true;
    }
    for (int j2 = 0; j2 < inst_.n_side; ++j2) {
      if (current_.partner_of_2[j2] != kUnmatched &&
          pair_blocks(inst_, current_, i, j2)) {
        return true;
      }
    }
    return false;
  }

  const Instance& inst_;
  Matching current_;
  std::vector<Matching> found_;
};

bool all_pairs_acceptable(const Instance& inst) {
  if (inst.variant != Variant::SMI) return true;
  for (int i = 0; i < inst.n_side; ++i) {
    for (int j = 0; j < inst.n_side; ++j) {
      if (!inst.mutually_acceptable(i, j)) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Matching> enumerate_stable_matchings(const Instance& inst) {
  if (inst.n_side > kEnumerationLimit) {
    throw SizeGuardError("enumerate_stable_matchings: n_side > 8");
  }
  const int n = inst.n_side;
  std::vector<Matching> out;
  if (all_pairs_acceptable(inst)) {
    // Every stable matching is perfect here: two unmatched agents on
    // opposite sides would always block. Enumerate permutations.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      Matching m = Matching::from_partners_of_1(perm);
      if (is_stable(inst, m)) out.push_back(std::move(m));
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::sort(out.begin(), out.end());
    return out;
  }
  out = PartialEnumerator(inst).run();
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Matching> median_stable_matching(const Instance& inst) {
  const std::vector<Matching> stable = enumerate_stable_matchings(inst);
  const int k = static_cast<int>(stable.size());
  if (k % 2 == 0) return std::nullopt;  // includes k == 0, which cannot occur

  const int n = inst.n_side;
  const int mid = (k + 1) / 2;  // 1-based position in the sorted multiset

  // Sorted (best first) multiset of stable partners of one agent; unmatched
  // entries are identical across stable matchings for the variants we
  // generate, but sort them last anyway.
  auto sorted_partners = [&](const Mat<double>& u, int agent, bool side1) {
    std::vector<int> partners;
    partners.reserve(k);
    for (const Matching& m : stable) {
      partners.push_back(side1 ? m.partner_of_1[agent] : m.partner_of_2[agent]);
    }
    std::sort(partners.begin(), partners.end(), [&](int a, int b) {
      if (a == kUnmatched || b == kUnmatched) return b == kUnmatched && a != kUnmatched;
      double ua = u(agent, a), ub = u(agent, b);
      if (ua != ub) return ua > ub;
      return a < b;
    });
    return partners;
  };

  Matching median = Matching::empty(n);
  for (int i = 0; i < n; ++i) {
    int j = sorted_partners(inst.utility_1, i, true)[mid - 1];
    if (j != kUnmatched) {
      if (median.partner_of_2[j] != kUnmatched) return std::nullopt;
      median.match(i, j);
    }
  }
  // The side-2 medians must tell the same story and the result must itself
  // be stable; both hold automatically for strict preferences.
  for (int j = 0; j < n; ++j) {
    int i = sorted_partners(inst.utility_2, j, false)[mid - 1];
    if (median.partner_of_2[j] != i) return std::nullopt;
  }
  if (!is_stable(inst, median)) return std::nullopt;
  return median;
}

}  // namespace smlab
