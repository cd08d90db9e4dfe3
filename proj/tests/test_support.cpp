#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using smlab::Instance;
using smlab::kUnmatched;
using smlab::Mat;
using smlab::Matching;
using smlab::PrefType;
using smlab::Rng;
using smlab::Variant;

namespace oracle {

Mat<int> rank_rows(const Mat<double>& u, bool drop_negative) {
  const int n = u.rows();
  Mat<int> ranks(n, u.cols(), 0);
  std::vector<int> order(u.cols());
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < u.cols(); ++j) {
      if (!drop_negative || u(i, j) >= 0.0) order.push_back(j);
    }
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return u(i, a) > u(i, b); });
    int pos = 0;
    for (size_t k = 0; k < order.size(); ++k) {
      if (k == 0 || u(i, order[k]) != u(i, order[k - 1])) {
        pos = static_cast<int>(k) + 1;
      }
      ranks(i, order[k]) = pos;
    }
  }
  return ranks;
}

namespace {

struct RankedView {
  Mat<int> r1, r2;
  int n;

  explicit RankedView(const Instance& inst)
      : r1(rank_rows(inst.utility_1, inst.variant == Variant::SMI)),
        r2(rank_rows(inst.utility_2, inst.variant == Variant::SMI)),
        n(inst.n_side) {}

  // A side's view of "I'd leave my situation for this partner".
  bool improves(const Mat<int>& r, int agent, int candidate, int current) const {
    if (r(agent, candidate) == 0) return false;  // not on the list
    if (current == kUnmatched) return true;
    if (r(agent, current) == 0) return true;  // stuck with someone unlisted
    return r(agent, candidate) < r(agent, current);
  }
};

int listed_rank_or_worst(const Mat<int>& r, int agent, int partner, int n) {
  int v = r(agent, partner);
  return v == 0 ? n + 1 : v;
}

}  // namespace

std::vector<std::pair<int, int>> blocking_pairs(const Instance& inst,
                                                const Matching& m) {
  RankedView v(inst);
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < v.n; ++i) {
    for (int j = 0; j < v.n; ++j) {
      if (m.partner_of_1[i] == j) continue;
      if (v.improves(v.r1, i, j, m.partner_of_1[i]) &&
          v.improves(v.r2, j, i, m.partner_of_2[j])) {
        out.emplace_back(i, j);
      }
    }
  }
  return out;
}

int degree_of_instability(const Instance& inst, const Matching& m) {
  std::set<int> agents;
  for (auto [i, j] : blocking_pairs(inst, m)) {
    agents.insert(i);
    agents.insert(inst.n_side + j);
  }
  return static_cast<int>(agents.size());
}

double ratio_of_instability(const Instance& inst, const Matching& m) {
  return static_cast<double>(blocking_pairs(inst, m).size()) /
         (static_cast<double>(inst.n_side) * inst.n_side);
}

double max_dissatisfaction(const Instance& inst, const Matching& m) {
  double best = 0.0;
  for (auto [i, j] : blocking_pairs(inst, m)) {
    double cur1 = m.partner_of_1[i] == kUnmatched
                      ? 0.0
                      : inst.utility_1(i, m.partner_of_1[i]);
    double cur2 = m.partner_of_2[j] == kUnmatched
                      ? 0.0
                      : inst.utility_2(j, m.partner_of_2[j]);
    best = std::max(best, inst.utility_1(i, j) - cur1);
    best = std::max(best, inst.utility_2(j, i) - cur2);
  }
  return best;
}

std::optional<int> regret_cost(const Instance& inst, const Matching& m) {
  RankedView v(inst);
  std::optional<int> worst;
  for (int i = 0; i < v.n; ++i) {
    int j = m.partner_of_1[i];
    if (j == kUnmatched) continue;
    int r = std::max(listed_rank_or_worst(v.r1, i, j, v.n),
                     listed_rank_or_worst(v.r2, j, i, v.n));
    worst = std::max(worst.value_or(0), r);
  }
  return worst;
}

int egalitarian_cost(const Instance& inst, const Matching& m) {
  RankedView v(inst);
  int total = 0;
  for (int i = 0; i < v.n; ++i) {
    int j = m.partner_of_1[i];
    if (j == kUnmatched) continue;
    total += listed_rank_or_worst(v.r1, i, j, v.n) +
             listed_rank_or_worst(v.r2, j, i, v.n);
  }
  return total;
}

int set_equality_cost(const Instance& inst, const Matching& m) {
  RankedView v(inst);
  int s1 = 0, s2 = 0;
  for (int i = 0; i < v.n; ++i) {
    int j = m.partner_of_1[i];
    if (j == kUnmatched) continue;
    s1 += listed_rank_or_worst(v.r1, i, j, v.n);
    s2 += listed_rank_or_worst(v.r2, j, i, v.n);
  }
  return std::abs(s1 - s2);
}

double matching_weight(const Instance& inst, const Matching& m) {
  double w = 0.0;
  for (int i = 0; i < inst.n_side; ++i) {
    int j = m.partner_of_1[i];
    if (j != kUnmatched) w += inst.utility_1(i, j) + inst.utility_2(j, i);
  }
  return w;
}

namespace {

double best_completion(const Instance& inst, int i, std::vector<char>& used) {
  if (i == inst.n_side) return 0.0;
  double best = best_completion(inst, i + 1, used);  // leave i unmatched
  for (int j = 0; j < inst.n_side; ++j) {
    if (used[j] || !inst.mutually_acceptable(i, j)) continue;
    used[j] = 1;
    best = std::max(best, inst.utility_1(i, j) + inst.utility_2(j, i) +
                              best_completion(inst, i + 1, used));
    used[j] = 0;
  }
  return best;
}

}  // namespace

double max_weight_matching(const Instance& inst) {
  std::vector<char> used(inst.n_side, 0);
  return best_completion(inst, 0, used);
}

Matching sequential_greedy(const Instance& inst) {
  struct E {
    int i, j;
    double w;
  };
  std::vector<E> edges;
  for (int i = 0; i < inst.n_side; ++i) {
    for (int j = 0; j < inst.n_side; ++j) {
      if (inst.mutually_acceptable(i, j)) {
        edges.push_back({i, j, inst.utility_1(i, j) + inst.utility_2(j, i)});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const E& a, const E& b) {
    if (a.w != b.w) return a.w > b.w;
    return std::pair(a.i, a.j) < std::pair(b.i, b.j);
  });
  Matching m = Matching::empty(inst.n_side);
  for (const E& e : edges) {
    if (m.partner_of_1[e.i] == kUnmatched && m.partner_of_2[e.j] == kUnmatched) {
      m.match(e.i, e.j);
    }
  }
  return m;
}

Matching mutual_best_pairing(const Instance& inst) {
  Matching m = Matching::empty(inst.n_side);
  while (true) {
    int bi = -1, bj = -1;
    double bu = 0.0;
    for (int i = 0; i < inst.n_side; ++i) {
      if (m.partner_of_1[i] != kUnmatched) continue;
      for (int j = 0; j < inst.n_side; ++j) {
        if (m.partner_of_2[j] != kUnmatched) continue;
        if (!inst.mutually_acceptable(i, j)) continue;
        if (bi == -1 || inst.utility_1(i, j) > bu) {
          bi = i;
          bj = j;
          bu = inst.utility_1(i, j);
        }
      }
    }
    if (bi == -1) break;
    m.match(bi, bj);
  }
  return m;
}

Matching random_matching(int n_side, Rng& rng) {
  std::vector<int> perm(n_side);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  const bool perfect = rng.uniform() < 0.3;
  Matching m = Matching::empty(n_side);
  for (int i = 0; i < n_side; ++i) {
    if (perfect || rng.uniform() < 0.7) m.match(i, perm[i]);
  }
  return m;
}

}  // namespace oracle

namespace fixtures {

Instance from_utilities(Variant variant, PrefType pref,
                        const std::vector<std::vector<double>>& u1,
                        const std::vector<std::vector<double>>& u2) {
  Instance inst;
  inst.n_side = static_cast<int>(u1.size());
  inst.variant = variant;
  inst.pref_type = pref;
  inst.seed = -1;
  inst.utility_1 = Mat<double>(inst.n_side, inst.n_side);
  inst.utility_2 = Mat<double>(inst.n_side, inst.n_side);
  for (int i = 0; i < inst.n_side; ++i) {
    for (int j = 0; j < inst.n_side; ++j) {
      inst.utility_1(i, j) = u1[i][j];
      inst.utility_2(i, j) = u2[i][j];
    }
  }
  return inst;
}

Instance cyclic3() {
  Instance inst;
  inst.n_side = 3;
  inst.variant = Variant::SM;
  inst.pref_type = PrefType::Asymmetric;
  inst.seed = -1;
  inst.utility_1 = Mat<double>(3, 3);
  inst.utility_2 = Mat<double>(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      inst.utility_1(i, (i + k) % 3) = 3.0 - k;
      inst.utility_2(i, (i + 1 + k) % 3) = 3.0 - k;
    }
  }
  return inst;
}

Instance two_stable() {
  return from_utilities(Variant::SM, PrefType::Asymmetric,
                        {{2, 1}, {1, 2}},
                        {{1, 2}, {2, 1}});
}

Instance all_negative(int n_side) {
  std::vector<std::vector<double>> u(n_side, std::vector<double>(n_side));
  for (int i = 0; i < n_side; ++i) {
    for (int j = 0; j < n_side; ++j) {
      u[i][j] = -1.0 - i - 0.5 * j;
    }
  }
  return from_utilities(Variant::SMI, PrefType::Asymmetric, u, u);
}

}  // namespace fixtures
