#include "smlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "smlab/error.hpp"

namespace smlab {

namespace {

// Rank used by the cost measures. Partners outside the preference list get
// n_side + 1 so the measures stay total on arbitrary matchings.
int cost_rank(int rank, int n_side) {
  return rank == kUnacceptable ? n_side + 1 : rank;
}

struct RankSums {
  long side1 = 0;
  long side2 = 0;
  int matched = 0;
};

RankSums rank_sums(const Instance& inst, const Matching& m) {
  RankProfile rp = derive_ranks(inst);
  RankSums s;
  for (int i = 0; i < inst.n_side; ++i) {
    int j = m.partner_of_1[i];
    if (j == kUnmatched) continue;
    s.side1 += cost_rank(rp.rank_1(i, j), inst.n_side);
    s.side2 += cost_rank(rp.rank_2(j, i), inst.n_side);
    ++s.matched;
  }
  return s;
}

}  // namespace

int degree_of_instability(const Instance& inst, const Matching& m) {
  std::vector<BlockingPair> bp = find_blocking_pairs(inst, m);
  std::vector<char> side1(inst.n_side, 0), side2(inst.n_side, 0);
  for (const BlockingPair& p : bp) {
    side1[p.i] = 1;
    side2[p.j] = 1;
  }
  return static_cast<int>(std::count(side1.begin(), side1.end(), 1) +
                          std::count(side2.begin(), side2.end(), 1));
}

double ratio_of_instability(const Instance& inst, const Matching& m) {
  double pairs = static_cast<double>(find_blocking_pairs(inst, m).size());
  return pairs / (static_cast<double>(inst.n_side) * inst.n_side);
}

double max_dissatisfaction(const Instance& inst, const Matching& m) {
  std::vector<BlockingPair> bp = find_blocking_pairs(inst, m);
  double best = 0.0;
  for (const BlockingPair& p : bp) {
    int cur_i = m.partner_of_1[p.i];
    double have_i = cur_i == kUnmatched ? 0.0 : inst.utility_1(p.i, cur_i);
    best = std::max(best, inst.utility_1(p.i, p.j) - have_i);

    int cur_j = m.partner_of_2[p.j];
    double have_j = cur_j == kUnmatched ? 0.0 : inst.utility_2(p.j, cur_j);
    best = std::max(best, inst.utility_2(p.j, p.i) - have_j);
  }
  return best;
}

std::optional<int> regret_cost(const Instance& inst, const Matching& m) {
  RankProfile rp = derive_ranks(inst);
  std::optional<int> worst;
  for (int i = 0; i < inst.n_side; ++i) {
    int j = m.partner_of_1[i];
    if (j == kUnmatched) continue;
    int r = std::max(cost_rank(rp.rank_1(i, j), inst.n_side),
                     cost_rank(rp.rank_2(j, i), inst.n_side));
    worst = std::max(worst.value_or(0), r);
  }
  return worst;
}

int egalitarian_cost(const Instance& inst, const Matching& m) {
  RankSums s = rank_sums(inst, m);
  return static_cast<int>(s.side1 + s.side2);
}

int set_equality_cost(const Instance& inst, const Matching& m) {
  RankSums s = rank_sums(inst, m);
  return static_cast<int>(std::labs(s.side1 - s.side2));
}

MedianMatchStats median_match_stats(const Instance& inst, const Matching& m) {
  const std::vector<Matching> stable = enumerate_stable_matchings(inst);
  const int k = static_cast<int>(stable.size());
  const int n = inst.n_side;

  MedianMatchStats out;
  if (k % 2 == 1) {
    std::optional<Matching> msm = median_stable_matching(inst);
    if (msm) out.is_msm = (m == *msm);
  }

  auto sorted_partners = [&](const Mat<double>& u, int agent, bool side1) {
    std::vector<int> partners;
    partners.reserve(k);
    for (const Matching& s : stable) {
      partners.push_back(side1 ? s.partner_of_1[agent] : s.partner_of_2[agent]);
    }
    std::sort(partners.begin(), partners.end(), [&](int a, int b) {
      if (a == kUnmatched || b == kUnmatched) return b == kUnmatched && a != kUnmatched;
      double ua = u(agent, a), ub = u(agent, b);
      if (ua != ub) return ua > ub;
      return a < b;
    });
    return partners;
  };

  // An agent is median-matched when its partner occupies the middle of its
  // stable-partner multiset: position (K+1)/2, or either of K/2 and K/2+1
  // when K is even. Unmatched-to-unmatched equality counts.
  auto is_median_match = [&](const std::vector<int>& sorted, int partner) {
    if (k % 2 == 1) return sorted[(k + 1) / 2 - 1] == partner;
    return sorted[k / 2 - 1] == partner || sorted[k / 2] == partner;
  };

  int hits = 0;
  for (int i = 0; i < n; ++i) {
    if (is_median_match(sorted_partners(inst.utility_1, i, true),
                        m.partner_of_1[i])) {
      ++hits;
    }
  }
  for (int j = 0; j < n; ++j) {
    if (is_median_match(sorted_partners(inst.utility_2, j, false),
                        m.partner_of_2[j])) {
      ++hits;
    }
  }
  out.mm_fraction = static_cast<double>(hits) / (2.0 * n);
  return out;
}

OutcomeMetrics compute_metrics(const Instance& inst, const Matching& m,
                               bool with_median_stats) {
  OutcomeMetrics out;
  std::vector<BlockingPair> bp = find_blocking_pairs(inst, m);
  out.blocking_pairs = static_cast<int>(bp.size());
  out.stable = bp.empty();
  out.doi = degree_of_instability(inst, m);
  out.roi = ratio_of_instability(inst, m);
  out.md = max_dissatisfaction(inst, m);
  out.regret = regret_cost(inst, m);
  out.egalitarian = egalitarian_cost(inst, m);
  out.set_equality = set_equality_cost(inst, m);
  if (with_median_stats) {
    MedianMatchStats stats = median_match_stats(inst, m);
    out.is_msm = stats.is_msm;
    out.mm_fraction = stats.mm_fraction;
  }
  return out;
}

}  // namespace smlab
