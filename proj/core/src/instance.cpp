#include "smlab/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "smlab/error.hpp"
#include "smlab/rng.hpp"

namespace smlab {

namespace {

constexpr long kMaxRedraws = 1000000;

struct Range {
  double lo, hi;
};

Range utility_range(Variant v) {
  return v == Variant::SMI ? Range{-10.0, 10.0} : Range{1.0, 10.0};
}

// Strict order must hold over the acceptable entries of a row.
bool row_strictly_ordered(const Instance& inst, const Mat<double>& m, int row) {
  std::vector<double> vals;
  for (int c = 0; c < m.cols(); ++c) {
    double u = m(row, c);
    if (inst.variant == Variant::SMI && u < 0.0) continue;
    vals.push_back(u);
  }
  std::sort(vals.begin(), vals.end());
  return std::adjacent_find(vals.begin(), vals.end()) == vals.end();
}

void draw_row(Mat<double>& m, int row, Range r, Rng& rng) {
  for (int c = 0; c < m.cols(); ++c) {
    m(row, c) = rng.uniform_real(r.lo, r.hi);
  }
}

void draw_matrix_strict(Instance& inst, Mat<double>& m, Rng& rng, long& redraws) {
  Range r = utility_range(inst.variant);
  bool need_strict = inst.variant != Variant::SMT;
  for (int i = 0; i < m.rows(); ++i) {
    draw_row(m, i, r, rng);
    while (need_strict && !row_strictly_ordered(inst, m, i)) {
      if (++redraws > kMaxRedraws) {
        throw Error("generate_instance: redraw cap exceeded (internal error)");
      }
      draw_row(m, i, r, rng);
    }
  }
}

// With probability 1/2, copy one entry of the row over another.
void force_row_ties(Mat<double>& m, Rng& rng) {
  if (m.cols() < 2) return;
  for (int i = 0; i < m.rows(); ++i) {
    if (rng.uniform() < 0.5) {
      int a = rng.uniform_int(m.cols());
      int b = rng.uniform_int(m.cols() - 1);
      if (b >= a) ++b;
      m(i, b) = m(i, a);
    }
  }
}

void mirror(const Mat<double>& u1, Mat<double>& u2) {
  for (int i = 0; i < u1.rows(); ++i) {
    for (int j = 0; j < u1.cols(); ++j) {
      u2(j, i) = u1(i, j);
    }
  }
}

// Randomized depth-first fill; Latin squares are dense enough that this
// rarely backtracks at the sizes we use.
Mat<int> random_latin_square(int n, Rng& rng) {
  Mat<int> grid(n, n, -1);
  std::vector<std::vector<char>> row_used(n, std::vector<char>(n, 0));
  std::vector<std::vector<char>> col_used(n, std::vector<char>(n, 0));
  std::vector<std::vector<int>> orders(n * n);

  int pos = 0;
  while (pos < n * n) {
    const int r = pos / n, c = pos % n;
    std::vector<int>& order = orders[pos];
    if (grid(r, c) == -1 && order.empty()) {
      for (int s = 0; s < n; ++s) {
        if (!row_used[r][s] && !col_used[c][s]) order.push_back(s);
      }
      rng.shuffle(order);
    }
    if (grid(r, c) != -1) {  // undo before retrying this cell
      row_used[r][grid(r, c)] = col_used[c][grid(r, c)] = 0;
      grid(r, c) = -1;
    }
    if (order.empty()) {  // dead end: back up
      if (pos == 0) throw Error("latin square generation failed (internal)");
      --pos;
      continue;
    }
    int s = order.back();
    order.pop_back();
    grid(r, c) = s;
    row_used[r][s] = col_used[c][s] = 1;
    ++pos;
    if (pos < n * n) orders[pos].clear();  // fresh candidates on forward entry
  }
  return grid;
}

// Symmetric markets share one weight per pair and must also mirror the
// preference positions themselves (agent i ranks j exactly where j ranks i).
// That only holds when the rank table is a Latin square, so build one and
// attach a common descending value per rank level.
void draw_symmetric(Instance& inst, Rng& rng, long& redraws) {
  const int n = inst.n_side;
  Range range = utility_range(inst.variant);
  Mat<int> ranks = random_latin_square(n, rng);
  std::vector<double> levels(n);
  while (true) {
    for (double& v : levels) v = rng.uniform_real(range.lo, range.hi);
    std::sort(levels.begin(), levels.end(), std::greater<>());
    if (std::adjacent_find(levels.begin(), levels.end()) == levels.end()) break;
    if (++redraws > kMaxRedraws) {
      throw Error("generate_instance: redraw cap exceeded (internal error)");
    }
  }
  if (inst.variant == Variant::SMT && n >= 2) {
    // Ties are forced by merging value levels so the shared-weight
    // structure survives; the merge count mirrors a coin flip per agent.
    for (int i = 0; i < n; ++i) {
      if (rng.uniform() < 0.5) {
        int a = rng.uniform_int(n);
        int b = rng.uniform_int(n - 1);
        if (b >= a) ++b;
        levels[b] = levels[a];
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      inst.utility_1(i, j) = levels[ranks(i, j)];
    }
  }
  mirror(inst.utility_1, inst.utility_2);
}

bool satisfies_invariants(const Instance& inst) {
  try {
    validate_instance(inst);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

std::string format_utility(double u) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", u);
  return buf;
}

nlohmann::json matrix_to_json(const Mat<double>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) {
      row.push_back(format_utility(m(i, j)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat<double> matrix_from_json(const nlohmann::json& j, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw ValidationError("instance document: dimension mismatch");
  }
  Mat<double> m(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw ValidationError("instance document: dimension mismatch");
    }
    for (int c = 0; c < n; ++c) {
      if (row[c].is_string()) {
        const std::string s = row[c].get<std::string>();
        char* end = nullptr;
        m(i, c) = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') {
          throw ValidationError("instance document: malformed utility '" + s + "'");
        }
      } else if (row[c].is_number()) {
        m(i, c) = row[c].get<double>();
      } else {
        throw ValidationError("instance document: utility is not a number");
      }
    }
  }
  return m;
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::SM: return "SM";
    case Variant::SMI: return "SMI";
    case Variant::SMT: return "SMT";
  }
  return "?";
}

const char* to_string(PrefType p) {
  return p == PrefType::Symmetric ? "symmetric" : "asymmetric";
}

Variant variant_from_string(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), ::toupper);
  if (t == "SM") return Variant::SM;
  if (t == "SMI") return Variant::SMI;
  if (t == "SMT") return Variant::SMT;
  throw ValidationError("unknown variant '" + s + "' (expected SM, SMI or SMT)");
}

PrefType pref_type_from_string(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), ::tolower);
  if (t == "symmetric" || t == "sym") return PrefType::Symmetric;
  if (t == "asymmetric" || t == "asym") return PrefType::Asymmetric;
  throw ValidationError("unknown preference type '" + s + "'");
}

Instance generate_instance(Variant variant, PrefType pref_type, int n_side,
                           std::int64_t seed) {
  if (n_side < 1) {
    throw ContractViolation("generate_instance: n_side must be >= 1");
  }
  Rng rng(mix_seed({0x1a57u, static_cast<std::uint64_t>(variant),
                    static_cast<std::uint64_t>(pref_type),
                    static_cast<std::uint64_t>(n_side),
                    static_cast<std::uint64_t>(seed)}));

  Instance inst;
  inst.n_side = n_side;
  inst.variant = variant;
  inst.pref_type = pref_type;
  inst.seed = seed;
  inst.utility_1 = Mat<double>(n_side, n_side);
  inst.utility_2 = Mat<double>(n_side, n_side);

  long redraws = 0;
  while (true) {
    if (pref_type == PrefType::Asymmetric) {
      draw_matrix_strict(inst, inst.utility_1, rng, redraws);
      draw_matrix_strict(inst, inst.utility_2, rng, redraws);
      if (variant == Variant::SMT) {
        force_row_ties(inst.utility_1, rng);
        force_row_ties(inst.utility_2, rng);
      }
    } else {
      draw_symmetric(inst, rng, redraws);
    }
    // Duplicates have probability zero under continuous draws; redraw the
    // instance if one ever slips through.
    if (satisfies_invariants(inst)) break;
    if (++redraws > kMaxRedraws) {
      throw Error("generate_instance: redraw cap exceeded (internal error)");
    }
  }
  return inst;
}

void validate_instance(const Instance& inst) {
  if (inst.n_side < 1) {
    throw ValidationError("instance invariant violated: n_side must be >= 1");
  }
  const int n = inst.n_side;
  if (inst.utility_1.rows() != n || inst.utility_1.cols() != n ||
      inst.utility_2.rows() != n || inst.utility_2.cols() != n) {
    throw ValidationError("instance invariant violated: dimension mismatch");
  }
  Range r = utility_range(inst.variant);
  for (const Mat<double>* m : {&inst.utility_1, &inst.utility_2}) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double u = (*m)(i, j);
        if (!std::isfinite(u)) {
          throw ValidationError("instance invariant violated: non-finite utility");
        }
        if (u < r.lo || u > r.hi) {
          std::ostringstream msg;
          msg << "instance invariant violated: utility " << u
              << " outside [" << r.lo << "," << r.hi << "]";
          throw ValidationError(msg.str());
        }
      }
    }
    if (inst.variant != Variant::SMT) {
      for (int i = 0; i < n; ++i) {
        if (!row_strictly_ordered(inst, *m, i)) {
          throw ValidationError(
              "instance invariant violated: strict order violated (tied row)");
        }
      }
    }
  }
  if (inst.pref_type == PrefType::Symmetric) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (inst.utility_1(i, j) != inst.utility_2(j, i)) {
          throw ValidationError(
              "instance invariant violated: symmetry violated "
              "(utility_1[i][j] != utility_2[j][i])");
        }
      }
    }
  }
}

RankProfile derive_ranks(const Instance& inst) {
  const int n = inst.n_side;
  RankProfile rp;
  rp.rank_1 = Mat<int>(n, n, kUnacceptable);
  rp.rank_2 = Mat<int>(n, n, kUnacceptable);
  auto rank_rows = [&](const Mat<double>& u, Mat<int>& out, auto acceptable) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (!acceptable(i, j)) continue;
        int better = 0;
        for (int k = 0; k < n; ++k) {
          if (k != j && acceptable(i, k) && u(i, k) > u(i, j)) ++better;
        }
        out(i, j) = 1 + better;  // competition ranking: ties share a position
      }
    }
  };
  rank_rows(inst.utility_1, rp.rank_1,
            [&](int i, int j) { return inst.acceptable_1(i, j); });
  rank_rows(inst.utility_2, rp.rank_2,
            [&](int j, int i) { return inst.acceptable_2(j, i); });
  return rp;
}

void save_instance(const Instance& inst, std::ostream& out) {
  nlohmann::json doc;
  doc["format"] = "smlab-instance/1";
  doc["n_side"] = inst.n_side;
  doc["variant"] = to_string(inst.variant);
  doc["pref_type"] = to_string(inst.pref_type);
  doc["seed"] = inst.seed;
  doc["utility_1"] = matrix_to_json(inst.utility_1);
  doc["utility_2"] = matrix_to_json(inst.utility_2);
  out << doc.dump(2) << '\n';
}

Instance load_instance(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("instance document: parse error: ") + e.what());
  }
  if (!doc.contains("format") || doc["format"] != "smlab-instance/1") {
    throw ValidationError("instance document: missing or unknown format tag");
  }
  for (const char* key : {"n_side", "variant", "pref_type", "seed",
                          "utility_1", "utility_2"}) {
    if (!doc.contains(key)) {
      throw ValidationError(std::string("instance document: missing field '") +
                            key + "'");
    }
  }
  Instance inst;
  inst.n_side = doc["n_side"].get<int>();
  if (inst.n_side < 1) {
    throw ValidationError("instance invariant violated: n_side must be >= 1");
  }
  inst.variant = variant_from_string(doc["variant"].get<std::string>());
  inst.pref_type = pref_type_from_string(doc["pref_type"].get<std::string>());
  inst.seed = doc["seed"].get<std::int64_t>();
  inst.utility_1 = matrix_from_json(doc["utility_1"], inst.n_side);
  inst.utility_2 = matrix_from_json(doc["utility_2"], inst.n_side);
  validate_instance(inst);
  return inst;
}

void save_instance_file(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  save_instance(inst, out);
  if (!out) throw Error("write failed: " + path);
}

Instance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  return load_instance(in);
}

}  // namespace smlab
