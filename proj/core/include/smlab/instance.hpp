#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "smlab/mat.hpp"

namespace smlab {

/// Market variant: strict complete lists, incomplete lists (negative utility
/// marks an unacceptable partner), or lists with ties.
enum class Variant { SM, SMI, SMT };

enum class PrefType { Symmetric, Asymmetric };

const char* to_string(Variant v);
const char* to_string(PrefType p);
Variant variant_from_string(const std::string& s);
PrefType pref_type_from_string(const std::string& s);

/// A two-sided market with n_side agents per side and weighted preferences.
///
/// utility_1(i, j) is what side-1 agent i gets from a match with side-2
/// agent j; utility_2(j, i) is what side-2 agent j gets from the same match.
/// Symmetric instances mirror: utility_1(i, j) == utility_2(j, i).
struct Instance {
  int n_side = 0;
  Variant variant = Variant::SM;
  PrefType pref_type = PrefType::Asymmetric;
  Mat<double> utility_1;
  Mat<double> utility_2;
  std::int64_t seed = 0;

  /// Under SMI a strictly negative utility marks the partner unacceptable;
  /// zero is acceptable. SM and SMT lists are complete.
  bool acceptable_1(int i, int j) const {
    return variant != Variant::SMI || utility_1(i, j) >= 0.0;
  }
  bool acceptable_2(int j, int i) const {
    return variant != Variant::SMI || utility_2(j, i) >= 0.0;
  }
  bool mutually_acceptable(int i, int j) const {
    return acceptable_1(i, j) && acceptable_2(j, i);
  }

  bool operator==(const Instance&) const = default;
};

/// Rank sentinel for partners outside an agent's preference list.
inline constexpr int kUnacceptable = 0;

/// Positions in each agent's preference list, 1 = best. Ties share the
/// smallest position and the next rank skips accordingly (1,1,3).
/// rank_1(i, j) is the position of side-2 agent j in side-1 agent i's list;
/// rank_2(j, i) the position of i in j's list.
struct RankProfile {
  Mat<int> rank_1;
  Mat<int> rank_2;

  bool operator==(const RankProfile&) const = default;
};

/// Deterministic generator: the result is a pure function of the four
/// arguments. Utilities are continuous uniform draws on [1,10] (SM/SMT) or
/// [-10,10] (SMI); rows are redrawn until the strict-order invariant holds
/// where required. SMT forces ties explicitly so the variant is actually
/// exercised: with probability 1/2 per preference row, one entry is copied
/// over another.
///
/// Symmetric markets assign one weight per pair, seen identically from both
/// ends, and additionally mirror the list positions themselves
/// (derive_ranks gives rank_1(i,j) == rank_2(j,i)). Both hold together only
/// when the rank table forms a Latin square, so symmetric instances draw a
/// random Latin square and a common descending utility level per rank.
Instance generate_instance(Variant variant, PrefType pref_type, int n_side,
                           std::int64_t seed);

/// Throws ValidationError naming the violated invariant, if any.
void validate_instance(const Instance& inst);

RankProfile derive_ranks(const Instance& inst);

/// Structured-document round trip. Utilities are written as decimal strings
/// with 17 significant digits, so load(save(x)) == x bit-exactly.
/// Documents carry the format tag "smlab-instance/1". load validates and
/// throws ValidationError on documents violating instance invariants.
void save_instance(const Instance& inst, std::ostream& out);
Instance load_instance(std::istream& in);
void save_instance_file(const Instance& inst, const std::string& path);
Instance load_instance_file(const std::string& path);

}  // namespace smlab
