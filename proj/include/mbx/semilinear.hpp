#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mbx/typetable.hpp"

namespace mbx {

/// Structural atom identifier: one id per distinct (tag, argument type ids)
/// pair occurring in patterns of a table.
using AtomId = std::int32_t;

struct AtomInfo {
  Tag tag;
  std::vector<TypeId> args;
};

/// A configuration: finite multiset of atoms, the elements of a pattern's
/// semantics.
using Config = std::map<AtomId, int>;

int config_size(const Config& c);
Config config_union(const Config& a, const Config& b);
std::string config_str(const TypeTable& tt, const Config& c);

/// One linear term of a semilinear form: base multiset plus a set of period
/// monomials (each a nonempty multiset). Denotes {base + sum k_i * period_i}.
struct LinearTerm {
  Config base;
  std::set<Config> periods;

  bool operator<(const LinearTerm& o) const {
    if (base != o.base) return base < o.base;
    return periods < o.periods;
  }
  bool operator==(const LinearTerm& o) const {
    return base == o.base && periods == o.periods;
  }
};

/// Canonical semantics of a pattern: a finite union of linear terms over the
/// structural atom alphabet.
using SemilinearForm = std::vector<LinearTerm>;

struct TypeTable::Caches {
  std::map<std::string, AtomId> atom_intern;
  std::vector<AtomInfo> atoms;
  std::map<PatId, SemilinearForm> slf;
  std::map<std::pair<PatId, AtomId>, std::optional<PatId>> residual;
  std::map<std::pair<TypeId, TypeId>, bool> subtype_settled;
};

AtomId intern_atom(const TypeTable& tt, const Tag& tag,
                   const std::vector<TypeId>& args);
const AtomInfo& atom_info(const TypeTable& tt, AtomId id);

/// Exact semilinear representation of a pattern's semantics.
const SemilinearForm& normalize(const TypeTable& tt, PatId p);

/// Direct transcription of the configuration semantics, bounded by total
/// multiset size; the brute-force oracle the algebra is tested against.
std::set<Config> configurations_up_to(const TypeTable& tt, PatId p, int n);

/// True iff the empty configuration belongs to the pattern's semantics.
bool nullable(const TypeTable& tt, PatId p);

/// Rebuilds a pattern whose semantics equals the given semilinear form.
PatId pattern_of_semilinear(TypeTable& tt, const SemilinearForm& slf);

}  // namespace mbx
