#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mbx/semilinear.hpp"
#include "mbx/typetable.hpp"

namespace mbx {

/// Preorder oracle on argument types. The subtyping engine passes its
/// in-progress relation here, closing the mutual recursion between pattern
/// inclusion and subtyping.
using TypeRel = std::function<bool(TypeId, TypeId)>;

struct InclusionResult {
  bool holds = false;
  std::optional<Config> witness;  // an uncovered configuration when !holds
  int size_bound = 0;             // witness-search bound used, for audit
  std::uint64_t work = 0;

  explicit operator bool() const { return holds; }
};

/// Decides inclusion of pattern semantics: every configuration of `e` is
/// matched by one of `f`, where atoms match when tags are equal and argument
/// types are pointwise related by `rel`. Exact on the corpus scale; a
/// counterexample configuration is returned on failure, and the witness
/// search bound is recorded in the result.
InclusionResult subpattern(const TypeTable& tt, PatId e, PatId f,
                           const TypeRel& rel);

bool pattern_equiv(const TypeTable& tt, PatId e, PatId f, const TypeRel& rel);

/// The six-equation syntactic residual of `e` by one `tag(args)` message.
/// Undefined (nullopt) when some atom of `e` with the same tag has an
/// argument that is not rel-below the corresponding removed argument.
std::optional<PatId> residual(TypeTable& tt, PatId e, const Tag& tag,
                              const std::vector<TypeId>& args,
                              const TypeRel& rel);

/// Derivability of the normal-form judgment: `e` is a sum of 0, 1 and
/// atom-headed products whose tail is equivalent to the residual of `e` by
/// that atom.
bool is_normal_form(TypeTable& tt, PatId e, const TypeRel& rel);

/// Finds F with g ~ e.F (equivalence, per the type-combination operator).
/// Candidate quotients are computed on semilinear forms and only verified
/// factorizations are returned; nullopt means "not found or undefined".
std::optional<PatId> pattern_quotient(TypeTable& tt, PatId g, PatId e,
                                      const TypeRel& rel);

/// Weaker resolution used by the checker: finds F with e.F included in g,
/// preferring the largest candidate (g itself, then residual chains, then
/// semilinear subtraction). Verified before being returned.
std::optional<PatId> resolve_remainder(TypeTable& tt, PatId g, PatId e,
                                       const TypeRel& rel);

}  // namespace mbx
