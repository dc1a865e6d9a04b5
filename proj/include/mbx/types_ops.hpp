#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbx/pattern_ops.hpp"
#include "mbx/typetable.hpp"

namespace mbx {

/// Coinductive subtyping on mailbox types: covariant pattern inclusion under
/// input capability, contravariant under output, int only below int.
/// Decided with an assumption stack over type-id pairs; terminates because
/// the table holds finitely many types.
bool subtype(TypeTable& tt, TypeId a, TypeId b);

bool type_equiv(TypeTable& tt, TypeId a, TypeId b);

/// The pattern-argument oracle backed by full subtyping.
TypeRel subtype_rel(TypeTable& tt);

struct Classification {
  bool relevant = false;  // must be used
  bool reliable = false;  // no unexpected message received
  bool usable = false;    // some construct can consume it
};

Classification classify(TypeTable& tt, TypeId t);

/// Checks the global assumptions: every reachable type usable, every atom
/// argument type also reliable. Returns one diagnostic per violation.
std::vector<Diagnostic> check_global_assumptions(TypeTable& tt,
                                                 const std::vector<TypeId>& roots);

/// Partial combination of two usages of the same mailbox. Output/output
/// multiplies the patterns; output against input consumes via the verified
/// quotient; input/input is always undefined.
std::optional<TypeId> combine_types(TypeTable& tt, TypeId a, TypeId b);

using TypeEnv = std::map<Name, TypeId>;

std::optional<TypeEnv> combine_envs(TypeTable& tt, const TypeEnv& a,
                                    const TypeEnv& b);

/// Environment subtyping: every entry of `d` is covered by a subtype entry in
/// `g`, and entries of `g` missing from `d` are irrelevant (droppable).
bool env_subtype(TypeTable& tt, const TypeEnv& g, const TypeEnv& d);

}  // namespace mbx
