#pragma once

#include <map>
#include <set>
#include <string>

#include "mbx/ast.hpp"

namespace mbx {

std::set<Name> free_names(const ProcPtr& p);

/// Simultaneous capture-avoiding substitution. Values are name references or
/// integer expressions; ground arithmetic is folded on the way.
ProcPtr substitute(const ProcPtr& p, const std::map<Name, IntExprPtr>& mapping);

/// Renames every binding occurrence in the program apart from each other and
/// from all free names. Run by the parser; preserved as an invariant by the
/// runtime.
void rename_bound_apart(Program& prog);

Name fresh_name(const Name& base, std::set<Name>& used);

struct NormalForm {
  ProcPtr proc;
  /// canonical bound name -> name it replaced
  std::map<Name, Name> renamed_from;
};

/// Canonical representative of the structural-congruence class: unit laws
/// applied, fail alternatives absorbed, parallel components flattened and
/// sorted, restrictions hoisted maximally and ordered, bound names made
/// alpha-canonical. Two related processes normalize to the same term.
NormalForm congruence_normal_form_full(const ProcPtr& p, const TypeTable& tt);
ProcPtr congruence_normal_form(const ProcPtr& p, const TypeTable& tt);

std::string print_process(const ProcPtr& p, const TypeTable& tt);
std::string print_program(const Program& prog);
std::string print_int_expr(const IntExprPtr& e);

}  // namespace mbx
