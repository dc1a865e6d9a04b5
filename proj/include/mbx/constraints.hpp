#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mbx/ast.hpp"
#include "mbx/depgraph.hpp"

namespace mbx {

/// Pattern expressions with variables, the currency of constraint
/// generation. Atom arguments are capability/pattern variable pairs or known
/// types.
struct PatExpr;
using PatExprPtr = std::shared_ptr<const PatExpr>;

struct CTypeExpr {
  enum Kind { IntT, Known, Var } kind = Var;
  TypeId known = kNoType;
  int var = -1;  // index into ConstraintSet::vars (capability tracked there)
};

struct PatExpr {
  enum Kind { Zero, One, Var, Atom, Sum, Prod, Star } kind = Zero;
  int var = -1;
  Tag tag;
  std::vector<CTypeExpr> args;
  PatExprPtr l, r;

  static PatExprPtr zero();
  static PatExprPtr one();
  static PatExprPtr mkvar(int v);
  static PatExprPtr atom(Tag t, std::vector<CTypeExpr> args);
  static PatExprPtr sum(PatExprPtr a, PatExprPtr b);
  static PatExprPtr prod(PatExprPtr a, PatExprPtr b);
  static PatExprPtr star(PatExprPtr a);
};

enum class CapKind { Unknown, In, Out, Int };

struct CVar {
  std::string label;
  CapKind cap = CapKind::Unknown;
};

struct Constraint {
  enum Kind { False, PatIncl, TypeLe, Residual } kind = False;
  // PatIncl: l included in r. TypeLe: (lcap lv) <= (rcap rv) as types.
  PatExprPtr l, r;
  CTypeExpr tl, tr;
  Tag tag;                      // Residual: the atom's tag
  std::vector<CTypeExpr> args;  // Residual: the atom's arguments
  std::string note;
};

struct ConstraintSet {
  std::vector<CVar> vars;
  std::vector<Constraint> constraints;
  std::vector<Diagnostic> notes;  // e.g. acyclicity violations during generation

  int var_by_label(const std::string& label) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i].label == label) return static_cast<int>(i);
    return -1;
  }
};

/// Literal transcription of the inference rules over a program whose binder
/// and parameter annotations may be holes. Capabilities are resolved by
/// unification where the syntax forces them.
ConstraintSet generate_constraints(const Program& prog);

/// Strips every parameter and binder annotation, producing the inference
/// front end's input.
Program erase_annotations(const Program& prog);

struct Assignment {
  std::map<std::string, PatId> patterns;  // by variable label
  std::map<std::string, Cap> caps;        // for variables the syntax left open
};

struct SolutionCheck {
  bool ok = true;
  std::vector<std::string> failures;
};

/// Substitutes a candidate assignment into every constraint and decides it
/// with the pattern and subtyping engines.
SolutionCheck check_solution(TypeTable& tt, const ConstraintSet& cs,
                             const Assignment& a);

std::string constraint_str(const TypeTable& tt, const ConstraintSet& cs,
                           const Constraint& c);
std::string pat_expr_str(const TypeTable& tt, const ConstraintSet& cs,
                         const PatExprPtr& e);

}  // namespace mbx
