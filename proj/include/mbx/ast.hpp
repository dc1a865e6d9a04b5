#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mbx/depgraph.hpp"
#include "mbx/diag.hpp"
#include "mbx/typetable.hpp"

namespace mbx {

struct IntExpr;
using IntExprPtr = std::shared_ptr<const IntExpr>;

/// Message/invocation argument: a name reference, an integer literal or an
/// integer sum. Whether a bare reference denotes a mailbox or an int is
/// decided by its binding annotation.
struct IntExpr {
  enum Kind { Lit, Ref, Add } kind = Ref;
  long lit = 0;
  Name name;
  IntExprPtr l, r;
  SourceSpan span;

  static IntExprPtr literal(long v, SourceSpan s = {});
  static IntExprPtr ref(Name n, SourceSpan s = {});
  static IntExprPtr add(IntExprPtr a, IntExprPtr b, SourceSpan s = {});
};

struct Process;
using ProcPtr = std::shared_ptr<const Process>;

enum class ProcKind { Done, Invoke, Send, Guard, Par, New, If };
enum class BranchKind { Receive, Free, Fail };
enum class IntRel { Eq, Ne, Lt, Le, Gt, Ge };

struct Binder {
  Name name;
  TypeId type = kNoType;  // kNoType marks an annotation hole (inference mode)
  SourceSpan span;
};

struct GuardBranch {
  BranchKind kind = BranchKind::Fail;
  Name mailbox;
  Tag tag;                      // Receive
  std::vector<Binder> binders;  // Receive
  ProcPtr cont;                 // Receive/Free
  SourceSpan span;
};

struct Process {
  ProcKind kind = ProcKind::Done;
  SourceSpan span;

  // Invoke / Send
  Name head;  // process variable (Invoke) or target mailbox (Send)
  Tag tag;
  std::vector<IntExprPtr> args;

  // Guard
  std::vector<GuardBranch> branches;

  // Par
  ProcPtr left, right;

  // New
  Name bound;
  ProcPtr body;

  // If
  IntExprPtr cond_l, cond_r;
  IntRel rel = IntRel::Eq;
  ProcPtr then_p, else_p;

  static ProcPtr done(SourceSpan s = {});
  static ProcPtr invoke(Name proc, std::vector<IntExprPtr> args,
                        SourceSpan s = {});
  static ProcPtr send(Name target, Tag tag, std::vector<IntExprPtr> args,
                      SourceSpan s = {});
  static ProcPtr guard(std::vector<GuardBranch> branches, SourceSpan s = {});
  static ProcPtr par(ProcPtr l, ProcPtr r, SourceSpan s = {});
  static ProcPtr make_new(Name bound, ProcPtr body, SourceSpan s = {});
  static ProcPtr cond(IntExprPtr l, IntRel rel, IntExprPtr r, ProcPtr t,
                      ProcPtr e, SourceSpan s = {});
};

struct Definition {
  Name name;
  std::vector<Binder> params;
  DepGraphPtr declared_graph;
  ProcPtr body;
  SourceSpan span;
};

struct Program {
  std::shared_ptr<TypeTable> table;
  std::vector<Definition> defs;
  ProcPtr main;
  bool has_main = false;

  const Definition* find_def(const Name& n) const {
    for (const auto& d : defs)
      if (d.name == n) return &d;
    return nullptr;
  }
};

}  // namespace mbx
