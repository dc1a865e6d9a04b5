#include "mbx/ast.hpp"

namespace mbx {

IntExprPtr IntExpr::literal(long v, SourceSpan s) {
  auto e = std::make_shared<IntExpr>();
  e->kind = Lit;
  e->lit = v;
  e->span = s;
  return e;
}
IntExprPtr IntExpr::ref(Name n, SourceSpan s) {
  auto e = std::make_shared<IntExpr>();
  e->kind = Ref;
  e->name = std::move(n);
  e->span = s;
  return e;
}
IntExprPtr IntExpr::add(IntExprPtr a, IntExprPtr b, SourceSpan s) {
  auto e = std::make_shared<IntExpr>();
  e->kind = Add;
  e->l = std::move(a);
  e->r = std::move(b);
  e->span = s;
  return e;
}

ProcPtr Process::done(SourceSpan s) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Done;
  p->span = s;
  return p;
}
ProcPtr Process::invoke(Name proc, std::vector<IntExprPtr> args, SourceSpan s) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Invoke;
  p->head = std::move(proc);
  p->args = std::move(args);
  p->span = s;
  return p;
}
ProcPtr Process::send(Name target, Tag tag, std::vector<IntExprPtr> args,
                      SourceSpan s) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Send;
  p->head = std::move(target);
  p->tag = std::move(tag);
  p->args = std::move(args);
  p->span = s;
  return p;
}
ProcPtr Process::guard(std::vector<GuardBranch> branches, SourceSpan s) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Guard;
  p->branches = std::move(branches);
  p->span = s;
  return p;
}
ProcPtr Process::par(ProcPtr l, ProcPtr r, SourceSpan s) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Par;
  p->left = std::move(l);
  p->right = std::move(r);
  p->span = s;
  return p;
}
ProcPtr Process::make_new(Name bound, ProcPtr body, SourceSpan s) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::New;
  p->bound = std::move(bound);
  p->body = std::move(body);
  p->span = s;
  return p;
}
ProcPtr Process::cond(IntExprPtr l, IntRel rel, IntExprPtr r, ProcPtr t,
                      ProcPtr e, SourceSpan s) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::If;
  p->cond_l = std::move(l);
  p->cond_r = std::move(r);
  p->rel = rel;
  p->then_p = std::move(t);
  p->else_p = std::move(e);
  p->span = s;
  return p;
}

}  // namespace mbx
