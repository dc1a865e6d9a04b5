#include "mbx/types_ops.hpp"

#include <set>

namespace mbx {

namespace {

struct SubtypeCtx {
  TypeTable& tt;
  std::set<std::pair<TypeId, TypeId>> in_progress;

  bool sub(TypeId a, TypeId b) {
    if (a == b) return true;
    auto& settled = tt.caches().subtype_settled;
    auto it = settled.find({a, b});
    if (it != settled.end()) return it->second;
    if (in_progress.count({a, b})) return true;  // coinductive assumption

    const TypeNode& na = tt.type(a);
    const TypeNode& nb = tt.type(b);
    if (na.kind != nb.kind) return false;
    if (na.kind == TypeKind::IntBase) return true;
    if (na.cap != nb.cap) {
      settled.emplace(std::pair<TypeId, TypeId>{a, b}, false);
      return false;
    }

    bool entry_clean = in_progress.empty();
    in_progress.insert({a, b});
    TypeRel rel = [this](TypeId x, TypeId y) { return sub(x, y); };
    bool ok;
    if (na.cap == Cap::In)
      ok = subpattern(tt, na.pattern, nb.pattern, rel).holds;
    else
      ok = subpattern(tt, nb.pattern, na.pattern, rel).holds;
    in_progress.erase({a, b});

    // A failure is sound to settle unconditionally (assumptions only ever
    // add positive answers). A success is a valid gfp proof when it did not
    // lean on assumptions made by an enclosing call.
    if (!ok || entry_clean)
      settled.emplace(std::pair<TypeId, TypeId>{a, b}, ok);
    return ok;
  }
};

}  // namespace

bool subtype(TypeTable& tt, TypeId a, TypeId b) {
  SubtypeCtx ctx{tt, {}};
  return ctx.sub(a, b);
}

bool type_equiv(TypeTable& tt, TypeId a, TypeId b) {
  return subtype(tt, a, b) && subtype(tt, b, a);
}

TypeRel subtype_rel(TypeTable& tt) {
  return [&tt](TypeId a, TypeId b) { return subtype(tt, a, b); };
}

Classification classify(TypeTable& tt, TypeId t) {
  Classification c;
  const TypeNode& n = tt.type(t);
  if (n.kind == TypeKind::IntBase) {
    // base values: reliable, usable, irrelevant
    c.relevant = false;
    c.reliable = true;
    c.usable = true;
    return c;
  }
  TypeId out_one = tt.mailbox(Cap::Out, tt.one());
  TypeId in_zero = tt.mailbox(Cap::In, tt.zero());
  TypeId out_zero = tt.mailbox(Cap::Out, tt.zero());
  c.relevant = !subtype(tt, t, out_one);
  c.reliable = !subtype(tt, t, in_zero);
  c.usable = !subtype(tt, out_zero, t);
  return c;
}

namespace {

void reachable_types(const TypeTable& tt, TypeId t, std::set<TypeId>& seen,
                     std::set<TypeId>& arg_positions) {
  if (!seen.insert(t).second) return;
  const TypeNode& n = tt.type(t);
  if (n.kind != TypeKind::Mailbox || n.pattern == kNoPat) return;
  std::set<PatId> pseen;
  std::function<void(PatId)> walk = [&](PatId p) {
    if (!pseen.insert(p).second) return;
    const PatNode& pn = tt.pat(p);
    switch (pn.kind) {
      case PatKind::Atom:
        for (TypeId a : pn.args) {
          arg_positions.insert(a);
          reachable_types(tt, a, seen, arg_positions);
        }
        break;
      case PatKind::Sum:
      case PatKind::Prod:
        walk(pn.lhs);
        walk(pn.rhs);
        break;
      case PatKind::Star:
        walk(pn.lhs);
        break;
      default:
        break;
    }
  };
  walk(n.pattern);
}

}  // namespace

std::vector<Diagnostic> check_global_assumptions(
    TypeTable& tt, const std::vector<TypeId>& roots) {
  std::set<TypeId> seen, arg_positions;
  for (TypeId r : roots) reachable_types(tt, r, seen, arg_positions);
  std::vector<Diagnostic> out;
  for (TypeId t : seen) {
    Classification c = classify(tt, t);
    if (!c.usable)
      out.push_back({"unusable-type",
                     "type " + tt.type_str(t) +
                         " is unusable: no construct can consume it",
                     {},
                     ""});
  }
  for (TypeId t : arg_positions) {
    Classification c = classify(tt, t);
    if (!c.reliable)
      out.push_back({"unreliable-argument",
                     "argument type " + tt.type_str(t) +
                         " is unreliable: a name of this type may have "
                         "already received an unexpected message",
                     {},
                     ""});
  }
  return out;
}

std::optional<TypeId> combine_types(TypeTable& tt, TypeId a, TypeId b) {
  const TypeNode& na = tt.type(a);
  const TypeNode& nb = tt.type(b);
  if (na.kind == TypeKind::IntBase && nb.kind == TypeKind::IntBase)
    return tt.int_type();
  if (na.kind != TypeKind::Mailbox || nb.kind != TypeKind::Mailbox)
    return std::nullopt;
  TypeRel rel = subtype_rel(tt);
  if (na.cap == Cap::Out && nb.cap == Cap::Out)
    return tt.mailbox(Cap::Out, tt.prod(na.pattern, nb.pattern));
  if (na.cap == Cap::Out && nb.cap == Cap::In) {
    auto f = pattern_quotient(tt, nb.pattern, na.pattern, rel);
    if (!f) return std::nullopt;
    return tt.mailbox(Cap::In, *f);
  }
  if (na.cap == Cap::In && nb.cap == Cap::Out)
    return combine_types(tt, b, a);
  return std::nullopt;  // input against input is never defined
}

std::optional<TypeEnv> combine_envs(TypeTable& tt, const TypeEnv& a,
                                    const TypeEnv& b) {
  TypeEnv out = a;
  for (const auto& [name, t] : b) {
    auto it = out.find(name);
    if (it == out.end()) {
      out.emplace(name, t);
      continue;
    }
    auto c = combine_types(tt, it->second, t);
    if (!c) return std::nullopt;
    it->second = *c;
  }
  return out;
}

bool env_subtype(TypeTable& tt, const TypeEnv& g, const TypeEnv& d) {
  for (const auto& [name, td] : d) {
    auto it = g.find(name);
    if (it == g.end()) return false;
    if (!subtype(tt, it->second, td)) return false;
  }
  for (const auto& [name, tg] : g) {
    if (d.count(name)) continue;
    const TypeNode& n = tt.type(tg);
    if (n.kind == TypeKind::IntBase) continue;
    if (classify(tt, tg).relevant) return false;
  }
  return true;
}

}  // namespace mbx
