#include "mbx/proc_ops.hpp"

#include <algorithm>
#include <cassert>
#include <functional>

namespace mbx {

namespace {

void free_names_expr(const IntExprPtr& e, std::set<Name>& out) {
  if (!e) return;
  if (e->kind == IntExpr::Ref) out.insert(e->name);
  if (e->kind == IntExpr::Add) {
    free_names_expr(e->l, out);
    free_names_expr(e->r, out);
  }
}

void free_names_rec(const ProcPtr& p, std::set<Name> bound,
                    std::set<Name>& out) {
  switch (p->kind) {
    case ProcKind::Done:
      return;
    case ProcKind::Invoke:
    case ProcKind::Send: {
      if (p->kind == ProcKind::Send && !bound.count(p->head))
        out.insert(p->head);
      std::set<Name> fe;
      for (const auto& a : p->args) free_names_expr(a, fe);
      for (const auto& n : fe)
        if (!bound.count(n)) out.insert(n);
      return;
    }
    case ProcKind::Guard: {
      for (const auto& b : p->branches) {
        if (!bound.count(b.mailbox)) out.insert(b.mailbox);
        if (b.kind == BranchKind::Receive) {
          std::set<Name> inner = bound;
          for (const auto& bd : b.binders) inner.insert(bd.name);
          free_names_rec(b.cont, inner, out);
        } else if (b.kind == BranchKind::Free) {
          free_names_rec(b.cont, bound, out);
        }
      }
      return;
    }
    case ProcKind::Par:
      free_names_rec(p->left, bound, out);
      free_names_rec(p->right, bound, out);
      return;
    case ProcKind::New: {
      std::set<Name> inner = bound;
      inner.insert(p->bound);
      free_names_rec(p->body, inner, out);
      return;
    }
    case ProcKind::If: {
      std::set<Name> fe;
      free_names_expr(p->cond_l, fe);
      free_names_expr(p->cond_r, fe);
      for (const auto& n : fe)
        if (!bound.count(n)) out.insert(n);
      free_names_rec(p->then_p, bound, out);
      free_names_rec(p->else_p, bound, out);
      return;
    }
  }
}

}  // namespace

std::set<Name> free_names(const ProcPtr& p) {
  std::set<Name> out;
  free_names_rec(p, {}, out);
  return out;
}

Name fresh_name(const Name& base, std::set<Name>& used) {
  if (!used.count(base)) {
    used.insert(base);
    return base;
  }
  for (int i = 2;; ++i) {
    Name cand = base + "_" + std::to_string(i);
    if (!used.count(cand)) {
      used.insert(cand);
      return cand;
    }
  }
}

namespace {

IntExprPtr subst_expr(const IntExprPtr& e,
                      const std::map<Name, IntExprPtr>& m) {
  if (!e) return e;
  switch (e->kind) {
    case IntExpr::Lit:
      return e;
    case IntExpr::Ref: {
      auto it = m.find(e->name);
      return it == m.end() ? e : it->second;
    }
    case IntExpr::Add: {
      IntExprPtr l = subst_expr(e->l, m);
      IntExprPtr r = subst_expr(e->r, m);
      if (l->kind == IntExpr::Lit && r->kind == IntExpr::Lit)
        return IntExpr::literal(l->lit + r->lit, e->span);
      return IntExpr::add(l, r, e->span);
    }
  }
  return e;
}

Name subst_name(const Name& n, const std::map<Name, IntExprPtr>& m,
                SourceSpan sp) {
  auto it = m.find(n);
  if (it == m.end()) return n;
  if (it->second->kind != IntExpr::Ref)
    throw std::logic_error("substitution places an integer where mailbox '" +
                           n + "' is used (" + sp.str() + ")");
  return it->second->name;
}

ProcPtr subst_rec(const ProcPtr& p, std::map<Name, IntExprPtr> m,
                  std::set<Name>& used) {
  switch (p->kind) {
    case ProcKind::Done:
      return p;
    case ProcKind::Invoke: {
      std::vector<IntExprPtr> args;
      for (const auto& a : p->args) args.push_back(subst_expr(a, m));
      return Process::invoke(p->head, std::move(args), p->span);
    }
    case ProcKind::Send: {
      std::vector<IntExprPtr> args;
      for (const auto& a : p->args) args.push_back(subst_expr(a, m));
      return Process::send(subst_name(p->head, m, p->span), p->tag,
                           std::move(args), p->span);
    }
    case ProcKind::Guard: {
      std::vector<GuardBranch> bs;
      for (const auto& b : p->branches) {
        GuardBranch nb = b;
        nb.mailbox = subst_name(b.mailbox, m, b.span);
        if (b.kind == BranchKind::Receive) {
          auto inner = m;
          std::vector<Binder> binders = b.binders;
          std::map<Name, IntExprPtr> renames;
          for (auto& bd : binders) {
            inner.erase(bd.name);
            // freshen when a binder would capture a substituted name
            bool captures = false;
            for (const auto& [k, v] : inner)
              if (v->kind == IntExpr::Ref && v->name == bd.name)
                captures = true;
            if (captures) {
              Name nn = fresh_name(bd.name, used);
              renames[bd.name] = IntExpr::ref(nn);
              bd.name = nn;
            }
          }
          ProcPtr cont = b.cont;
          if (!renames.empty()) cont = subst_rec(cont, renames, used);
          nb.binders = std::move(binders);
          nb.cont = subst_rec(cont, inner, used);
        } else if (b.kind == BranchKind::Free) {
          nb.cont = subst_rec(b.cont, m, used);
        }
        bs.push_back(std::move(nb));
      }
      return Process::guard(std::move(bs), p->span);
    }
    case ProcKind::Par:
      return Process::par(subst_rec(p->left, m, used),
                          subst_rec(p->right, m, used), p->span);
    case ProcKind::New: {
      auto inner = m;
      inner.erase(p->bound);
      Name nb = p->bound;
      bool captures = false;
      for (const auto& [k, v] : inner)
        if (v->kind == IntExpr::Ref && v->name == nb) captures = true;
      ProcPtr body = p->body;
      if (captures) {
        Name nn = fresh_name(nb, used);
        std::map<Name, IntExprPtr> ren{{nb, IntExpr::ref(nn)}};
        body = subst_rec(body, ren, used);
        nb = nn;
      }
      return Process::make_new(nb, subst_rec(body, inner, used), p->span);
    }
    case ProcKind::If:
      return Process::cond(subst_expr(p->cond_l, m), p->rel,
                           subst_expr(p->cond_r, m),
                           subst_rec(p->then_p, m, used),
                           subst_rec(p->else_p, m, used), p->span);
  }
  return p;
}

void collect_names(const ProcPtr& p, std::set<Name>& out) {
  for (const auto& n : free_names(p)) out.insert(n);
  std::function<void(const ProcPtr&)> walk = [&](const ProcPtr& q) {
    switch (q->kind) {
      case ProcKind::Guard:
        for (const auto& b : q->branches) {
          for (const auto& bd : b.binders) out.insert(bd.name);
          if (b.cont) walk(b.cont);
        }
        return;
      case ProcKind::Par:
        walk(q->left);
        walk(q->right);
        return;
      case ProcKind::New:
        out.insert(q->bound);
        walk(q->body);
        return;
      case ProcKind::If:
        walk(q->then_p);
        walk(q->else_p);
        return;
      default:
        return;
    }
  };
  walk(p);
}

}  // namespace

ProcPtr substitute(const ProcPtr& p, const std::map<Name, IntExprPtr>& mapping) {
  std::set<Name> used;
  collect_names(p, used);
  for (const auto& [k, v] : mapping) {
    used.insert(k);
    free_names_expr(v, used);
  }
  return subst_rec(p, mapping, used);
}

namespace {

struct Renamer {
  std::set<Name>& used;
  void proc(ProcPtr& p, std::map<Name, IntExprPtr>& ren) {
    // rebuild with fresh binders where needed
    p = rename(p, ren);
  }
  ProcPtr rename(const ProcPtr& p, std::map<Name, IntExprPtr>& ren) {
    switch (p->kind) {
      case ProcKind::Done:
        return p;
      case ProcKind::Invoke:
      case ProcKind::Send: {
        return subst_keep(p, ren);
      }
      case ProcKind::Guard: {
        std::vector<GuardBranch> bs;
        for (const auto& b : p->branches) {
          GuardBranch nb = b;
          auto it = ren.find(b.mailbox);
          if (it != ren.end()) nb.mailbox = it->second->name;
          if (b.kind == BranchKind::Receive) {
            auto inner = ren;
            for (auto& bd : nb.binders) {
              Name nn = fresh_name(bd.name, used);
              if (nn != bd.name)
                inner[bd.name] = IntExpr::ref(nn);
              else
                inner.erase(bd.name);
              bd.name = nn;
            }
            nb.cont = rename(b.cont, inner);
          } else if (b.kind == BranchKind::Free) {
            nb.cont = rename(b.cont, ren);
          }
          bs.push_back(std::move(nb));
        }
        return Process::guard(std::move(bs), p->span);
      }
      case ProcKind::Par:
        return Process::par(rename(p->left, ren), rename(p->right, ren),
                            p->span);
      case ProcKind::New: {
        auto inner = ren;
        Name nn = fresh_name(p->bound, used);
        if (nn != p->bound)
          inner[p->bound] = IntExpr::ref(nn);
        else
          inner.erase(p->bound);
        return Process::make_new(nn, rename(p->body, inner), p->span);
      }
      case ProcKind::If: {
        return Process::cond(subst_expr(p->cond_l, ren), p->rel,
                             subst_expr(p->cond_r, ren),
                             rename(p->then_p, ren), rename(p->else_p, ren),
                             p->span);
      }
    }
    return p;
  }
  ProcPtr subst_keep(const ProcPtr& p, const std::map<Name, IntExprPtr>& ren) {
    std::vector<IntExprPtr> args;
    for (const auto& a : p->args) args.push_back(subst_expr(a, ren));
    if (p->kind == ProcKind::Send) {
      Name h = p->head;
      auto it = ren.find(h);
      if (it != ren.end()) h = it->second->name;
      return Process::send(h, p->tag, std::move(args), p->span);
    }
    return Process::invoke(p->head, std::move(args), p->span);
  }
};

}  // namespace

void rename_bound_apart(Program& prog) {
  // per unit: binders must differ from each other, from the parameters and
  // from the unit's free names; first occurrences keep their spelling
  for (auto& d : prog.defs) {
    std::set<Name> used;
    for (const auto& p : d.params) used.insert(p.name);
    for (const auto& n : free_names(d.body)) used.insert(n);
    Renamer rn{used};
    std::map<Name, IntExprPtr> ren;
    d.body = rn.rename(d.body, ren);
  }
  if (prog.has_main) {
    std::set<Name> used = free_names(prog.main);
    Renamer rn{used};
    std::map<Name, IntExprPtr> ren;
    prog.main = rn.rename(prog.main, ren);
  }
}

// ---------------------------------------------------------------------------
// printing

std::string print_int_expr(const IntExprPtr& e) {
  switch (e->kind) {
    case IntExpr::Lit:
      return std::to_string(e->lit);
    case IntExpr::Ref:
      return e->name;
    case IntExpr::Add:
      return print_int_expr(e->l) + " + " + print_int_expr(e->r);
  }
  return "";
}

namespace {

const char* rel_str(IntRel r) {
  switch (r) {
    case IntRel::Eq: return "==";
    case IntRel::Ne: return "!=";
    case IntRel::Lt: return "<";
    case IntRel::Le: return "<=";
    case IntRel::Gt: return ">";
    case IntRel::Ge: return ">=";
  }
  return "==";
}

struct Printer {
  const TypeTable& tt;

  std::string args_str(const std::vector<IntExprPtr>& args) {
    std::string out = "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ", ";
      out += print_int_expr(args[i]);
    }
    return out + ")";
  }

  std::string branch_str(const GuardBranch& b) {
    switch (b.kind) {
      case BranchKind::Fail:
        return "fail " + b.mailbox;
      case BranchKind::Free:
        return "free " + b.mailbox + "." + basic(b.cont);
      case BranchKind::Receive: {
        std::string out = b.mailbox + "?" + b.tag + "(";
        for (std::size_t i = 0; i < b.binders.size(); ++i) {
          if (i) out += ", ";
          out += b.binders[i].name;
          if (b.binders[i].type != kNoType)
            out += ":" + tt.type_str(b.binders[i].type);
        }
        out += ").";
        out += basic(b.cont);
        return out;
      }
    }
    return "";
  }

  // a process printable without parentheses in prefix position
  std::string basic(const ProcPtr& p) {
    switch (p->kind) {
      case ProcKind::Done:
        return "done";
      case ProcKind::Invoke:
        return p->head + args_str(p->args);
      case ProcKind::Send:
        return p->head + "!" + p->tag + args_str(p->args);
      case ProcKind::Guard:
        if (p->branches.size() == 1) return branch_str(p->branches[0]);
        return "(" + full(p) + ")";
      case ProcKind::If:
        return "if " + print_int_expr(p->cond_l) + " " + rel_str(p->rel) +
               " " + print_int_expr(p->cond_r) + " then " + basic(p->then_p) +
               " else " + basic(p->else_p);
      default:
        return "(" + full(p) + ")";
    }
  }

  // alternative level: guard sums print bare
  std::string alt(const ProcPtr& p) {
    if (p->kind == ProcKind::Guard && p->branches.size() > 1) {
      std::string out;
      for (std::size_t i = 0; i < p->branches.size(); ++i) {
        if (i) out += " + ";
        out += branch_str(p->branches[i]);
      }
      return out;
    }
    if (p->kind == ProcKind::Par || p->kind == ProcKind::New)
      return "(" + full(p) + ")";
    return basic(p);
  }

  std::string full(const ProcPtr& p) {
    switch (p->kind) {
      case ProcKind::New:
        return "new " + p->bound + " in " + full(p->body);
      case ProcKind::Par: {
        // flatten for stable output
        std::vector<ProcPtr> cs;
        std::function<void(const ProcPtr&)> flat = [&](const ProcPtr& q) {
          if (q->kind == ProcKind::Par) {
            flat(q->left);
            flat(q->right);
          } else {
            cs.push_back(q);
          }
        };
        flat(p);
        std::string out;
        for (std::size_t i = 0; i < cs.size(); ++i) {
          if (i) out += " | ";
          out += alt(cs[i]);
        }
        return out;
      }
      default:
        return alt(p);
    }
  }
};

}  // namespace

std::string print_process(const ProcPtr& p, const TypeTable& tt) {
  Printer pr{tt};
  return pr.full(p);
}

std::string print_program(const Program& prog) {
  const TypeTable& tt = *prog.table;
  std::string out;
  for (const auto& [name, id] : tt.named()) {
    const TypeNode& n = tt.type(id);
    out += "type " + name + " = " + (n.cap == Cap::In ? "?" : "!");
    const PatNode& pn = tt.pat(n.pattern);
    bool needs_parens = pn.kind == PatKind::Sum || pn.kind == PatKind::Prod;
    if (needs_parens) out += "(";
    out += tt.pattern_str(n.pattern);
    if (needs_parens) out += ")";
    out += "\n";
  }
  if (!tt.named().empty()) out += "\n";
  for (const auto& d : prog.defs) {
    out += "def " + d.name + "(";
    for (std::size_t i = 0; i < d.params.size(); ++i) {
      if (i) out += ", ";
      out += d.params[i].name;
      if (d.params[i].type != kNoType)
        out += ":" + tt.type_str(d.params[i].type);
    }
    out += ")";
    FlatGraph g = flatten(d.declared_graph);
    if (!g.edges.empty()) {
      out += " : [";
      for (std::size_t i = 0; i < g.edges.size(); ++i) {
        if (i) out += ", ";
        out += g.vertices[g.edges[i].a].display + "-" +
               g.vertices[g.edges[i].b].display;
      }
      out += "]";
    }
    out += " =\n  " + print_process(d.body, tt) + "\n\n";
  }
  if (prog.has_main) out += "main = " + print_process(prog.main, tt) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// congruence normal form

namespace {

// Alpha-invariant comparison key: bound names print as their binding level,
// free names as themselves. Used to order parallel components, guard
// alternatives and restriction blocks without committing to binder names.
struct KeyPrinter {
  const TypeTable& tt;

  std::string name(const Name& n, const std::map<Name, int>& env) {
    auto it = env.find(n);
    if (it != env.end()) return "#" + std::to_string(it->second);
    return n;
  }

  std::string expr(const IntExprPtr& e, const std::map<Name, int>& env) {
    switch (e->kind) {
      case IntExpr::Lit:
        return std::to_string(e->lit);
      case IntExpr::Ref:
        return name(e->name, env);
      case IntExpr::Add:
        return expr(e->l, env) + "+" + expr(e->r, env);
    }
    return "";
  }

  std::string key(const ProcPtr& p, std::map<Name, int> env, int next) {
    switch (p->kind) {
      case ProcKind::Done:
        return "d";
      case ProcKind::Invoke: {
        std::string out = "i:" + p->head + "(";
        for (const auto& a : p->args) out += expr(a, env) + ",";
        return out + ")";
      }
      case ProcKind::Send: {
        std::string out = "s:" + name(p->head, env) + "!" + p->tag + "(";
        for (const auto& a : p->args) out += expr(a, env) + ",";
        return out + ")";
      }
      case ProcKind::New: {
        env[p->bound] = next;
        return "n." + key(p->body, env, next + 1);
      }
      case ProcKind::Par:
        return "p(" + key(p->left, env, next) + "|" +
               key(p->right, env, next) + ")";
      case ProcKind::Guard: {
        std::string out = "g[";
        for (const auto& b : p->branches) {
          switch (b.kind) {
            case BranchKind::Fail:
              out += "F:" + name(b.mailbox, env) + ";";
              break;
            case BranchKind::Free:
              out += "E:" + name(b.mailbox, env) + "." +
                     key(b.cont, env, next) + ";";
              break;
            case BranchKind::Receive: {
              out += "R:" + name(b.mailbox, env) + "?" + b.tag + "(";
              auto env2 = env;
              int nx = next;
              for (const auto& bd : b.binders) {
                env2[bd.name] = nx++;
                out += bd.type == kNoType ? "_" : tt.type_str(bd.type);
                out += ",";
              }
              out += ")." + key(b.cont, env2, nx) + ";";
              break;
            }
          }
        }
        return out + "]";
      }
      case ProcKind::If:
        return "c(" + expr(p->cond_l, env) + std::to_string((int)p->rel) +
               expr(p->cond_r, env) + "?" + key(p->then_p, env, next) + ":" +
               key(p->else_p, env, next) + ")";
    }
    return "";
  }
};

// Canonical arrangement with the original binder names kept in place: unit
// laws applied, parallel components flattened and sorted, restrictions
// hoisted and ordered, guard alternatives sorted and fail units dropped.
struct Canonizer {
  const TypeTable& tt;
  KeyPrinter kp;

  void decompose(const ProcPtr& p, std::vector<Name>& news,
                 std::vector<ProcPtr>& comps) {
    switch (p->kind) {
      case ProcKind::New:
        news.push_back(p->bound);
        decompose(p->body, news, comps);
        return;
      case ProcKind::Par:
        decompose(p->left, news, comps);
        decompose(p->right, news, comps);
        return;
      case ProcKind::Done:
        return;
      default:
        comps.push_back(p);
        return;
    }
  }

  ProcPtr canon_pos(const ProcPtr& p, const std::map<Name, int>& env,
                    int next) {
    std::vector<Name> news;
    std::vector<ProcPtr> raw;
    decompose(p, news, raw);

    auto build = [&](const std::vector<std::size_t>& perm,
                     std::string* key_out) -> ProcPtr {
      std::map<Name, int> env2 = env;
      for (std::size_t i = 0; i < perm.size(); ++i)
        env2[news[perm[i]]] = next + static_cast<int>(i);
      int nx = next + static_cast<int>(perm.size());
      std::vector<std::pair<std::string, ProcPtr>> comps;
      for (const ProcPtr& c : raw) {
        ProcPtr cc = canon_term(c, env2, nx);
        comps.push_back({kp.key(cc, env2, nx), cc});
      }
      std::sort(comps.begin(), comps.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      ProcPtr body;
      if (comps.empty()) {
        body = Process::done();
      } else {
        body = comps.back().second;
        for (std::size_t i = comps.size() - 1; i-- > 0;)
          body = Process::par(comps[i].second, body);
      }
      for (std::size_t i = perm.size(); i-- > 0;)
        body = Process::make_new(news[perm[i]], body);
      if (key_out) *key_out = kp.key(body, env, next);
      return body;
    };

    std::vector<std::size_t> perm(news.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;

    if (news.size() <= 1) return build(perm, nullptr);

    if (news.size() <= 6) {
      std::string best_key;
      std::vector<std::size_t> best;
      do {
        tt.meter().tick();
        std::string key;
        build(perm, &key);
        if (best.empty() || key < best_key) {
          best = perm;
          best_key = key;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      return build(best, nullptr);
    }

    // large blocks: deterministic order by occurrence signature with the
    // whole block erased except the probed name
    std::vector<std::pair<std::string, std::size_t>> sig;
    for (std::size_t i = 0; i < news.size(); ++i) {
      std::map<Name, int> probe = env;
      for (const Name& n : news) probe[n] = 999998;
      probe[news[i]] = 999999;
      std::string s;
      for (const ProcPtr& c : raw) s += kp.key(c, probe, 1000000) + ";";
      sig.push_back({s, i});
    }
    std::stable_sort(sig.begin(), sig.end(), [](const auto& a, const auto& b) {
      return a.first < b.first;
    });
    perm.clear();
    for (auto& [s, i] : sig) perm.push_back(i);
    return build(perm, nullptr);
  }

  ProcPtr canon_term(const ProcPtr& p, const std::map<Name, int>& env,
                     int next) {
    switch (p->kind) {
      case ProcKind::Done:
      case ProcKind::Invoke:
      case ProcKind::Send:
        return p;
      case ProcKind::Guard: {
        bool has_nonfail = false;
        for (const auto& b : p->branches)
          if (b.kind != BranchKind::Fail) has_nonfail = true;
        std::vector<std::pair<std::string, GuardBranch>> keyed;
        for (const auto& b : p->branches) {
          if (b.kind == BranchKind::Fail && has_nonfail) continue;  // unit law
          GuardBranch nb = b;
          nb.span = {};
          if (b.kind == BranchKind::Receive) {
            auto env2 = env;
            int nx = next;
            for (const auto& bd : b.binders) env2[bd.name] = nx++;
            nb.cont = canon_pos(b.cont, env2, nx);
          } else if (b.kind == BranchKind::Free) {
            nb.cont = canon_pos(b.cont, env, next);
          }
          std::string key =
              std::to_string(static_cast<int>(nb.kind)) + "|" +
              kp.name(nb.mailbox, env) + "|" + nb.tag + "|";
          if (nb.kind == BranchKind::Receive) {
            auto env2 = env;
            int nx = next;
            for (const auto& bd : nb.binders) {
              env2[bd.name] = nx++;
              key += (bd.type == kNoType ? "_" : tt.type_str(bd.type)) + ",";
            }
            key += kp.key(nb.cont, env2, nx);
          } else if (nb.cont) {
            key += kp.key(nb.cont, env, next);
          }
          keyed.push_back({key, std::move(nb)});
        }
        std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
          return a.first < b.first;
        });
        std::vector<GuardBranch> bs;
        for (auto& [k, b] : keyed) bs.push_back(std::move(b));
        // equivalent all-fail alternatives collapse to a single one
        if (!has_nonfail && bs.size() > 1) bs.resize(1);
        return Process::guard(std::move(bs));
      }
      case ProcKind::If:
        return Process::cond(p->cond_l, p->rel, p->cond_r,
                             canon_pos(p->then_p, env, next),
                             canon_pos(p->else_p, env, next));
      case ProcKind::New:
      case ProcKind::Par:
        return canon_pos(p, env, next);
    }
    return p;
  }
};

// Final pass: binders renamed sequentially in pre-order, making every bound
// name unique in the term. The arrangement (and with it the ordering choices
// above) is untouched, so the result is deterministic and alpha-invariant.
struct Uniquifier {
  std::set<Name> avoid;
  int next = 0;
  std::map<Name, Name>* record;

  Name fresh() {
    for (;;) {
      Name n = "_b" + std::to_string(next++);
      if (!avoid.count(n)) return n;
    }
  }

  ProcPtr go(const ProcPtr& p, const std::map<Name, Name>& ren) {
    auto rn = [&](const Name& n) {
      auto it = ren.find(n);
      return it == ren.end() ? n : it->second;
    };
    auto rn_expr = [&](const IntExprPtr& e) {
      std::map<Name, IntExprPtr> m;
      for (const auto& [k, v] : ren) m[k] = IntExpr::ref(v);
      return subst_expr(e, m);
    };
    switch (p->kind) {
      case ProcKind::Done:
        return p;
      case ProcKind::Invoke: {
        std::vector<IntExprPtr> args;
        for (const auto& a : p->args) args.push_back(rn_expr(a));
        return Process::invoke(p->head, std::move(args));
      }
      case ProcKind::Send: {
        std::vector<IntExprPtr> args;
        for (const auto& a : p->args) args.push_back(rn_expr(a));
        return Process::send(rn(p->head), p->tag, std::move(args));
      }
      case ProcKind::New: {
        Name nn = fresh();
        if (record) (*record)[nn] = p->bound;
        auto inner = ren;
        inner[p->bound] = nn;
        return Process::make_new(nn, go(p->body, inner));
      }
      case ProcKind::Par:
        return Process::par(go(p->left, ren), go(p->right, ren));
      case ProcKind::Guard: {
        std::vector<GuardBranch> bs;
        for (const auto& b : p->branches) {
          GuardBranch nb = b;
          nb.mailbox = rn(b.mailbox);
          if (b.kind == BranchKind::Receive) {
            auto inner = ren;
            for (auto& bd : nb.binders) {
              Name nn = fresh();
              if (record) (*record)[nn] = bd.name;
              inner[bd.name] = nn;
              bd.name = nn;
            }
            nb.cont = go(b.cont, inner);
          } else if (b.kind == BranchKind::Free) {
            nb.cont = go(b.cont, ren);
          }
          bs.push_back(std::move(nb));
        }
        return Process::guard(std::move(bs));
      }
      case ProcKind::If:
        return Process::cond(rn_expr(p->cond_l), p->rel, rn_expr(p->cond_r),
                             go(p->then_p, ren), go(p->else_p, ren));
    }
    return p;
  }
};

}  // namespace

NormalForm congruence_normal_form_full(const ProcPtr& p, const TypeTable& tt) {
  Canonizer cz{tt, KeyPrinter{tt}};
  ProcPtr canon = cz.canon_pos(p, {}, 0);
  NormalForm nf;
  Uniquifier uq{free_names(p), 0, &nf.renamed_from};
  nf.proc = uq.go(canon, {});
  return nf;
}

ProcPtr congruence_normal_form(const ProcPtr& p, const TypeTable& tt) {
  Canonizer cz{tt, KeyPrinter{tt}};
  ProcPtr canon = cz.canon_pos(p, {}, 0);
  Uniquifier uq{free_names(p), 0, nullptr};
  return uq.go(canon, {});
}

}  // namespace mbx
