#include "mbx/constraints.hpp"

#include <functional>

#include "mbx/pattern_ops.hpp"
#include "mbx/proc_ops.hpp"
#include "mbx/types_ops.hpp"

namespace mbx {

PatExprPtr PatExpr::zero() {
  static PatExprPtr z = std::make_shared<PatExpr>(PatExpr{Zero, -1, "", {}, nullptr, nullptr});
  return z;
}
PatExprPtr PatExpr::one() {
  static PatExprPtr o = std::make_shared<PatExpr>(PatExpr{One, -1, "", {}, nullptr, nullptr});
  return o;
}
PatExprPtr PatExpr::mkvar(int v) {
  auto e = std::make_shared<PatExpr>();
  e->kind = Var;
  e->var = v;
  return e;
}
PatExprPtr PatExpr::atom(Tag t, std::vector<CTypeExpr> args) {
  auto e = std::make_shared<PatExpr>();
  e->kind = Atom;
  e->tag = std::move(t);
  e->args = std::move(args);
  return e;
}
PatExprPtr PatExpr::sum(PatExprPtr a, PatExprPtr b) {
  auto e = std::make_shared<PatExpr>();
  e->kind = Sum;
  e->l = std::move(a);
  e->r = std::move(b);
  return e;
}
PatExprPtr PatExpr::prod(PatExprPtr a, PatExprPtr b) {
  auto e = std::make_shared<PatExpr>();
  e->kind = Prod;
  e->l = std::move(a);
  e->r = std::move(b);
  return e;
}
PatExprPtr PatExpr::star(PatExprPtr a) {
  auto e = std::make_shared<PatExpr>();
  e->kind = Star;
  e->l = std::move(a);
  return e;
}

namespace {

// entry of a generation-time environment
struct GenEntry {
  CTypeExpr type;   // Var (inference) or Known (kept annotation) or IntT
};

using GenEnv = std::map<Name, GenEntry>;

struct Generator {
  const Program& prog;
  ConstraintSet cs;
  // one declaration vector per definition, fresh variables per parameter
  std::map<Name, std::vector<CTypeExpr>> decls;

  void emit_false(const std::string& note) {
    Constraint c;
    c.kind = Constraint::False;
    c.note = note;
    cs.constraints.push_back(std::move(c));
  }

  int fresh(const std::string& label, CapKind cap = CapKind::Unknown) {
    // keep labels unique for by-label assignment in tests
    std::string final = label;
    int n = 2;
    while (cs.var_by_label(final) >= 0)
      final = label + "#" + std::to_string(n++);
    cs.vars.push_back({final, cap});
    return static_cast<int>(cs.vars.size()) - 1;
  }

  void force(const CTypeExpr& t, CapKind cap) {
    if (t.kind != CTypeExpr::Var) return;
    CVar& v = cs.vars[t.var];
    if (v.cap == CapKind::Unknown) {
      v.cap = cap;
    } else if (v.cap != cap) {
      emit_false("capability clash on " + v.label);
    }
  }

  CapKind cap_of(const CTypeExpr& t) {
    switch (t.kind) {
      case CTypeExpr::IntT:
        return CapKind::Int;
      case CTypeExpr::Known:
        break;
      case CTypeExpr::Var:
        return cs.vars[t.var].cap;
    }
    return CapKind::Unknown;
  }

  void type_le(const CTypeExpr& a, const CTypeExpr& b,
               const std::string& note) {
    // subtyping never crosses capabilities: unify them
    CapKind ca = cap_of(a), cb = cap_of(b);
    if (ca != CapKind::Unknown) force(b, ca);
    if (cb != CapKind::Unknown) force(a, cb);
    Constraint c;
    c.kind = Constraint::TypeLe;
    c.tl = a;
    c.tr = b;
    c.note = note;
    cs.constraints.push_back(std::move(c));
  }

  void pat_incl(const PatExprPtr& l, const PatExprPtr& r,
                const std::string& note) {
    Constraint c;
    c.kind = Constraint::PatIncl;
    c.l = l;
    c.r = r;
    c.note = note;
    cs.constraints.push_back(std::move(c));
  }

  CTypeExpr known_or_var(TypeId t, const std::string& label) {
    if (t == kNoType) return {CTypeExpr::Var, kNoType, fresh(label)};
    return {CTypeExpr::Known, t, -1};
  }

  struct GenResult {
    GenEnv env;
    FlatGraph graph;
  };

  GenResult gen(const ProcPtr& p, const std::string& where, GenEnv binders) {
    switch (p->kind) {
      case ProcKind::Done:
        return {};
      case ProcKind::Send: {
        GenResult r;
        int beta = fresh("msg:" + where + "." + p->head + "!" + p->tag,
                         CapKind::Out);
        CTypeExpr target{CTypeExpr::Var, kNoType, beta};
        r.env.emplace(p->head, GenEntry{target});
        std::vector<CTypeExpr> args;
        for (std::size_t i = 0; i < p->args.size(); ++i) {
          const IntExprPtr& a = p->args[i];
          if (a->kind == IntExpr::Ref) {
            auto it = binders.find(a->name);
            CTypeExpr at;
            if (it != binders.end() && it->second.type.kind == CTypeExpr::Known) {
              at = it->second.type;
            } else {
              at = {CTypeExpr::Var, kNoType,
                    fresh("arg:" + where + "." + p->head + "!" + p->tag + "." +
                          std::to_string(i + 1))};
            }
            args.push_back(at);
            if (r.env.count(a->name)) {
              // the same name twice in one message: join below handles the
              // general case; keep it simple and flag it
              emit_false("repeated argument " + a->name);
            } else {
              r.env.emplace(a->name, GenEntry{at});
            }
            r.graph.add_edge(p->head, a->name, p->span, "message " + p->tag);
          } else {
            args.push_back({CTypeExpr::IntT, kNoType, -1});
          }
        }
        // !beta <= !tag(args)
        Constraint c;
        c.kind = Constraint::TypeLe;
        c.tl = target;
        c.tr = {CTypeExpr::Var, kNoType, -1};
        c.note = "message " + p->tag;
        c.l = nullptr;
        c.r = PatExpr::atom(p->tag, args);
        cs.constraints.push_back(std::move(c));
        return r;
      }
      case ProcKind::Invoke: {
        GenResult r;
        auto it = decls.find(p->head);
        if (it == decls.end()) return r;
        const Definition* d = prog.find_def(p->head);
        for (std::size_t i = 0; i < p->args.size() && i < it->second.size();
             ++i) {
          const IntExprPtr& a = p->args[i];
          if (a->kind != IntExpr::Ref) continue;  // int argument
          CTypeExpr at{CTypeExpr::Var, kNoType,
                       fresh("arg:" + where + "." + p->head + "." +
                             std::to_string(i + 1))};
          if (r.env.count(a->name)) {
            emit_false("repeated argument " + a->name);
          } else {
            r.env.emplace(a->name, GenEntry{at});
          }
          type_le(at, it->second[i], "call " + p->head);
        }
        if (d) {
          std::map<Name, Name> subst;
          for (std::size_t i = 0;
               i < d->params.size() && i < p->args.size(); ++i)
            if (p->args[i]->kind == IntExpr::Ref)
              subst[d->params[i].name] = p->args[i]->name;
          r.graph.merge(flatten(d->declared_graph).renamed(subst));
        }
        return r;
      }
      case ProcKind::Par: {
        GenResult a = gen(p->left, where, binders);
        GenResult b = gen(p->right, where, binders);
        GenResult r;
        r.env = std::move(a.env);
        for (auto& [n, e] : b.env) {
          auto it = r.env.find(n);
          if (it == r.env.end()) {
            r.env.emplace(n, e);
            continue;
          }
          r.env[n] = join(it->second, e, n);
        }
        r.graph = std::move(a.graph);
        r.graph.merge(b.graph);
        if (!acyclic(r.graph))
          emit_false("dependency cycle at parallel composition");
        return r;
      }
      case ProcKind::New: {
        GenResult r = gen(p->body, where, binders);
        auto it = r.env.find(p->bound);
        CTypeExpr t;
        if (it == r.env.end()) {
          t = {CTypeExpr::Var, kNoType, fresh("new:" + where + "." + p->bound)};
        } else {
          t = it->second.type;
          r.env.erase(it);
        }
        force(t, CapKind::In);
        // ?1 <= ?alpha
        Constraint c;
        c.kind = Constraint::TypeLe;
        c.l = PatExpr::one();
        c.tl = {CTypeExpr::Known, kNoType, -1};
        c.tr = t;
        c.note = "restriction " + p->bound;
        cs.constraints.push_back(std::move(c));
        r.graph.restrict_name(p->bound);
        return r;
      }
      case ProcKind::If: {
        GenResult a = gen(p->then_p, where, binders);
        GenResult b = gen(p->else_p, where, binders);
        GenResult r;
        r.env = merge_envs(a.env, b.env, where);
        r.graph.vertices.push_back({"if", true});
        for (const auto& [n, e] : r.env)
          if (e.type.kind != CTypeExpr::IntT) {
            int v = r.graph.vertex_of(n);
            r.graph.edges.push_back({0, v, p->span, "conditional"});
          }
        return r;
      }
      case ProcKind::Guard:
        return gen_guard(p, where, binders);
    }
    return {};
  }

  GenEntry join(const GenEntry& a, const GenEntry& b, const Name& n) {
    CapKind ca = cap_of(a.type), cb = cap_of(b.type);
    if (ca == CapKind::Int || cb == CapKind::Int) return a;
    // one input side forces the other to be an output
    if (ca == CapKind::In && cb == CapKind::Unknown) force(b.type, CapKind::Out), cb = CapKind::Out;
    if (cb == CapKind::In && ca == CapKind::Unknown) force(a.type, CapKind::Out), ca = CapKind::Out;
    if (ca == CapKind::Unknown) force(a.type, CapKind::Out), ca = CapKind::Out;
    if (cb == CapKind::Unknown) force(b.type, CapKind::Out), cb = CapKind::Out;
    if (ca == CapKind::In && cb == CapKind::In) {
      emit_false("two input capabilities for " + n);
      return a;
    }
    if (ca == CapKind::Out && cb == CapKind::Out) {
      int v = fresh("join:" + n, CapKind::Out);
      CTypeExpr t{CTypeExpr::Var, kNoType, v};
      // !v <= !(a . b)
      Constraint c;
      c.kind = Constraint::TypeLe;
      c.tl = t;
      c.tr = {CTypeExpr::Var, kNoType, -1};
      c.l = nullptr;
      c.r = PatExpr::prod(expr_of(a.type), expr_of(b.type));
      c.note = "join outputs of " + n;
      cs.constraints.push_back(std::move(c));
      return GenEntry{t};
    }
    // output against input: ?(out . result) <= ?in
    const GenEntry& outE = ca == CapKind::Out ? a : b;
    const GenEntry& inE = ca == CapKind::Out ? b : a;
    int v = fresh("join:" + n, CapKind::In);
    CTypeExpr t{CTypeExpr::Var, kNoType, v};
    Constraint c;
    c.kind = Constraint::PatIncl;
    c.l = PatExpr::prod(expr_of(outE.type), PatExpr::mkvar(v));
    c.r = expr_of(inE.type);
    c.note = "balance " + n;
    cs.constraints.push_back(std::move(c));
    return GenEntry{t};
  }

  PatExprPtr expr_of(const CTypeExpr& t) {
    if (t.kind == CTypeExpr::Var) return PatExpr::mkvar(t.var);
    return PatExpr::one();  // the pattern of a known type is substituted late
  }

  GenEnv merge_envs(const GenEnv& a, const GenEnv& b, const std::string& where) {
    GenEnv out;
    std::set<Name> names;
    for (const auto& [n, e] : a) names.insert(n);
    for (const auto& [n, e] : b) names.insert(n);
    for (const Name& n : names) {
      auto ia = a.find(n);
      auto ib = b.find(n);
      if (ia != a.end() && ib != b.end()) {
        // merge operator: fresh variable below both alternatives
        CapKind ca = cap_of(ia->second.type);
        CapKind cb = cap_of(ib->second.type);
        if (ca == CapKind::Int || cb == CapKind::Int) {
          out.emplace(n, ia->second);
          continue;
        }
        int v = fresh("merge:" + where + "." + n);
        CTypeExpr t{CTypeExpr::Var, kNoType, v};
        type_le(t, ia->second.type, "merge " + n);
        type_le(t, ib->second.type, "merge " + n);
        out.emplace(n, GenEntry{t});
      } else {
        const GenEntry& e = ia != a.end() ? ia->second : ib->second;
        // present on one side only: discardable on the other (i-sub)
        if (cap_of(e.type) != CapKind::Int) {
          Constraint c;
          c.kind = Constraint::TypeLe;
          c.tl = e.type;
          c.tr = {CTypeExpr::Known, kNoType, -1};
          c.r = PatExpr::one();
          c.note = "discardable " + n;
          cs.constraints.push_back(std::move(c));
        }
        out.emplace(n, e);
      }
    }
    return out;
  }

  GenResult gen_guard(const ProcPtr& p, const std::string& where,
                      GenEnv binders) {
    GenResult r;
    // branches grouped by mailbox; summands built in source order
    std::map<Name, PatExprPtr> sums;
    std::vector<Name> order;
    std::vector<GenEnv> residuals;
    for (const auto& b : p->branches) {
      if (!sums.count(b.mailbox)) {
        sums[b.mailbox] = nullptr;
        order.push_back(b.mailbox);
      }
      PatExprPtr summand;
      switch (b.kind) {
        case BranchKind::Fail:
          summand = PatExpr::zero();
          break;
        case BranchKind::Free: {
          GenResult sub = gen(b.cont, where, binders);
          summand = PatExpr::one();
          sub.env.erase(b.mailbox);
          residuals.push_back(std::move(sub.env));
          break;
        }
        case BranchKind::Receive: {
          GenEnv inner_binders = binders;
          GenResult sub = gen(b.cont, where, binders);
          std::vector<CTypeExpr> bargs;
          for (const auto& bd : b.binders) {
            auto it = sub.env.find(bd.name);
            CTypeExpr t;
            if (bd.type != kNoType) {
              t = {CTypeExpr::Known, bd.type, -1};
            } else if (it != sub.env.end()) {
              t = it->second.type;
            } else {
              t = {CTypeExpr::Var, kNoType,
                   fresh("binder:" + where + "." + b.mailbox + "?" + b.tag +
                         "." + bd.name)};
              Constraint c;
              c.kind = Constraint::TypeLe;
              c.tl = t;
              c.tr = {CTypeExpr::Known, kNoType, -1};
              c.r = PatExpr::one();
              c.note = "discardable binder " + bd.name;
              cs.constraints.push_back(std::move(c));
            }
            bargs.push_back(t);
            if (it != sub.env.end()) sub.env.erase(it);
          }
          // the guarded mailbox keeps an input variable for the residual
          int beta;
          auto it = sub.env.find(b.mailbox);
          if (it != sub.env.end()) {
            force(it->second.type, CapKind::In);
            if (it->second.type.kind == CTypeExpr::Var) {
              beta = it->second.type.var;
            } else {
              beta = fresh("residual:" + where + "." + b.mailbox + "." + b.tag,
                           CapKind::In);
            }
            sub.env.erase(it);
          } else {
            beta = fresh("residual:" + where + "." + b.mailbox + "." + b.tag,
                         CapKind::In);
            Constraint c;
            c.kind = Constraint::TypeLe;
            c.tl = {CTypeExpr::Var, kNoType, beta};
            c.tr = {CTypeExpr::Known, kNoType, -1};
            c.r = PatExpr::one();
            c.note = "discardable residual " + b.mailbox;
            cs.constraints.push_back(std::move(c));
          }
          summand = PatExpr::prod(PatExpr::atom(b.tag, bargs),
                                  PatExpr::mkvar(beta));
          // beta << tag(bargs)
          Constraint res;
          res.kind = Constraint::Residual;
          res.l = PatExpr::mkvar(beta);
          res.tag = b.tag;
          res.args = bargs;
          res.note = "residual shape " + b.mailbox + "?" + b.tag;
          cs.constraints.push_back(std::move(res));
          residuals.push_back(std::move(sub.env));
          break;
        }
      }
      PatExprPtr& acc = sums[b.mailbox];
      acc = acc ? PatExpr::sum(acc, summand) : summand;
    }
    // merged residual environment
    GenEnv joint;
    bool first = true;
    for (auto& env : residuals) {
      if (first) {
        joint = std::move(env);
        first = false;
      } else {
        joint = merge_envs(joint, env, where);
      }
    }
    // guarded mailboxes: ?beta_total <= ?(sum)
    for (const Name& w : order) {
      int total = fresh("guard:" + where + "." + w, CapKind::In);
      Constraint c;
      c.kind = Constraint::TypeLe;
      c.tl = {CTypeExpr::Var, kNoType, total};
      c.tr = {CTypeExpr::Var, kNoType, -1};
      c.r = sums[w];
      c.note = "guard on " + w;
      cs.constraints.push_back(std::move(c));
      joint.erase(w);
      r.env.emplace(w, GenEntry{CTypeExpr{CTypeExpr::Var, kNoType, total}});
    }
    for (auto& [n, e] : joint) r.env.emplace(n, e);
    for (const Name& w : order)
      for (const auto& [n, e] : r.env) {
        if (n == w || e.type.kind == CTypeExpr::IntT) continue;
        bool is_action = false;
        for (const Name& w2 : order)
          if (n == w2) is_action = true;
        if (!is_action) r.graph.add_edge(w, n, p->span, "guard");
      }
    return r;
  }

  void run() {
    for (const auto& d : prog.defs) {
      std::vector<CTypeExpr> params;
      for (const auto& prm : d.params) {
        if (prm.type != kNoType) {
          params.push_back({CTypeExpr::Known, prm.type, -1});
        } else {
          params.push_back({CTypeExpr::Var, kNoType,
                            fresh("param:" + d.name + "." + prm.name)});
        }
      }
      decls.emplace(d.name, std::move(params));
    }
    for (const auto& d : prog.defs) {
      GenEnv binders;
      for (std::size_t i = 0; i < d.params.size(); ++i)
        binders.emplace(d.params[i].name, GenEntry{decls[d.name][i]});
      GenResult r = gen(d.body, d.name, binders);
      for (std::size_t i = 0; i < d.params.size(); ++i) {
        auto it = r.env.find(d.params[i].name);
        if (it == r.env.end()) {
          Constraint c;
          c.kind = Constraint::TypeLe;
          c.tl = decls[d.name][i];
          c.tr = {CTypeExpr::Known, kNoType, -1};
          c.r = PatExpr::one();
          c.note = "unused parameter " + d.params[i].name;
          cs.constraints.push_back(std::move(c));
          continue;
        }
        type_le(it->second.type, decls[d.name][i],
                "parameter " + d.params[i].name + " of " + d.name);
        r.env.erase(it);
      }
      if (!entails(*prog.table, flatten(d.declared_graph), r.graph))
        cs.notes.push_back({"graph-entailment",
                            "declared graph of '" + d.name +
                                "' does not cover the synthesized one",
                            d.span,
                            ""});
    }
    if (prog.has_main) {
      GenResult r = gen(prog.main, "main", {});
      for (const auto& [n, e] : r.env) {
        Constraint c;
        c.kind = Constraint::TypeLe;
        c.tl = e.type;
        c.tr = {CTypeExpr::Known, kNoType, -1};
        c.r = PatExpr::one();
        c.note = "free name " + n + " of main must be discardable";
        cs.constraints.push_back(std::move(c));
      }
    }
  }
};

}  // namespace

ConstraintSet generate_constraints(const Program& prog) {
  Generator g{prog, {}, {}};
  g.run();
  // capabilities propagate along subtyping constraints (subtyping never
  // crosses capabilities) until a fixpoint
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& c : g.cs.constraints) {
      if (c.kind != Constraint::TypeLe || c.r) continue;
      if (c.tl.kind != CTypeExpr::Var || c.tr.kind != CTypeExpr::Var) continue;
      CVar& a = g.cs.vars[c.tl.var];
      CVar& b = g.cs.vars[c.tr.var];
      if (a.cap == CapKind::Unknown && b.cap != CapKind::Unknown) {
        a.cap = b.cap;
        changed = true;
      } else if (b.cap == CapKind::Unknown && a.cap != CapKind::Unknown) {
        b.cap = a.cap;
        changed = true;
      }
    }
  }
  return std::move(g.cs);
}

Program erase_annotations(const Program& prog) {
  Program out;
  out.table = prog.table;
  out.has_main = prog.has_main;
  out.main = prog.main;
  std::function<ProcPtr(const ProcPtr&)> strip =
      [&](const ProcPtr& p) -> ProcPtr {
    switch (p->kind) {
      case ProcKind::Guard: {
        std::vector<GuardBranch> bs;
        for (const auto& b : p->branches) {
          GuardBranch nb = b;
          for (auto& bd : nb.binders) bd.type = kNoType;
          if (nb.cont) nb.cont = strip(nb.cont);
          bs.push_back(std::move(nb));
        }
        return Process::guard(std::move(bs), p->span);
      }
      case ProcKind::Par:
        return Process::par(strip(p->left), strip(p->right), p->span);
      case ProcKind::New:
        return Process::make_new(p->bound, strip(p->body), p->span);
      case ProcKind::If:
        return Process::cond(p->cond_l, p->rel, p->cond_r, strip(p->then_p),
                             strip(p->else_p), p->span);
      default:
        return p;
    }
  };
  for (const auto& d : prog.defs) {
    Definition nd = d;
    for (auto& prm : nd.params) prm.type = kNoType;
    nd.body = strip(d.body);
    out.defs.push_back(std::move(nd));
  }
  if (out.has_main) out.main = strip(prog.main);
  return out;
}

namespace {

struct Substitutor {
  TypeTable& tt;
  const ConstraintSet& cs;
  const Assignment& a;
  std::vector<std::string>* failures;

  std::optional<PatId> pat_of_var(int v) {
    auto it = a.patterns.find(cs.vars[v].label);
    if (it == a.patterns.end()) {
      failures->push_back("no assignment for variable " + cs.vars[v].label);
      return std::nullopt;
    }
    return it->second;
  }

  std::optional<Cap> cap_of_var(int v) {
    switch (cs.vars[v].cap) {
      case CapKind::In:
        return Cap::In;
      case CapKind::Out:
        return Cap::Out;
      default: {
        auto it = a.caps.find(cs.vars[v].label);
        if (it != a.caps.end()) return it->second;
        failures->push_back("no capability for variable " + cs.vars[v].label);
        return std::nullopt;
      }
    }
  }

  std::optional<TypeId> type_of(const CTypeExpr& t) {
    switch (t.kind) {
      case CTypeExpr::IntT:
        return tt.int_type();
      case CTypeExpr::Known:
        return t.known;
      case CTypeExpr::Var: {
        auto p = pat_of_var(t.var);
        auto c = cap_of_var(t.var);
        if (!p || !c) return std::nullopt;
        return tt.mailbox(*c, *p);
      }
    }
    return std::nullopt;
  }

  std::optional<PatId> pat_of(const PatExprPtr& e) {
    switch (e->kind) {
      case PatExpr::Zero:
        return tt.zero();
      case PatExpr::One:
        return tt.one();
      case PatExpr::Var:
        return pat_of_var(e->var);
      case PatExpr::Atom: {
        std::vector<TypeId> args;
        for (const auto& t : e->args) {
          auto ti = type_of(t);
          if (!ti) return std::nullopt;
          args.push_back(*ti);
        }
        return tt.atom(e->tag, args);
      }
      case PatExpr::Sum: {
        auto l = pat_of(e->l), r = pat_of(e->r);
        if (!l || !r) return std::nullopt;
        return tt.sum(*l, *r);
      }
      case PatExpr::Prod: {
        auto l = pat_of(e->l), r = pat_of(e->r);
        if (!l || !r) return std::nullopt;
        return tt.prod(*l, *r);
      }
      case PatExpr::Star: {
        auto l = pat_of(e->l);
        if (!l) return std::nullopt;
        return tt.star(*l);
      }
    }
    return std::nullopt;
  }
};

}  // namespace

SolutionCheck check_solution(TypeTable& tt, const ConstraintSet& cs,
                             const Assignment& a) {
  SolutionCheck out;
  TypeRel rel = subtype_rel(tt);
  Substitutor sub{tt, cs, a, &out.failures};
  for (const auto& c : cs.constraints) {
    std::size_t before = out.failures.size();
    switch (c.kind) {
      case Constraint::False:
        out.failures.push_back("generation failure: " + c.note);
        break;
      case Constraint::PatIncl: {
        auto l = sub.pat_of(c.l);
        auto r = sub.pat_of(c.r);
        if (!l || !r) break;
        if (!subpattern(tt, *l, *r, rel).holds)
          out.failures.push_back("inclusion fails (" + c.note + "): " +
                                 tt.pattern_str(*l) + " not below " +
                                 tt.pattern_str(*r));
        break;
      }
      case Constraint::TypeLe: {
        // right side may be a pattern expression paired with the left's
        // capability (message/join/guard forms) or the discardable unit
        std::optional<TypeId> lt = sub.type_of(c.tl);
        if (!lt) break;
        std::optional<TypeId> rt;
        if (c.r) {
          auto rp = sub.pat_of(c.r);
          if (!rp) break;
          const TypeNode& ln = tt.type(*lt);
          if (ln.kind == TypeKind::IntBase) {
            // int never flows into a mailbox position
            out.failures.push_back("int used as mailbox (" + c.note + ")");
            break;
          }
          rt = tt.mailbox(ln.cap, *rp);
        } else {
          rt = sub.type_of(c.tr);
        }
        if (!rt) break;
        if (!subtype(tt, *lt, *rt))
          out.failures.push_back("subtyping fails (" + c.note + "): " +
                                 tt.type_str(*lt) + " not below " +
                                 tt.type_str(*rt));
        break;
      }
      case Constraint::Residual: {
        auto b = sub.pat_of(c.l);
        if (!b) break;
        std::vector<TypeId> args;
        bool ok = true;
        for (const auto& t : c.args) {
          auto ti = sub.type_of(t);
          if (!ti) {
            ok = false;
            break;
          }
          args.push_back(*ti);
        }
        if (!ok) break;
        // the assigned residual must be stable: removing one such message
        // from atom . residual is defined and gives the residual back
        PatId guarded = tt.prod(tt.atom(c.tag, args), *b);
        auto r = residual(tt, guarded, c.tag, args, rel);
        if (!r) {
          out.failures.push_back("residual undefined (" + c.note + ")");
        } else if (!pattern_equiv(tt, *r, *b, rel)) {
          out.failures.push_back("residual mismatch (" + c.note + "): " +
                                 tt.pattern_str(*r) + " vs " +
                                 tt.pattern_str(*b));
        }
        break;
      }
    }
    (void)before;
  }
  out.ok = out.failures.empty();
  return out;
}

std::string pat_expr_str(const TypeTable& tt, const ConstraintSet& cs,
                         const PatExprPtr& e) {
  switch (e->kind) {
    case PatExpr::Zero:
      return "0";
    case PatExpr::One:
      return "1";
    case PatExpr::Var:
      return cs.vars[e->var].label;
    case PatExpr::Atom: {
      std::string out = e->tag;
      if (!e->args.empty()) {
        out += "(";
        for (std::size_t i = 0; i < e->args.size(); ++i) {
          if (i) out += ", ";
          const CTypeExpr& t = e->args[i];
          if (t.kind == CTypeExpr::IntT)
            out += "int";
          else if (t.kind == CTypeExpr::Known)
            out += tt.type_str(t.known);
          else
            out += cs.vars[t.var].label;
        }
        out += ")";
      }
      return out;
    }
    case PatExpr::Sum:
      return "(" + pat_expr_str(tt, cs, e->l) + " + " +
             pat_expr_str(tt, cs, e->r) + ")";
    case PatExpr::Prod:
      return "(" + pat_expr_str(tt, cs, e->l) + "." +
             pat_expr_str(tt, cs, e->r) + ")";
    case PatExpr::Star:
      return pat_expr_str(tt, cs, e->l) + "*";
  }
  return "";
}

std::string constraint_str(const TypeTable& tt, const ConstraintSet& cs,
                           const Constraint& c) {
  auto texpr = [&](const CTypeExpr& t) -> std::string {
    if (t.kind == CTypeExpr::IntT) return "int";
    if (t.kind == CTypeExpr::Known) return tt.type_str(t.known);
    if (t.var < 0) return "?";
    const CVar& v = cs.vars[t.var];
    std::string cap = v.cap == CapKind::In    ? "?"
                      : v.cap == CapKind::Out ? "!"
                                              : "k.";
    return cap + v.label;
  };
  switch (c.kind) {
    case Constraint::False:
      return "false  -- " + c.note;
    case Constraint::PatIncl:
      return pat_expr_str(tt, cs, c.l) + " <= " + pat_expr_str(tt, cs, c.r) +
             "  -- " + c.note;
    case Constraint::TypeLe: {
      std::string rhs;
      if (c.r) {
        const std::string cap =
            c.tl.kind == CTypeExpr::Var &&
                    cs.vars[c.tl.var].cap == CapKind::In
                ? "?"
                : "!";
        rhs = cap + pat_expr_str(tt, cs, c.r);
      } else {
        rhs = texpr(c.tr);
      }
      std::string lhs = c.l ? "?" + pat_expr_str(tt, cs, c.l) : texpr(c.tl);
      return lhs + " <= " + rhs + "  -- " + c.note;
    }
    case Constraint::Residual: {
      std::string out = pat_expr_str(tt, cs, c.l) + " << " + c.tag + "(";
      for (std::size_t i = 0; i < c.args.size(); ++i) {
        if (i) out += ", ";
        const CTypeExpr& t = c.args[i];
        if (t.kind == CTypeExpr::IntT)
          out += "int";
        else if (t.kind == CTypeExpr::Known)
          out += tt.type_str(t.known);
        else
          out += cs.vars[t.var].label;
      }
      return out + ")  -- " + c.note;
    }
  }
  return "";
}

}  // namespace mbx
