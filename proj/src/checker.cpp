#include "mbx/checker.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "mbx/pattern_ops.hpp"
#include "mbx/proc_ops.hpp"

namespace mbx {

namespace {

struct SigMap {
  // mailbox name -> tag -> candidate argument-type vectors
  std::map<Name, std::map<Tag, std::vector<std::vector<TypeId>>>> sigs;

  void add(const Name& w, const Tag& tag, const std::vector<TypeId>& args) {
    sigs[w][tag].push_back(args);
  }
};

void collect_pattern_atoms(const TypeTable& tt, PatId p, SigMap& out,
                           const Name& owner) {
  const PatNode& n = tt.pat(p);
  switch (n.kind) {
    case PatKind::Atom:
      out.add(owner, n.tag, n.args);
      return;
    case PatKind::Sum:
    case PatKind::Prod:
      collect_pattern_atoms(tt, n.lhs, out, owner);
      collect_pattern_atoms(tt, n.rhs, out, owner);
      return;
    case PatKind::Star:
      collect_pattern_atoms(tt, n.lhs, out, owner);
      return;
    default:
      return;
  }
}

void note_annotation(const TypeTable& tt, const Name& w, TypeId t, SigMap& out) {
  if (t == kNoType) return;
  const TypeNode& n = tt.type(t);
  if (n.kind != TypeKind::Mailbox || n.pattern == kNoPat) return;
  collect_pattern_atoms(tt, n.pattern, out, w);
}

void build_signatures(const TypeTable& tt, const Program& prog,
                      const ProcPtr& p, SigMap& out) {
  switch (p->kind) {
    case ProcKind::Done:
      return;
    case ProcKind::Invoke: {
      const Definition* d = prog.find_def(p->head);
      if (!d) return;
      for (std::size_t i = 0;
           i < std::min(d->params.size(), p->args.size()); ++i) {
        if (p->args[i]->kind == IntExpr::Ref)
          note_annotation(tt, p->args[i]->name, d->params[i].type, out);
      }
      return;
    }
    case ProcKind::Send:
      return;
    case ProcKind::Guard: {
      for (const auto& b : p->branches) {
        if (b.kind == BranchKind::Receive) {
          std::vector<TypeId> args;
          for (const auto& bd : b.binders) args.push_back(bd.type);
          out.add(b.mailbox, b.tag, args);
          for (const auto& bd : b.binders)
            note_annotation(tt, bd.name, bd.type, out);
        }
        if (b.cont) build_signatures(tt, prog, b.cont, out);
      }
      return;
    }
    case ProcKind::Par:
      build_signatures(tt, prog, p->left, out);
      build_signatures(tt, prog, p->right, out);
      return;
    case ProcKind::New:
      build_signatures(tt, prog, p->body, out);
      return;
    case ProcKind::If:
      build_signatures(tt, prog, p->then_p, out);
      build_signatures(tt, prog, p->else_p, out);
      return;
  }
}

struct Synth {
  TypeTable& tt;
  const Program& prog;
  CheckOptions opts;
  SigMap sigs;
  TypeRel rel;
  std::vector<Diagnostic>* diags;
  bool failed = false;

  void diag(const std::string& code, const std::string& msg, SourceSpan sp,
            const std::string& witness = "") {
    diags->push_back({code, msg, sp, witness});
    failed = true;
  }

  Usage unit_usage() const {
    Usage u;
    u.outputs = tt.one();
    return u;
  }

  void add_output(SynthEnv& env, const Name& n, PatId pat, SourceSpan sp) {
    auto it = env.usages.find(n);
    if (it == env.usages.end()) {
      Usage u = unit_usage();
      u.outputs = pat;
      u.site = sp;
      env.usages.emplace(n, u);
      return;
    }
    if (it->second.is_int) {
      diag("type-mismatch", "'" + n + "' used both as int and as mailbox", sp);
      return;
    }
    it->second.outputs = tt.prod(it->second.outputs, pat);
  }

  void add_input(SynthEnv& env, const Name& n, PatId pat, SourceSpan sp) {
    auto it = env.usages.find(n);
    if (it == env.usages.end()) {
      Usage u = unit_usage();
      u.input = pat;
      u.site = sp;
      env.usages.emplace(n, u);
      return;
    }
    if (it->second.is_int) {
      diag("type-mismatch", "'" + n + "' used both as int and as mailbox", sp);
      return;
    }
    if (it->second.input) {
      diag("combination-undefined",
           "two input usages of '" + n +
               "' cannot be combined: receiving from the same mailbox in "
               "parallel is unsafe",
           sp);
      return;
    }
    it->second.input = pat;
  }

  void add_int(SynthEnv& env, const Name& n, SourceSpan sp) {
    auto it = env.usages.find(n);
    if (it == env.usages.end()) {
      Usage u = unit_usage();
      u.is_int = true;
      u.site = sp;
      env.usages.emplace(n, u);
      return;
    }
    if (!it->second.is_int)
      diag("type-mismatch", "'" + n + "' used both as mailbox and as int", sp);
  }

  // argument occurrence at a position of declared type `t`
  void consume_arg(SynthEnv& env, const IntExprPtr& arg, TypeId t,
                   SourceSpan sp) {
    const TypeNode& n = tt.type(t);
    if (n.kind == TypeKind::IntBase) {
      std::function<void(const IntExprPtr&)> mark = [&](const IntExprPtr& e) {
        if (e->kind == IntExpr::Ref) add_int(env, e->name, e->span);
        if (e->kind == IntExpr::Add) {
          mark(e->l);
          mark(e->r);
        }
      };
      mark(arg);
      return;
    }
    if (arg->kind != IntExpr::Ref) {
      diag("type-mismatch",
           "integer expression passed where a mailbox of type " +
               tt.type_str(t) + " is expected",
           sp);
      return;
    }
    if (n.pattern == kNoPat) {
      diag("annotation-hole",
           "type of this position is not fully defined", sp);
      return;
    }
    if (n.cap == Cap::Out)
      add_output(env, arg->name, n.pattern, sp);
    else
      add_input(env, arg->name, n.pattern, sp);
  }

  std::optional<std::vector<TypeId>> resolve_send(const Name& target,
                                                  const Tag& tag,
                                                  std::size_t arity,
                                                  SourceSpan sp) {
    if (arity == 0) return std::vector<TypeId>{};
    auto wi = sigs.sigs.find(target);
    std::vector<std::vector<TypeId>> cands;
    if (wi != sigs.sigs.end()) {
      auto ti = wi->second.find(tag);
      if (ti != wi->second.end()) {
        for (const auto& c : ti->second) {
          if (c.size() != arity) continue;
          bool hole = false;
          for (TypeId x : c)
            if (x == kNoType) hole = true;
          if (hole) continue;
          bool dup = false;
          for (const auto& prev : cands) {
            bool all = true;
            for (std::size_t i = 0; i < arity; ++i)
              if (!type_equiv(tt, prev[i], c[i])) all = false;
            if (all) dup = true;
          }
          if (!dup) cands.push_back(c);
        }
      }
    }
    if (cands.empty()) {
      diag("send-unresolved",
           "cannot determine the argument types of message '" + tag +
               "' stored in '" + target +
               "': no annotation in scope mentions it",
           sp);
      return std::nullopt;
    }
    if (cands.size() > 1) {
      diag("send-ambiguous",
           "message '" + tag + "' stored in '" + target +
               "' has several inequivalent argument signatures in scope",
           sp);
      return std::nullopt;
    }
    return cands.front();
  }

  SynthEnv synth(const ProcPtr& p) {
    switch (p->kind) {
      case ProcKind::Done:
        return {};
      case ProcKind::Send: {
        SynthEnv env;
        auto sig = resolve_send(p->head, p->tag, p->args.size(), p->span);
        if (!sig) return env;
        PatId atom = tt.atom(p->tag, *sig);
        add_output(env, p->head, atom, p->span);
        for (std::size_t i = 0; i < p->args.size(); ++i) {
          consume_arg(env, p->args[i], (*sig)[i], p->span);
          if (tt.type((*sig)[i]).kind == TypeKind::Mailbox &&
              p->args[i]->kind == IntExpr::Ref)
            env.graph.add_edge(p->head, p->args[i]->name, p->span,
                               "message " + p->tag);
        }
        check_graph(env.graph, p->span);
        return env;
      }
      case ProcKind::Invoke: {
        SynthEnv env;
        const Definition* d = prog.find_def(p->head);
        if (!d) {
          diag("unbound", "unbound process variable '" + p->head + "'",
               p->span);
          return env;
        }
        if (d->params.size() != p->args.size()) {
          diag("arity",
               "'" + p->head + "' takes " + std::to_string(d->params.size()) +
                   " arguments, got " + std::to_string(p->args.size()),
               p->span);
          return env;
        }
        std::map<Name, Name> subst;
        for (std::size_t i = 0; i < d->params.size(); ++i) {
          if (d->params[i].type == kNoType) {
            diag("annotation-hole",
                 "parameter '" + d->params[i].name + "' of '" + d->name +
                     "' lacks a type annotation",
                 p->span);
            return env;
          }
          consume_arg(env, p->args[i], d->params[i].type, p->span);
          if (p->args[i]->kind == IntExpr::Ref)
            subst[d->params[i].name] = p->args[i]->name;
        }
        FlatGraph inst = flatten(d->declared_graph).renamed(subst);
        for (auto& e : inst.edges) {
          e.span = p->span;
          e.note = "call of " + d->name;
        }
        env.graph.merge(inst);
        check_graph(env.graph, p->span);
        return env;
      }
      case ProcKind::Par: {
        SynthEnv l = synth(p->left);
        SynthEnv r = synth(p->right);
        SynthEnv env;
        env.usages = std::move(l.usages);
        for (auto& [n, u] : r.usages) {
          auto it = env.usages.find(n);
          if (it == env.usages.end()) {
            env.usages.emplace(n, u);
            continue;
          }
          if (u.is_int || it->second.is_int) {
            if (u.is_int != it->second.is_int)
              diag("type-mismatch",
                   "'" + n + "' used both as int and as mailbox", u.site);
            continue;
          }
          it->second.outputs = tt.prod(it->second.outputs, u.outputs);
          if (u.input) {
            if (it->second.input) {
              diag("combination-undefined",
                   "two input usages of '" + n +
                       "' meet at this parallel composition",
                   p->span);
            } else {
              it->second.input = u.input;
            }
          }
        }
        env.graph = std::move(l.graph);
        env.graph.merge(r.graph);
        check_graph(env.graph, p->span);
        return env;
      }
      case ProcKind::New: {
        SynthEnv env = synth(p->body);
        auto it = env.usages.find(p->bound);
        if (it == env.usages.end()) {
          diag("unbalanced-mailbox",
               "restricted mailbox '" + p->bound +
                   "' is never used; it cannot be deleted",
               p->span);
        } else if (it->second.is_int) {
          diag("type-mismatch",
               "restricted name '" + p->bound + "' used as int", p->span);
        } else if (!it->second.input) {
          diag("unbalanced-mailbox",
               "messages are stored in '" + p->bound +
                   "' but no process consumes them",
               p->span, tt.pattern_str(it->second.outputs));
        } else {
          auto inc =
              subpattern(tt, it->second.outputs, *it->second.input, rel);
          if (!inc.holds)
            diag("unbalanced-mailbox",
                 "stored messages of '" + p->bound +
                     "' are not covered by what is consumed: " +
                     tt.pattern_str(it->second.outputs) + " is not below " +
                     tt.pattern_str(*it->second.input),
                 p->span,
                 inc.witness ? config_str(tt, *inc.witness) : "");
        }
        if (it != env.usages.end()) env.usages.erase(it);
        env.graph.restrict_name(p->bound);
        return env;
      }
      case ProcKind::If: {
        SynthEnv l = synth(p->then_p);
        SynthEnv r = synth(p->else_p);
        auto mark_ints = [&](const IntExprPtr& e, SynthEnv& env) {
          std::function<void(const IntExprPtr&)> mark =
              [&](const IntExprPtr& x) {
                if (x->kind == IntExpr::Ref) add_int(env, x->name, x->span);
                if (x->kind == IntExpr::Add) {
                  mark(x->l);
                  mark(x->r);
                }
              };
          mark(e);
        };
        SynthEnv env;
        env.usages = reconcile({&l.usages, &r.usages}, p->span);
        mark_ints(p->cond_l, env);
        mark_ints(p->cond_r, env);
        // typed like the one-message choice: a hidden mailbox guards both
        // branches, linking it to every residual name
        env.graph.vertices.push_back({"if", true});
        for (const auto& [n, u] : env.usages)
          if (!u.is_int) {
            int v = env.graph.vertex_of(n);
            env.graph.edges.push_back({0, v, p->span, "conditional"});
          }
        check_graph(env.graph, p->span);
        return env;
      }
      case ProcKind::Guard:
        return synth_guard(p);
    }
    return {};
  }

  // shared-name reconciliation across alternative branches: every shared
  // name must resolve to equivalent types, names missing somewhere must be
  // droppable where present
  std::map<Name, Usage> reconcile(
      const std::vector<const std::map<Name, Usage>*>& branches,
      SourceSpan sp) {
    std::map<Name, Usage> joint;
    std::set<Name> all;
    for (const auto* b : branches)
      for (const auto& [n, u] : *b) all.insert(n);
    for (const Name& n : all) {
      std::vector<const Usage*> present;
      for (const auto* b : branches) {
        auto it = b->find(n);
        if (it != b->end()) present.push_back(&it->second);
      }
      bool everywhere = present.size() == branches.size();
      const Usage& first = *present.front();
      if (first.is_int) {
        bool ok = true;
        for (const Usage* u : present)
          if (!u->is_int) ok = false;
        if (!ok)
          diag("type-mismatch", "'" + n + "' used inconsistently", sp);
        Usage u = unit_usage();
        u.is_int = true;
        joint.emplace(n, u);
        continue;
      }
      if (!everywhere) {
        // must be droppable in the branches that do use it
        for (const Usage* u : present) {
          if (u->input || !nullable(tt, u->outputs)) {
            diag("irrelevant-drop-failed",
                 "'" + n +
                     "' is used in one alternative but not the others, and "
                     "its use is not discardable",
                 u->site.valid() ? u->site : sp);
            break;
          }
        }
        continue;  // droppable names vanish from the joint environment
      }
      auto t0 = resolve_usage(tt, first);
      if (!t0) {
        diag("combination-unresolved",
             "cannot resolve the combined use of '" + n +
                 "' to a single type",
             sp, usage_str(tt, first));
        continue;
      }
      bool ok = true;
      for (std::size_t i = 1; i < present.size(); ++i) {
        auto ti = resolve_usage(tt, *present[i]);
        if (!ti) {
          diag("combination-unresolved",
               "cannot resolve the combined use of '" + n +
                   "' to a single type",
               sp, usage_str(tt, *present[i]));
          ok = false;
          break;
        }
        if (!type_equiv(tt, *t0, *ti)) {
          diag("branch-mismatch",
               "alternatives disagree on '" + n + "': " + tt.type_str(*t0) +
                   " vs " + tt.type_str(*ti),
               sp);
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      Usage u = unit_usage();
      const TypeNode& tn = tt.type(*t0);
      if (tn.kind == TypeKind::IntBase)
        u.is_int = true;
      else if (tn.cap == Cap::Out)
        u.outputs = tn.pattern;
      else
        u.input = tn.pattern;
      u.site = first.site;
      joint.emplace(n, u);
    }
    return joint;
  }

  SynthEnv synth_guard(const ProcPtr& p) {
    // collect action mailboxes in source order
    std::vector<Name> actions;
    for (const auto& b : p->branches)
      if (std::find(actions.begin(), actions.end(), b.mailbox) ==
          actions.end())
        actions.push_back(b.mailbox);
    if (actions.size() > 1 && !opts.mixed_guards) {
      diag("mixed-guard-disallowed",
           "all alternatives of a guard must refer to the same mailbox "
           "(enable --mixed-guards for the relaxed rules)",
           p->span);
      return {};
    }

    struct BranchInfo {
      const GuardBranch* b;
      PatId pattern = kNoPat;           // contribution to its mailbox
      std::map<Name, Usage> residual;   // without the action mailbox
      bool is_fail = false;
      bool bad = false;
    };
    std::vector<BranchInfo> infos;

    for (const auto& b : p->branches) {
      BranchInfo info;
      info.b = &b;
      switch (b.kind) {
        case BranchKind::Fail:
          info.pattern = tt.zero();
          info.is_fail = true;
          break;
        case BranchKind::Free: {
          SynthEnv sub = synth(b.cont);
          info.pattern = tt.one();
          auto it = sub.usages.find(b.mailbox);
          if (it != sub.usages.end()) {
            if (it->second.input || !nullable(tt, it->second.outputs)) {
              diag("use-after-free",
                   "'" + b.mailbox +
                       "' is still used after being deleted",
                   b.span);
              info.bad = true;
            }
            sub.usages.erase(it);
          }
          info.residual = std::move(sub.usages);
          break;
        }
        case BranchKind::Receive: {
          // a continuation that fails outright places no demands: the fail
          // rule types in an arbitrary environment
          bool fails = b.cont->kind == ProcKind::Guard;
          if (fails)
            for (const auto& cb : b.cont->branches)
              if (cb.kind != BranchKind::Fail) fails = false;
          if (fails) {
            std::vector<TypeId> args;
            bool holes = false;
            for (const auto& bd : b.binders) {
              if (bd.type == kNoType) holes = true;
              args.push_back(bd.type);
            }
            if (holes) {
              diag("annotation-hole", "binder lacks a type annotation",
                   b.span);
              info.bad = true;
            } else {
              info.pattern = tt.prod(tt.atom(b.tag, args), tt.zero());
            }
            info.is_fail = true;
            break;
          }
          SynthEnv sub = synth(b.cont);
          // binders are consumed against their annotations
          for (const auto& bd : b.binders) {
            if (bd.type == kNoType) {
              diag("annotation-hole",
                   "binder '" + bd.name + "' lacks a type annotation",
                   bd.span);
              info.bad = true;
              continue;
            }
            auto it = sub.usages.find(bd.name);
            Usage u = it == sub.usages.end() ? unit_usage() : it->second;
            if (it != sub.usages.end()) sub.usages.erase(it);
            consume_binding(bd.type, u, bd.span, "binder '" + bd.name + "'");
          }
          // the action mailbox must be used as pure input downstream
          auto it = sub.usages.find(b.mailbox);
          if (it == sub.usages.end() || !it->second.input) {
            diag("unconsumed-input",
                 "after receiving from '" + b.mailbox +
                     "', the continuation must keep consuming it (receive "
                     "again, delete it, or pass it on)",
                 b.span);
            info.bad = true;
          } else {
            Usage u = it->second;
            sub.usages.erase(it);
            std::optional<PatId> d;
            if (pattern_equiv(tt, u.outputs, tt.one(), rel))
              d = *u.input;
            else
              d = resolve_remainder(tt, *u.input, u.outputs, rel);
            if (!d) {
              diag("combination-unresolved",
                   "cannot balance messages stored in '" + b.mailbox +
                       "' against its remaining input",
                   b.span, usage_str(tt, u));
              info.bad = true;
            } else {
              std::vector<TypeId> args;
              for (const auto& bd : b.binders) args.push_back(bd.type);
              info.pattern = tt.prod(tt.atom(b.tag, args), *d);
            }
          }
          info.residual = std::move(sub.usages);
          break;
        }
      }
      infos.push_back(std::move(info));
    }

    // per-mailbox branch sums, in source order
    std::map<Name, PatId> sums;
    for (const Name& w : actions) {
      PatId acc = kNoPat;
      for (const auto& info : infos) {
        if (info.b->mailbox != w || info.pattern == kNoPat) continue;
        acc = acc == kNoPat ? info.pattern : tt.sum(acc, info.pattern);
      }
      if (acc == kNoPat) acc = tt.zero();
      sums[w] = acc;
    }

    // the sum must be in normal form: every receive alternative's tail is
    // the residual of the sum by the received atom
    for (const auto& info : infos) {
      if (info.bad || info.b->kind != BranchKind::Receive) continue;
      std::vector<TypeId> args;
      for (const auto& bd : info.b->binders) args.push_back(bd.type);
      PatId sum = sums[info.b->mailbox];
      auto r = residual(tt, sum, info.b->tag, args, rel);
      if (!r) {
        diag("nf-violation",
             "residual of the mailbox pattern by '" + info.b->tag +
                 "' is undefined: the received argument types must be above "
                 "those of every '" +
                 info.b->tag + "' message it may contain",
             info.b->span, tt.pattern_str(sum));
        continue;
      }
      const PatNode& pn = tt.pat(info.pattern);
      PatId tail = pn.kind == PatKind::Prod ? pn.rhs : tt.one();
      if (!pattern_equiv(tt, tail, *r, rel))
        diag("nf-violation",
             "the pattern of '" + info.b->mailbox +
                 "' is not in normal form: after receiving '" + info.b->tag +
                 "' the remaining content is " + tt.pattern_str(*r) +
                 ", not " + tt.pattern_str(tail),
             info.b->span);
    }

    // alternatives acting elsewhere see an action mailbox in full: these
    // views are reconciled separately and bound the consumption sum
    std::map<Name, std::vector<Usage>> views;
    for (auto& info : infos) {
      if (info.is_fail) continue;
      for (const Name& w : actions) {
        if (info.b->mailbox == w) continue;
        auto it = info.residual.find(w);
        if (it != info.residual.end()) {
          views[w].push_back(it->second);
          info.residual.erase(it);
        }
      }
    }

    // remaining residual environments reconcile across alternatives
    std::vector<const std::map<Name, Usage>*> residuals;
    for (const auto& info : infos)
      if (!info.is_fail) residuals.push_back(&info.residual);
    std::map<Name, Usage> joint;
    if (!residuals.empty()) joint = reconcile(residuals, p->span);

    SynthEnv env;
    for (const Name& w : actions) {
      auto vit = views.find(w);
      if (vit != views.end()) {
        std::optional<PatId> view;
        for (const Usage& u : vit->second) {
          auto t = resolve_usage(tt, u);
          if (!t || tt.type(*t).kind != TypeKind::Mailbox ||
              tt.type(*t).cap != Cap::In) {
            diag("branch-mismatch",
                 "alternatives not acting on '" + w +
                     "' must see it as an input mailbox",
                 p->span, usage_str(tt, u));
            view.reset();
            break;
          }
          if (!view) {
            view = tt.type(*t).pattern;
          } else if (!pattern_equiv(tt, *view, tt.type(*t).pattern, rel)) {
            diag("branch-mismatch",
                 "alternatives disagree on the content of '" + w + "': " +
                     tt.pattern_str(*view) + " vs " +
                     tt.pattern_str(tt.type(*t).pattern),
                 p->span);
            view.reset();
            break;
          }
        }
        if (!view) continue;
        auto inc = subpattern(tt, sums[w], *view, rel);
        if (!inc.holds) {
          diag("branch-mismatch",
               "the alternatives acting on '" + w + "' consume " +
                   tt.pattern_str(sums[w]) + ", which exceeds the view " +
                   tt.pattern_str(*view) + " of the other alternatives",
               p->span, inc.witness ? config_str(tt, *inc.witness) : "");
          continue;
        }
        add_input(env, w, *view, p->span);
      } else {
        add_input(env, w, sums[w], p->span);
      }
    }
    for (const auto& [n, u] : joint) env.usages.emplace(n, u);

    // dependencies: the guarded names block everything else in scope
    for (const Name& w : actions)
      for (const auto& [n, u] : joint)
        if (!u.is_int) env.graph.add_edge(w, n, p->span, "guard on " + w);
    check_graph(env.graph, p->span);
    return env;
  }

  void consume_binding(TypeId t, const Usage& u, SourceSpan sp,
                       const std::string& what) {
    const TypeNode& n = tt.type(t);
    if (n.kind == TypeKind::IntBase) {
      if (!u.is_int && (u.input || !pattern_equiv(tt, u.outputs, tt.one(), rel)))
        diag("type-mismatch", what + " has type int but is used as a mailbox",
             sp);
      return;
    }
    if (u.is_int) {
      diag("type-mismatch",
           what + " has type " + tt.type_str(t) + " but is used as an int",
           sp);
      return;
    }
    if (n.cap == Cap::Out) {
      if (u.input) {
        diag("type-mismatch",
             what + " only grants output capability, but it is used for "
                    "input",
             sp);
        return;
      }
      auto inc = subpattern(tt, u.outputs, n.pattern, rel);
      if (!inc.holds) {
        bool unused = pattern_equiv(tt, u.outputs, tt.one(), rel);
        diag(unused ? "irrelevant-drop-failed" : "binding-misuse",
             unused ? what + " of relevant type " + tt.type_str(t) +
                          " is never used"
                    : what + ": stored messages " +
                          tt.pattern_str(u.outputs) +
                          " are not allowed by " + tt.type_str(t),
             sp, inc.witness ? config_str(tt, *inc.witness) : "");
      }
      return;
    }
    // input capability: the granted pattern and any local outputs must be
    // covered by what the uses consume
    if (!u.input) {
      diag("irrelevant-drop-failed",
           what + " grants input capability " + tt.type_str(t) +
               ", which is relevant and cannot be discarded",
           sp);
      return;
    }
    auto inc = subpattern(tt, tt.prod(u.outputs, n.pattern), *u.input, rel);
    if (!inc.holds)
      diag("binding-misuse",
           what + ": granted " + tt.type_str(t) +
               " does not balance against its uses " + usage_str(tt, u),
           sp, inc.witness ? config_str(tt, *inc.witness) : "");
  }

  void check_graph(FlatGraph& g, SourceSpan sp) {
    if (acyclic(g)) return;
    auto cycle = find_cycle(g);
    std::string witness;
    std::string spans;
    if (cycle) {
      for (const auto& e : *cycle) {
        if (!witness.empty()) witness += ", ";
        witness += g.vertices[e.a].display + "-" + g.vertices[e.b].display;
        if (!e.note.empty()) {
          if (!spans.empty()) spans += "; ";
          spans += e.note + " at " + e.span.str();
        }
      }
    }
    diag("cycle",
         "mutual dependency between mailboxes" +
             (spans.empty() ? std::string() : " (" + spans + ")"),
         sp, witness);
    // drop the offending edges so one report does not cascade
    g.edges.clear();
  }
};

}  // namespace

std::optional<TypeId> resolve_usage(TypeTable& tt, const Usage& u) {
  if (u.is_int) return tt.int_type();
  TypeRel rel = subtype_rel(tt);
  if (!u.input) return tt.mailbox(Cap::Out, u.outputs);
  if (pattern_equiv(tt, u.outputs, tt.one(), rel))
    return tt.mailbox(Cap::In, *u.input);
  auto f = resolve_remainder(tt, *u.input, u.outputs, rel);
  if (!f) return std::nullopt;
  return tt.mailbox(Cap::In, *f);
}

std::string usage_str(TypeTable& tt, const Usage& u) {
  if (u.is_int) return "int";
  std::string out = "!" + tt.pattern_str(u.outputs);
  if (u.input) out += " with ?" + tt.pattern_str(*u.input);
  return out;
}

namespace {

SynthResult synthesize_unit(const ProcPtr& p, const Program& prog,
                            CheckOptions opts,
                            const std::vector<Binder>& params) {
  SynthResult res;
  TypeTable& tt = *prog.table;
  Synth s{tt, prog, opts, {}, subtype_rel(tt), &res.diags};
  // signatures are scoped to the unit being checked: its own annotations
  // plus the declared parameters of the definitions it invokes
  for (const auto& prm : params) note_annotation(tt, prm.name, prm.type, s.sigs);
  build_signatures(tt, prog, p, s.sigs);
  res.env = s.synth(p);
  res.ok = !s.failed;
  return res;
}

}  // namespace

SynthResult synthesize(const ProcPtr& p, const Program& prog,
                       CheckOptions opts) {
  return synthesize_unit(p, prog, opts, {});
}

namespace {

std::string env_to_string(TypeTable& tt, const SynthEnv& env) {
  std::string out;
  for (const auto& [n, u] : env.usages) {
    if (!out.empty()) out += ", ";
    auto t = resolve_usage(tt, u);
    out += n + ": " + (t ? tt.type_str(*t) : usage_str(tt, u));
  }
  return out.empty() ? "(empty)" : out;
}

}  // namespace

Report check_program(const Program& prog, CheckOptions opts) {
  Report rep;
  TypeTable& tt = *prog.table;
  TypeRel rel = subtype_rel(tt);

  // global assumptions over every type reachable from annotations
  std::vector<TypeId> roots;
  for (const auto& [name, id] : tt.named()) roots.push_back(id);
  for (const auto& d : prog.defs)
    for (const auto& p : d.params)
      if (p.type != kNoType) roots.push_back(p.type);
  std::function<void(const ProcPtr&)> collect_binder_types =
      [&](const ProcPtr& p) {
        if (p->kind == ProcKind::Guard) {
          for (const auto& b : p->branches) {
            for (const auto& bd : b.binders)
              if (bd.type != kNoType) roots.push_back(bd.type);
            if (b.cont) collect_binder_types(b.cont);
          }
        } else if (p->kind == ProcKind::Par) {
          collect_binder_types(p->left);
          collect_binder_types(p->right);
        } else if (p->kind == ProcKind::New) {
          collect_binder_types(p->body);
        } else if (p->kind == ProcKind::If) {
          collect_binder_types(p->then_p);
          collect_binder_types(p->else_p);
        }
      };
  for (const auto& d : prog.defs) collect_binder_types(d.body);
  if (prog.has_main) collect_binder_types(prog.main);
  rep.global_diags = check_global_assumptions(tt, roots);
  if (!rep.global_diags.empty()) {
    rep.ok = false;
    return rep;  // the checker refuses to run on violated assumptions
  }

  for (const auto& d : prog.defs) {
    DefReport dr;
    dr.name = d.name;
    SynthResult sr = synthesize_unit(d.body, prog, opts, d.params);
    dr.diags = std::move(sr.diags);
    dr.ok = sr.ok;

    // declared graph sanity
    FlatGraph declared = flatten(d.declared_graph);
    if (!acyclic(declared)) {
      dr.diags.push_back({"cycle",
                          "declared dependency graph of '" + d.name +
                              "' is itself cyclic",
                          d.span,
                          ""});
      dr.ok = false;
    }
    for (const auto& prm : d.params) {
      if (prm.type != kNoType &&
          tt.type(prm.type).kind == TypeKind::IntBase &&
          declared.find_free(prm.name)) {
        dr.diags.push_back({"type-mismatch",
                            "declared graph mentions int parameter '" +
                                prm.name + "'",
                            d.span,
                            ""});
        dr.ok = false;
      }
    }

    if (dr.ok) {
      // parameters consumed against their annotations
      Synth s{tt, prog, opts, {}, rel, &dr.diags};
      SynthEnv env = sr.env;
      for (const auto& prm : d.params) {
        if (prm.type == kNoType) {
          s.diag("annotation-hole",
                 "parameter '" + prm.name + "' lacks a type annotation",
                 prm.span);
          continue;
        }
        auto it = env.usages.find(prm.name);
        Usage u = it == env.usages.end() ? Usage{tt.one(), std::nullopt, false,
                                                 prm.span}
                                         : it->second;
        if (it != env.usages.end()) env.usages.erase(it);
        s.consume_binding(prm.type, u, prm.span,
                          "parameter '" + prm.name + "'");
      }
      if (!entails(tt, declared, sr.env.graph)) {
        s.diag("graph-entailment",
               "the declared dependency graph of '" + d.name +
                   "' does not cover the dependencies of its body: declared " +
                   flatgraph_str(declared) + ", synthesized " +
                   flatgraph_str(sr.env.graph),
               d.span);
      }
      dr.ok = !s.failed;
    }
    dr.env_str = env_to_string(tt, sr.env);
    dr.graph_str = flatgraph_str(sr.env.graph);
    rep.defs.push_back(std::move(dr));
    if (!rep.defs.back().ok) rep.ok = false;
  }

  if (prog.has_main) {
    SynthResult sr = synthesize(prog.main, prog, opts);
    rep.main_diags = std::move(sr.diags);
    rep.main_ok = sr.ok;
    std::set<Name> fn = free_names(prog.main);
    if (!fn.empty()) {
      rep.main_closed = false;
      std::string names;
      for (const auto& n : fn) names += (names.empty() ? "" : ", ") + n;
      rep.main_diags.push_back(
          {"main-not-closed",
           "main has free names (" + names +
               "); the soundness guarantees require a closed process",
           prog.main->span,
           ""});
      rep.main_ok = false;
    }
    if (!rep.main_ok) rep.ok = false;
  }
  return rep;
}

}  // namespace mbx
