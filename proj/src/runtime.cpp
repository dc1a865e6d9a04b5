#include "mbx/runtime.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <limits>
#include <random>

namespace mbx {

namespace {

void decompose_scope(const ProcPtr& p, std::vector<Name>& news,
                     std::vector<ProcPtr>& comps) {
  switch (p->kind) {
    case ProcKind::New:
      news.push_back(p->bound);
      decompose_scope(p->body, news, comps);
      return;
    case ProcKind::Par:
      decompose_scope(p->left, news, comps);
      decompose_scope(p->right, news, comps);
      return;
    case ProcKind::Done:
      return;
    default:
      comps.push_back(p);
      return;
  }
}

ProcPtr rebuild_scope(const std::vector<Name>& news,
                      const std::vector<ProcPtr>& comps) {
  ProcPtr body;
  if (comps.empty()) {
    body = Process::done();
  } else {
    body = comps.back();
    for (std::size_t i = comps.size() - 1; i-- > 0;)
      body = Process::par(comps[i], body);
  }
  for (std::size_t i = news.size(); i-- > 0;)
    body = Process::make_new(news[i], body);
  return body;
}


std::optional<long> eval_ground(const IntExprPtr& e) {
  switch (e->kind) {
    case IntExpr::Lit:
      return e->lit;
    case IntExpr::Ref:
      return std::nullopt;
    case IntExpr::Add: {
      auto l = eval_ground(e->l);
      auto r = eval_ground(e->r);
      if (l && r) return *l + *r;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// freshen every bound name of a definition body against `used`
ProcPtr freshen_body(const ProcPtr& body, std::set<Name>& used) {
  std::function<ProcPtr(const ProcPtr&, std::map<Name, IntExprPtr>&)> go =
      [&](const ProcPtr& p, std::map<Name, IntExprPtr>& ren) -> ProcPtr {
    switch (p->kind) {
      case ProcKind::Done:
        return p;
      case ProcKind::Invoke:
      case ProcKind::Send:
      case ProcKind::If: {
        return substitute(p, ren);
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
            nb.cont = go(b.cont, inner);
          } else if (b.kind == BranchKind::Free) {
            nb.cont = go(b.cont, ren);
          }
          bs.push_back(std::move(nb));
        }
        return Process::guard(std::move(bs), p->span);
      }
      case ProcKind::Par:
        return Process::par(go(p->left, ren), go(p->right, ren), p->span);
      case ProcKind::New: {
        auto inner = ren;
        Name nn = fresh_name(p->bound, used);
        if (nn != p->bound)
          inner[p->bound] = IntExpr::ref(nn);
        else
          inner.erase(p->bound);
        return Process::make_new(nn, go(p->body, inner), p->span);
      }
    }
    return p;
  };
  std::map<Name, IntExprPtr> ren;
  return go(body, ren);
}

void collect_all_names(const ProcPtr& p, std::set<Name>& out) {
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

std::vector<StepResult> step(const ProcPtr& raw, const Program& prog) {
  const TypeTable& tt = *prog.table;
  ProcPtr p = congruence_normal_form(raw, tt);
  std::vector<Name> news;
  std::vector<ProcPtr> comps;
  decompose_scope(p, news, comps);

  std::vector<StepResult> out;
  std::set<std::string> seen;

  auto emit = [&](const std::string& rule, const std::string& desc,
                  const std::vector<Name>& nnews,
                  const std::vector<ProcPtr>& ncomps) {
    ProcPtr next_raw = rebuild_scope(nnews, ncomps);
    NormalForm nf = congruence_normal_form_full(next_raw, tt);
    std::string key = print_process(nf.proc, tt);
    if (seen.count(rule + "\x01" + key)) return;
    seen.insert(rule + "\x01" + key);
    out.push_back({rule, desc, nf.proc, std::move(nf.renamed_from)});
  };

  std::set<Name> state_names;
  collect_all_names(p, state_names);

  for (std::size_t i = 0; i < comps.size(); ++i) {
    const ProcPtr& c = comps[i];
    switch (c->kind) {
      case ProcKind::Invoke: {
        const Definition* d = prog.find_def(c->head);
        if (!d) break;  // unbound process variable: stuck
        if (d->params.size() != c->args.size()) break;
        bool ground = true;
        std::map<Name, IntExprPtr> mapping;
        for (std::size_t k = 0; k < d->params.size(); ++k) {
          const IntExprPtr& a = c->args[k];
          if (a->kind == IntExpr::Ref) {
            mapping[d->params[k].name] = a;
          } else {
            auto v = eval_ground(a);
            if (!v) {
              ground = false;
              break;
            }
            mapping[d->params[k].name] = IntExpr::literal(*v);
          }
        }
        if (!ground) break;
        std::set<Name> used = state_names;
        ProcPtr body = freshen_body(d->body, used);
        body = substitute(body, mapping);
        std::vector<ProcPtr> ncomps = comps;
        ncomps[i] = body;
        emit("r-def", c->head, news, ncomps);
        break;
      }
      case ProcKind::If: {
        auto l = eval_ground(c->cond_l);
        auto r = eval_ground(c->cond_r);
        if (!l || !r) break;
        bool taken;
        switch (c->rel) {
          case IntRel::Eq: taken = *l == *r; break;
          case IntRel::Ne: taken = *l != *r; break;
          case IntRel::Lt: taken = *l < *r; break;
          case IntRel::Le: taken = *l <= *r; break;
          case IntRel::Gt: taken = *l > *r; break;
          case IntRel::Ge: taken = *l >= *r; break;
          default: taken = false; break;
        }
        std::vector<ProcPtr> ncomps = comps;
        ncomps[i] = taken ? c->then_p : c->else_p;
        emit("r-if", taken ? "then" : "else", news, ncomps);
        break;
      }
      case ProcKind::Guard: {
        for (std::size_t bi = 0; bi < c->branches.size(); ++bi) {
          const GuardBranch& b = c->branches[bi];
          if (b.kind == BranchKind::Receive) {
            for (std::size_t j = 0; j < comps.size(); ++j) {
              if (j == i) continue;
              const ProcPtr& m = comps[j];
              if (m->kind != ProcKind::Send || m->head != b.mailbox ||
                  m->tag != b.tag)
                continue;
              if (m->args.size() != b.binders.size()) continue;
              std::map<Name, IntExprPtr> mapping;
              bool ok = true;
              for (std::size_t k = 0; k < b.binders.size(); ++k) {
                const IntExprPtr& a = m->args[k];
                if (a->kind == IntExpr::Ref) {
                  mapping[b.binders[k].name] = a;
                } else {
                  auto v = eval_ground(a);
                  if (!v) {
                    ok = false;
                    break;
                  }
                  mapping[b.binders[k].name] = IntExpr::literal(*v);
                }
              }
              if (!ok) continue;
              ProcPtr cont = substitute(b.cont, mapping);
              std::vector<ProcPtr> ncomps;
              for (std::size_t k = 0; k < comps.size(); ++k) {
                if (k == j) continue;
                ncomps.push_back(k == i ? cont : comps[k]);
              }
              emit("r-read", b.mailbox + "?" + b.tag, news, ncomps);
            }
          } else if (b.kind == BranchKind::Free) {
            const Name& a = b.mailbox;
            if (std::find(news.begin(), news.end(), a) == news.end())
              continue;  // only restricted mailboxes can be deleted
            bool blocked = false;
            for (std::size_t j = 0; j < comps.size() && !blocked; ++j)
              if (j != i && free_names(comps[j]).count(a)) blocked = true;
            // the continuation must not mention the deleted mailbox either
            if (!blocked && free_names(b.cont).count(a)) blocked = true;
            if (blocked) continue;
            std::vector<Name> nnews;
            for (const Name& n : news)
              if (n != a) nnews.push_back(n);
            std::vector<ProcPtr> ncomps = comps;
            ncomps[i] = b.cont;
            emit("r-free", a, nnews, ncomps);
          }
        }
        break;
      }
      default:
        break;
    }
  }
  std::sort(out.begin(), out.end(), [&](const StepResult& a, const StepResult& b) {
    if (a.rule != b.rule) return a.rule < b.rule;
    if (a.desc != b.desc) return a.desc < b.desc;
    return print_process(a.next, tt) < print_process(b.next, tt);
  });
  return out;
}

namespace {

Name strip_fresh_suffix(const Name& n) {
  auto pos = n.rfind('_');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= n.size()) return n;
  for (std::size_t i = pos + 1; i < n.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(n[i]))) return n;
  return n.substr(0, pos);
}

std::map<Name, Name> successor_provenance(
    const std::map<Name, Name>& pred_prov,
    const std::map<Name, Name>& renamed_from) {
  std::map<Name, Name> out;
  for (const auto& [canon, raw] : renamed_from) {
    auto it = pred_prov.find(raw);
    out[canon] = it != pred_prov.end() ? it->second : strip_fresh_suffix(raw);
  }
  return out;
}

bool is_fail_only_guard(const ProcPtr& c) {
  if (c->kind != ProcKind::Guard) return false;
  for (const auto& b : c->branches)
    if (b.kind != BranchKind::Fail) return false;
  return !c->branches.empty();
}

}  // namespace

std::optional<Name> find_unguarded_fail(const ProcPtr& p, const TypeTable& tt) {
  ProcPtr canon = congruence_normal_form(p, tt);
  std::vector<Name> news;
  std::vector<ProcPtr> comps;
  decompose_scope(canon, news, comps);
  for (const ProcPtr& c : comps)
    if (is_fail_only_guard(c)) return c->branches.front().mailbox;
  return std::nullopt;
}

StateGraph explore(const Program& prog, int max_states, int max_depth) {
  const TypeTable& tt = *prog.table;
  StateGraph g;
  g.complete = true;

  NormalForm nf0 = congruence_normal_form_full(prog.main, tt);
  std::map<std::string, int> index;

  auto add_state = [&](ProcPtr proc, std::map<Name, Name> prov,
                       int depth) -> int {
    std::string key = print_process(proc, tt);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    StateGraph::State st;
    st.proc = std::move(proc);
    st.key = key;
    st.provenance = std::move(prov);
    st.depth = depth;
    std::vector<Name> news;
    std::vector<ProcPtr> comps;
    decompose_scope(st.proc, news, comps);
    for (const ProcPtr& c : comps)
      if (is_fail_only_guard(c)) st.has_unguarded_fail = true;
    g.states.push_back(std::move(st));
    g.edges.emplace_back();
    index.emplace(key, static_cast<int>(g.states.size()) - 1);
    return static_cast<int>(g.states.size()) - 1;
  };

  std::map<Name, Name> prov0;
  for (const auto& [canon, raw] : nf0.renamed_from)
    prov0[canon] = strip_fresh_suffix(raw);
  add_state(nf0.proc, prov0, 0);

  std::deque<int> frontier{0};
  while (!frontier.empty()) {
    int si = frontier.front();
    frontier.pop_front();
    if (g.states[si].depth >= max_depth) {
      // cannot expand: unknown whether successors exist beyond the bound
      if (!step(g.states[si].proc, prog).empty()) g.complete = false;
      continue;
    }
    std::vector<StepResult> succs = step(g.states[si].proc, prog);
    for (const StepResult& s : succs) {
      if (static_cast<int>(g.states.size()) >= max_states &&
          !index.count(print_process(s.next, tt))) {
        g.complete = false;
        continue;
      }
      int before = static_cast<int>(g.states.size());
      int ti = add_state(
          s.next, successor_provenance(g.states[si].provenance, s.renamed_from),
          g.states[si].depth + 1);
      g.edges[si].push_back({ti, s.rule});
      if (ti == before) frontier.push_back(ti);
    }
  }

  // classification
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    auto& st = g.states[i];
    if (st.proc->kind == ProcKind::Done) {
      st.cls = StateClass::TerminalDone;
      ++g.done_states;
    } else if (g.edges[i].empty() &&
               (g.complete || st.depth < max_depth)) {
      st.cls = StateClass::Deadlock;
      ++g.deadlock_states;
    } else {
      st.cls = StateClass::Live;
    }
  }

  // fail witness path (BFS parents)
  {
    std::vector<int> parent(g.states.size(), -2);
    std::deque<int> q{0};
    parent[0] = -1;
    int fail_state = g.states[0].has_unguarded_fail ? 0 : -1;
    while (!q.empty() && fail_state < 0) {
      int x = q.front();
      q.pop_front();
      for (auto& [y, rule] : g.edges[x]) {
        if (parent[y] != -2) continue;
        parent[y] = x;
        if (g.states[y].has_unguarded_fail) {
          fail_state = y;
          break;
        }
        q.push_back(y);
      }
    }
    if (fail_state >= 0) {
      std::vector<int> path;
      for (int cur = fail_state; cur != -1; cur = parent[cur])
        path.push_back(cur);
      std::reverse(path.begin(), path.end());
      g.fail_path = std::move(path);
    }
  }

  // fair termination on complete graphs: every state can reach a done state
  if (g.complete) {
    std::vector<std::vector<int>> rev(g.states.size());
    for (std::size_t i = 0; i < g.states.size(); ++i)
      for (auto& [j, rule] : g.edges[i]) rev[j].push_back(static_cast<int>(i));
    std::vector<bool> reach(g.states.size(), false);
    std::deque<int> q;
    for (std::size_t i = 0; i < g.states.size(); ++i)
      if (g.states[i].cls == StateClass::TerminalDone) {
        reach[i] = true;
        q.push_back(static_cast<int>(i));
      }
    while (!q.empty()) {
      int x = q.front();
      q.pop_front();
      for (int y : rev[x])
        if (!reach[y]) {
          reach[y] = true;
          q.push_back(y);
        }
    }
    bool all = true;
    for (bool b : reach) all = all && b;
    g.fairly_terminating = all && !g.states.empty();
  }
  return g;
}

Trace run(const Program& prog, std::uint64_t seed, int max_steps) {
  const TypeTable& tt = *prog.table;
  Trace tr;
  tr.seed = seed;
  std::mt19937_64 rng(seed);
  ProcPtr cur = congruence_normal_form(prog.main, tt);
  tr.initial = cur;
  for (int i = 0; i < max_steps; ++i) {
    std::vector<StepResult> succs = step(cur, prog);
    if (succs.empty()) return tr;
    std::uniform_int_distribution<std::size_t> pick(0, succs.size() - 1);
    const StepResult& s = succs[pick(rng)];
    tr.steps.push_back({s.rule, s.desc, s.next});
    cur = s.next;
  }
  if (!step(cur, prog).empty()) tr.truncated = true;
  return tr;
}

int count_messages(const StateGraph::State& state, const Name& source_name,
                   const Tag& tag) {
  std::set<Name> targets;
  for (const auto& [canon, orig] : state.provenance)
    if (orig == source_name) targets.insert(canon);
  targets.insert(source_name);  // free occurrences keep their name
  std::vector<Name> news;
  std::vector<ProcPtr> comps;
  decompose_scope(state.proc, news, comps);
  int n = 0;
  for (const ProcPtr& c : comps)
    if (c->kind == ProcKind::Send && targets.count(c->head) && c->tag == tag)
      ++n;
  return n;
}

bool has_free_alternative_on(const StateGraph::State& state,
                             const Name& source_name) {
  std::set<Name> targets;
  for (const auto& [canon, orig] : state.provenance)
    if (orig == source_name) targets.insert(canon);
  targets.insert(source_name);
  std::vector<Name> news;
  std::vector<ProcPtr> comps;
  decompose_scope(state.proc, news, comps);
  for (const ProcPtr& c : comps) {
    if (c->kind != ProcKind::Guard) continue;
    for (const auto& b : c->branches)
      if (b.kind == BranchKind::Free && targets.count(b.mailbox)) return true;
  }
  return false;
}

BoundsReport mailbox_bounds(const Program& prog, const StateGraph& graph,
                            const Name& mailbox) {
  (void)prog;
  BoundsReport rep;
  rep.lower_estimate = !graph.complete;
  std::set<Tag> tags;
  for (const auto& st : graph.states) {
    std::vector<Name> news;
    std::vector<ProcPtr> comps;
    decompose_scope(st.proc, news, comps);
    std::set<Name> targets;
    for (const auto& [canon, orig] : st.provenance)
      if (orig == mailbox) targets.insert(canon);
    targets.insert(mailbox);
    for (const ProcPtr& c : comps)
      if (c->kind == ProcKind::Send && targets.count(c->head))
        tags.insert(c->tag);
  }
  for (const Tag& t : tags) rep.per_tag[t] = {std::numeric_limits<long>::max(), 0};
  for (const auto& st : graph.states) {
    for (const Tag& t : tags) {
      long n = count_messages(st, mailbox, t);
      auto& b = rep.per_tag[t];
      b.min = std::min(b.min, n);
      b.max = std::max(b.max, n);
    }
  }
  return rep;
}

}  // namespace mbx
