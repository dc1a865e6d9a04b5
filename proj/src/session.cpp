#include "mbx/session.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace mbx {

namespace {

using PairSet = std::set<std::pair<const SessionType*, const SessionType*>>;

bool seq_rec(const SessPtr& a, const SessPtr& b, PairSet& assumed) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (assumed.count({a.get(), b.get()})) return true;
  assumed.insert({a.get(), b.get()});
  if (a->kind != b->kind || a->payload != b->payload ||
      a->items != b->items)
    return false;
  switch (a->kind) {
    case SessionType::End:
      return true;
    case SessionType::In:
    case SessionType::Out:
    case SessionType::Join:
    case SessionType::Fork:
      return seq_rec(a->cont, b->cont, assumed);
    case SessionType::ExtChoice:
    case SessionType::IntChoice:
      return seq_rec(a->left, b->left, assumed) &&
             seq_rec(a->right, b->right, assumed);
  }
  return false;
}

}  // namespace

bool session_equal(const SessPtr& a, const SessPtr& b) {
  PairSet assumed;
  return seq_rec(a, b, assumed);
}

SessPtr dual(const SessPtr& t) {
  std::map<const SessionType*, SessPtr> memo;
  std::function<SessPtr(const SessPtr&)> go =
      [&](const SessPtr& s) -> SessPtr {
    if (!s) return s;
    auto it = memo.find(s.get());
    if (it != memo.end()) return it->second;
    auto d = std::make_shared<SessionType>();
    memo.emplace(s.get(), d);
    d->payload = s->payload;
    d->items = s->items;
    switch (s->kind) {
      case SessionType::End:
        d->kind = SessionType::End;
        break;
      case SessionType::In:
        d->kind = SessionType::Out;
        d->cont = go(s->cont);
        break;
      case SessionType::Out:
        d->kind = SessionType::In;
        d->cont = go(s->cont);
        break;
      case SessionType::ExtChoice:
        d->kind = SessionType::IntChoice;
        d->left = go(s->left);
        d->right = go(s->right);
        break;
      case SessionType::IntChoice:
        d->kind = SessionType::ExtChoice;
        d->left = go(s->left);
        d->right = go(s->right);
        break;
      case SessionType::Join:
        d->kind = SessionType::Fork;
        d->cont = go(s->cont);
        break;
      case SessionType::Fork:
        d->kind = SessionType::Join;
        d->cont = go(s->cont);
        break;
    }
    return d;
  };
  return go(t);
}

SessionEncoder::SessionEncoder(TypeTable& table, std::string prefix)
    : tt_(table), prefix_(std::move(prefix)) {}

SessPtr SessionEncoder::canonical(const SessPtr& t) {
  for (const SessPtr& c : canon_)
    if (session_equal(c, t)) return c;
  canon_.push_back(t);
  return t;
}

TypeId SessionEncoder::out_type(const SessPtr& t0) {
  SessPtr t = canonical(t0);
  for (auto& [s, id] : types_)
    if (s.get() == t.get()) return id;
  TypeId id = tt_.declare_named(prefix_ + "_E" +
                                std::to_string(static_cast<int>(types_.size())));
  types_.push_back({t, id});
  tt_.define_named(id, Cap::Out, encode_pattern(t));
  return id;
}

PatId SessionEncoder::encode_pattern(const SessPtr& t0) {
  SessPtr t = canonical(t0);
  switch (t->kind) {
    case SessionType::End:
      return tt_.one();
    case SessionType::In: {
      TypeId inner = tt_.mailbox(
          Cap::Out, tt_.atom("reply", {t->payload, out_type(t->cont)}));
      return tt_.atom("receive", {inner});
    }
    case SessionType::Out: {
      TypeId inner =
          tt_.mailbox(Cap::Out, tt_.atom("reply", {out_type(t->cont)}));
      return tt_.atom("send", {t->payload, inner});
    }
    case SessionType::ExtChoice: {
      PatId sum = tt_.sum(tt_.atom("left", {out_type(t->left)}),
                          tt_.atom("right", {out_type(t->right)}));
      return tt_.atom("receive", {tt_.mailbox(Cap::Out, sum)});
    }
    case SessionType::IntChoice: {
      PatId l = tt_.atom(
          "left", {tt_.mailbox(Cap::Out,
                               tt_.atom("reply", {out_type(t->left)}))});
      PatId r = tt_.atom(
          "right", {tt_.mailbox(Cap::Out,
                                tt_.atom("reply", {out_type(t->right)}))});
      return tt_.sum(l, r);
    }
    case SessionType::Fork: {
      PatId acc =
          tt_.atom("send", {tt_.mailbox(
                       Cap::Out, tt_.atom("reply", {out_type(t->cont)}))});
      for (const auto& [tag, ty] : t->items) {
        std::vector<TypeId> args;
        if (ty != kNoType) args.push_back(ty);
        acc = tt_.prod(acc, tt_.atom(tag, args));
      }
      return acc;
    }
    case SessionType::Join: {
      PatId prod = kNoPat;
      for (const auto& [tag, ty] : t->items) {
        std::vector<TypeId> args;
        if (ty != kNoType) args.push_back(ty);
        PatId a = tt_.atom(tag, args);
        prod = prod == kNoPat ? a : tt_.prod(prod, a);
      }
      PatId reply = tt_.atom("reply", {out_type(t->cont)});
      PatId inner = prod == kNoPat ? reply : tt_.prod(prod, reply);
      return tt_.atom("receive", {tt_.mailbox(Cap::Out, inner)});
    }
  }
  return tt_.one();
}

Name SessionEncoder::def_name(const SessPtr& t0) {
  SessPtr t = canonical(t0);
  for (auto& [s, n] : names_)
    if (s.get() == t.get()) return n;
  Name n = prefix_ + "_S" + std::to_string(counter_++);
  names_.push_back({t, n});
  pending_.push_back(t);
  return n;
}

std::vector<Definition> SessionEncoder::generate_process(const SessPtr& t0) {
  std::vector<Definition> defs;
  def_name(t0);  // seed the worklist

  auto ref = [](const Name& n) { return IntExpr::ref(n); };

  while (!pending_.empty()) {
    SessPtr t = pending_.front();
    pending_.erase(pending_.begin());
    Name name = def_name(t);

    Definition d;
    d.name = name;
    d.declared_graph = DepGraph::empty();
    PatId both = tt_.prod(encode_pattern(t), encode_pattern(dual(t)));
    d.params.push_back({"self", tt_.mailbox(Cap::In, both), {}});

    switch (t->kind) {
      case SessionType::End: {
        GuardBranch fb;
        fb.kind = BranchKind::Free;
        fb.mailbox = "self";
        fb.cont = Process::done();
        d.body = Process::guard({std::move(fb)});
        break;
      }
      case SessionType::In:
      case SessionType::Out: {
        bool outn = t->kind == SessionType::Out;
        TypeId s_cont = outn ? out_type(t->cont) : out_type(dual(t->cont));
        TypeId r_cont = outn ? out_type(dual(t->cont)) : out_type(t->cont);
        TypeId s_ty = tt_.mailbox(Cap::Out, tt_.atom("reply", {s_cont}));
        TypeId r_ty =
            tt_.mailbox(Cap::Out, tt_.atom("reply", {t->payload, r_cont}));
        ProcPtr inner = Process::par(
            Process::send("s", "reply", {ref("self")}),
            Process::par(Process::send("r", "reply", {ref("x"), ref("self")}),
                         Process::invoke(def_name(t->cont), {ref("self")})));
        GuardBranch recv_r;
        recv_r.kind = BranchKind::Receive;
        recv_r.mailbox = "self";
        recv_r.tag = "receive";
        recv_r.binders.push_back({"r", r_ty, {}});
        recv_r.cont = inner;
        GuardBranch recv_s;
        recv_s.kind = BranchKind::Receive;
        recv_s.mailbox = "self";
        recv_s.tag = "send";
        recv_s.binders.push_back({"x", t->payload, {}});
        recv_s.binders.push_back({"s", s_ty, {}});
        recv_s.cont = Process::guard({std::move(recv_r)});
        d.body = Process::guard({std::move(recv_s)});
        break;
      }
      case SessionType::ExtChoice:
      case SessionType::IntChoice: {
        bool internal = t->kind == SessionType::IntChoice;
        auto branch = [&](const Tag& tag, const SessPtr& side) {
          TypeId s_cont =
              internal ? out_type(side) : out_type(dual(side));
          TypeId s_ty = tt_.mailbox(Cap::Out, tt_.atom("reply", {s_cont}));
          PatId rsum =
              internal
                  ? tt_.sum(tt_.atom("left", {out_type(dual(t->left))}),
                            tt_.atom("right", {out_type(dual(t->right))}))
                  : tt_.sum(tt_.atom("left", {out_type(t->left)}),
                            tt_.atom("right", {out_type(t->right)}));
          TypeId r_ty = tt_.mailbox(Cap::Out, rsum);
          ProcPtr inner = Process::par(
              Process::send("s", "reply", {ref("self")}),
              Process::par(Process::send("r", tag, {ref("self")}),
                           Process::invoke(def_name(side), {ref("self")})));
          GuardBranch recv_r;
          recv_r.kind = BranchKind::Receive;
          recv_r.mailbox = "self";
          recv_r.tag = "receive";
          recv_r.binders.push_back({"r", r_ty, {}});
          recv_r.cont = inner;
          GuardBranch sel;
          sel.kind = BranchKind::Receive;
          sel.mailbox = "self";
          sel.tag = tag;
          sel.binders.push_back({"s", s_ty, {}});
          sel.cont = Process::guard({std::move(recv_r)});
          return sel;
        };
        d.body = Process::guard(
            {branch("left", t->left), branch("right", t->right)});
        break;
      }
      case SessionType::Fork:
      case SessionType::Join: {
        bool forkn = t->kind == SessionType::Fork;
        TypeId s_cont = forkn ? out_type(t->cont) : out_type(dual(t->cont));
        TypeId r_cont = forkn ? out_type(dual(t->cont)) : out_type(t->cont);
        TypeId s_ty = tt_.mailbox(Cap::Out, tt_.atom("reply", {s_cont}));

        // r expects every forwarded item plus the final notification
        auto r_pattern_from = [&](std::size_t i) {
          PatId reply = tt_.atom("reply", {r_cont});
          PatId acc = kNoPat;
          for (std::size_t j = i; j < t->items.size(); ++j) {
            std::vector<TypeId> args;
            if (t->items[j].second != kNoType)
              args.push_back(t->items[j].second);
            PatId a = tt_.atom(t->items[j].first, args);
            acc = acc == kNoPat ? a : tt_.prod(acc, a);
          }
          return acc == kNoPat ? reply : tt_.prod(acc, reply);
        };

        // collector chain, one definition per remaining suffix
        std::vector<Name> join_names;
        for (std::size_t i = 0; i <= t->items.size(); ++i)
          join_names.push_back(name + "_join" +
                               std::to_string(static_cast<int>(i)));
        for (std::size_t i = 0; i <= t->items.size(); ++i) {
          Definition jd;
          jd.name = join_names[i];
          PatId self_pat = kNoPat;
          for (std::size_t j = i; j < t->items.size(); ++j) {
            std::vector<TypeId> args;
            if (t->items[j].second != kNoType)
              args.push_back(t->items[j].second);
            PatId a = tt_.atom(t->items[j].first, args);
            self_pat = self_pat == kNoPat ? a : tt_.prod(self_pat, a);
          }
          if (self_pat == kNoPat) self_pat = tt_.one();
          jd.params.push_back({"self", tt_.mailbox(Cap::In, self_pat), {}});
          jd.params.push_back({"s", s_ty, {}});
          jd.params.push_back(
              {"r", tt_.mailbox(Cap::Out, r_pattern_from(i)), {}});
          jd.declared_graph = DepGraph::unite(DepGraph::edge("self", "s"),
                                              DepGraph::edge("self", "r"));
          if (i == t->items.size()) {
            jd.body = Process::par(
                Process::send("s", "reply", {ref("self")}),
                Process::par(Process::send("r", "reply", {ref("self")}),
                             Process::invoke(def_name(t->cont),
                                             {ref("self")})));
          } else {
            const auto& [tag, ty] = t->items[i];
            GuardBranch rb;
            rb.kind = BranchKind::Receive;
            rb.mailbox = "self";
            rb.tag = tag;
            std::vector<IntExprPtr> fwd;
            if (ty != kNoType) {
              rb.binders.push_back({"x", ty, {}});
              fwd.push_back(ref("x"));
            }
            rb.cont = Process::par(
                Process::send("r", tag, std::move(fwd)),
                Process::invoke(join_names[i + 1],
                                {ref("self"), ref("s"), ref("r")}));
            jd.body = Process::guard({std::move(rb)});
          }
          defs.push_back(std::move(jd));
        }

        GuardBranch recv_r;
        recv_r.kind = BranchKind::Receive;
        recv_r.mailbox = "self";
        recv_r.tag = "receive";
        recv_r.binders.push_back(
            {"r", tt_.mailbox(Cap::Out, r_pattern_from(0)), {}});
        recv_r.cont = Process::invoke(
            join_names[0], {ref("self"), ref("s"), ref("r")});
        GuardBranch recv_s;
        recv_s.kind = BranchKind::Receive;
        recv_s.mailbox = "self";
        recv_s.tag = "send";
        recv_s.binders.push_back({"s", s_ty, {}});
        recv_s.cont = Process::guard({std::move(recv_r)});
        d.body = Process::guard({std::move(recv_s)});
        break;
      }
    }
    defs.push_back(std::move(d));
  }

  // entry definition first
  for (std::size_t i = 0; i < defs.size(); ++i)
    if (defs[i].name == names_.front().second) {
      std::rotate(defs.begin(), defs.begin() + i, defs.begin() + i + 1);
      break;
    }
  return defs;
}

Program encode_session_program(const SessionFile& file) {
  Program prog;
  prog.table = file.table;
  for (const auto& [name, sess] : file.sessions) {
    SessionEncoder enc(*prog.table, name);
    std::vector<Definition> defs = enc.generate_process(sess);
    for (auto& d : defs) prog.defs.push_back(std::move(d));
  }
  return prog;
}

}  // namespace mbx
