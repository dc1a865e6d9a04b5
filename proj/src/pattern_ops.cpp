#include "mbx/pattern_ops.hpp"

#include <algorithm>
#include <cassert>

namespace mbx {

namespace {

bool args_rel(const TypeRel& rel, const std::vector<TypeId>& a,
              const std::vector<TypeId>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!rel(a[i], b[i])) return false;
  return true;
}

bool atom_compat(const TypeTable& tt, const TypeRel& rel, AtomId a, AtomId b) {
  const AtomInfo& ia = atom_info(tt, a);
  const AtomInfo& ib = atom_info(tt, b);
  return ia.tag == ib.tag && args_rel(rel, ia.args, ib.args);
}

std::set<AtomId> atoms_of(const SemilinearForm& f) {
  std::set<AtomId> out;
  for (const LinearTerm& t : f) {
    for (const auto& [a, k] : t.base) out.insert(a);
    for (const Config& q : t.periods)
      for (const auto& [a, k] : q) out.insert(a);
  }
  return out;
}

Config map_config(const Config& c, const std::map<AtomId, AtomId>& m) {
  Config out;
  for (const auto& [a, k] : c) out[m.at(a)] += k;
  return out;
}

SemilinearForm map_slf(const SemilinearForm& f,
                       const std::map<AtomId, AtomId>& m) {
  SemilinearForm out;
  for (const LinearTerm& t : f) {
    LinearTerm r;
    r.base = map_config(t.base, m);
    for (const Config& q : t.periods) r.periods.insert(map_config(q, m));
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// All substituted variants of a configuration where each occurrence of each
// atom picks one of its allowed replacements. Empty result when some atom in
// the configuration has no replacement.
void substitute_config(const TypeTable& tt, const Config& c,
                       const std::map<AtomId, std::vector<AtomId>>& choices,
                       std::vector<Config>& out) {
  std::vector<std::pair<AtomId, int>> items(c.begin(), c.end());
  Config acc;
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (i == items.size()) {
      out.push_back(acc);
      return;
    }
    auto [atom, count] = items[i];
    const std::vector<AtomId>& ch = choices.at(atom);
    if (ch.empty()) return;
    // multiset choices: distribute `count` occurrences over `ch`
    std::function<void(std::size_t, int)> pick = [&](std::size_t j, int left) {
      tt.meter().tick();
      if (j + 1 == ch.size()) {
        if (left) acc[ch[j]] += left;
        go(i + 1);
        if (left) {
          auto it = acc.find(ch[j]);
          it->second -= left;
          if (it->second == 0) acc.erase(it);
        }
        return;
      }
      for (int take = 0; take <= left; ++take) {
        if (take) acc[ch[j]] += take;
        pick(j + 1, left - take);
        if (take) {
          auto it = acc.find(ch[j]);
          it->second -= take;
          if (it->second == 0) acc.erase(it);
        }
      }
    };
    pick(0, count);
  };
  go(0);
}

SemilinearForm substitute_slf(const TypeTable& tt, const SemilinearForm& f,
                              const std::map<AtomId, std::vector<AtomId>>& ch) {
  SemilinearForm out;
  for (const LinearTerm& t : f) {
    std::vector<Config> bases;
    substitute_config(tt, t.base, ch, bases);
    if (bases.empty()) continue;  // base contains an unmatchable atom
    std::set<Config> periods;
    for (const Config& q : t.periods) {
      std::vector<Config> qs;
      substitute_config(tt, q, ch, qs);
      // an unmatchable period is simply never used
      for (auto& v : qs) periods.insert(std::move(v));
    }
    for (auto& b : bases) {
      LinearTerm r;
      r.base = std::move(b);
      r.periods = periods;
      out.push_back(std::move(r));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Exact membership of a fixed configuration in one linear term: the residue
// after removing the base must decompose into period monomials.
bool member_term(const TypeTable& tt, const Config& x, const LinearTerm& m,
                 std::map<Config, bool>& memo) {
  Config rem;
  for (const auto& [a, k] : x) rem[a] = k;
  for (const auto& [a, k] : m.base) {
    auto it = rem.find(a);
    if (it == rem.end() || it->second < k) return false;
    it->second -= k;
    if (it->second == 0) rem.erase(it);
  }
  std::vector<Config> qs(m.periods.begin(), m.periods.end());
  std::function<bool(const Config&)> decompose = [&](const Config& v) -> bool {
    if (v.empty()) return true;
    auto it = memo.find(v);
    if (it != memo.end()) return it->second;
    bool ok = false;
    for (const Config& q : qs) {
      tt.meter().tick();
      Config nv = v;
      bool fits = true;
      for (const auto& [a, k] : q) {
        auto f = nv.find(a);
        if (f == nv.end() || f->second < k) {
          fits = false;
          break;
        }
        f->second -= k;
        if (f->second == 0) nv.erase(f);
      }
      if (fits && decompose(nv)) {
        ok = true;
        break;
      }
    }
    memo.emplace(v, ok);
    return ok;
  };
  return decompose(rem);
}

bool covered(const TypeTable& tt, const Config& x, const SemilinearForm& target,
             std::vector<std::map<Config, bool>>& memos) {
  for (std::size_t i = 0; i < target.size(); ++i)
    if (member_term(tt, x, target[i], memos[i])) return true;
  return false;
}

}  // namespace

InclusionResult subpattern(const TypeTable& tt, PatId e, PatId f,
                           const TypeRel& rel) {
  InclusionResult res;
  std::uint64_t work0 = tt.meter().used();

  const SemilinearForm& se_raw = normalize(tt, e);
  const SemilinearForm& sf_raw = normalize(tt, f);

  // Quotient the left alphabet by mutual relatedness so matching becomes
  // equality over class representatives.
  std::set<AtomId> ea = atoms_of(se_raw);
  std::map<AtomId, AtomId> rep;
  std::vector<AtomId> reps;
  for (AtomId a : ea) {
    AtomId r = a;
    for (AtomId c : reps)
      if (atom_compat(tt, rel, a, c) && atom_compat(tt, rel, c, a)) {
        r = c;
        break;
      }
    if (r == a) reps.push_back(a);
    rep[a] = r;
  }
  SemilinearForm se = map_slf(se_raw, rep);

  // Replace every right-hand atom by the set of left classes it can absorb;
  // the relational matching question becomes plain semilinear inclusion.
  std::map<AtomId, std::vector<AtomId>> choices;
  for (AtomId b : atoms_of(sf_raw)) {
    std::vector<AtomId> ch;
    for (AtomId r : reps)
      if (atom_compat(tt, rel, r, b)) ch.push_back(r);
    choices[b] = std::move(ch);
  }
  SemilinearForm sf = substitute_slf(tt, sf_raw, choices);

  // Instance-derived witness-search bound, recorded for audit.
  int bound = 2;
  for (const LinearTerm& t : se) {
    int a = config_size(t.base);
    for (const Config& q : t.periods) a += config_size(q);
    bound = std::max(bound, a);
  }
  int btotal = 0;
  for (const LinearTerm& t : sf) {
    btotal += config_size(t.base);
    for (const Config& q : t.periods) btotal += config_size(q);
  }
  bound = 2 * (bound + btotal) + 2;
  res.size_bound = bound;

  std::vector<std::map<Config, bool>> memos(sf.size());
  for (const LinearTerm& L : se) {
    std::vector<Config> periods(L.periods.begin(), L.periods.end());
    int base_size = config_size(L.base);
    int extra = std::max(0, bound - base_size);

    // enumerate period multiples by increasing added size: minimal witnesses
    std::vector<int> psize;
    for (const Config& p : periods) psize.push_back(config_size(p));
    Config x = L.base;
    std::function<bool(std::size_t, int)> search = [&](std::size_t i,
                                                       int left) -> bool {
      tt.meter().tick();
      if (i == periods.size()) {
        if (!covered(tt, x, sf, memos)) {
          res.witness = x;
          return true;
        }
        return false;
      }
      int maxk = psize[i] > 0 ? left / psize[i] : 0;
      for (int k = 0; k <= maxk; ++k) {
        if (k) {
          for (const auto& [a, c] : periods[i]) x[a] += c;
        }
        if (search(i + 1, left - k * psize[i])) return true;
      }
      for (int k = maxk; k >= 1; --k)
        for (const auto& [a, c] : periods[i]) {
          auto it = x.find(a);
          it->second -= c;
          if (it->second == 0) x.erase(it);
        }
      return false;
    };
    if (search(0, extra)) {
      res.holds = false;
      res.work = tt.meter().used() - work0;
      return res;
    }
  }
  res.holds = true;
  res.work = tt.meter().used() - work0;
  return res;
}

bool pattern_equiv(const TypeTable& tt, PatId e, PatId f, const TypeRel& rel) {
  return subpattern(tt, e, f, rel).holds && subpattern(tt, f, e, rel).holds;
}

namespace {

std::optional<PatId> residual_rec(TypeTable& tt, PatId e, const Tag& tag,
                                  const std::vector<TypeId>& args,
                                  const TypeRel& rel,
                                  std::map<PatId, std::optional<PatId>>& memo) {
  auto it = memo.find(e);
  if (it != memo.end()) return it->second;
  const PatNode n = tt.pat(e);
  std::optional<PatId> out;
  switch (n.kind) {
    case PatKind::Zero:
    case PatKind::One:
      out = tt.zero();
      break;
    case PatKind::Atom: {
      if (n.tag != tag) {
        out = tt.zero();
      } else if (args_rel(rel, n.args, args)) {
        out = tt.one();
      } else {
        out = std::nullopt;  // removed arguments must bound all atom arguments
      }
      break;
    }
    case PatKind::Sum: {
      auto l = residual_rec(tt, n.lhs, tag, args, rel, memo);
      auto r = residual_rec(tt, n.rhs, tag, args, rel, memo);
      if (l && r)
        out = tt.sum(*l, *r);
      else
        out = std::nullopt;
      break;
    }
    case PatKind::Prod: {
      auto l = residual_rec(tt, n.lhs, tag, args, rel, memo);
      auto r = residual_rec(tt, n.rhs, tag, args, rel, memo);
      if (l && r)
        out = tt.sum(tt.prod(*l, n.rhs), tt.prod(n.lhs, *r));
      else
        out = std::nullopt;
      break;
    }
    case PatKind::Star: {
      auto l = residual_rec(tt, n.lhs, tag, args, rel, memo);
      if (l)
        out = tt.prod(*l, e);
      else
        out = std::nullopt;
      break;
    }
  }
  memo.emplace(e, out);
  return out;
}

void flatten_sum(const TypeTable& tt, PatId e, std::vector<PatId>& out) {
  const PatNode& n = tt.pat(e);
  if (n.kind == PatKind::Sum) {
    flatten_sum(tt, n.lhs, out);
    flatten_sum(tt, n.rhs, out);
  } else {
    out.push_back(e);
  }
}

void flatten_prod(const TypeTable& tt, PatId e, std::vector<PatId>& out) {
  const PatNode& n = tt.pat(e);
  if (n.kind == PatKind::Prod) {
    flatten_prod(tt, n.lhs, out);
    flatten_prod(tt, n.rhs, out);
  } else {
    out.push_back(e);
  }
}

}  // namespace

std::optional<PatId> residual(TypeTable& tt, PatId e, const Tag& tag,
                              const std::vector<TypeId>& args,
                              const TypeRel& rel) {
  std::map<PatId, std::optional<PatId>> memo;
  return residual_rec(tt, e, tag, args, rel, memo);
}

bool is_normal_form(TypeTable& tt, PatId e, const TypeRel& rel) {
  std::vector<PatId> summands;
  flatten_sum(tt, e, summands);
  for (PatId s : summands) {
    const PatNode& n = tt.pat(s);
    if (n.kind == PatKind::Zero || n.kind == PatKind::One) continue;
    // the alternative must read as atom-times-tail, atom leftmost
    std::vector<PatId> factors;
    flatten_prod(tt, s, factors);
    const PatNode& head = tt.pat(factors.front());
    if (head.kind != PatKind::Atom) return false;
    PatId tail = kNoPat;
    for (std::size_t j = 1; j < factors.size(); ++j)
      tail = tail == kNoPat ? factors[j] : tt.prod(tail, factors[j]);
    if (tail == kNoPat) tail = tt.one();
    auto r = residual(tt, e, head.tag, head.args, rel);
    if (!r || !pattern_equiv(tt, tail, *r, rel)) return false;
  }
  return true;
}

namespace {

// Candidate quotients by semilinear subtraction: for every term of g and
// every term of e, remove e's base (after injecting a few period copies of g
// into the base to make removal possible).
std::vector<SemilinearForm> subtraction_candidates(TypeTable& tt, PatId g,
                                                   PatId e,
                                                   const TypeRel& rel) {
  const SemilinearForm sg = normalize(tt, g);
  const SemilinearForm se = normalize(tt, e);
  if (se.empty()) return {};

  // Unify atoms of e with atoms of g when mutually related.
  std::set<AtomId> ga = atoms_of(sg);
  auto unify = [&](AtomId a) -> AtomId {
    for (AtomId b : ga)
      if (atom_compat(tt, rel, a, b) && atom_compat(tt, rel, b, a)) return b;
    return a;
  };

  SemilinearForm minimal, maximal;
  for (const LinearTerm& tg : sg) {
    std::vector<LinearTerm> pieces;
    for (const LinearTerm& te : se) {
      Config need;
      for (const auto& [a, k] : te.base) need[unify(a)] += k;
      // inject period copies of tg.base until need is removable
      std::vector<Config> qs(tg.periods.begin(), tg.periods.end());
      std::function<void(Config, Config, int)> go = [&](Config base,
                                                        Config rem, int depth) {
        tt.meter().tick();
        if (rem.empty()) {
          LinearTerm cand;
          cand.base = std::move(base);
          cand.periods = tg.periods;
          pieces.push_back(std::move(cand));
          return;
        }
        if (depth > config_size(need) + 2) return;
        // try satisfying the first remaining unit from base or a period
        auto [atom, cnt] = *rem.begin();
        auto bit = base.find(atom);
        if (bit != base.end() && bit->second > 0) {
          Config b2 = base, r2 = rem;
          if (--b2[atom] == 0) b2.erase(atom);
          if (--r2[atom] == 0) r2.erase(atom);
          go(std::move(b2), std::move(r2), depth);
          return;  // consuming from the base is canonical; no need to branch
        }
        for (const Config& q : qs) {
          if (!q.count(atom)) continue;
          go(config_union(base, q), rem, depth + 1);
        }
      };
      go(tg.base, need, 0);
    }
    if (pieces.empty()) return {};  // this g-term has no factorization piece
    std::sort(pieces.begin(), pieces.end(),
              [](const LinearTerm& a, const LinearTerm& b) {
                return config_size(a.base) < config_size(b.base);
              });
    minimal.push_back(pieces.front());
    maximal.push_back(pieces.back());
  }
  std::vector<SemilinearForm> out;
  out.push_back(std::move(minimal));
  if (maximal != out.front()) out.push_back(std::move(maximal));
  return out;
}

std::vector<PatId> quotient_candidates(TypeTable& tt, PatId g, PatId e,
                                       const TypeRel& rel) {
  std::vector<PatId> cands;
  // residual chain when e is a product of atoms
  std::vector<PatId> factors;
  flatten_prod(tt, e, factors);
  bool all_atoms = true;
  for (PatId f : factors)
    if (tt.pat(f).kind != PatKind::Atom) all_atoms = false;
  if (all_atoms && tt.pat(e).kind != PatKind::One) {
    std::optional<PatId> acc = g;
    for (PatId f : factors) {
      const PatNode& n = tt.pat(f);
      acc = residual(tt, *acc, n.tag, n.args, rel);
      if (!acc) break;
    }
    if (acc) cands.push_back(*acc);
  }
  for (const SemilinearForm& slf : subtraction_candidates(tt, g, e, rel))
    cands.push_back(pattern_of_semilinear(tt, slf));
  cands.push_back(g);
  cands.push_back(tt.one());
  return cands;
}

}  // namespace

std::optional<PatId> pattern_quotient(TypeTable& tt, PatId g, PatId e,
                                      const TypeRel& rel) {
  if (tt.pat(e).kind == PatKind::One) return g;
  for (PatId f : quotient_candidates(tt, g, e, rel)) {
    if (pattern_equiv(tt, tt.prod(e, f), g, rel)) return f;
  }
  return std::nullopt;
}

std::optional<PatId> resolve_remainder(TypeTable& tt, PatId g, PatId e,
                                       const TypeRel& rel) {
  if (tt.pat(e).kind == PatKind::One) return g;
  // largest admissible remainder first: g itself, then the residual chain,
  // then subtraction candidates, then the unit
  std::vector<PatId> cands;
  cands.push_back(g);
  for (PatId c : quotient_candidates(tt, g, e, rel)) cands.push_back(c);
  for (PatId f : cands) {
    if (subpattern(tt, tt.prod(e, f), g, rel).holds) return f;
  }
  return std::nullopt;
}

}  // namespace mbx
