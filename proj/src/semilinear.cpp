#include "mbx/semilinear.hpp"

#include <algorithm>

namespace mbx {

int config_size(const Config& c) {
  int n = 0;
  for (const auto& [a, k] : c) n += k;
  return n;
}

Config config_union(const Config& a, const Config& b) {
  Config r = a;
  for (const auto& [atom, k] : b) r[atom] += k;
  return r;
}

std::string config_str(const TypeTable& tt, const Config& c) {
  std::string out = "[";
  bool first = true;
  for (const auto& [a, k] : c) {
    const AtomInfo& info = atom_info(tt, a);
    for (int i = 0; i < k; ++i) {
      if (!first) out += ", ";
      first = false;
      out += info.tag;
      if (!info.args.empty()) {
        out += "(";
        for (std::size_t j = 0; j < info.args.size(); ++j) {
          if (j) out += ", ";
          out += tt.type_str(info.args[j]);
        }
        out += ")";
      }
    }
  }
  out += "]";
  return out;
}

AtomId intern_atom(const TypeTable& tt, const Tag& tag,
                   const std::vector<TypeId>& args) {
  auto& c = tt.caches();
  std::string key = tag;
  for (TypeId t : args) key += "," + std::to_string(t);
  auto it = c.atom_intern.find(key);
  if (it != c.atom_intern.end()) return it->second;
  AtomId id = static_cast<AtomId>(c.atoms.size());
  c.atoms.push_back({tag, args});
  c.atom_intern.emplace(std::move(key), id);
  return id;
}

const AtomInfo& atom_info(const TypeTable& tt, AtomId id) {
  return tt.caches().atoms[id];
}

namespace {

void dedupe(SemilinearForm& f) {
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
}

SemilinearForm slf_union(SemilinearForm a, const SemilinearForm& b) {
  a.insert(a.end(), b.begin(), b.end());
  dedupe(a);
  return a;
}

SemilinearForm slf_product(const TypeTable& tt, const SemilinearForm& a,
                           const SemilinearForm& b) {
  SemilinearForm out;
  for (const LinearTerm& x : a)
    for (const LinearTerm& y : b) {
      tt.meter().tick();
      LinearTerm t;
      t.base = config_union(x.base, y.base);
      t.periods = x.periods;
      t.periods.insert(y.periods.begin(), y.periods.end());
      out.push_back(std::move(t));
    }
  dedupe(out);
  return out;
}

// star of one linear term: (b, P)* = (0, P) when b is empty, otherwise
// {(0, {})} u {(b, P u {b})}.
SemilinearForm star_term(const LinearTerm& t) {
  SemilinearForm out;
  if (t.base.empty()) {
    out.push_back({Config{}, t.periods});
    return out;
  }
  out.push_back({Config{}, {}});
  LinearTerm rep;
  rep.base = t.base;
  rep.periods = t.periods;
  rep.periods.insert(t.base);
  out.push_back(std::move(rep));
  return out;
}

SemilinearForm compute_slf(const TypeTable& tt, PatId p) {
  const PatNode& n = tt.pat(p);
  switch (n.kind) {
    case PatKind::Zero:
      return {};
    case PatKind::One:
      return {LinearTerm{}};
    case PatKind::Atom: {
      AtomId a = intern_atom(tt, n.tag, n.args);
      LinearTerm t;
      t.base[a] = 1;
      return {t};
    }
    case PatKind::Sum:
      return slf_union(normalize(tt, n.lhs), normalize(tt, n.rhs));
    case PatKind::Prod:
      return slf_product(tt, normalize(tt, n.lhs), normalize(tt, n.rhs));
    case PatKind::Star: {
      // (L1 + ... + Lk)* = L1* . ... . Lk* for commutative semantics.
      SemilinearForm inner = normalize(tt, n.lhs);
      SemilinearForm acc = {LinearTerm{}};
      for (const LinearTerm& t : inner)
        acc = slf_product(tt, acc, star_term(t));
      return acc;
    }
  }
  return {};
}

}  // namespace

const SemilinearForm& normalize(const TypeTable& tt, PatId p) {
  auto& cache = tt.caches().slf;
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;
  SemilinearForm f = compute_slf(tt, p);
  return cache.emplace(p, std::move(f)).first->second;
}

bool nullable(const TypeTable& tt, PatId p) {
  for (const LinearTerm& t : normalize(tt, p))
    if (t.base.empty()) return true;
  return false;
}

std::set<Config> configurations_up_to(const TypeTable& tt, PatId p, int n) {
  const PatNode& node = tt.pat(p);
  std::set<Config> out;
  switch (node.kind) {
    case PatKind::Zero:
      return out;
    case PatKind::One:
      out.insert(Config{});
      return out;
    case PatKind::Atom: {
      if (n >= 1) {
        Config c;
        c[intern_atom(tt, node.tag, node.args)] = 1;
        out.insert(std::move(c));
      }
      return out;
    }
    case PatKind::Sum: {
      out = configurations_up_to(tt, node.lhs, n);
      for (auto& c : configurations_up_to(tt, node.rhs, n)) out.insert(c);
      return out;
    }
    case PatKind::Prod: {
      auto l = configurations_up_to(tt, node.lhs, n);
      auto r = configurations_up_to(tt, node.rhs, n);
      for (const Config& a : l)
        for (const Config& b : r) {
          tt.meter().tick();
          if (config_size(a) + config_size(b) <= n)
            out.insert(config_union(a, b));
        }
      return out;
    }
    case PatKind::Star: {
      auto base = configurations_up_to(tt, node.lhs, n);
      out.insert(Config{});
      bool grew = true;
      while (grew) {
        grew = false;
        std::vector<Config> add;
        for (const Config& a : base) {
          if (config_size(a) == 0) continue;  // empty unrollings do not grow
          for (const Config& acc : out) {
            tt.meter().tick();
            if (config_size(a) + config_size(acc) > n) continue;
            Config u = config_union(a, acc);
            if (!out.count(u)) add.push_back(std::move(u));
          }
        }
        for (auto& c : add) {
          out.insert(std::move(c));
          grew = true;
        }
      }
      return out;
    }
  }
  return out;
}

PatId pattern_of_semilinear(TypeTable& tt, const SemilinearForm& slf) {
  auto config_pattern = [&tt](const Config& c) -> PatId {
    PatId acc = kNoPat;
    for (const auto& [a, k] : c) {
      const AtomInfo& info = atom_info(tt, a);
      PatId at = tt.atom(info.tag, info.args);
      for (int i = 0; i < k; ++i)
        acc = acc == kNoPat ? at : tt.prod(acc, at);
    }
    return acc == kNoPat ? tt.one() : acc;
  };
  PatId total = kNoPat;
  for (const LinearTerm& t : slf) {
    PatId term = config_pattern(t.base);
    for (const Config& q : t.periods)
      term = tt.prod(term, tt.star(config_pattern(q)));
    total = total == kNoPat ? term : tt.sum(total, term);
  }
  return total == kNoPat ? tt.zero() : total;
}

}  // namespace mbx
