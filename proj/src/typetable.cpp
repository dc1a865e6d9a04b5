#include "mbx/typetable.hpp"

#include <algorithm>

#include "mbx/semilinear.hpp"

namespace mbx {

TypeTable::~TypeTable() = default;

TypeTable::TypeTable() : caches_(new Caches) {
  pats_.push_back({PatKind::Zero, "", {}, kNoPat, kNoPat});
  zero_ = 0;
  pats_.push_back({PatKind::One, "", {}, kNoPat, kNoPat});
  one_ = 1;
  TypeNode intn;
  intn.kind = TypeKind::IntBase;
  intn.name = "int";
  types_.push_back(intn);
  int_ = 0;
}

PatId TypeTable::intern_pat(PatNode n) {
  std::string key;
  key += static_cast<char>('0' + static_cast<int>(n.kind));
  key += n.tag;
  for (TypeId t : n.args) key += "," + std::to_string(t);
  key += ";" + std::to_string(n.lhs) + ";" + std::to_string(n.rhs);
  auto it = pat_intern_.find(key);
  if (it != pat_intern_.end()) return it->second;
  PatId id = static_cast<PatId>(pats_.size());
  pats_.push_back(std::move(n));
  pat_intern_.emplace(std::move(key), id);
  return id;
}

PatId TypeTable::atom(const Tag& tag, std::vector<TypeId> args) {
  return intern_pat({PatKind::Atom, tag, std::move(args), kNoPat, kNoPat});
}
PatId TypeTable::sum(PatId a, PatId b) {
  return intern_pat({PatKind::Sum, "", {}, a, b});
}
PatId TypeTable::prod(PatId a, PatId b) {
  return intern_pat({PatKind::Prod, "", {}, a, b});
}
PatId TypeTable::star(PatId a) {
  return intern_pat({PatKind::Star, "", {}, a, kNoPat});
}

TypeId TypeTable::mailbox(Cap cap, PatId pattern) {
  // Anonymous mailbox types are interned structurally; named ones are unique.
  for (TypeId i = 0; i < static_cast<TypeId>(types_.size()); ++i) {
    const TypeNode& t = types_[i];
    if (t.kind == TypeKind::Mailbox && t.name.empty() && t.cap == cap &&
        t.pattern == pattern)
      return i;
  }
  TypeNode n;
  n.kind = TypeKind::Mailbox;
  n.cap = cap;
  n.pattern = pattern;
  types_.push_back(n);
  return static_cast<TypeId>(types_.size() - 1);
}

TypeId TypeTable::declare_named(const std::string& name) {
  auto it = named_.find(name);
  if (it != named_.end()) return it->second;
  TypeNode n;
  n.kind = TypeKind::Mailbox;
  n.pattern = kNoPat;
  n.name = name;
  types_.push_back(n);
  TypeId id = static_cast<TypeId>(types_.size() - 1);
  named_.emplace(name, id);
  return id;
}

void TypeTable::define_named(TypeId id, Cap cap, PatId pattern) {
  types_[id].cap = cap;
  types_[id].pattern = pattern;
}

std::optional<TypeId> TypeTable::lookup_named(const std::string& name) const {
  auto it = named_.find(name);
  if (it == named_.end()) return std::nullopt;
  return it->second;
}

bool TypeTable::fully_defined(std::string* missing) const {
  for (const auto& [name, id] : named_) {
    if (types_[id].pattern == kNoPat) {
      if (missing) *missing = name;
      return false;
    }
  }
  return true;
}


void TypeTable::print_pattern(PatId id, int prec, std::string& out) const {
  // precedence: sum=0, prod=1, star=2
  const PatNode& n = pats_[id];
  switch (n.kind) {
    case PatKind::Zero:
      out += "0";
      return;
    case PatKind::One:
      out += "1";
      return;
    case PatKind::Atom: {
      out += n.tag;
      if (!n.args.empty()) {
        out += "(";
        for (std::size_t i = 0; i < n.args.size(); ++i) {
          if (i) out += ", ";
          out += type_str(n.args[i]);
        }
        out += ")";
      }
      return;
    }
    case PatKind::Sum: {
      if (prec > 0) out += "(";
      print_pattern(n.lhs, 0, out);
      out += " + ";
      print_pattern(n.rhs, 0, out);
      if (prec > 0) out += ")";
      return;
    }
    case PatKind::Prod: {
      if (prec > 1) out += "(";
      print_pattern(n.lhs, 1, out);
      out += ".";
      print_pattern(n.rhs, 1, out);
      if (prec > 1) out += ")";
      return;
    }
    case PatKind::Star: {
      print_pattern(n.lhs, 2, out);
      out += "*";
      return;
    }
  }
}

std::string TypeTable::pattern_str(PatId id) const {
  std::string out;
  print_pattern(id, 0, out);
  return out;
}

std::string TypeTable::type_str(TypeId id) const {
  const TypeNode& t = types_[id];
  if (t.kind == TypeKind::IntBase) return "int";
  if (!t.name.empty()) return t.name;
  std::string out = t.cap == Cap::In ? "?" : "!";
  print_pattern(t.pattern, 2, out);
  return out;
}

}  // namespace mbx
