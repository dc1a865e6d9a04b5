#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mbx/diag.hpp"

namespace mbx {

using Name = std::string;
using Tag = std::string;

using PatId = std::int32_t;
using TypeId = std::int32_t;
constexpr PatId kNoPat = -1;
constexpr TypeId kNoType = -1;

enum class PatKind : std::uint8_t { Zero, One, Atom, Sum, Prod, Star };
enum class Cap : std::uint8_t { In, Out };
enum class TypeKind : std::uint8_t { IntBase, Mailbox };

/// One node of a pattern tree. Patterns are finite trees; regularity comes
/// from named mailbox types appearing in atom argument positions, so every
/// cycle through the table passes through an atom argument.
struct PatNode {
  PatKind kind;
  Tag tag;                    // Atom
  std::vector<TypeId> args;   // Atom
  PatId lhs = kNoPat;         // Sum/Prod: left, Star: child
  PatId rhs = kNoPat;         // Sum/Prod: right
};

struct TypeNode {
  TypeKind kind = TypeKind::Mailbox;
  Cap cap = Cap::Out;
  PatId pattern = kNoPat;   // kNoPat while a named type is still a forward ref
  std::string name;         // nonempty for table-declared types
};

/// Arena for patterns and mailbox types plus the named-type table and the
/// session-scoped memo caches used by the decision procedures. Not shared
/// between threads; create one table per concurrent analysis session.
class TypeTable {
 public:
  TypeTable();
  ~TypeTable();
  TypeTable(const TypeTable&) = delete;
  TypeTable& operator=(const TypeTable&) = delete;

  // -- pattern constructors (interned) --
  PatId zero() const { return zero_; }
  PatId one() const { return one_; }
  PatId atom(const Tag& tag, std::vector<TypeId> args = {});
  PatId sum(PatId a, PatId b);
  PatId prod(PatId a, PatId b);
  PatId star(PatId a);

  const PatNode& pat(PatId id) const { return pats_[id]; }
  std::size_t pat_count() const { return pats_.size(); }

  // -- types --
  TypeId int_type() const { return int_; }
  TypeId mailbox(Cap cap, PatId pattern);
  const TypeNode& type(TypeId id) const { return types_[id]; }
  std::size_t type_count() const { return types_.size(); }

  /// Forward-declares a named mailbox type and returns its id; the node is
  /// completed later with `define_named`.
  TypeId declare_named(const std::string& name);
  void define_named(TypeId id, Cap cap, PatId pattern);
  std::optional<TypeId> lookup_named(const std::string& name) const;
  const std::map<std::string, TypeId>& named() const { return named_; }
  bool fully_defined(std::string* missing = nullptr) const;

  // -- printing --
  std::string pattern_str(PatId id) const;
  std::string type_str(TypeId id) const;

  // -- shared analysis state --
  WorkMeter& meter() const { return meter_; }

  struct Caches;
  Caches& caches() const { return *caches_; }

 private:
  PatId intern_pat(PatNode n);

  std::vector<PatNode> pats_;
  std::vector<TypeNode> types_;
  std::map<std::string, TypeId> named_;
  std::map<std::string, PatId> pat_intern_;
  PatId zero_, one_;
  TypeId int_;
  mutable WorkMeter meter_;
  std::unique_ptr<Caches> caches_;

  void print_pattern(PatId id, int prec, std::string& out) const;
};

}  // namespace mbx
