#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mbx/ast.hpp"

namespace mbx {

struct SessionType;
using SessPtr = std::shared_ptr<SessionType>;

/// Binary session types extended with joins and forks. Recursion goes
/// through named definitions; after parsing, references are resolved into a
/// regular graph of nodes.
struct SessionType {
  enum Kind { End, In, Out, ExtChoice, IntChoice, Join, Fork } kind = End;
  TypeId payload = kNoType;                  // In/Out
  SessPtr cont;                              // In/Out/Join/Fork
  SessPtr left, right;                       // choices
  std::vector<std::pair<Tag, TypeId>> items; // Join/Fork
};

struct SessionFile {
  std::shared_ptr<TypeTable> table;
  std::vector<std::pair<Name, SessPtr>> sessions;  // in source order
};

/// Parses `session NAME = ...` declarations; the grammar is
/// end, ?T.S, !T.S, S & S, S (+) S, join{tag(T), ...};S, fork{...};S.
SessionFile parse_session_file(const std::string& text);

/// Involutive dual: inputs with outputs, internal with external choices,
/// joins with forks.
SessPtr dual(const SessPtr& t);

bool session_equal(const SessPtr& a, const SessPtr& b);

/// The encoder: one named output type per distinct sub-session, holding the
/// pattern of the messages a session mailbox carries for that stage.
class SessionEncoder {
 public:
  SessionEncoder(TypeTable& table, std::string prefix);

  /// Pattern describing one side's contribution for the given session type.
  PatId encode_pattern(const SessPtr& t);

  /// Named output type whose pattern is encode_pattern(t).
  TypeId out_type(const SessPtr& t);

  /// Medium definitions implementing the session protocol; the entry point
  /// definition is first.
  std::vector<Definition> generate_process(const SessPtr& t);

  Name def_name(const SessPtr& t);

 private:
  TypeTable& tt_;
  std::string prefix_;
  std::vector<std::pair<SessPtr, TypeId>> types_;
  std::vector<std::pair<SessPtr, Name>> names_;
  std::vector<SessPtr> pending_;
  int counter_ = 0;

  SessPtr canonical(const SessPtr& t);
  std::vector<SessPtr> canon_;
};

/// Convenience wrapper used by the CLI: encodes every session of the file
/// into medium definitions appended to a fresh program.
Program encode_session_program(const SessionFile& file);

}  // namespace mbx
