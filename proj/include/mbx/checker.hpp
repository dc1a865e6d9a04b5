#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbx/ast.hpp"
#include "mbx/depgraph.hpp"
#include "mbx/types_ops.hpp"

namespace mbx {

/// Deferred combination of one name's uses: outputs accumulate by product,
/// at most one input side may be present, int marks base-value use.
/// (outputs, none) resolves to an output type; (outputs, input) resolves to
/// an input type whose pattern is a verified remainder.
struct Usage {
  PatId outputs;  // product of stored-message patterns, unit by default
  std::optional<PatId> input;
  bool is_int = false;
  SourceSpan site;
};

struct SynthEnv {
  std::map<Name, Usage> usages;
  FlatGraph graph;
};

struct SynthResult {
  bool ok = true;
  SynthEnv env;
  std::vector<Diagnostic> diags;
};

struct CheckOptions {
  bool mixed_guards = false;
};

/// Bottom-up synthesis of the usage environment and dependency graph of a
/// process, rule by rule. Annotation-driven: every binder and parameter in
/// scope must carry a type.
SynthResult synthesize(const ProcPtr& p, const Program& prog,
                       CheckOptions opts = {});

struct DefReport {
  Name name;
  bool ok = true;
  std::string env_str;
  std::string graph_str;
  std::vector<Diagnostic> diags;
};

struct Report {
  bool ok = true;
  std::vector<DefReport> defs;
  bool main_ok = true;
  bool main_closed = true;
  std::vector<Diagnostic> main_diags;
  std::vector<Diagnostic> global_diags;  // global-assumption violations
};

/// Checks every definition against its declaration (environment subtyping
/// plus graph entailment) and the main process against the empty
/// environment.
Report check_program(const Program& prog, CheckOptions opts = {});

/// Resolves a usage to a mailbox type when possible.
std::optional<TypeId> resolve_usage(TypeTable& tt, const Usage& u);

std::string usage_str(TypeTable& tt, const Usage& u);

}  // namespace mbx
