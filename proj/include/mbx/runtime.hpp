#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mbx/ast.hpp"
#include "mbx/proc_ops.hpp"

namespace mbx {

struct StepResult {
  std::string rule;  // r-read, r-free, r-def, r-if
  std::string desc;  // human redex descriptor
  ProcPtr next;      // canonical
  std::map<Name, Name> renamed_from;  // canonical name -> pre-step name
};

/// Complete set of one-step reducts of a process, up to structural
/// congruence. The input is canonicalized first; results are canonical and
/// deduplicated.
std::vector<StepResult> step(const ProcPtr& p, const Program& prog);

enum class StateClass { TerminalDone, Deadlock, Live };

struct StateGraph {
  struct State {
    ProcPtr proc;        // canonical
    std::string key;     // canonical print: state identity
    StateClass cls = StateClass::Live;
    bool has_unguarded_fail = false;
    std::map<Name, Name> provenance;  // canonical name -> source base name
    int depth = 0;
  };
  std::vector<State> states;
  std::vector<std::vector<std::pair<int, std::string>>> edges;  // (target, rule)
  bool complete = false;
  std::optional<std::vector<int>> fail_path;  // states leading to a fail witness
  std::optional<bool> fairly_terminating;     // known only on complete graphs
  int done_states = 0;
  int deadlock_states = 0;
};

StateGraph explore(const Program& prog, int max_states, int max_depth);

struct Trace {
  struct Entry {
    std::string rule;
    std::string desc;
    ProcPtr state;  // state after the step, canonical
  };
  ProcPtr initial;
  std::vector<Entry> steps;
  std::uint64_t seed = 0;
  bool truncated = false;
};

/// One pseudo-random maximal (or truncated) reduction sequence, reproducible
/// from the seed.
Trace run(const Program& prog, std::uint64_t seed, int max_steps);

/// Some(a) iff the process is congruent to a context with an unguarded,
/// alternative-free fail action on `a`.
std::optional<Name> find_unguarded_fail(const ProcPtr& p, const TypeTable& tt);

struct TagBounds {
  long min = 0;
  long max = 0;
};

struct BoundsReport {
  std::map<Tag, TagBounds> per_tag;
  bool lower_estimate = false;  // graph was truncated
};

/// Exact per-tag message-count bounds for the mailboxes whose source name is
/// `mailbox`, over all reachable states of the graph.
BoundsReport mailbox_bounds(const Program& prog, const StateGraph& graph,
                            const Name& mailbox);

/// Number of `tag`-tagged messages currently stored for `mailbox` in `state`.
int count_messages(const StateGraph::State& state, const Name& source_name,
                   const Tag& tag);

/// True when the state contains an active guard on a mailbox whose source
/// name is `source_name` with a free alternative (used by bounds tests).
bool has_free_alternative_on(const StateGraph::State& state,
                             const Name& source_name);

}  // namespace mbx
