#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mbx/diag.hpp"
#include "mbx/typetable.hpp"

namespace mbx {

struct DepGraph;
using DepGraphPtr = std::shared_ptr<const DepGraph>;

/// Syntax of dependency graphs: empty, a single undirected edge, multiset
/// union (not idempotent) and name restriction.
struct DepGraph {
  enum Kind { Empty, Edge, Union, Restrict } kind = Empty;
  Name u, v;          // Edge
  DepGraphPtr l, r;   // Union
  Name bound;         // Restrict (child in l)

  static DepGraphPtr empty();
  static DepGraphPtr edge(Name u, Name v);
  static DepGraphPtr unite(DepGraphPtr a, DepGraphPtr b);
  static DepGraphPtr restrict(Name a, DepGraphPtr g);
};

std::string depgraph_str(const DepGraphPtr& g);

/// Flattened multigraph: restricted vertices get fresh ids, edge multiset is
/// explicit, and every edge carries a provenance note for diagnostics.
struct FlatGraph {
  struct Vertex {
    Name display;
    bool restricted = false;
  };
  struct FlatEdge {
    int a = 0, b = 0;
    SourceSpan span;
    std::string note;
  };
  std::vector<Vertex> vertices;
  std::vector<FlatEdge> edges;

  int vertex_of(const Name& n);                  // free vertex, created on demand
  std::optional<int> find_free(const Name& n) const;
  void add_edge(const Name& a, const Name& b, SourceSpan span = {},
                std::string note = "");
  void merge(const FlatGraph& other);            // multiset union
  void restrict_name(const Name& a);             // free vertex becomes bound
  FlatGraph renamed(const std::map<Name, Name>& mapping) const;

  std::set<Name> free_names() const;
};

/// Forest check counting multiplicities: any connected component with at
/// least as many edges as vertices contains a cycle.
bool acyclic(const FlatGraph& g);

/// A shortest cycle (as a list of edges) when the graph is cyclic.
std::optional<std::vector<FlatGraph::FlatEdge>> find_cycle(const FlatGraph& g);

/// Pairs of distinct free names connected by an edge-simple path (restricted
/// vertices may appear in the interior). Exact; exponential fallback on
/// cyclic graphs, with the work metered.
std::set<std::pair<Name, Name>> grel(const TypeTable& tt, const FlatGraph& g);

/// grel(smaller) included in grel(larger).
bool entails(const TypeTable& tt, const FlatGraph& larger,
             const FlatGraph& smaller);

FlatGraph flatten(const DepGraphPtr& g);
std::string flatgraph_str(const FlatGraph& g);

}  // namespace mbx
