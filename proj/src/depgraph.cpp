#include "mbx/depgraph.hpp"

#include <algorithm>
#include <functional>

namespace mbx {

DepGraphPtr DepGraph::empty() {
  static DepGraphPtr e = std::make_shared<DepGraph>();
  return e;
}
DepGraphPtr DepGraph::edge(Name u, Name v) {
  auto g = std::make_shared<DepGraph>();
  g->kind = Edge;
  g->u = std::move(u);
  g->v = std::move(v);
  return g;
}
DepGraphPtr DepGraph::unite(DepGraphPtr a, DepGraphPtr b) {
  if (a->kind == Empty) return b;
  if (b->kind == Empty) return a;
  auto g = std::make_shared<DepGraph>();
  g->kind = Union;
  g->l = std::move(a);
  g->r = std::move(b);
  return g;
}
DepGraphPtr DepGraph::restrict(Name n, DepGraphPtr child) {
  auto g = std::make_shared<DepGraph>();
  g->kind = Restrict;
  g->bound = std::move(n);
  g->l = std::move(child);
  return g;
}

std::string depgraph_str(const DepGraphPtr& g) {
  switch (g->kind) {
    case DepGraph::Empty:
      return "{}";
    case DepGraph::Edge:
      return "{" + g->u + "-" + g->v + "}";
    case DepGraph::Union: {
      FlatGraph f = flatten(g);
      return flatgraph_str(f);
    }
    case DepGraph::Restrict:
      return flatgraph_str(flatten(g));
  }
  return "{}";
}

int FlatGraph::vertex_of(const Name& n) {
  for (int i = 0; i < static_cast<int>(vertices.size()); ++i)
    if (!vertices[i].restricted && vertices[i].display == n) return i;
  vertices.push_back({n, false});
  return static_cast<int>(vertices.size()) - 1;
}

std::optional<int> FlatGraph::find_free(const Name& n) const {
  for (int i = 0; i < static_cast<int>(vertices.size()); ++i)
    if (!vertices[i].restricted && vertices[i].display == n) return i;
  return std::nullopt;
}

void FlatGraph::add_edge(const Name& a, const Name& b, SourceSpan span,
                         std::string note) {
  int ia = vertex_of(a);
  int ib = vertex_of(b);
  edges.push_back({ia, ib, span, std::move(note)});
}

void FlatGraph::merge(const FlatGraph& other) {
  std::vector<int> remap(other.vertices.size());
  for (std::size_t i = 0; i < other.vertices.size(); ++i) {
    if (other.vertices[i].restricted) {
      vertices.push_back(other.vertices[i]);
      remap[i] = static_cast<int>(vertices.size()) - 1;
    } else {
      remap[i] = vertex_of(other.vertices[i].display);
    }
  }
  for (const FlatEdge& e : other.edges)
    edges.push_back({remap[e.a], remap[e.b], e.span, e.note});
}

void FlatGraph::restrict_name(const Name& a) {
  auto i = find_free(a);
  if (i) vertices[*i].restricted = true;
}

FlatGraph FlatGraph::renamed(const std::map<Name, Name>& mapping) const {
  FlatGraph out;
  std::vector<int> remap(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].restricted) {
      out.vertices.push_back(vertices[i]);
      remap[i] = static_cast<int>(out.vertices.size()) - 1;
    } else {
      auto it = mapping.find(vertices[i].display);
      Name n = it == mapping.end() ? vertices[i].display : it->second;
      remap[i] = out.vertex_of(n);
    }
  }
  for (const FlatEdge& e : edges)
    out.edges.push_back({remap[e.a], remap[e.b], e.span, e.note});
  return out;
}

std::set<Name> FlatGraph::free_names() const {
  std::set<Name> out;
  for (const Vertex& v : vertices)
    if (!v.restricted) out.insert(v.display);
  return out;
}

namespace {
struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) {
    for (int i = 0; i < n; ++i) p[i] = i;
  }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};
}  // namespace

bool acyclic(const FlatGraph& g) {
  UnionFind uf(static_cast<int>(g.vertices.size()));
  for (const auto& e : g.edges) {
    if (e.a == e.b) return false;  // self-dependency
    if (uf.find(e.a) == uf.find(e.b)) return false;
    uf.unite(e.a, e.b);
  }
  return true;
}

std::optional<std::vector<FlatGraph::FlatEdge>> find_cycle(const FlatGraph& g) {
  // add edges one at a time; the first edge closing a component is part of a
  // shortest cycle, recovered by BFS over the previously added edges
  UnionFind uf(static_cast<int>(g.vertices.size()));
  std::vector<std::vector<std::pair<int, int>>> adj(g.vertices.size());
  for (std::size_t idx = 0; idx < g.edges.size(); ++idx) {
    const auto& e = g.edges[idx];
    if (e.a == e.b) return std::vector<FlatGraph::FlatEdge>{e};
    if (uf.find(e.a) == uf.find(e.b)) {
      // BFS path from e.a to e.b over earlier edges
      std::vector<int> prev_edge(g.vertices.size(), -1),
          prev_vertex(g.vertices.size(), -1);
      std::vector<bool> seen(g.vertices.size(), false);
      std::vector<int> queue{e.a};
      seen[e.a] = true;
      for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        int x = queue[qi];
        for (auto [y, ei] : adj[x]) {
          if (seen[y]) continue;
          seen[y] = true;
          prev_edge[y] = ei;
          prev_vertex[y] = x;
          queue.push_back(y);
        }
      }
      std::vector<FlatGraph::FlatEdge> cycle{e};
      int cur = e.b;
      while (cur != e.a && cur != -1) {
        cycle.push_back(g.edges[prev_edge[cur]]);
        cur = prev_vertex[cur];
      }
      return cycle;
    }
    uf.unite(e.a, e.b);
    adj[e.a].push_back({e.b, static_cast<int>(idx)});
    adj[e.b].push_back({e.a, static_cast<int>(idx)});
  }
  return std::nullopt;
}

std::set<std::pair<Name, Name>> grel(const TypeTable& tt, const FlatGraph& g) {
  std::set<std::pair<Name, Name>> out;
  auto emit = [&](int a, int b) {
    if (g.vertices[a].restricted || g.vertices[b].restricted) return;
    out.insert({g.vertices[a].display, g.vertices[b].display});
    out.insert({g.vertices[b].display, g.vertices[a].display});
  };
  if (acyclic(g)) {
    // forest: connectivity is exactly edge-simple reachability
    UnionFind uf(static_cast<int>(g.vertices.size()));
    for (const auto& e : g.edges) uf.unite(e.a, e.b);
    for (int i = 0; i < static_cast<int>(g.vertices.size()); ++i)
      for (int j = i + 1; j < static_cast<int>(g.vertices.size()); ++j)
        if (uf.find(i) == uf.find(j)) emit(i, j);
    return out;
  }
  // cyclic: enumerate edge-simple walks (diagnostics only, metered)
  std::vector<std::vector<std::pair<int, int>>> adj(g.vertices.size());
  for (std::size_t idx = 0; idx < g.edges.size(); ++idx) {
    adj[g.edges[idx].a].push_back({g.edges[idx].b, static_cast<int>(idx)});
    adj[g.edges[idx].b].push_back({g.edges[idx].a, static_cast<int>(idx)});
  }
  std::vector<bool> used(g.edges.size(), false);
  std::function<void(int, int)> walk = [&](int start, int cur) {
    for (auto [next, ei] : adj[cur]) {
      if (used[ei]) continue;
      tt.meter().tick();
      emit(start, next);
      used[ei] = true;
      walk(start, next);
      used[ei] = false;
    }
  };
  for (int s = 0; s < static_cast<int>(g.vertices.size()); ++s)
    if (!g.vertices[s].restricted) walk(s, s);
  return out;
}

bool entails(const TypeTable& tt, const FlatGraph& larger,
             const FlatGraph& smaller) {
  auto big = grel(tt, larger);
  for (const auto& p : grel(tt, smaller))
    if (!big.count(p)) return false;
  return true;
}

namespace {
void flatten_rec(const DepGraphPtr& g, FlatGraph& out,
                 std::map<Name, int>& bound_scope) {
  switch (g->kind) {
    case DepGraph::Empty:
      return;
    case DepGraph::Edge: {
      auto vtx = [&](const Name& n) {
        auto it = bound_scope.find(n);
        if (it != bound_scope.end()) return it->second;
        return out.vertex_of(n);
      };
      int a = vtx(g->u);
      int b = vtx(g->v);
      out.edges.push_back({a, b, {}, ""});
      return;
    }
    case DepGraph::Union:
      flatten_rec(g->l, out, bound_scope);
      flatten_rec(g->r, out, bound_scope);
      return;
    case DepGraph::Restrict: {
      out.vertices.push_back({g->bound, true});
      int id = static_cast<int>(out.vertices.size()) - 1;
      auto prev = bound_scope.find(g->bound);
      std::optional<int> saved;
      if (prev != bound_scope.end()) saved = prev->second;
      bound_scope[g->bound] = id;
      flatten_rec(g->l, out, bound_scope);
      if (saved)
        bound_scope[g->bound] = *saved;
      else
        bound_scope.erase(g->bound);
      return;
    }
  }
}
}  // namespace

FlatGraph flatten(const DepGraphPtr& g) {
  FlatGraph out;
  std::map<Name, int> scope;
  flatten_rec(g, out, scope);
  return out;
}

std::string flatgraph_str(const FlatGraph& g) {
  std::string out = "{";
  bool first = true;
  std::vector<Name> restricted;
  for (const auto& v : g.vertices)
    if (v.restricted) restricted.push_back(v.display);
  for (const auto& e : g.edges) {
    if (!first) out += ", ";
    first = false;
    auto nm = [&](int i) {
      return g.vertices[i].restricted ? g.vertices[i].display + "'"
                                      : g.vertices[i].display;
    };
    out += nm(e.a) + "-" + nm(e.b);
  }
  if (!restricted.empty()) {
    out += "; new";
    for (const auto& n : restricted) out += " " + n;
    out += ".";
  }
  out += "}";
  return out;
}

}  // namespace mbx
