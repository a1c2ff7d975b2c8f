#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairsynth/common.hpp"

namespace fairsynth {

// Symmetric weighted graph over attributes. Every unordered pair is present;
// weight 0 stands for "no edge" without breaking spanning-tree existence.
class AttributeGraph {
  public:
    AttributeGraph() = default;
    AttributeGraph(std::size_t n, std::vector<Role> roles);

    std::size_t size() const { return n_; }
    double weight(int i, int j) const;
    void set_weight(int i, int j, double w);

    const std::vector<Role>& roles() const { return roles_; }
    Role role(int i) const;
    std::vector<int> nodes_with_role(Role r) const;

    // Optional display names; defaults to a0, a1, ...
    const std::vector<std::string>& names() const { return names_; }
    void set_names(std::vector<std::string> names);
    const std::string& name(int i) const;

  private:
    void check_pair(int i, int j) const;

    std::size_t n_ = 0;
    std::vector<Role> roles_;
    std::vector<std::string> names_;
    std::vector<double> w_;  // n*n symmetric, diagonal unused
};

struct SpanningTree {
    // Normalized to (min, max) pairs sorted lexicographically.
    std::vector<std::pair<int, int>> edges;
    double total_weight = 0.0;
};

// Sorts and normalizes an edge list; rejects duplicates and self-loops.
std::vector<std::pair<int, int>> normalize_edges(std::vector<std::pair<int, int>> edges);

// Builds a SpanningTree from edges, weighting it against the graph. Throws
// ConfigError unless the edges form a spanning tree of the graph.
SpanningTree make_tree(const AttributeGraph& g, std::vector<std::pair<int, int>> edges);

// Union-find with union by rank. No path compression, so unions can be
// rolled back in reverse order.
class UnionFind {
  public:
    explicit UnionFind(std::size_t n);

    int find(int x) const;
    // Returns false (and records nothing) when x and y are already joined.
    bool unite(int x, int y);
    void rollback();  // undoes the most recent successful unite
    std::size_t components() const { return components_; }

  private:
    struct Undo {
        int child;
        int parent;
        bool rank_bumped;
    };
    std::vector<int> parent_;
    std::vector<int> rank_;
    std::vector<Undo> log_;
    std::size_t components_;
};

// True iff every path between a protected and an outcome node passes through
// at least one admissible node strictly inside it. Throws ConfigError when
// the edges do not form a spanning tree.
bool is_fair_tree(const SpanningTree& tree, const std::vector<Role>& roles);

// True iff the forest connects `from` and `to` by a path with no admissible
// node strictly between them. The forest may be disconnected.
bool has_unblocked_path(std::size_t n,
                        const std::vector<std::pair<int, int>>& forest,
                        int from, int to, const std::vector<Role>& roles);

// True iff every neighbor of every outcome node is admissible or outcome.
// Characterizes fair trees exactly only on saturated instances.
bool neighbor_restriction_check(const SpanningTree& tree,
                                const std::vector<Role>& roles);

// Classical maximum spanning tree; ties broken toward the lexicographically
// smaller edge. Ignores roles.
SpanningTree kruskal_max_spanning_tree(const AttributeGraph& g);

struct BruteForceOptions {
    // Recursion-node cap for the sparse search on graphs above 8 nodes.
    std::uint64_t step_cap = 400000000;
    // Sparse mode refuses supports wider than this many positive edges.
    std::size_t max_support_edges = 64;
};

// Exact maximum-weight fair spanning tree.
//
// Up to 8 nodes: full enumeration over all pairs; among equal-weight optima
// returns the lexicographically smallest edge list. Above 8 nodes: exact
// branch and bound over the positive-weight support, completed with
// zero-weight edges through an admissible hub; ties resolve to the first
// optimum in the fixed search order. Throws GuardError when the support or
// step budget is exceeded. Returns nullopt when no fair spanning tree
// exists (possible only with no admissible nodes).
std::optional<SpanningTree> brute_force_optimal_fair_tree(
    const AttributeGraph& g, const BruteForceOptions& options = {});

// JSON graph exchange format:
// {"schema_version":1, "attributes":[{"name":..,"role":..},..],
//  "edges":[{"a":..,"b":..,"w":..},..]}  (absent pairs weigh 0; "a"/"b" may
// be indices or attribute names)
AttributeGraph parse_graph_json(const std::string& text);
std::string serialize_graph_json(const AttributeGraph& g);

}  // namespace fairsynth
