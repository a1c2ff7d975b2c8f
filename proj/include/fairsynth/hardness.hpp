#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairsynth/common.hpp"
#include "fairsynth/dataset.hpp"
#include "fairsynth/marginals.hpp"
#include "fairsynth/model_graph.hpp"

namespace fairsynth {

// 3-CNF machinery: formulas compile into fairness-constrained tree-selection
// instances whose optimal fair weight answers satisfiability, and a dataset
// builder realizes prescribed pairwise mutual-information values so graph
// weights can be planted in actual tables.

struct SatLiteral {
    int var = 0;  // 0-based
    bool positive = true;
};

struct SatClause {
    SatLiteral lit[3];
};

struct SatInstance {
    int n_vars = 0;
    std::vector<SatClause> clauses;

    // Exactly 3 literals per clause, no clause holding a variable in both
    // polarities, and every variable occurring somewhere positively and
    // somewhere negatively. Duplicate literals inside a clause are legal.
    void validate() const;
};

// DIMACS CNF with exactly three literals per clause.
SatInstance parse_dimacs(const std::string& text);
std::string to_dimacs(const SatInstance& phi);

bool eval_assignment(const SatInstance& phi, const std::vector<bool>& assignment);

// Exhaustive over 2^n assignments; first satisfying assignment in mask order.
std::optional<std::vector<bool>> solve_sat_brute_force(const SatInstance& phi);

// Compiled form of one formula. Node layout: per variable i the block
// (P_i, x_i, nx_i) at indices 3i..3i+2, then per clause j an 8-node block
// (in1, in2, a1, out1, relay, in3, a2, omega) at 3n + 8j.
struct ReductionOutput {
    SatInstance instance;
    AttributeGraph graph;
    double k = 0.0;  // fair trees of weight >= k certify satisfiability

    std::vector<int> pi_node;   // protected anchor per variable
    std::vector<int> pos_node;  // literal node for x_i
    std::vector<int> neg_node;  // literal node for not-x_i

    struct ClauseNodes {
        int in1, in2, a1, out1, relay, in3, a2, omega;
    };
    std::vector<ClauseNodes> clause_nodes;

    int literal_node(const SatLiteral& l) const;
};

ReductionOutput reduce(const SatInstance& phi);

// The constructive direction: a satisfying assignment yields a fair spanning
// tree of weight exactly k. Keeps the assignment edge of each False literal,
// every connector, and per clause the full two-stage spine plus the pair of
// weight-1 edges that routes around the first satisfied slot. Leftover
// components attach to an admissible node through weight-0 edges. Throws
// ConfigError when the assignment does not satisfy the formula or when the
// formula's clause-sharing pattern makes the construction cyclic.
SpanningTree forward_tree(const ReductionOutput& red, const std::vector<bool>& assignment);

// Reads an assignment back off a spanning tree: variable i is False iff the
// tree kept the (P_i, x_i) edge. Total on spanning trees; throws ConfigError
// on inputs that do not span the reduction graph.
std::vector<bool> decode_assignment(const SpanningTree& tree, const ReductionOutput& red);

// Dataset whose hub attribute shares a prescribed number of bits with each
// spoke. Spokes are uniform on a power-of-two domain and pairwise
// independent; the hub concatenates the top `revealed_bits` of every spoke,
// so hub-spoke mutual information is exactly the target while spoke-spoke
// mutual information is exactly zero.
struct MiSpoke {
    std::string name;
    double target_bits = 0.0;
    int revealed_bits = 0;
    double mixture_weight = 0.0;  // target / log2(domain)
};

struct MiDataset {
    Schema schema;  // attribute 0 is the hub, spokes follow in input order
    int domain = 0;
    int hub_domain = 1;
    std::vector<MiSpoke> spokes;
    double lambda = 0.0;  // 1 - sum of mixture weights

    // Exact pairwise mutual information in bits between any two attributes.
    double analytic_mi(int a, int b) const;

    // Exact hub-spoke joint distribution, dims {hub_domain, domain}.
    Marginal exact_hub_joint(int spoke) const;

    DiscreteTable sample(std::size_t rows, RngStream& rng) const;
};

// Targets must be whole bits (the only values a power-of-two block structure
// can hit exactly) and fit the hub's capacity: sum of target/log2(n_domain)
// at most 1, equality allowed.
MiDataset build_mi_dataset(const std::vector<std::pair<std::string, double>>& hub_targets,
                           int n_domain);

}  // namespace fairsynth
