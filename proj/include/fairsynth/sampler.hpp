#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fairsynth/common.hpp"
#include "fairsynth/dataset.hpp"
#include "fairsynth/dp.hpp"
#include "fairsynth/marginals.hpp"
#include "fairsynth/model_graph.hpp"

namespace fairsynth {

// Sampling model over a spanning tree: one noisy distribution per attribute
// plus one noisy joint per tree edge. Conditionals are derived from the edge
// joints at sampling time; parent values with no joint mass are counted here
// and fall back to the joint's collapsed child marginal when sampled.
struct TreeModel {
    Schema schema;
    SpanningTree tree;
    int root = 0;
    std::vector<Marginal> noisy_one_way;      // Probabilities, one per attribute
    std::vector<Marginal> noisy_edge_joints;  // Probabilities, one per tree edge
    std::size_t zero_mass_parent_values = 0;
    // Largest TVD between an edge joint's implied single-attribute marginal
    // and the stored per-attribute distribution. Zero without noise.
    double one_way_discrepancy = 0.0;
};

// Edge directions away from the root. order lists every attribute with
// parents before children; parent[root] = -1.
struct TreeOrientation {
    std::vector<int> parent;
    std::vector<int> order;
};
TreeOrientation orient_tree(const SpanningTree& tree, std::size_t n, int root);

// Per-attribute count vectors with Gaussian noise at sigma = sqrt(r/(2 rho)),
// charged one entry per attribute. Raw noisy counts; consumers clip or
// normalize as needed. Noiseless mode returns exact counts and charges
// nothing.
std::vector<Marginal> measure_one_way_counts(const DiscreteTable& table, double rho,
                                             RngStream& rng,
                                             RdpAccountant& accountant,
                                             bool noiseless = false);

// Measures the model's distributions under Gaussian noise and packages them
// with the tree. Every measured count vector shares one sigma =
// sqrt(k / (2 rho_measure)) where k is the number of vectors measured in this
// call: the tree's edge joints, plus all one-way marginals unless a
// premeasured set is supplied (those are normalized and reused instead).
TreeModel measure_model(const DiscreteTable& table, const SpanningTree& tree,
                        double rho_measure, RngStream& rng,
                        RdpAccountant& accountant,
                        const std::vector<Marginal>* premeasured_one_way = nullptr,
                        bool noiseless = false);

// Ancestral sampling: the root value comes from its stored distribution, each
// child from the edge joint conditioned on its sampled parent. Returns n_out
// rows under the model's schema.
DiscreteTable sample(const TreeModel& model, std::size_t n_out, RngStream& rng);

struct MarkovPairCheck {
    int x = 0;
    int y = 0;
    int given = 0;
    double cmi = 0.0;            // bits; 0 when skipped
    double excluded_mass = 0.0;  // fraction of rows in thin conditioning cells
    bool skipped = false;        // every conditioning cell was below the row floor
};

struct MarkovReport {
    double tolerance = 0.0;
    std::vector<MarkovPairCheck> pairs;
    double max_cmi = 0.0;  // over checked pairs
    std::size_t checked = 0;
    std::size_t skipped = 0;
    bool all_within = true;
};

// Empirical check of the tree's conditional independences: for every
// non-adjacent pair, the path between them is blocked by the parent of
// whichever endpoint lies below the other, and the conditional mutual
// information given that parent should vanish. Adjacent pairs claim no
// independence and are exempt.
MarkovReport local_markov_verify(const DiscreteTable& table,
                                 const SpanningTree& tree, double tolerance);

std::string serialize_model_json(const TreeModel& model);
TreeModel parse_model_json(const std::string& text);

}  // namespace fairsynth
