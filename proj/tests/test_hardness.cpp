#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fairsynth/common.hpp"
#include "fairsynth/hardness.hpp"
#include "fairsynth/marginals.hpp"
#include "fairsynth/model_graph.hpp"

using namespace fairsynth;

namespace {

SatClause clause(int a, int b, int c) {
    SatClause cl;
    cl.lit[0] = {std::abs(a) - 1, a > 0};
    cl.lit[1] = {std::abs(b) - 1, b > 0};
    cl.lit[2] = {std::abs(c) - 1, c > 0};
    return cl;
}

// (x1 v x2 v x3) and its full negation; the smallest instance meeting every
// structural invariant.
SatInstance complement_pair() {
    SatInstance phi;
    phi.n_vars = 3;
    phi.clauses = {clause(1, 2, 3), clause(-1, -2, -3)};
    return phi;
}

// Unsatisfiable via duplicated literals: (a)*3 and (not a)*3.
SatInstance tiny_unsat() {
    SatInstance phi;
    phi.n_vars = 1;
    phi.clauses = {clause(1, 1, 1), clause(-1, -1, -1)};
    return phi;
}

int lit_id(const SatLiteral& l) { return 2 * l.var + (l.positive ? 0 : 1); }

// Random instance with a planted satisfying assignment, three distinct
// variables per clause, and an acyclic clause-literal incidence graph (no
// two clauses sharing a pair of literals, even transitively). Those are the
// instances whose constructive tree exists without weight loss.
SatInstance random_forest_instance(RngStream& rng, std::vector<bool>& planted) {
    for (int attempt = 0; attempt < 20000; ++attempt) {
        const int n = 3 + static_cast<int>(rng.uniform_index(3));
        const int m = 2 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n - 2)));
        planted.assign(static_cast<std::size_t>(n), false);
        for (int v = 0; v < n; ++v) planted[static_cast<std::size_t>(v)] = rng.uniform() < 0.5;

        SatInstance phi;
        phi.n_vars = n;
        UnionFind uf(static_cast<std::size_t>(2 * n));
        bool ok = true;
        for (int j = 0; j < m && ok; ++j) {
            bool placed = false;
            for (int tries = 0; tries < 400 && !placed; ++tries) {
                int a = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
                int b = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
                int c = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
                if (a == b || a == c || b == c) continue;
                SatClause cl;
                cl.lit[0] = {a, rng.uniform() < 0.5};
                cl.lit[1] = {b, rng.uniform() < 0.5};
                cl.lit[2] = {c, rng.uniform() < 0.5};
                bool sat = false;
                for (const SatLiteral& l : cl.lit)
                    sat = sat || planted[static_cast<std::size_t>(l.var)] == l.positive;
                if (!sat) continue;
                const int l0 = lit_id(cl.lit[0]);
                const int l1 = lit_id(cl.lit[1]);
                const int l2 = lit_id(cl.lit[2]);
                if (uf.find(l0) == uf.find(l1) || uf.find(l0) == uf.find(l2) ||
                    uf.find(l1) == uf.find(l2))
                    continue;
                uf.unite(l0, l1);
                uf.unite(l0, l2);
                phi.clauses.push_back(cl);
                placed = true;
            }
            if (!placed) ok = false;
        }
        if (!ok) continue;
        bool polarities = true;
        try {
            phi.validate();
        } catch (const ConfigError&) {
            polarities = false;
        }
        if (!polarities) continue;
        return phi;
    }
    REQUIRE(false);
    return {};
}

}  // namespace

TEST_CASE("sat instance validation catches structural defects") {
    CHECK_NOTHROW(complement_pair().validate());
    CHECK_NOTHROW(tiny_unsat().validate());

    SatInstance empty;
    CHECK_THROWS_AS(empty.validate(), ConfigError);

    SatInstance trivial = complement_pair();
    trivial.clauses.push_back(clause(1, -1, 2));
    CHECK_THROWS_AS(trivial.validate(), ConfigError);

    SatInstance one_sided;
    one_sided.n_vars = 3;
    one_sided.clauses = {clause(1, 2, 3), clause(-1, -2, 3)};
    CHECK_THROWS_AS(one_sided.validate(), ConfigError);

    SatInstance out_of_range = complement_pair();
    out_of_range.clauses[0].lit[2].var = 7;
    CHECK_THROWS_AS(out_of_range.validate(), ConfigError);
}

TEST_CASE("dimacs parsing round-trips and rejects malformed input") {
    const SatInstance phi = complement_pair();
    const SatInstance back = parse_dimacs(to_dimacs(phi));
    CHECK(back.n_vars == 3);
    REQUIRE(back.clauses.size() == 2);
    for (int i = 0; i < 3; ++i) {
        CHECK(back.clauses[0].lit[i].var == phi.clauses[0].lit[i].var);
        CHECK(back.clauses[0].lit[i].positive == phi.clauses[0].lit[i].positive);
        CHECK(back.clauses[1].lit[i].positive == phi.clauses[1].lit[i].positive);
    }

    const SatInstance commented =
        parse_dimacs("c header comment\np cnf 3 2\n1 2 3 0\n-1 -2 -3 0\n");
    CHECK(commented.clauses.size() == 2);

    CHECK_THROWS_AS(parse_dimacs("1 2 3 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_dimacs("p cnf 3 1\n1 2 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_dimacs("p cnf 3 2\n1 2 3 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_dimacs("p cnf 3 1\n1 2 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_dimacs("p dnf 3 1\n1 2 3 0\n"), ConfigError);
}

TEST_CASE("assignment evaluation and brute-force search agree on small formulas") {
    const SatInstance phi = complement_pair();
    CHECK(eval_assignment(phi, {true, true, false}));
    CHECK(eval_assignment(phi, {false, true, true}));
    CHECK_FALSE(eval_assignment(phi, {true, true, true}));
    CHECK_THROWS_AS(eval_assignment(phi, {true, true}), ConfigError);

    const auto model = solve_sat_brute_force(phi);
    REQUIRE(model.has_value());
    CHECK(eval_assignment(phi, *model));

    CHECK_FALSE(solve_sat_brute_force(tiny_unsat()).has_value());
}

TEST_CASE("reduction node layout, roles, and target weight") {
    const SatInstance phi = complement_pair();
    const ReductionOutput red = reduce(phi);
    const int n = 3, m = 2;
    CHECK(red.graph.size() == static_cast<std::size_t>(3 * n + 8 * m));
    CHECK(red.k == 22.0 * m + 2.0 * n);

    int protected_nodes = 0, admissible = 0, outcome = 0;
    for (Role r : red.graph.roles()) {
        protected_nodes += r == Role::Protected;
        admissible += r == Role::Admissible;
        outcome += r == Role::Outcome;
    }
    CHECK(protected_nodes == n);
    CHECK(admissible == 2 * m);
    CHECK(outcome == m);
    for (int i = 0; i < n; ++i) {
        CHECK(red.graph.role(red.pi_node[i]) == Role::Protected);
        CHECK(red.graph.role(red.pos_node[i]) == Role::Unlabeled);
        CHECK(red.graph.weight(red.pi_node[i], red.pos_node[i]) == 2.0);
        CHECK(red.graph.weight(red.pi_node[i], red.neg_node[i]) == 2.0);
    }
    CHECK(red.graph.name(red.pi_node[0]) == "P1");
    CHECK(red.graph.name(red.clause_nodes[1].omega) == "c2_omega");

    // Unlisted pairs stay at weight zero.
    CHECK(red.graph.weight(red.pi_node[0], red.clause_nodes[1].omega) == 0.0);
    CHECK(red.graph.weight(red.pos_node[0], red.pos_node[1]) == 0.0);
}

TEST_CASE("each clause gadget carries 9 internal edges, weight 15, best subtree 13") {
    const ReductionOutput red = reduce(complement_pair());
    for (const auto& cn : red.clause_nodes) {
        const std::vector<int> block = {cn.in1, cn.in2, cn.a1, cn.out1,
                                        cn.relay, cn.in3, cn.a2, cn.omega};
        int edges = 0;
        double weight = 0.0;
        AttributeGraph induced(block.size(), std::vector<Role>(block.size(), Role::Unlabeled));
        for (std::size_t i = 0; i < block.size(); ++i) {
            for (std::size_t j = i + 1; j < block.size(); ++j) {
                const double w = red.graph.weight(block[i], block[j]);
                if (w == 0.0) continue;
                ++edges;
                weight += w;
                CHECK((w == 1.0 || w == 2.0 || w == 3.0));
                induced.set_weight(static_cast<int>(i), static_cast<int>(j), w);
            }
        }
        CHECK(edges == 9);
        CHECK(weight == 15.0);
        CHECK(kruskal_max_spanning_tree(induced).total_weight == 13.0);
    }
}

TEST_CASE("clause inputs connect to their literal nodes at weight 3") {
    const SatInstance phi = complement_pair();
    const ReductionOutput red = reduce(phi);
    for (std::size_t j = 0; j < phi.clauses.size(); ++j) {
        const auto& cn = red.clause_nodes[j];
        const SatClause& c = phi.clauses[j];
        CHECK(red.graph.weight(cn.in1, red.literal_node(c.lit[0])) == 3.0);
        CHECK(red.graph.weight(cn.in2, red.literal_node(c.lit[1])) == 3.0);
        CHECK(red.graph.weight(cn.in3, red.literal_node(c.lit[2])) == 3.0);
    }
    CHECK(red.literal_node({0, true}) == red.pos_node[0]);
    CHECK(red.literal_node({0, false}) == red.neg_node[0]);
}

TEST_CASE("forward tree is fair, hits the target weight, and decodes back") {
    const SatInstance phi = complement_pair();
    const ReductionOutput red = reduce(phi);
    const std::vector<bool> theta = {true, true, false};
    REQUIRE(eval_assignment(phi, theta));

    const SpanningTree t = forward_tree(red, theta);
    CHECK(t.edges.size() + 1 == red.graph.size());
    CHECK(t.total_weight == red.k);
    CHECK(is_fair_tree(t, red.graph.roles()));

    int zero_edges = 0;
    for (const auto& [a, b] : t.edges) zero_edges += red.graph.weight(a, b) == 0.0;
    CHECK(zero_edges == 1);

    const std::vector<bool> decoded = decode_assignment(t, red);
    CHECK(decoded == theta);

    CHECK_THROWS_AS(forward_tree(red, {true, true, true}), ConfigError);
}

TEST_CASE("forward construction rejects clause pairs sharing two literals") {
    SatInstance phi;
    phi.n_vars = 3;
    phi.clauses = {clause(1, 2, 3), clause(1, 2, -3), clause(-1, -2, -3)};
    phi.validate();
    const ReductionOutput red = reduce(phi);
    const std::vector<bool> theta = {true, false, false};
    REQUIRE(eval_assignment(phi, theta));
    CHECK_THROWS_AS(forward_tree(red, theta), ConfigError);
}

TEST_CASE("decode rejects edge lists that do not span the reduction graph") {
    const ReductionOutput red = reduce(complement_pair());
    const SpanningTree t = forward_tree(red, {true, true, false});

    SpanningTree short_tree = t;
    short_tree.edges.pop_back();
    CHECK_THROWS_AS(decode_assignment(short_tree, red), ConfigError);

    SpanningTree cyclic = t;
    cyclic.edges.back() = cyclic.edges.front();
    CHECK_THROWS_AS(decode_assignment(cyclic, red), ConfigError);
}

TEST_CASE("seeded random instances round-trip through the constructive tree") {
    RngStream rng(611u);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<bool> planted;
        const SatInstance phi = random_forest_instance(rng, planted);
        REQUIRE(eval_assignment(phi, planted));
        const ReductionOutput red = reduce(phi);
        const int n = phi.n_vars;
        const int m = static_cast<int>(phi.clauses.size());
        REQUIRE(red.graph.size() == static_cast<std::size_t>(3 * n + 8 * m));
        REQUIRE(red.k == 22.0 * m + 2.0 * n);

        const SpanningTree t = forward_tree(red, planted);
        REQUIRE(t.total_weight == red.k);
        REQUIRE(is_fair_tree(t, red.graph.roles()));
        REQUIRE(decode_assignment(t, red) == planted);
    }
}

TEST_CASE("brute-force optimum overshoots the constructive target on satisfiable input") {
    // A fair tree can beat the constructive weight: leaving a clause block's
    // stage outputs attached only through the admissible spine removes every
    // blocking obligation at the cost of one weight-1 edge, after which both
    // weight-2 edges of an assignment gadget fit. The optimum therefore
    // carries no clause information and its decode need not satisfy the
    // formula; only weight-k trees built constructively do.
    const SatInstance sat = complement_pair();
    const ReductionOutput sat_red = reduce(sat);
    const auto sat_opt = brute_force_optimal_fair_tree(sat_red.graph);
    REQUIRE(sat_opt.has_value());
    CHECK(sat_opt->total_weight == 53.0);  // k + 3
    CHECK(is_fair_tree(*sat_opt, sat_red.graph.roles()));
    const std::vector<bool> decoded = decode_assignment(*sat_opt, sat_red);
    CHECK(decoded.size() == 3);

    const SatInstance unsat = tiny_unsat();
    const ReductionOutput unsat_red = reduce(unsat);
    const auto unsat_opt = brute_force_optimal_fair_tree(unsat_red.graph);
    REQUIRE(unsat_opt.has_value());
    CHECK(unsat_opt->total_weight == 42.0);
    CHECK(unsat_opt->total_weight < unsat_red.k);
}

TEST_CASE("reduction graph serializes through the shared JSON format") {
    const ReductionOutput red = reduce(complement_pair());
    const AttributeGraph back = parse_graph_json(serialize_graph_json(red.graph));
    REQUIRE(back.size() == red.graph.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back.role(static_cast<int>(i)) == red.graph.role(static_cast<int>(i)));
        CHECK(back.name(static_cast<int>(i)) == red.graph.name(static_cast<int>(i)));
        for (std::size_t j = i + 1; j < back.size(); ++j)
            CHECK(back.weight(static_cast<int>(i), static_cast<int>(j)) ==
                  red.graph.weight(static_cast<int>(i), static_cast<int>(j)));
    }
}

TEST_CASE("mi dataset reproduces the reference parametrization exactly") {
    const MiDataset ds = build_mi_dataset({{"B", 3.0}, {"C", 2.0}, {"D", 1.0}}, 4096);
    CHECK(ds.hub_domain == 64);
    CHECK(ds.schema.attributes.size() == 4);
    CHECK(ds.schema.attributes[0].name == "hub");
    CHECK(ds.schema.attributes[1].domain_size == 4096);

    REQUIRE(ds.spokes.size() == 3);
    CHECK(ds.spokes[0].mixture_weight == 0.25);
    CHECK(ds.spokes[1].mixture_weight == 1.0 / 6.0);
    CHECK(ds.spokes[2].mixture_weight == 1.0 / 12.0);
    CHECK(ds.lambda == 0.5);

    CHECK(ds.analytic_mi(0, 1) == 3.0);
    CHECK(ds.analytic_mi(2, 0) == 2.0);
    CHECK(ds.analytic_mi(0, 3) == 1.0);
    CHECK(ds.analytic_mi(1, 2) == 0.0);
    CHECK(ds.analytic_mi(2, 3) == 0.0);
    CHECK(ds.analytic_mi(0, 0) == 6.0);
    CHECK(ds.analytic_mi(1, 1) == 12.0);
}

TEST_CASE("exact hub joints carry the analytic mutual information") {
    const MiDataset ds = build_mi_dataset({{"B", 3.0}, {"C", 2.0}, {"D", 1.0}}, 4096);
    for (int s = 1; s <= 3; ++s) {
        const Marginal joint = ds.exact_hub_joint(s);
        CHECK(std::abs(joint.total() - 1.0) < 1e-12);
        CHECK(std::abs(mutual_information(joint) - ds.analytic_mi(0, s)) < 1e-12);
        const Marginal spoke = marginalize(joint, 1);
        for (double v : spoke.values) CHECK(std::abs(v - 1.0 / 4096.0) < 1e-15);
    }
    CHECK_THROWS_AS(ds.exact_hub_joint(0), ConfigError);
    CHECK_THROWS_AS(ds.exact_hub_joint(4), ConfigError);
}

TEST_CASE("mi dataset feasibility boundary sits at the domain's bit capacity") {
    const MiDataset full = build_mi_dataset({{"B", 6.0}, {"C", 6.0}}, 4096);
    CHECK(full.lambda == 0.0);
    CHECK(full.hub_domain == 4096);

    CHECK_THROWS_AS(build_mi_dataset({{"B", 6.0}, {"C", 6.0}, {"D", 1.0}}, 4096), ConfigError);
    CHECK_THROWS_AS(build_mi_dataset({{"B", 13.0}}, 4096), ConfigError);
    CHECK_THROWS_AS(build_mi_dataset({{"B", 2.5}}, 4096), ConfigError);
    CHECK_THROWS_AS(build_mi_dataset({{"B", 2.0}}, 1000), ConfigError);
    CHECK_THROWS_AS(build_mi_dataset({{"B", 2.0}, {"B", 1.0}}, 4096), ConfigError);
    CHECK_THROWS_AS(build_mi_dataset({{"hub", 2.0}}, 4096), ConfigError);
    CHECK_THROWS_AS(build_mi_dataset({{"B", -1.0}}, 4096), ConfigError);
}

TEST_CASE("sampled rows reproduce hub and spoke dependence at small domains") {
    const MiDataset ds = build_mi_dataset({{"B", 2.0}, {"C", 1.0}}, 16);
    RngStream rng = RngStream::derive(99, "mi.sample");
    const DiscreteTable table = ds.sample(200000, rng);
    CHECK(table.n_rows() == 200000);
    CHECK(table.n_attrs() == 3);

    CHECK(std::abs(table_mutual_information_corrected(table, 0, 1) - 2.0) < 0.02);
    CHECK(std::abs(table_mutual_information_corrected(table, 0, 2) - 1.0) < 0.02);
    CHECK(table_mutual_information_corrected(table, 1, 2) < 0.005);

    RngStream rng2 = RngStream::derive(99, "mi.sample");
    const DiscreteTable again = ds.sample(200000, rng2);
    bool same = true;
    for (std::size_t r = 0; r < 1000; ++r)
        for (int a = 0; a < 3; ++a) same = same && table.cell(r, a) == again.cell(r, a);
    CHECK(same);
}

TEST_CASE("full-scale mi sample lands near targets under the corrected estimator") {
    const MiDataset ds = build_mi_dataset({{"B", 3.0}, {"C", 2.0}, {"D", 1.0}}, 4096);
    RngStream rng = RngStream::derive(7, "mi.dev");
    const DiscreteTable table = ds.sample(400000, rng);
    CHECK(std::abs(table_mutual_information_corrected(table, 0, 1) - 3.0) < 0.05);
    CHECK(std::abs(table_mutual_information_corrected(table, 0, 2) - 2.0) < 0.05);
    CHECK(std::abs(table_mutual_information_corrected(table, 0, 3) - 1.0) < 0.05);
}
