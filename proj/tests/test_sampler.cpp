#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <span>
#include <vector>

#include "fairsynth/common.hpp"
#include "fairsynth/dataset.hpp"
#include "fairsynth/dp.hpp"
#include "fairsynth/marginals.hpp"
#include "fairsynth/model_graph.hpp"
#include "fairsynth/sampler.hpp"

using namespace fairsynth;

namespace {

Schema make_schema(const std::vector<int>& domains,
                   const std::vector<Role>& roles = {}) {
    Schema s;
    for (std::size_t i = 0; i < domains.size(); ++i) {
        AttributeSpec a;
        a.name = "a" + std::to_string(i);
        a.domain_size = domains[i];
        a.role = roles.empty() ? Role::Unlabeled : roles[i];
        s.attributes.push_back(a);
    }
    return s;
}

Marginal probs(std::vector<int> attrs, std::vector<int> dims,
               std::vector<double> values) {
    Marginal m;
    m.attrs = std::move(attrs);
    m.dims = std::move(dims);
    m.values = std::move(values);
    m.kind = Marginal::Kind::Probabilities;
    return m;
}

SpanningTree chain_tree(int n) {
    SpanningTree t;
    for (int i = 0; i + 1 < n; ++i) t.edges.emplace_back(i, i + 1);
    return t;
}

// Three-row toy table: a0 in {0,1}, a1 in {0,1,2}, a2 binary.
DiscreteTable toy_table() {
    DiscreteTable t(make_schema({2, 3, 2}), 0);
    t.append_row({0, 0, 0});
    t.append_row({0, 1, 1});
    t.append_row({1, 2, 1});
    t.append_row({1, 1, 1});
    t.append_row({0, 0, 1});
    t.append_row({1, 2, 0});
    return t;
}

}  // namespace

TEST_CASE("orient_tree points edges away from the root, parents first") {
    auto o = orient_tree(chain_tree(4), 4, 0);
    CHECK(o.parent == std::vector<int>{-1, 0, 1, 2});
    CHECK(o.order == std::vector<int>{0, 1, 2, 3});

    auto o2 = orient_tree(chain_tree(4), 4, 2);
    CHECK(o2.parent == std::vector<int>{1, 2, -1, 2});
    std::vector<int> pos(4);
    for (int i = 0; i < 4; ++i) pos[std::size_t(o2.order[i])] = i;
    for (int v = 0; v < 4; ++v) {
        if (o2.parent[v] >= 0) CHECK(pos[std::size_t(o2.parent[v])] < pos[v]);
    }

    CHECK_THROWS_AS(orient_tree(chain_tree(3), 4, 0), ConfigError);
    CHECK_THROWS_AS(orient_tree(chain_tree(4), 4, 7), ConfigError);
    SpanningTree disconnected;
    disconnected.edges = {{0, 1}, {0, 2}, {1, 2}};
    CHECK_THROWS_AS(orient_tree(disconnected, 4, 0), ConfigError);
}

TEST_CASE("noiseless measurement reproduces the exact marginals and is free") {
    auto table = toy_table();
    RngStream rng(1);
    RdpAccountant acct;
    TreeModel model = measure_model(table, chain_tree(3), 0.0, rng, acct, nullptr,
                                    true);
    CHECK(acct.entries().empty());
    CHECK(model.root == 0);
    CHECK(model.schema.attributes[1].name == "a1");
    for (int i = 0; i < 3; ++i) {
        Marginal exact = clip_renormalize(one_way(table, i));
        CHECK(model.noisy_one_way[i].values == exact.values);
    }
    Marginal joint = clip_renormalize(two_way(table, 0, 1));
    CHECK(model.noisy_edge_joints[0].values == joint.values);
    CHECK(model.one_way_discrepancy <= 1e-12);
    CHECK(model.zero_mass_parent_values == 0);
}

TEST_CASE("a huge budget approaches the no-noise limit") {
    auto table = toy_table();
    RngStream rng(2);
    RdpAccountant acct;
    TreeModel model = measure_model(table, chain_tree(3), 1e12, rng, acct);
    for (int i = 0; i < 3; ++i) {
        CHECK(tvd(model.noisy_one_way[i], clip_renormalize(one_way(table, i))) <=
              1e-4);
    }
    CHECK(model.one_way_discrepancy <= 1e-4);
}

TEST_CASE("measurement spends exactly the stage budget") {
    auto table = toy_table();
    RngStream rng(3);
    RdpAccountant acct;
    measure_model(table, chain_tree(3), 0.9, rng, acct);
    // Three one-way vectors plus two edge joints.
    CHECK(acct.entries().size() == 5);
    CHECK(acct.entries()[0].label == "measure.one_way.a0");
    CHECK(acct.entries()[3].label == "measure.edge.a0-a1");
    CHECK(acct.total_rho() == doctest::Approx(0.9).epsilon(1e-12));

    RdpAccountant stage1, stage3;
    RngStream r2(4);
    auto ones = measure_one_way_counts(table, 0.3, r2, stage1);
    CHECK(ones.size() == 3);
    CHECK(ones[0].kind == Marginal::Kind::Counts);
    CHECK(stage1.total_rho() == doctest::Approx(0.3).epsilon(1e-12));
    TreeModel model =
        measure_model(table, chain_tree(3), 0.6, r2, stage3, &ones);
    CHECK(stage3.entries().size() == 2);
    CHECK(stage3.total_rho() == doctest::Approx(0.6).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) {
        CHECK(model.noisy_one_way[i].values == clip_renormalize(ones[i]).values);
    }
}

TEST_CASE("clipping drops negative cells and renormalizes the rest") {
    Marginal m;
    m.attrs = {0};
    m.dims = {3};
    m.values = {5.0, -2.0, 1.0};
    Marginal p = clip_renormalize(m);
    CHECK(p.values == std::vector<double>{5.0 / 6.0, 0.0, 1.0 / 6.0});
    CHECK_FALSE(p.degenerate);
}

TEST_CASE("measurement validates its inputs") {
    auto table = toy_table();
    RngStream rng(5);
    RdpAccountant acct;
    CHECK_THROWS_AS(measure_model(table, chain_tree(4), 1.0, rng, acct),
                    ConfigError);
    CHECK_THROWS_AS(measure_model(table, chain_tree(3), 0.0, rng, acct),
                    ConfigError);
    CHECK_THROWS_AS(measure_one_way_counts(table, -1.0, rng, acct), ConfigError);
    std::vector<Marginal> wrong(2);
    CHECK_THROWS_AS(measure_model(table, chain_tree(3), 1.0, rng, acct, &wrong),
                    ConfigError);
}

TEST_CASE("a table value missing from the domain flags a zero-mass parent") {
    // a0 declares three values but only two ever occur, so the child's
    // conditional at a0=2 has nothing to condition on.
    DiscreteTable t(make_schema({3, 2}), 0);
    t.append_row({0, 0});
    t.append_row({1, 1});
    t.append_row({0, 1});
    RngStream rng(6);
    RdpAccountant acct;
    TreeModel model = measure_model(t, chain_tree(2), 0.0, rng, acct, nullptr,
                                    true);
    CHECK(model.zero_mass_parent_values == 1);
}

TEST_CASE("a deterministic model yields constant rows") {
    TreeModel model;
    model.schema = make_schema({2, 2});
    model.tree = chain_tree(2);
    model.root = 0;
    model.noisy_one_way = {probs({0}, {2}, {1.0, 0.0}),
                           probs({1}, {2}, {0.0, 1.0})};
    model.noisy_edge_joints = {probs({0, 1}, {2, 2}, {0.0, 1.0, 0.0, 0.0})};
    RngStream rng(7);
    DiscreteTable out = sample(model, 10, rng);
    REQUIRE(out.n_rows() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(out.cell(i, 0) == 0);
        CHECK(out.cell(i, 1) == 1);
    }
}

TEST_CASE("sampling matches an independence model's joint distribution") {
    TreeModel model;
    model.schema = make_schema({2, 2});
    model.tree = chain_tree(2);
    model.root = 0;
    model.noisy_one_way = {probs({0}, {2}, {0.4, 0.6}),
                           probs({1}, {2}, {0.3, 0.7})};
    model.noisy_edge_joints = {
        probs({0, 1}, {2, 2}, {0.4 * 0.3, 0.4 * 0.7, 0.6 * 0.3, 0.6 * 0.7})};
    RngStream rng(8);
    DiscreteTable out = sample(model, 1000000, rng);
    CHECK(out.n_rows() == 1000000);
    CHECK(tvd(two_way(out, 0, 1), model.noisy_edge_joints[0]) <= 0.01);
}

TEST_CASE("a root other than the lowest index transposes the conditionals") {
    TreeModel model;
    model.schema = make_schema({2, 2});
    model.tree = chain_tree(2);
    model.root = 1;
    model.noisy_one_way = {probs({0}, {2}, {0.5, 0.5}),
                           probs({1}, {2}, {0.5, 0.5})};
    model.noisy_edge_joints = {
        probs({0, 1}, {2, 2}, {0.45, 0.05, 0.05, 0.45})};
    RngStream rng(9);
    DiscreteTable out = sample(model, 200000, rng);
    CHECK(tvd(one_way(out, 1), model.noisy_one_way[1]) <= 0.01);
    CHECK(tvd(two_way(out, 0, 1), model.noisy_edge_joints[0]) <= 0.01);
}

TEST_CASE("zero-mass parent values fall back to the collapsed child marginal") {
    TreeModel model;
    model.schema = make_schema({3, 2});
    model.tree = chain_tree(2);
    model.root = 0;
    // The stored root distribution still emits value 2, but the joint has no
    // mass there: the sampler must not abort and must use the collapsed
    // child marginal [0.37, 0.33] / 0.7.
    model.noisy_one_way = {probs({0}, {3}, {0.4, 0.3, 0.3}),
                           probs({1}, {2}, {0.5, 0.5})};
    model.noisy_edge_joints = {
        probs({0, 1}, {3, 2}, {0.28, 0.12, 0.09, 0.21, 0.0, 0.0})};
    RngStream rng(10);
    DiscreteTable out = sample(model, 200000, rng);
    std::size_t hit = 0, child_one = 0;
    for (std::size_t i = 0; i < out.n_rows(); ++i) {
        if (out.cell(i, 0) == 2) {
            ++hit;
            child_one += out.cell(i, 1) == 1;
        }
    }
    CHECK(double(hit) / double(out.n_rows()) == doctest::Approx(0.3).epsilon(0.05));
    CHECK(double(child_one) / double(hit) ==
          doctest::Approx(0.33 / 0.7).epsilon(0.05));
}

TEST_CASE("sampled chains separate endpoint pairs given the middle attribute") {
    // Path p - a - o - x with matching 0.8/0.2 conditionals along each edge.
    TreeModel model;
    model.schema = make_schema(
        {2, 2, 2, 2},
        {Role::Protected, Role::Admissible, Role::Outcome, Role::Unlabeled});
    model.tree = chain_tree(4);
    model.root = 0;
    for (int i = 0; i < 4; ++i) {
        model.noisy_one_way.push_back(probs({i}, {2}, {0.5, 0.5}));
    }
    for (int i = 0; i + 1 < 4; ++i) {
        model.noisy_edge_joints.push_back(
            probs({i, i + 1}, {2, 2}, {0.4, 0.1, 0.1, 0.4}));
    }
    REQUIRE(is_fair_tree(model.tree, model.schema.roles()));
    RngStream rng(11);
    DiscreteTable out = sample(model, 1000000, rng);

    // Strong dependence end to end, none once the blocking attribute is held.
    CHECK(table_mutual_information(out, 0, 2) >= 0.05);
    int mid[1] = {1};
    double excluded = 0.0;
    double cmi = conditional_mutual_information(out, 0, 2,
                                                std::span<const int>(mid, 1), 25,
                                                &excluded);
    CHECK(excluded == 0.0);
    CHECK(cmi <= 0.002);

    MarkovReport report = local_markov_verify(out, model.tree, 0.002);
    CHECK(report.checked == 3);
    CHECK(report.skipped == 0);
    CHECK(report.all_within);
    CHECK(report.max_cmi <= 0.002);
    for (const auto& rec : report.pairs) {
        CHECK(rec.given == rec.y - 1);  // each pair conditions on y's parent
    }
}

TEST_CASE("star leaves are independent given the hub") {
    TreeModel model;
    model.schema = make_schema({3, 2, 2, 2});
    model.tree.edges = {{0, 1}, {0, 2}, {0, 3}};
    model.root = 0;
    model.noisy_one_way.push_back(probs({0}, {3}, {0.3, 0.4, 0.3}));
    for (int i = 1; i < 4; ++i) {
        model.noisy_one_way.push_back(probs({i}, {2}, {0.5, 0.5}));
        model.noisy_edge_joints.push_back(probs(
            {0, i}, {3, 2}, {0.27, 0.03, 0.2, 0.2, 0.03, 0.27}));
    }
    RngStream rng(12);
    DiscreteTable out = sample(model, 400000, rng);
    MarkovReport report = local_markov_verify(out, model.tree, 0.002);
    CHECK(report.checked == 3);
    CHECK(report.all_within);
    for (const auto& rec : report.pairs) CHECK(rec.given == 0);
}

TEST_CASE("thin conditioning cells are skipped, not failed") {
    Schema s = make_schema({4, 4, 4});
    DiscreteTable t(s, 0);
    RngStream rng(13);
    for (int i = 0; i < 40; ++i) {
        t.append_row({int(rng.uniform_index(4)), int(rng.uniform_index(4)),
                      int(rng.uniform_index(4))});
    }
    MarkovReport report = local_markov_verify(t, chain_tree(3), 0.002);
    REQUIRE(report.pairs.size() == 1);
    CHECK(report.pairs[0].skipped);
    CHECK(report.skipped == 1);
    CHECK(report.checked == 0);
    CHECK(report.all_within);  // vacuous
}

TEST_CASE("sampling is deterministic in the seed and keeps the schema") {
    auto table = toy_table();
    RngStream r1 = RngStream::derive(21, "measure");
    RngStream r2 = RngStream::derive(21, "measure");
    RdpAccountant a1, a2;
    TreeModel m1 = measure_model(table, chain_tree(3), 2.0, r1, a1);
    TreeModel m2 = measure_model(table, chain_tree(3), 2.0, r2, a2);
    for (int i = 0; i < 3; ++i) {
        CHECK(m1.noisy_one_way[i].values == m2.noisy_one_way[i].values);
    }
    CHECK(m1.noisy_edge_joints[1].values == m2.noisy_edge_joints[1].values);

    RngStream s1 = RngStream::derive(22, "rows");
    RngStream s2 = RngStream::derive(22, "rows");
    DiscreteTable o1 = sample(m1, 137, s1);
    DiscreteTable o2 = sample(m2, 137, s2);
    REQUIRE(o1.n_rows() == 137);
    CHECK(o1.schema().size() == table.schema().size());
    for (std::size_t i = 0; i < o1.n_rows(); ++i) {
        for (std::size_t a = 0; a < 3; ++a) {
            CHECK(o1.cell(i, a) == o2.cell(i, a));
        }
    }
}

TEST_CASE("model JSON round-trips every field") {
    auto table = toy_table();
    RngStream rng(23);
    RdpAccountant acct;
    TreeModel model = measure_model(table, chain_tree(3), 1.5, rng, acct);
    std::string text = serialize_model_json(model);
    TreeModel back = parse_model_json(text);
    CHECK(back.root == model.root);
    CHECK(back.tree.edges == model.tree.edges);
    CHECK(back.tree.total_weight == model.tree.total_weight);
    CHECK(back.schema.size() == model.schema.size());
    for (std::size_t i = 0; i < model.schema.size(); ++i) {
        CHECK(back.schema.attributes[i].name == model.schema.attributes[i].name);
        CHECK(back.schema.attributes[i].domain_size ==
              model.schema.attributes[i].domain_size);
        CHECK(back.noisy_one_way[i].values == model.noisy_one_way[i].values);
    }
    for (std::size_t e = 0; e < model.noisy_edge_joints.size(); ++e) {
        CHECK(back.noisy_edge_joints[e].values ==
              model.noisy_edge_joints[e].values);
    }
    CHECK(back.one_way_discrepancy == model.one_way_discrepancy);

    CHECK_THROWS_AS(parse_model_json("not json"), ConfigError);
    CHECK_THROWS_AS(parse_model_json("{}"), ConfigError);
}
