#include "fairsynth/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <span>
#include <utility>

#include "json.hpp"

namespace fairsynth {

TreeOrientation orient_tree(const SpanningTree& tree, std::size_t n, int root) {
    if (n == 0) throw ConfigError("cannot orient a tree over zero attributes");
    if (root < 0 || std::size_t(root) >= n) {
        throw ConfigError("tree root out of range");
    }
    if (tree.edges.size() + 1 != n) {
        throw ConfigError("tree does not span the schema");
    }
    std::vector<std::vector<int>> adj(n);
    for (const auto& [a, b] : tree.edges) {
        if (a < 0 || b < 0 || std::size_t(a) >= n || std::size_t(b) >= n) {
            throw ConfigError("tree edge endpoint out of range");
        }
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    TreeOrientation o;
    o.parent.assign(n, -2);
    o.parent[root] = -1;
    std::deque<int> queue{root};
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        o.order.push_back(u);
        for (int v : adj[u]) {
            if (o.parent[v] == -2) {
                o.parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    if (o.order.size() != n) throw ConfigError("tree does not span the schema");
    return o;
}

namespace {

void add_cell_noise(Marginal& m, double sigma, RngStream& rng) {
    for (double& v : m.values) v += rng.gaussian(sigma);
}

// One count vector released as a whole: removing or adding a row moves a
// single cell by one, so the vector's L2 sensitivity is 1.
RdpCost vector_release_cost(double sigma) { return RdpCost{0.5 / (sigma * sigma)}; }

std::size_t draw(const std::vector<double>& probs, RngStream& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;  // rounding spill
}

bool is_ancestor(const std::vector<int>& parent, int x, int y) {
    for (int v = parent[y]; v >= 0; v = parent[v]) {
        if (v == x) return true;
    }
    return false;
}

}  // namespace

std::vector<Marginal> measure_one_way_counts(const DiscreteTable& table, double rho,
                                             RngStream& rng,
                                             RdpAccountant& accountant,
                                             bool noiseless) {
    const std::size_t r = table.n_attrs();
    if (r == 0) throw ConfigError("table has no attributes");
    if (!noiseless && !(rho > 0.0)) {
        throw ConfigError("measurement budget must be positive");
    }
    const double sigma = noiseless ? 0.0 : std::sqrt(double(r) / (2.0 * rho));
    std::vector<Marginal> out;
    out.reserve(r);
    for (std::size_t i = 0; i < r; ++i) {
        Marginal m = one_way(table, int(i));
        if (!noiseless) {
            add_cell_noise(m, sigma, rng);
            accountant.charge("one_way." + table.schema().attributes[i].name,
                              vector_release_cost(sigma));
        }
        out.push_back(std::move(m));
    }
    return out;
}

TreeModel measure_model(const DiscreteTable& table, const SpanningTree& tree,
                        double rho_measure, RngStream& rng,
                        RdpAccountant& accountant,
                        const std::vector<Marginal>* premeasured_one_way,
                        bool noiseless) {
    const std::size_t r = table.n_attrs();
    if (r == 0) throw ConfigError("table has no attributes");
    TreeOrientation orientation = orient_tree(tree, r, 0);

    const std::size_t k =
        tree.edges.size() + (premeasured_one_way ? 0 : r);
    if (!noiseless && k > 0 && !(rho_measure > 0.0)) {
        throw ConfigError("measurement budget must be positive");
    }
    const double sigma =
        noiseless || k == 0 ? 0.0 : std::sqrt(double(k) / (2.0 * rho_measure));

    TreeModel model;
    model.schema = table.schema();
    model.tree = tree;
    model.root = 0;  // lowest index; fairness does not depend on direction

    if (premeasured_one_way) {
        if (premeasured_one_way->size() != r) {
            throw ConfigError("premeasured one-way marginal count does not "
                              "match the schema");
        }
        for (std::size_t i = 0; i < r; ++i) {
            const Marginal& m = (*premeasured_one_way)[i];
            if (m.attrs != std::vector<int>{int(i)} ||
                m.dims != std::vector<int>{model.schema.attributes[i].domain_size}) {
                throw ConfigError("premeasured one-way marginal shape does not "
                                  "match the schema");
            }
            model.noisy_one_way.push_back(clip_renormalize(m));
        }
    } else {
        for (std::size_t i = 0; i < r; ++i) {
            Marginal m = one_way(table, int(i));
            if (!noiseless) {
                add_cell_noise(m, sigma, rng);
                accountant.charge(
                    "measure.one_way." + model.schema.attributes[i].name,
                    vector_release_cost(sigma));
            }
            model.noisy_one_way.push_back(clip_renormalize(m));
        }
    }

    for (const auto& [a, b] : tree.edges) {
        Marginal m = two_way(table, a, b);
        if (!noiseless) {
            add_cell_noise(m, sigma, rng);
            accountant.charge("measure.edge." + model.schema.attributes[a].name +
                                  "-" + model.schema.attributes[b].name,
                              vector_release_cost(sigma));
        }
        model.noisy_edge_joints.push_back(clip_renormalize(m));
    }

    for (std::size_t e = 0; e < tree.edges.size(); ++e) {
        const auto [a, b] = tree.edges[e];
        const Marginal& joint = model.noisy_edge_joints[e];
        model.one_way_discrepancy =
            std::max({model.one_way_discrepancy,
                      tvd(marginalize(joint, 0), model.noisy_one_way[a]),
                      tvd(marginalize(joint, 1), model.noisy_one_way[b])});
        const bool parent_first = orientation.parent[b] == a;
        const int parent_dim = parent_first ? joint.dims[0] : joint.dims[1];
        const int child_dim = parent_first ? joint.dims[1] : joint.dims[0];
        for (int v = 0; v < parent_dim; ++v) {
            double mass = 0.0;
            for (int w = 0; w < child_dim; ++w) {
                mass += parent_first ? joint.at2(v, w) : joint.at2(w, v);
            }
            if (mass <= 0.0) ++model.zero_mass_parent_values;
        }
    }
    return model;
}

DiscreteTable sample(const TreeModel& model, std::size_t n_out, RngStream& rng) {
    const std::size_t r = model.schema.size();
    if (r == 0) throw ConfigError("model has no attributes");
    if (model.noisy_one_way.size() != r ||
        model.noisy_edge_joints.size() != model.tree.edges.size()) {
        throw ConfigError("model marginals do not match its schema and tree");
    }
    TreeOrientation orientation = orient_tree(model.tree, r, model.root);

    std::map<std::pair<int, int>, std::size_t> edge_index;
    for (std::size_t e = 0; e < model.tree.edges.size(); ++e) {
        edge_index[model.tree.edges[e]] = e;
    }

    // Conditional rows per non-root attribute; zero-mass parent values fall
    // back to the joint's collapsed child marginal.
    std::vector<std::vector<std::vector<double>>> cond(r);
    for (std::size_t c = 0; c < r; ++c) {
        int p = orientation.parent[c];
        if (p < 0) continue;
        auto key = std::make_pair(std::min(int(c), p), std::max(int(c), p));
        const Marginal& joint = model.noisy_edge_joints[edge_index.at(key)];
        const bool parent_first = p == key.first;
        const int parent_dim = parent_first ? joint.dims[0] : joint.dims[1];
        const int child_dim = parent_first ? joint.dims[1] : joint.dims[0];
        Marginal collapsed = marginalize(joint, parent_first ? 1 : 0);
        collapsed = clip_renormalize(collapsed);
        cond[c].assign(std::size_t(parent_dim),
                       std::vector<double>(std::size_t(child_dim), 0.0));
        for (int v = 0; v < parent_dim; ++v) {
            double mass = 0.0;
            for (int w = 0; w < child_dim; ++w) {
                double q = parent_first ? joint.at2(v, w) : joint.at2(w, v);
                cond[c][v][w] = q;
                mass += q;
            }
            if (mass > 0.0) {
                for (double& q : cond[c][v]) q /= mass;
            } else {
                cond[c][v] = collapsed.values;
            }
        }
    }

    DiscreteTable out(model.schema, n_out);
    std::vector<int> row(r, 0);
    for (std::size_t i = 0; i < n_out; ++i) {
        for (int a : orientation.order) {
            int p = orientation.parent[a];
            if (p < 0) {
                row[a] = int(draw(model.noisy_one_way[a].values, rng));
            } else {
                row[a] = int(draw(cond[a][row[p]], rng));
            }
        }
        for (std::size_t a = 0; a < r; ++a) out.cell(i, a) = row[a];
    }
    return out;
}

MarkovReport local_markov_verify(const DiscreteTable& table,
                                 const SpanningTree& tree, double tolerance) {
    const std::size_t r = table.n_attrs();
    TreeOrientation orientation = orient_tree(tree, r, 0);
    std::vector<std::vector<bool>> adjacent(r, std::vector<bool>(r, false));
    for (const auto& [a, b] : tree.edges) adjacent[a][b] = adjacent[b][a] = true;

    MarkovReport report;
    report.tolerance = tolerance;
    for (int x = 0; x + 1 < int(r); ++x) {
        for (int y = x + 1; y < int(r); ++y) {
            if (adjacent[x][y]) continue;  // no independence claimed
            MarkovPairCheck rec;
            rec.x = x;
            rec.y = y;
            rec.given = is_ancestor(orientation.parent, x, y)
                            ? orientation.parent[y]
                            : orientation.parent[x];
            int given[1] = {rec.given};
            double excluded = 0.0;
            double cmi = conditional_mutual_information(
                table, x, y, std::span<const int>(given, 1), 25, &excluded);
            rec.excluded_mass = excluded;
            rec.skipped = excluded >= 1.0 - 1e-12;
            rec.cmi = rec.skipped ? 0.0 : cmi;
            if (rec.skipped) {
                ++report.skipped;
            } else {
                ++report.checked;
                report.max_cmi = std::max(report.max_cmi, rec.cmi);
                if (rec.cmi > tolerance) report.all_within = false;
            }
            report.pairs.push_back(rec);
        }
    }
    return report;
}

namespace {

nlohmann::json marginal_to_json(const Marginal& m) {
    return nlohmann::json{
        {"attrs", m.attrs},
        {"dims", m.dims},
        {"values", m.values},
        {"kind", m.kind == Marginal::Kind::Counts ? "counts" : "probabilities"},
        {"degenerate", m.degenerate}};
}

Marginal marginal_from_json(const nlohmann::json& j) {
    Marginal m;
    m.attrs = j.at("attrs").get<std::vector<int>>();
    m.dims = j.at("dims").get<std::vector<int>>();
    m.values = j.at("values").get<std::vector<double>>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "counts") {
        m.kind = Marginal::Kind::Counts;
    } else if (kind == "probabilities") {
        m.kind = Marginal::Kind::Probabilities;
    } else {
        throw ConfigError("unknown marginal kind: " + kind);
    }
    m.degenerate = j.value("degenerate", false);
    if (m.attrs.empty() || m.attrs.size() > 2 || m.attrs.size() != m.dims.size()) {
        throw ConfigError("malformed marginal in model file");
    }
    std::size_t want = 1;
    for (int d : m.dims) {
        if (d <= 0) throw ConfigError("malformed marginal in model file");
        want *= std::size_t(d);
    }
    if (m.values.size() != want) {
        throw ConfigError("marginal value count does not match its dimensions");
    }
    return m;
}

}  // namespace

std::string serialize_model_json(const TreeModel& model) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["saturated"] = model.schema.saturated_declared;
    auto& attrs = doc["attributes"] = nlohmann::json::array();
    for (const auto& a : model.schema.attributes) {
        attrs.push_back({{"name", a.name},
                         {"domain_size", a.domain_size},
                         {"role", role_name(a.role)},
                         {"labels", a.labels}});
    }
    auto& tree = doc["tree"];
    tree["root"] = model.root;
    tree["total_weight"] = model.tree.total_weight;
    auto& edges = tree["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : model.tree.edges) {
        edges.push_back(nlohmann::json::array({a, b}));
    }
    auto& ones = doc["one_way"] = nlohmann::json::array();
    for (const auto& m : model.noisy_one_way) ones.push_back(marginal_to_json(m));
    auto& joints = doc["edge_joints"] = nlohmann::json::array();
    for (const auto& m : model.noisy_edge_joints) {
        joints.push_back(marginal_to_json(m));
    }
    doc["zero_mass_parent_values"] = model.zero_mass_parent_values;
    doc["one_way_discrepancy"] = model.one_way_discrepancy;
    return doc.dump(2);
}

TreeModel parse_model_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("model JSON does not parse: ") + e.what());
    }
    TreeModel model;
    try {
        model.schema.saturated_declared = doc.value("saturated", false);
        for (const auto& a : doc.at("attributes")) {
            AttributeSpec spec;
            spec.name = a.at("name").get<std::string>();
            spec.domain_size = a.at("domain_size").get<int>();
            spec.role = role_from_name(a.at("role").get<std::string>());
            spec.labels = a.value("labels", std::vector<std::string>{});
            model.schema.attributes.push_back(std::move(spec));
        }
        const auto& tree = doc.at("tree");
        model.root = tree.at("root").get<int>();
        model.tree.total_weight = tree.at("total_weight").get<double>();
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : tree.at("edges")) {
            edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        }
        model.tree.edges = normalize_edges(std::move(edges));
        for (const auto& m : doc.at("one_way")) {
            model.noisy_one_way.push_back(marginal_from_json(m));
        }
        for (const auto& m : doc.at("edge_joints")) {
            model.noisy_edge_joints.push_back(marginal_from_json(m));
        }
        model.zero_mass_parent_values =
            doc.value("zero_mass_parent_values", std::size_t(0));
        model.one_way_discrepancy = doc.value("one_way_discrepancy", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model JSON is missing fields: ") + e.what());
    }
    model.schema.validate();
    const std::size_t r = model.schema.size();
    if (model.noisy_one_way.size() != r ||
        model.noisy_edge_joints.size() != model.tree.edges.size()) {
        throw ConfigError("model marginals do not match its schema and tree");
    }
    orient_tree(model.tree, r, model.root);
    for (std::size_t i = 0; i < r; ++i) {
        if (model.noisy_one_way[i].attrs != std::vector<int>{int(i)} ||
            model.noisy_one_way[i].dims !=
                std::vector<int>{model.schema.attributes[i].domain_size}) {
            throw ConfigError("model one-way marginal shape mismatch");
        }
    }
    for (std::size_t e = 0; e < model.tree.edges.size(); ++e) {
        const auto [a, b] = model.tree.edges[e];
        const Marginal& m = model.noisy_edge_joints[e];
        if (m.attrs != std::vector<int>{a, b} ||
            m.dims != std::vector<int>{model.schema.attributes[a].domain_size,
                                       model.schema.attributes[b].domain_size}) {
            throw ConfigError("model edge joint shape mismatch");
        }
    }
    return model;
}

}  // namespace fairsynth
