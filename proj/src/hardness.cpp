#include "fairsynth/hardness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>

namespace fairsynth {
namespace {

bool literal_true(const SatLiteral& l, const std::vector<bool>& assignment) {
    return assignment[static_cast<std::size_t>(l.var)] == l.positive;
}

}  // namespace

void SatInstance::validate() const {
    if (n_vars < 1) throw ConfigError("formula needs at least one variable");
    if (clauses.empty()) throw ConfigError("formula needs at least one clause");
    std::vector<bool> seen_pos(static_cast<std::size_t>(n_vars), false);
    std::vector<bool> seen_neg(static_cast<std::size_t>(n_vars), false);
    for (const SatClause& c : clauses) {
        for (const SatLiteral& l : c.lit) {
            if (l.var < 0 || l.var >= n_vars) throw ConfigError("literal variable out of range");
            (l.positive ? seen_pos : seen_neg)[static_cast<std::size_t>(l.var)] = true;
        }
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                if (c.lit[a].var == c.lit[b].var && c.lit[a].positive != c.lit[b].positive)
                    throw ConfigError("clause holds a variable in both polarities");
    }
    for (int v = 0; v < n_vars; ++v) {
        if (!seen_pos[static_cast<std::size_t>(v)] || !seen_neg[static_cast<std::size_t>(v)])
            throw ConfigError("every variable must occur in both polarities");
    }
}

SatInstance parse_dimacs(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    SatInstance phi;
    int declared_clauses = -1;
    std::vector<int> pending;
    bool header_seen = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "c") continue;
        if (first == "p") {
            std::string fmt;
            if (!(ls >> fmt >> phi.n_vars >> declared_clauses) || fmt != "cnf")
                throw ConfigError("malformed DIMACS header");
            header_seen = true;
            continue;
        }
        if (!header_seen) throw ConfigError("DIMACS clauses before header");
        ls.clear();
        ls.seekg(0);
        int v = 0;
        while (ls >> v) {
            if (v == 0) {
                if (pending.size() != 3)
                    throw ConfigError("every clause must have exactly three literals");
                SatClause c;
                for (int i = 0; i < 3; ++i) {
                    const int lit = pending[static_cast<std::size_t>(i)];
                    c.lit[i].var = std::abs(lit) - 1;
                    c.lit[i].positive = lit > 0;
                }
                phi.clauses.push_back(c);
                pending.clear();
            } else {
                pending.push_back(v);
            }
        }
    }
    if (!header_seen) throw ConfigError("missing DIMACS header");
    if (!pending.empty()) throw ConfigError("unterminated DIMACS clause");
    if (declared_clauses >= 0 && static_cast<std::size_t>(declared_clauses) != phi.clauses.size())
        throw ConfigError("DIMACS clause count does not match header");
    phi.validate();
    return phi;
}

std::string to_dimacs(const SatInstance& phi) {
    std::ostringstream out;
    out << "p cnf " << phi.n_vars << ' ' << phi.clauses.size() << '\n';
    for (const SatClause& c : phi.clauses) {
        for (const SatLiteral& l : c.lit) out << (l.positive ? l.var + 1 : -(l.var + 1)) << ' ';
        out << "0\n";
    }
    return out.str();
}

bool eval_assignment(const SatInstance& phi, const std::vector<bool>& assignment) {
    if (assignment.size() != static_cast<std::size_t>(phi.n_vars))
        throw ConfigError("assignment length does not match variable count");
    for (const SatClause& c : phi.clauses) {
        bool sat = false;
        for (const SatLiteral& l : c.lit) sat = sat || literal_true(l, assignment);
        if (!sat) return false;
    }
    return true;
}

std::optional<std::vector<bool>> solve_sat_brute_force(const SatInstance& phi) {
    phi.validate();
    if (phi.n_vars > 24) throw GuardError("brute-force SAT capped at 24 variables");
    const std::uint32_t limit = 1u << phi.n_vars;
    std::vector<bool> assignment(static_cast<std::size_t>(phi.n_vars));
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
        for (int v = 0; v < phi.n_vars; ++v) assignment[static_cast<std::size_t>(v)] = (mask >> v) & 1u;
        if (eval_assignment(phi, assignment)) return assignment;
    }
    return std::nullopt;
}

int ReductionOutput::literal_node(const SatLiteral& l) const {
    return l.positive ? pos_node[static_cast<std::size_t>(l.var)]
                      : neg_node[static_cast<std::size_t>(l.var)];
}

ReductionOutput reduce(const SatInstance& phi) {
    phi.validate();
    const int n = phi.n_vars;
    const int m = static_cast<int>(phi.clauses.size());
    const std::size_t nodes = static_cast<std::size_t>(3 * n + 8 * m);

    std::vector<Role> roles(nodes, Role::Unlabeled);
    std::vector<std::string> names(nodes);
    ReductionOutput red;
    red.instance = phi;
    red.k = 22.0 * m + 2.0 * n;
    red.pi_node.resize(static_cast<std::size_t>(n));
    red.pos_node.resize(static_cast<std::size_t>(n));
    red.neg_node.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int base = 3 * i;
        red.pi_node[static_cast<std::size_t>(i)] = base;
        red.pos_node[static_cast<std::size_t>(i)] = base + 1;
        red.neg_node[static_cast<std::size_t>(i)] = base + 2;
        roles[static_cast<std::size_t>(base)] = Role::Protected;
        names[static_cast<std::size_t>(base)] = "P" + std::to_string(i + 1);
        names[static_cast<std::size_t>(base + 1)] = "x" + std::to_string(i + 1);
        names[static_cast<std::size_t>(base + 2)] = "nx" + std::to_string(i + 1);
    }
    red.clause_nodes.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const int base = 3 * n + 8 * j;
        auto& cn = red.clause_nodes[static_cast<std::size_t>(j)];
        cn = {base, base + 1, base + 2, base + 3, base + 4, base + 5, base + 6, base + 7};
        roles[static_cast<std::size_t>(cn.a1)] = Role::Admissible;
        roles[static_cast<std::size_t>(cn.a2)] = Role::Admissible;
        roles[static_cast<std::size_t>(cn.omega)] = Role::Outcome;
        const std::string p = "c" + std::to_string(j + 1) + "_";
        names[static_cast<std::size_t>(cn.in1)] = p + "in1";
        names[static_cast<std::size_t>(cn.in2)] = p + "in2";
        names[static_cast<std::size_t>(cn.a1)] = p + "a1";
        names[static_cast<std::size_t>(cn.out1)] = p + "out1";
        names[static_cast<std::size_t>(cn.relay)] = p + "relay";
        names[static_cast<std::size_t>(cn.in3)] = p + "in3";
        names[static_cast<std::size_t>(cn.a2)] = p + "a2";
        names[static_cast<std::size_t>(cn.omega)] = p + "omega";
    }

    AttributeGraph g(nodes, roles);
    g.set_names(std::move(names));
    for (int i = 0; i < n; ++i) {
        g.set_weight(red.pi_node[static_cast<std::size_t>(i)], red.pos_node[static_cast<std::size_t>(i)], 2.0);
        g.set_weight(red.pi_node[static_cast<std::size_t>(i)], red.neg_node[static_cast<std::size_t>(i)], 2.0);
    }
    for (int j = 0; j < m; ++j) {
        const auto& cn = red.clause_nodes[static_cast<std::size_t>(j)];
        const SatClause& c = phi.clauses[static_cast<std::size_t>(j)];
        g.set_weight(cn.in1, cn.a1, 2.0);
        g.set_weight(cn.in2, cn.a1, 2.0);
        g.set_weight(cn.in1, cn.out1, 1.0);
        g.set_weight(cn.in2, cn.out1, 1.0);
        g.set_weight(cn.out1, cn.relay, 3.0);
        g.set_weight(cn.relay, cn.a2, 2.0);
        g.set_weight(cn.in3, cn.a2, 2.0);
        g.set_weight(cn.relay, cn.omega, 1.0);
        g.set_weight(cn.in3, cn.omega, 1.0);
        g.set_weight(cn.in1, red.literal_node(c.lit[0]), 3.0);
        g.set_weight(cn.in2, red.literal_node(c.lit[1]), 3.0);
        g.set_weight(cn.in3, red.literal_node(c.lit[2]), 3.0);
    }
    red.graph = std::move(g);
    return red;
}

SpanningTree forward_tree(const ReductionOutput& red, const std::vector<bool>& assignment) {
    const SatInstance& phi = red.instance;
    if (!eval_assignment(phi, assignment))
        throw ConfigError("forward construction needs a satisfying assignment");

    std::vector<std::pair<int, int>> edges;
    UnionFind uf(red.graph.size());
    auto add = [&](int a, int b) {
        if (!uf.unite(a, b))
            throw ConfigError("formula's literal sharing makes the constructive tree cyclic");
        edges.emplace_back(a, b);
    };

    for (int i = 0; i < phi.n_vars; ++i) {
        const std::size_t v = static_cast<std::size_t>(i);
        // Keep the edge toward the literal the assignment falsifies.
        add(red.pi_node[v], assignment[v] ? red.neg_node[v] : red.pos_node[v]);
    }
    for (std::size_t j = 0; j < phi.clauses.size(); ++j) {
        const auto& cn = red.clause_nodes[j];
        const SatClause& c = phi.clauses[j];
        add(cn.in1, red.literal_node(c.lit[0]));
        add(cn.in2, red.literal_node(c.lit[1]));
        add(cn.in3, red.literal_node(c.lit[2]));
        add(cn.in1, cn.a1);
        add(cn.in2, cn.a1);
        add(cn.relay, cn.a2);
        add(cn.in3, cn.a2);
        add(cn.out1, cn.relay);
        int slot = 0;
        while (!literal_true(c.lit[slot], assignment)) ++slot;
        // Weight-1 routing: the satisfied slot alone touches the stage
        // outputs, so every falsified input stays walled off by an
        // admissible node.
        if (slot == 0) {
            add(cn.in1, cn.out1);
            add(cn.relay, cn.omega);
        } else if (slot == 1) {
            add(cn.in2, cn.out1);
            add(cn.relay, cn.omega);
        } else {
            add(cn.in1, cn.out1);
            add(cn.in3, cn.omega);
        }
    }

    // Zero-weight completion through an admissible anchor.
    const int hub = red.clause_nodes.front().a1;
    for (std::size_t v = 0; v < red.graph.size(); ++v) {
        const int node = static_cast<int>(v);
        if (uf.find(node) != uf.find(hub)) {
            uf.unite(node, hub);
            edges.emplace_back(std::min(node, hub), std::max(node, hub));
        }
    }
    return make_tree(red.graph, std::move(edges));
}

std::vector<bool> decode_assignment(const SpanningTree& tree, const ReductionOutput& red) {
    const std::size_t n = red.graph.size();
    if (tree.edges.size() + 1 != n)
        throw ConfigError("decode needs a spanning tree of the reduction graph");
    UnionFind uf(n);
    for (const auto& [a, b] : tree.edges) {
        if (a < 0 || b < 0 || a >= static_cast<int>(n) || b >= static_cast<int>(n) || !uf.unite(a, b))
            throw ConfigError("decode needs a spanning tree of the reduction graph");
    }
    std::set<std::pair<int, int>> have(tree.edges.begin(), tree.edges.end());
    std::vector<bool> assignment(static_cast<std::size_t>(red.instance.n_vars));
    for (int i = 0; i < red.instance.n_vars; ++i) {
        const std::size_t v = static_cast<std::size_t>(i);
        const int pi = red.pi_node[v];
        const int pos = red.pos_node[v];
        const bool kept_pos = have.count({std::min(pi, pos), std::max(pi, pos)}) > 0;
        assignment[v] = !kept_pos;
    }
    return assignment;
}

namespace {

int exact_log2(int n) {
    if (n < 1 || (n & (n - 1)) != 0) throw ConfigError("domain must be a power of two");
    int bits = 0;
    while ((1 << bits) < n) ++bits;
    return bits;
}

}  // namespace

MiDataset build_mi_dataset(const std::vector<std::pair<std::string, double>>& hub_targets,
                           int n_domain) {
    if (n_domain < 2 || n_domain > (1 << 20))
        throw ConfigError("spoke domain must be a power of two in [2, 2^20]");
    const int domain_bits = exact_log2(n_domain);

    MiDataset ds;
    ds.domain = n_domain;
    std::set<std::string> names;
    int total_bits = 0;
    for (const auto& [name, target] : hub_targets) {
        if (name.empty() || name == "hub") throw ConfigError("spoke names must be unique and not 'hub'");
        if (!names.insert(name).second) throw ConfigError("spoke names must be unique and not 'hub'");
        if (!(target >= 0.0)) throw ConfigError("mutual-information targets must be non-negative");
        const double rounded = std::round(target);
        if (std::abs(target - rounded) > 1e-9)
            throw ConfigError("targets must be whole bits; fractional bits have no exact block layout");
        const int bits = static_cast<int>(rounded);
        if (bits > domain_bits) throw ConfigError("target exceeds the spoke's total entropy");
        total_bits += bits;
        ds.spokes.push_back({name, target, bits, static_cast<double>(bits) / domain_bits});
    }
    if (total_bits > domain_bits)
        throw ConfigError("targets exceed the hub's capacity of log2(domain) bits");
    ds.hub_domain = 1 << total_bits;
    ds.lambda = 1.0 - static_cast<double>(total_bits) / domain_bits;

    Schema schema;
    schema.attributes.push_back({"hub", ds.hub_domain, Role::Unlabeled, {}});
    for (const MiSpoke& s : ds.spokes)
        schema.attributes.push_back({s.name, n_domain, Role::Unlabeled, {}});
    schema.validate();
    ds.schema = std::move(schema);
    return ds;
}

double MiDataset::analytic_mi(int a, int b) const {
    const int n_attrs = static_cast<int>(spokes.size()) + 1;
    if (a < 0 || b < 0 || a >= n_attrs || b >= n_attrs)
        throw ConfigError("attribute index out of range");
    if (a == b) {
        if (a == 0) return std::log2(static_cast<double>(hub_domain));
        return std::log2(static_cast<double>(domain));
    }
    if (a != 0 && b != 0) return 0.0;
    const int spoke = (a == 0 ? b : a) - 1;
    return static_cast<double>(spokes[static_cast<std::size_t>(spoke)].revealed_bits);
}

Marginal MiDataset::exact_hub_joint(int spoke) const {
    if (spoke < 1 || spoke > static_cast<int>(spokes.size()))
        throw ConfigError("spoke index out of range");
    const std::size_t cells = static_cast<std::size_t>(hub_domain) * static_cast<std::size_t>(domain);
    if (cells > (1u << 24)) throw GuardError("exact hub joint too large to materialize");

    int shift = 0;
    for (std::size_t j = static_cast<std::size_t>(spoke); j < spokes.size(); ++j)
        shift += spokes[j].revealed_bits;
    const MiSpoke& s = spokes[static_cast<std::size_t>(spoke - 1)];
    const int free_bits = exact_log2(domain) - s.revealed_bits;
    const double p = 1.0 / (static_cast<double>(hub_domain) * static_cast<double>(1 << free_bits));

    Marginal joint;
    joint.attrs = {0, spoke};
    joint.dims = {hub_domain, domain};
    joint.kind = Marginal::Kind::Probabilities;
    joint.values.assign(cells, 0.0);
    const int mask = (1 << s.revealed_bits) - 1;
    for (int h = 0; h < hub_domain; ++h) {
        const int part = (h >> shift) & mask;
        for (int v = 0; v < domain; ++v)
            if ((v >> free_bits) == part) joint.at2(h, v) = p;
    }
    return joint;
}

DiscreteTable MiDataset::sample(std::size_t rows, RngStream& rng) const {
    DiscreteTable table(schema, rows);
    const int domain_bits = exact_log2(domain);
    for (std::size_t r = 0; r < rows; ++r) {
        int hub = 0;
        for (std::size_t s = 0; s < spokes.size(); ++s) {
            const int k = spokes[s].revealed_bits;
            const int free_bits = domain_bits - k;
            const int part = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(1) << k));
            const int fresh = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(1) << free_bits));
            hub = (hub << k) | part;
            table.cell(r, static_cast<int>(s) + 1) = (part << free_bits) | fresh;
        }
        table.cell(r, 0) = hub;
    }
    return table;
}

}  // namespace fairsynth
