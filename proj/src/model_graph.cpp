#include "fairsynth/model_graph.hpp"

#include <algorithm>
#include <cstddef>
#include <deque>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace fairsynth {

AttributeGraph::AttributeGraph(std::size_t n, std::vector<Role> roles)
    : n_(n), roles_(std::move(roles)) {
    if (roles_.size() != n_) {
        throw ConfigError("graph roles must cover every node exactly once");
    }
    names_.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) names_.push_back("a" + std::to_string(i));
    w_.assign(n_ * n_, 0.0);
}

void AttributeGraph::check_pair(int i, int j) const {
    if (i < 0 || j < 0 || std::size_t(i) >= n_ || std::size_t(j) >= n_) {
        throw ConfigError("graph node index out of range");
    }
    if (i == j) throw ConfigError("graph has no self-edges");
}

double AttributeGraph::weight(int i, int j) const {
    check_pair(i, j);
    return w_[std::size_t(i) * n_ + j];
}

void AttributeGraph::set_weight(int i, int j, double w) {
    check_pair(i, j);
    if (!(w >= 0.0)) throw ConfigError("graph weights are non-negative");
    w_[std::size_t(i) * n_ + j] = w;
    w_[std::size_t(j) * n_ + i] = w;
}

Role AttributeGraph::role(int i) const {
    if (i < 0 || std::size_t(i) >= n_) throw ConfigError("graph node index out of range");
    return roles_[i];
}

std::vector<int> AttributeGraph::nodes_with_role(Role r) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < n_; ++i) {
        if (roles_[i] == r) out.push_back(int(i));
    }
    return out;
}

void AttributeGraph::set_names(std::vector<std::string> names) {
    if (names.size() != n_) throw ConfigError("graph names must cover every node");
    names_ = std::move(names);
}

const std::string& AttributeGraph::name(int i) const {
    if (i < 0 || std::size_t(i) >= n_) throw ConfigError("graph node index out of range");
    return names_[i];
}

std::vector<std::pair<int, int>> normalize_edges(std::vector<std::pair<int, int>> edges) {
    for (auto& e : edges) {
        if (e.first == e.second) throw ConfigError("self-loop in edge list");
        if (e.first > e.second) std::swap(e.first, e.second);
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
        throw ConfigError("duplicate edge in edge list");
    }
    return edges;
}

SpanningTree make_tree(const AttributeGraph& g,
                       std::vector<std::pair<int, int>> edges) {
    SpanningTree t;
    t.edges = normalize_edges(std::move(edges));
    if (g.size() == 0) throw ConfigError("graph is empty");
    if (t.edges.size() + 1 != g.size()) {
        throw ConfigError("edge list does not span the graph");
    }
    UnionFind uf(g.size());
    for (const auto& e : t.edges) {
        g.weight(e.first, e.second);  // validates the pair
        if (!uf.unite(e.first, e.second)) {
            throw ConfigError("edge list contains a cycle");
        }
        t.total_weight += g.weight(e.first, e.second);
    }
    return t;
}

UnionFind::UnionFind(std::size_t n)
    : parent_(n), rank_(n, 0), components_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = int(i);
}

int UnionFind::find(int x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
}

bool UnionFind::unite(int x, int y) {
    int rx = find(x), ry = find(y);
    if (rx == ry) return false;
    if (rank_[rx] < rank_[ry]) std::swap(rx, ry);
    bool bump = rank_[rx] == rank_[ry];
    parent_[ry] = rx;
    if (bump) ++rank_[rx];
    log_.push_back(Undo{ry, rx, bump});
    --components_;
    return true;
}

void UnionFind::rollback() {
    if (log_.empty()) throw ConfigError("union-find rollback past the beginning");
    Undo u = log_.back();
    log_.pop_back();
    parent_[u.child] = u.child;
    if (u.rank_bumped) --rank_[u.parent];
    ++components_;
}

namespace {

void require_spanning(const SpanningTree& tree, std::size_t n) {
    if (n == 0) throw ConfigError("graph is empty");
    if (tree.edges.size() + 1 != n) throw ConfigError("tree does not span all nodes");
    UnionFind uf(n);
    for (const auto& e : tree.edges) {
        if (e.first < 0 || e.second < 0 || std::size_t(e.first) >= n ||
            std::size_t(e.second) >= n || e.first == e.second) {
            throw ConfigError("tree edge out of range");
        }
        if (!uf.unite(e.first, e.second)) throw ConfigError("tree contains a cycle");
    }
}

}  // namespace

bool is_fair_tree(const SpanningTree& tree, const std::vector<Role>& roles) {
    const std::size_t n = roles.size();
    require_spanning(tree, n);
    // Protected and outcome nodes may meet only through an admissible node,
    // so connect everything except edges touching admissible nodes and look
    // for a component holding both.
    UnionFind uf(n);
    for (const auto& e : tree.edges) {
        if (roles[e.first] != Role::Admissible && roles[e.second] != Role::Admissible) {
            uf.unite(e.first, e.second);
        }
    }
    std::vector<uint8_t> has_p(n, 0), has_o(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int r = uf.find(int(i));
        if (roles[i] == Role::Protected) has_p[r] = 1;
        if (roles[i] == Role::Outcome) has_o[r] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (has_p[i] && has_o[i]) return false;
    }
    return true;
}

bool has_unblocked_path(std::size_t n,
                        const std::vector<std::pair<int, int>>& forest,
                        int from, int to, const std::vector<Role>& roles) {
    if (from < 0 || to < 0 || std::size_t(from) >= n || std::size_t(to) >= n) {
        throw ConfigError("path endpoint out of range");
    }
    if (roles.size() != n) throw ConfigError("roles must cover every node");
    if (from == to) return true;
    std::vector<std::vector<int>> adj(n);
    for (const auto& e : forest) {
        adj[e.first].push_back(e.second);
        adj[e.second].push_back(e.first);
    }
    std::vector<uint8_t> seen(n, 0);
    std::deque<int> queue{from};
    seen[from] = 1;
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        for (int y : adj[x]) {
            if (y == to) return true;
            // Admissible nodes block the path; endpoints are exempt.
            if (!seen[y] && roles[y] != Role::Admissible) {
                seen[y] = 1;
                queue.push_back(y);
            }
        }
    }
    return false;
}

bool neighbor_restriction_check(const SpanningTree& tree,
                                const std::vector<Role>& roles) {
    require_spanning(tree, roles.size());
    for (const auto& e : tree.edges) {
        Role a = roles[e.first], b = roles[e.second];
        if (a == Role::Outcome && b != Role::Admissible && b != Role::Outcome) {
            return false;
        }
        if (b == Role::Outcome && a != Role::Admissible && a != Role::Outcome) {
            return false;
        }
    }
    return true;
}

namespace {

std::vector<std::pair<int, int>> all_pairs(std::size_t n) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (int i = 0; i + 1 < int(n); ++i) {
        for (int j = i + 1; j < int(n); ++j) pairs.emplace_back(i, j);
    }
    return pairs;
}

void sort_by_weight(std::vector<std::pair<int, int>>& pairs, const AttributeGraph& g) {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [&](const auto& a, const auto& b) {
                         double wa = g.weight(a.first, a.second);
                         double wb = g.weight(b.first, b.second);
                         if (wa != wb) return wa > wb;
                         return a < b;
                     });
}

struct BruteSearch {
    const AttributeGraph& g;
    const BruteForceOptions& opt;
    bool exhaustive;  // small graphs enumerate everything and settle ties

    std::vector<std::pair<int, int>> edges;
    std::vector<double> wts;
    std::vector<double> csum;  // csum[k] = sum of wts[0..k)

    UnionFind uf1;  // acyclicity and components
    UnionFind uf2;  // connectivity avoiding admissible nodes
    std::vector<uint8_t> has_p, has_o;  // valid at uf2 roots

    std::vector<std::pair<int, int>> chosen;
    double weight = 0.0;
    bool found = false;
    double best_weight = -1.0;
    std::vector<std::pair<int, int>> best_edges;
    std::uint64_t steps = 0;
    int hub = -1;

    BruteSearch(const AttributeGraph& graph, const BruteForceOptions& options,
                bool exhaustive_mode, std::vector<std::pair<int, int>> support)
        : g(graph), opt(options), exhaustive(exhaustive_mode),
          edges(std::move(support)), uf1(graph.size()), uf2(graph.size()),
          has_p(graph.size(), 0), has_o(graph.size(), 0) {
        sort_by_weight(edges, g);
        wts.reserve(edges.size());
        for (const auto& e : edges) wts.push_back(g.weight(e.first, e.second));
        csum.assign(edges.size() + 1, 0.0);
        for (std::size_t k = 0; k < edges.size(); ++k) csum[k + 1] = csum[k] + wts[k];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.role(int(i)) == Role::Protected) has_p[i] = 1;
            if (g.role(int(i)) == Role::Outcome) has_o[i] = 1;
        }
        auto adm = g.nodes_with_role(Role::Admissible);
        hub = adm.empty() ? 0 : adm.front();
    }

    void offer(double w, std::vector<std::pair<int, int>> tree_edges) {
        std::sort(tree_edges.begin(), tree_edges.end());
        if (!found || w > best_weight + 1e-12) {
            found = true;
            best_weight = w;
            best_edges = std::move(tree_edges);
        } else if (exhaustive && w > best_weight - 1e-12 && tree_edges < best_edges) {
            best_edges = std::move(tree_edges);
        }
    }

    // Completes the current forest with edges through the hub. Fair because
    // every new protected-outcome path crosses the hub, and the hub is
    // admissible whenever the instance has protected and outcome nodes.
    void offer_stitched() {
        std::vector<int> rep(g.size(), -1);
        double w = weight;
        std::vector<std::pair<int, int>> tree_edges = chosen;
        int hub_root = uf1.find(hub);
        for (std::size_t i = 0; i < g.size(); ++i) {
            int r = uf1.find(int(i));
            if (r == hub_root || rep[r] >= 0) continue;
            rep[r] = int(i);
            int a = std::min(hub, int(i)), b = std::max(hub, int(i));
            tree_edges.emplace_back(a, b);
            w += g.weight(a, b);
        }
        offer(w, std::move(tree_edges));
    }

    void run() {
        rec(0);
    }

    void rec(std::size_t k) {
        if (++steps > opt.step_cap) {
            throw GuardError("fair-tree search exceeded its step budget");
        }
        if (uf1.components() == 1) {
            offer(weight, chosen);
            return;
        }
        if (k == edges.size()) {
            if (!exhaustive) offer_stitched();
            return;
        }
        if (found) {
            std::size_t t = std::min(edges.size() - k, uf1.components() - 1);
            double ub = weight + csum[k + t] - csum[k];
            // Exhaustive mode keeps ties alive so the lexicographic rule can
            // inspect every optimum; sparse mode keeps the first one found.
            if (exhaustive ? (ub < best_weight - 1e-12) : (ub <= best_weight + 1e-12)) {
                return;
            }
        }

        const auto [u, v] = edges[k];
        if (uf1.unite(u, v)) {
            if (g.role(u) != Role::Admissible && g.role(v) != Role::Admissible) {
                // Joining two components that avoid admissible nodes can
                // expose a protected-outcome pair; that never heals later,
                // so the whole inclusion branch dies here.
                int ru = uf2.find(u), rv = uf2.find(v);
                uf2.unite(u, v);
                int nr = uf2.find(u);
                int other = (nr == ru) ? rv : ru;
                uint8_t old_p = has_p[nr], old_o = has_o[nr];
                has_p[nr] |= has_p[other];
                has_o[nr] |= has_o[other];
                if (!(has_p[nr] && has_o[nr])) {
                    chosen.emplace_back(u, v);
                    weight += wts[k];
                    rec(k + 1);
                    weight -= wts[k];
                    chosen.pop_back();
                }
                has_p[nr] = old_p;
                has_o[nr] = old_o;
                uf2.rollback();
            } else {
                chosen.emplace_back(u, v);
                weight += wts[k];
                rec(k + 1);
                weight -= wts[k];
                chosen.pop_back();
            }
            uf1.rollback();
        }
        rec(k + 1);
    }
};

}  // namespace

std::optional<SpanningTree> brute_force_optimal_fair_tree(
    const AttributeGraph& g, const BruteForceOptions& options) {
    const std::size_t n = g.size();
    if (n == 0) throw ConfigError("graph is empty");
    if (n == 1) return SpanningTree{{}, 0.0};

    const bool have_adm = !g.nodes_with_role(Role::Admissible).empty();
    const bool have_p = !g.nodes_with_role(Role::Protected).empty();
    const bool have_o = !g.nodes_with_role(Role::Outcome).empty();
    // Without admissible nodes no path can be blocked, so a protected and an
    // outcome node anywhere rule out every spanning tree.
    if (!have_adm && have_p && have_o) return std::nullopt;

    const bool exhaustive = n <= 8;
    std::vector<std::pair<int, int>> support;
    if (exhaustive) {
        support = all_pairs(n);
    } else {
        for (const auto& e : all_pairs(n)) {
            if (g.weight(e.first, e.second) > 0.0) support.push_back(e);
        }
        if (support.size() > options.max_support_edges) {
            throw GuardError("positive-weight support too wide for exact search");
        }
    }

    BruteSearch search(g, options, exhaustive, std::move(support));
    search.run();
    if (!search.found) return std::nullopt;
    SpanningTree t;
    t.edges = search.best_edges;
    // Re-sum in edge order so equal trees report bit-identical weights no
    // matter which branch of the search produced them.
    for (const auto& e : t.edges) t.total_weight += g.weight(e.first, e.second);
    return t;
}

SpanningTree kruskal_max_spanning_tree(const AttributeGraph& g) {
    if (g.size() == 0) throw ConfigError("graph is empty");
    auto pairs = all_pairs(g.size());
    sort_by_weight(pairs, g);
    UnionFind uf(g.size());
    SpanningTree t;
    for (const auto& e : pairs) {
        if (uf.unite(e.first, e.second)) {
            t.edges.push_back(e);
            t.total_weight += g.weight(e.first, e.second);
            if (t.edges.size() + 1 == g.size()) break;
        }
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

AttributeGraph parse_graph_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("graph json: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
        throw ConfigError("graph json needs an attributes array");
    }

    std::vector<std::string> names;
    std::vector<Role> roles;
    for (const auto& a : doc["attributes"]) {
        if (a.is_string()) {
            names.push_back(a.get<std::string>());
            roles.push_back(Role::Unlabeled);
        } else if (a.is_object() && a.contains("name")) {
            names.push_back(a["name"].get<std::string>());
            roles.push_back(role_from_name(a.value("role", "unlabeled")));
        } else {
            throw ConfigError("graph attribute entries need a name");
        }
    }

    {
        auto sorted = names;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ConfigError("graph attribute names must be unique");
        }
    }

    AttributeGraph g(names.size(), roles);
    auto index_of = [&](const nlohmann::json& v) -> int {
        if (v.is_number_integer()) {
            int i = v.get<int>();
            if (i < 0 || std::size_t(i) >= names.size()) {
                throw ConfigError("graph edge index out of range");
            }
            return i;
        }
        if (v.is_string()) {
            auto it = std::find(names.begin(), names.end(), v.get<std::string>());
            if (it == names.end()) {
                throw ConfigError("graph edge names an unknown attribute: " +
                                  v.get<std::string>());
            }
            return int(it - names.begin());
        }
        throw ConfigError("graph edge endpoints are names or indices");
    };

    std::vector<std::pair<int, int>> seen;
    for (const auto& e : doc.value("edges", nlohmann::json::array())) {
        if (!e.is_object() || !e.contains("a") || !e.contains("b") || !e.contains("w")) {
            throw ConfigError("graph edges need fields a, b, w");
        }
        int a = index_of(e["a"]);
        int b = index_of(e["b"]);
        if (a == b) throw ConfigError("graph has no self-edges");
        seen.emplace_back(std::min(a, b), std::max(a, b));
        g.set_weight(a, b, e["w"].get<double>());
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
        throw ConfigError("graph lists the same edge twice");
    }
    g.set_names(std::move(names));
    return g;
}

std::string serialize_graph_json(const AttributeGraph& g) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["attributes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < g.size(); ++i) {
        doc["attributes"].push_back(
            {{"name", g.name(int(i))}, {"role", role_name(g.role(int(i)))}});
    }
    doc["edges"] = nlohmann::json::array();
    for (int i = 0; i + 1 < int(g.size()); ++i) {
        for (int j = i + 1; j < int(g.size()); ++j) {
            if (g.weight(i, j) != 0.0) {
                doc["edges"].push_back({{"a", i}, {"b", j}, {"w", g.weight(i, j)}});
            }
        }
    }
    return doc.dump(2);
}

}  // namespace fairsynth
