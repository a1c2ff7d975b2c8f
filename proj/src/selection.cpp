#include "fairsynth/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

namespace fairsynth {

SelectorMode selector_from_name(std::string_view name) {
    if (name == "greedy") return SelectorMode::Greedy;
    if (name == "optimal") return SelectorMode::ExponentialOptimal;
    if (name == "baseline") return SelectorMode::UnconstrainedBaseline;
    throw ConfigError("unknown selector: " + std::string(name));
}

std::string selector_name(SelectorMode mode) {
    switch (mode) {
        case SelectorMode::Greedy: return "greedy";
        case SelectorMode::ExponentialOptimal: return "optimal";
        case SelectorMode::UnconstrainedBaseline: return "baseline";
    }
    throw ConfigError("unknown selector mode");
}

namespace {

std::vector<std::pair<int, int>> lex_pairs(std::size_t n) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (int i = 0; i + 1 < int(n); ++i) {
        for (int j = i + 1; j < int(n); ++j) pairs.emplace_back(i, j);
    }
    return pairs;
}

bool deleted_for_outcome(const AttributeGraph& g, int i, int j) {
    Role a = g.role(i), b = g.role(j);
    auto keeps = [](Role other) {
        return other == Role::Outcome || other == Role::Admissible;
    };
    if (a == Role::Outcome && !keeps(b)) return true;
    if (b == Role::Outcome && !keeps(a)) return true;
    return false;
}

// Shared component-joining loop for the greedy selector and the baseline.
SpanningTree grow_tree(const AttributeGraph& g, const SelectionConfig& cfg,
                       RngStream& rng, RdpAccountant& accountant,
                       bool restrict_outcome_edges, const std::string& label) {
    const std::size_t n = g.size();
    if (n == 0) throw ConfigError("selection needs at least one attribute");
    auto pairs = lex_pairs(n);
    std::vector<bool> usable(pairs.size(), true);
    if (restrict_outcome_edges) {
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            usable[k] = !deleted_for_outcome(g, pairs[k].first, pairs[k].second);
        }
    }

    const std::size_t rounds = n - 1;
    if (!cfg.noiseless && rounds > 0 && !(cfg.rho > 0.0)) {
        throw ConfigError("selection budget must be positive");
    }
    const double epsilon =
        cfg.noiseless || rounds == 0 ? 0.0 : std::sqrt(8.0 * cfg.rho / double(rounds));

    UnionFind uf(n);
    std::vector<std::pair<int, int>> chosen;
    for (std::size_t round = 0; round < rounds; ++round) {
        std::vector<std::size_t> candidates;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            if (usable[k] &&
                uf.find(pairs[k].first) != uf.find(pairs[k].second)) {
                candidates.push_back(k);
            }
        }
        if (candidates.empty()) {
            throw ConfigError("no usable edge joins the remaining components; "
                              "outcome attributes need an admissible attribute");
        }

        std::size_t pick;
        if (cfg.noiseless) {
            // Exact argmax; ties resolve toward the larger pair.
            pick = candidates.front();
            for (std::size_t k : candidates) {
                double q = g.weight(pairs[k].first, pairs[k].second);
                double best = g.weight(pairs[pick].first, pairs[pick].second);
                if (q > best || (q == best && pairs[k] > pairs[pick])) pick = k;
            }
        } else {
            std::vector<double> scores;
            scores.reserve(candidates.size());
            for (std::size_t k : candidates) {
                scores.push_back(g.weight(pairs[k].first, pairs[k].second));
            }
            Selection s = exponential_mechanism(scores, epsilon,
                                                cfg.score_sensitivity, rng);
            accountant.charge(label + ".round" + std::to_string(round + 1), s.cost);
            pick = candidates[s.index];
        }
        uf.unite(pairs[pick].first, pairs[pick].second);
        chosen.push_back(pairs[pick]);
    }

    SpanningTree t;
    t.edges = normalize_edges(std::move(chosen));
    for (const auto& e : t.edges) t.total_weight += g.weight(e.first, e.second);
    return t;
}

struct Mask {
    std::uint64_t w[2] = {0, 0};

    bool operator==(const Mask& other) const {
        return w[0] == other.w[0] && w[1] == other.w[1];
    }
    bool has(std::size_t bit) const {
        return (w[bit >> 6] >> (bit & 63)) & 1u;
    }
    Mask with(std::size_t bit) const {
        Mask m = *this;
        m.w[bit >> 6] |= std::uint64_t(1) << (bit & 63);
        return m;
    }
    int count() const {
        return __builtin_popcountll(w[0]) + __builtin_popcountll(w[1]);
    }
};

struct MaskHash {
    std::size_t operator()(const Mask& m) const {
        std::uint64_t h = m.w[0] * 0x9e3779b97f4a7c15ull;
        h ^= m.w[1] + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return std::size_t(h);
    }
};

// Pair indices follow lexicographic pair order, so the mask holding the
// lowest differing bit sorts first, matching edge-list comparison.
bool mask_lex_less(const Mask& a, const Mask& b) {
    for (int word = 0; word < 2; ++word) {
        std::uint64_t diff = a.w[word] ^ b.w[word];
        if (diff) {
            std::uint64_t low = diff & (~diff + 1);
            return (a.w[word] & low) != 0;
        }
    }
    return false;
}

struct QueueEntry {
    double key;
    Mask mask;
    int edges;
};

// Min-heap order: smallest key first; on equal keys smaller forests first
// (this is what lets a flat score landscape flood the frontier, which the
// state budget is there to catch), then mask order for determinism.
struct EntryAfter {
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
        if (a.key != b.key) return a.key > b.key;
        if (a.edges != b.edges) return a.edges > b.edges;
        return mask_lex_less(b.mask, a.mask);
    }
};

}  // namespace

SpanningTree greedy_prefair(const AttributeGraph& scores, const SelectionConfig& cfg,
                            RngStream& rng, RdpAccountant& accountant) {
    return grow_tree(scores, cfg, rng, accountant, true, "greedy.select");
}

SpanningTree baseline_mst(const AttributeGraph& scores, const SelectionConfig& cfg,
                          RngStream& rng, RdpAccountant& accountant) {
    return grow_tree(scores, cfg, rng, accountant, false, "baseline.select");
}

SpanningTree exponential_prefair(const AttributeGraph& g, const SelectionConfig& cfg,
                                 RngStream& rng, RdpAccountant& accountant,
                                 SearchStats* stats) {
    const std::size_t n = g.size();
    if (n == 0) throw ConfigError("selection needs at least one attribute");
    if (n > 16) {
        throw ConfigError("the exponential selector handles at most 16 attributes; "
                          "use the greedy selector for wider tables");
    }
    const auto pairs = lex_pairs(n);

    // One private measurement per pair, spent up front.
    std::vector<double> measured(pairs.size());
    if (cfg.noiseless) {
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            measured[k] = g.weight(pairs[k].first, pairs[k].second);
        }
    } else {
        if (!(cfg.rho > 0.0)) throw ConfigError("selection budget must be positive");
        const double sigma =
            cfg.score_sensitivity * std::sqrt(double(pairs.size()) / (2.0 * cfg.rho));
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            NoisyValue v =
                gaussian_mechanism(g.weight(pairs[k].first, pairs[k].second),
                                   cfg.score_sensitivity, sigma, rng);
            measured[k] = v.value;
            accountant.charge("optimal.measure." + g.name(pairs[k].first) + "-" +
                                  g.name(pairs[k].second),
                              v.cost);
        }
    }

    double q_max = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        q_max = k == 0 ? measured[k] : std::max(q_max, measured[k]);
    }
    std::vector<double> cost(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) cost[k] = q_max - measured[k];

    const auto& roles = g.roles();
    SearchStats local;
    SearchStats& st = stats ? *stats : local;
    st = SearchStats{};

    std::vector<QueueEntry> heap;
    std::unordered_set<Mask, MaskHash> visited;
    auto push = [&](double key, const Mask& m, int edges) {
        heap.push_back(QueueEntry{key, m, edges});
        std::push_heap(heap.begin(), heap.end(), EntryAfter{});
        ++st.pushes;
        st.max_queue = std::max(st.max_queue, heap.size());
    };
    push(0.0, Mask{}, 0);
    visited.insert(Mask{});

    double last_key = -std::numeric_limits<double>::infinity();
    while (!heap.empty()) {
        if (visited.size() + heap.size() > cfg.node_budget) {
            throw GuardError("fair-tree search state budget exceeded; "
                             "lower the attribute count or use the greedy selector");
        }
        std::pop_heap(heap.begin(), heap.end(), EntryAfter{});
        QueueEntry cur = heap.back();
        heap.pop_back();
        ++st.pops;
        if (cur.key < last_key - 1e-9) st.pop_keys_monotone = false;
        last_key = cur.key;

        // Rebuild the forest state: components, plus connectivity that
        // avoids admissible nodes for the fairness filter.
        UnionFind uf(n), blocked(n);
        std::vector<std::uint8_t> has_p(n, 0), has_o(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            has_p[i] = roles[i] == Role::Protected;
            has_o[i] = roles[i] == Role::Outcome;
        }
        std::vector<std::pair<int, int>> edges;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            if (!cur.mask.has(k)) continue;
            edges.push_back(pairs[k]);
            uf.unite(pairs[k].first, pairs[k].second);
            const auto [u, v] = pairs[k];
            if (roles[u] != Role::Admissible && roles[v] != Role::Admissible) {
                int ru = blocked.find(u), rv = blocked.find(v);
                blocked.unite(u, v);
                int nr = blocked.find(u);
                has_p[nr] = has_p[ru] | has_p[rv];
                has_o[nr] = has_o[ru] | has_o[rv];
            }
        }

        if (cur.edges + 1 == int(n)) {
            SpanningTree t;
            t.edges = normalize_edges(std::move(edges));
            for (const auto& e : t.edges) {
                t.total_weight += g.weight(e.first, e.second);
            }
            if (!is_fair_tree(t, roles)) {
                throw std::logic_error("fair-tree search returned an unfair tree");
            }
            st.first_tree_key = cur.key;
            st.min_remaining_key = std::numeric_limits<double>::quiet_NaN();
            for (const auto& entry : heap) {
                if (std::isnan(st.min_remaining_key) ||
                    entry.key < st.min_remaining_key) {
                    st.min_remaining_key = entry.key;
                }
            }
            return t;
        }

        for (std::size_t k = 0; k < pairs.size(); ++k) {
            if (cur.mask.has(k)) continue;
            const auto [u, v] = pairs[k];
            if (uf.find(u) == uf.find(v)) continue;
            if (roles[u] != Role::Admissible && roles[v] != Role::Admissible) {
                int ru = blocked.find(u), rv = blocked.find(v);
                if ((has_p[ru] | has_p[rv]) && (has_o[ru] | has_o[rv])) {
                    continue;  // would open a protected-outcome path
                }
            }
            Mask next = cur.mask.with(k);
            if (visited.insert(next).second) {
                push(cur.key + cost[k], next, cur.edges + 1);
            }
        }
    }
    throw ConfigError("no fair spanning tree exists; "
                      "outcome attributes need an admissible attribute");
}

SpanningTree run_selector(SelectorMode mode, const AttributeGraph& scores,
                          const SelectionConfig& cfg, RngStream& rng,
                          RdpAccountant& accountant, SearchStats* stats) {
    switch (mode) {
        case SelectorMode::Greedy:
            return greedy_prefair(scores, cfg, rng, accountant);
        case SelectorMode::ExponentialOptimal:
            return exponential_prefair(scores, cfg, rng, accountant, stats);
        case SelectorMode::UnconstrainedBaseline:
            return baseline_mst(scores, cfg, rng, accountant);
    }
    throw ConfigError("unknown selector mode");
}

}  // namespace fairsynth
