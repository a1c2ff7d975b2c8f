#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "fairsynth/common.hpp"
#include "fairsynth/dp.hpp"
#include "fairsynth/model_graph.hpp"

namespace fairsynth {

enum class SelectorMode { Greedy, ExponentialOptimal, UnconstrainedBaseline };

SelectorMode selector_from_name(std::string_view name);
std::string selector_name(SelectorMode mode);

struct SelectionConfig {
    double rho = 0.0;  // selection-stage budget; unused when noiseless
    bool noiseless = false;
    double score_sensitivity = 1.0;
    // Cap on visited states plus frontier entries of the best-first search.
    std::size_t node_budget = 2000000;
};

// Best-first search instrumentation, filled when a pointer is supplied.
struct SearchStats {
    std::uint64_t pops = 0;
    std::uint64_t pushes = 0;
    std::size_t max_queue = 0;
    bool pop_keys_monotone = true;
    double first_tree_key = 0.0;
    double min_remaining_key = std::numeric_limits<double>::quiet_NaN();
};

// Builds a fair tree bottom-up: deletes every outcome edge whose far end is
// neither outcome nor admissible, then joins components with r-1 private
// selections at epsilon = sqrt(8 rho / (r-1)). Noiseless mode takes exact
// argmax picks (ties toward the larger pair) and charges nothing.
// Reported total_weight is measured against the graph's stored scores.
SpanningTree greedy_prefair(const AttributeGraph& scores, const SelectionConfig& cfg,
                            RngStream& rng, RdpAccountant& accountant);

// Exact maximum-weight fair tree on privately measured scores: each pair is
// measured once with Gaussian noise at sigma = sensitivity * sqrt(r / (2 rho))
// (r = number of pairs), then a best-first search over fair partial forests
// keyed by the summed shortfall from the largest measurement returns the
// first complete tree. Throws GuardError when the state budget is exceeded.
SpanningTree exponential_prefair(const AttributeGraph& scores,
                                 const SelectionConfig& cfg, RngStream& rng,
                                 RdpAccountant& accountant,
                                 SearchStats* stats = nullptr);

// Greedy selection with no edge deletion: the classical private MST used as
// the unconstrained comparison baseline.
SpanningTree baseline_mst(const AttributeGraph& scores, const SelectionConfig& cfg,
                          RngStream& rng, RdpAccountant& accountant);

// Dispatch by mode; stats apply to the exponential selector only.
SpanningTree run_selector(SelectorMode mode, const AttributeGraph& scores,
                          const SelectionConfig& cfg, RngStream& rng,
                          RdpAccountant& accountant, SearchStats* stats = nullptr);

}  // namespace fairsynth
