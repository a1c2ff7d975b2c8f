#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairsynth/common.hpp"
#include "fairsynth/dataset.hpp"
#include "fairsynth/dp.hpp"
#include "fairsynth/metrics.hpp"
#include "fairsynth/model_graph.hpp"
#include "fairsynth/sampler.hpp"
#include "fairsynth/selection.hpp"

namespace fairsynth {

// Orchestration: config in, staged measure/select/measure/sample out, with
// one accountant across the run and every random draw tied to the seed.

struct RunConfig {
    // Exactly one of input_csv (full pipeline) or graph_json (selection on a
    // ready-made score graph, no data stages).
    std::string input_csv;
    std::string roles_path;  // optional roles JSON applied to the CSV header
    std::string graph_json;

    // Budget: noiseless runs take none; otherwise exactly one of epsilon
    // (delta optional, defaulting to 1/n^2) or rho. Negative means unset.
    double epsilon = -1.0;
    double delta = -1.0;
    double rho = -1.0;

    // Stage fractions of the total rho; must be positive and sum to 1.
    double split_one_way = 1.0 / 3.0;
    double split_selection = 1.0 / 3.0;
    double split_model = 1.0 / 3.0;

    SelectorMode selector = SelectorMode::Greedy;
    bool noiseless = false;
    std::size_t n_out = 0;  // 0: match the input row count
    std::uint64_t seed = 1;

    std::string out_csv;
    std::string out_model;
    std::string out_budget;

    void validate() const;
};

struct BudgetReport {
    bool noiseless = false;
    double rho = 0.0;
    double delta = 0.0;    // 0 when noiseless
    double epsilon = 0.0;  // rdp_to_dp(rho, delta); 0 when noiseless
    double alpha = 0.0;
    double stage_one_way = 0.0;
    double stage_selection = 0.0;
    double stage_model = 0.0;
    std::vector<RdpAccountant::Entry> charges;
    double total_rho = 0.0;
};

std::string budget_report_json(const BudgetReport& report);

struct GenerateResult {
    TreeModel model;
    DiscreteTable synthetic;
    BudgetReport budget;
    SearchStats stats;  // populated by the exponential selector
};

// Full three-stage pipeline on an in-memory table: noisy one-way counts,
// private fair-tree selection on L1 scores between actual two-way counts and
// their independence estimates, edge-joint measurement reusing the stage-1
// one-ways, then ancestral sampling.
GenerateResult generate_from_table(const DiscreteTable& table, const RunConfig& cfg);

// Selection-only mode: the whole budget goes to the selector.
struct GraphSelectResult {
    SpanningTree tree;
    BudgetReport budget;
    SearchStats stats;
};
GraphSelectResult select_from_graph(const AttributeGraph& g, const RunConfig& cfg);

// File-level wrapper: loads inputs, dispatches on mode, writes whichever of
// out_csv / out_model / out_budget are set.
GenerateResult run_generate(const RunConfig& cfg);

struct EvaluateConfig {
    std::string original_csv;
    std::string synthetic_csv;
    std::string roles_path;
    // Fairness column selection; empty protected/outcome names resolve to
    // the unique role-tagged attributes when present.
    std::string protected_name;
    std::string outcome_name;
    std::string privileged_label;
    std::string positive_label;
    std::string out_quality;
    std::string out_fairness;
};

struct EvaluateResult {
    QualityReport quality;
    bool fairness_computed = false;
    FairnessReport fairness_original;
    FairnessReport fairness_synthetic;
};

// Quality always; fairness when a protected and an outcome attribute with
// privileged/positive labels are resolvable. The synthetic file is re-coded
// through the original file's value coding before any comparison.
EvaluateResult run_evaluate(const EvaluateConfig& cfg);

// Re-encodes `table` so its integer codes mean the same labels as `ref`.
// Throws ConfigError on label values absent from the reference coding.
DiscreteTable align_to_schema(const Schema& ref, const DiscreteTable& table);

// Seeded 6-attribute benchmark source with overlapping pairwise structure;
// used by the sampling-fidelity checks.
DiscreteTable make_fidelity_source(std::uint64_t seed, std::size_t rows);

// Seeded bias benchmark: protected group, admissible skill, unlabeled review,
// outcome approved. The outcome depends on skill (mediated path) and on the
// group directly (unmediated path), so fair selection must cut the direct
// edge while an unconstrained spanning tree keeps it.
DiscreteTable make_biased_source(std::uint64_t seed, std::size_t rows);

// Quick end-to-end smoke checks; prints one line per check, returns false
// when any fails.
bool run_selftest(std::uint64_t seed);

}  // namespace fairsynth
