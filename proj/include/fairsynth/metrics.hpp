#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fairsynth/dataset.hpp"
#include "fairsynth/marginals.hpp"

namespace fairsynth {

// Distribution-level distance between an original table and a synthetic copy.
struct QualityReport {
    double avg_tvd_1way = 0.0;
    double avg_tvd_2way = 0.0;
    double acd = 0.0;  // mean absolute difference in bias-corrected Cramer's V

    std::vector<double> tvd_1way;  // per attribute
    struct PairBreakdown {
        int a = 0;
        int b = 0;
        double tvd = 0.0;
        double v_original = 0.0;
        double v_synthetic = 0.0;
        double v_difference = 0.0;
    };
    std::vector<PairBreakdown> pairs;  // per attribute pair, lexicographic
};

QualityReport quality(const DiscreteTable& original, const DiscreteTable& synthetic);

// Bias-corrected Cramer's V of a 2-way count marginal: the chi-square phi^2
// is debiased by (r-1)(c-1)/(n-1) and the category counts shrunk to match,
// with r and c counting only categories that actually occur.
double cramers_v_bias_corrected(const Marginal& joint_counts);

struct FairnessGroup {
    std::vector<int> values;  // one value per admissible attribute
    std::size_t rows = 0;
    double weight = 0.0;      // empirical probability of the group
    double difference = 0.0;  // group-level privileged-minus-rest difference
    bool usable = true;       // false when a side of the split is empty
};

struct FairnessMeasure {
    double value = 0.0;        // signed difference (or weighted mean of them)
    bool defined = false;
    double skipped_mass = 0.0; // weight of groups dropped for an empty side
    std::vector<FairnessGroup> groups;  // conditional measures only
};

struct FairnessReport {
    std::string protected_attr;
    std::string outcome_attr;
    std::vector<std::string> admissible;
    std::string privileged_label;
    std::string positive_label;
    std::size_t n_privileged = 0;
    std::size_t n_unprivileged = 0;
    FairnessMeasure dp, tprb, tnrb, cdp, ctprb, ctnrb;
};

// Associational fairness measures of one table, splitting the protected
// attribute privileged-vs-rest. The true-rate measures need a row-paired
// truth table supplying labels in the outcome column and stay undefined
// without one. Conditional variants average group differences weighted by
// the empirical admissible-combination probabilities.
FairnessReport fairness(const DiscreteTable& table, int protected_attr,
                        int outcome_attr, const std::vector<int>& admissible_set,
                        int positive_outcome_value, int privileged_value,
                        const DiscreteTable* truth_table = nullptr);

// Percent-of-baseline comparison across runs sharing one metric list.
struct RunMetrics {
    std::string name;
    std::vector<std::pair<std::string, double>> metrics;
};

struct ComparisonCell {
    double percent = 0.0;
    bool defined = false;  // false when the baseline value is zero
};

struct ComparisonTable {
    std::string baseline;
    std::vector<std::string> metric_names;
    std::vector<std::string> run_names;
    std::vector<std::vector<ComparisonCell>> percent;  // [run][metric]
};

ComparisonTable compare_runs(const std::vector<RunMetrics>& runs,
                             std::string_view baseline_name);

std::string quality_report_json(const QualityReport& report);
std::string fairness_report_json(const FairnessReport& report);
std::string comparison_json(const ComparisonTable& table);

}  // namespace fairsynth
