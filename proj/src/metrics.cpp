#include "fairsynth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

#include "fairsynth/common.hpp"

namespace fairsynth {

namespace {

void check_same_schema(const Schema& a, const Schema& b) {
    if (a.size() != b.size()) {
        throw ConfigError("tables have different attribute counts");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.attributes[i].name != b.attributes[i].name ||
            a.attributes[i].domain_size != b.attributes[i].domain_size) {
            throw ConfigError("tables disagree on attribute '" +
                              a.attributes[i].name + "'");
        }
    }
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

}  // namespace

QualityReport quality(const DiscreteTable& original, const DiscreteTable& synthetic) {
    check_same_schema(original.schema(), synthetic.schema());
    const int r = int(original.n_attrs());
    QualityReport report;
    for (int i = 0; i < r; ++i) {
        report.tvd_1way.push_back(tvd(one_way(original, i), one_way(synthetic, i)));
    }
    std::vector<double> pair_tvd, pair_acd;
    for (int i = 0; i + 1 < r; ++i) {
        for (int j = i + 1; j < r; ++j) {
            Marginal mo = two_way(original, i, j);
            Marginal ms = two_way(synthetic, i, j);
            QualityReport::PairBreakdown p;
            p.a = i;
            p.b = j;
            p.tvd = tvd(mo, ms);
            p.v_original = cramers_v_bias_corrected(mo);
            p.v_synthetic = cramers_v_bias_corrected(ms);
            p.v_difference = std::abs(p.v_original - p.v_synthetic);
            report.pairs.push_back(p);
            pair_tvd.push_back(p.tvd);
            pair_acd.push_back(p.v_difference);
        }
    }
    report.avg_tvd_1way = mean(report.tvd_1way);
    report.avg_tvd_2way = mean(pair_tvd);
    report.acd = mean(pair_acd);
    return report;
}

double cramers_v_bias_corrected(const Marginal& joint_counts) {
    if (joint_counts.attrs.size() != 2) {
        throw ConfigError("Cramer's V needs a 2-way marginal");
    }
    const int rows = joint_counts.dims[0], cols = joint_counts.dims[1];
    std::vector<double> row_sum(std::size_t(rows), 0.0);
    std::vector<double> col_sum(std::size_t(cols), 0.0);
    double n = 0.0;
    for (int a = 0; a < rows; ++a) {
        for (int b = 0; b < cols; ++b) {
            double v = joint_counts.at2(a, b);
            row_sum[std::size_t(a)] += v;
            col_sum[std::size_t(b)] += v;
            n += v;
        }
    }
    if (!(n > 1.0)) return 0.0;
    // Categories that never occur carry no information; counting them would
    // inflate the bias correction.
    double r_obs = 0.0, c_obs = 0.0;
    for (double s : row_sum) r_obs += s > 0.0;
    for (double s : col_sum) c_obs += s > 0.0;
    if (r_obs < 2 || c_obs < 2) return 0.0;

    double chi2 = 0.0;
    for (int a = 0; a < rows; ++a) {
        for (int b = 0; b < cols; ++b) {
            double expected = row_sum[std::size_t(a)] * col_sum[std::size_t(b)] / n;
            if (expected > 0.0) {
                double d = joint_counts.at2(a, b) - expected;
                chi2 += d * d / expected;
            }
        }
    }
    double phi2 = chi2 / n;
    double phi2_corr =
        std::max(0.0, phi2 - (r_obs - 1.0) * (c_obs - 1.0) / (n - 1.0));
    double r_corr = r_obs - (r_obs - 1.0) * (r_obs - 1.0) / (n - 1.0);
    double c_corr = c_obs - (c_obs - 1.0) * (c_obs - 1.0) / (n - 1.0);
    double denom = std::min(r_corr, c_corr) - 1.0;
    if (!(denom > 0.0)) return 0.0;
    return std::sqrt(phi2_corr / denom);
}

namespace {

// Per-group counts of the protected split, overall and within each truth
// stratum. side index 1 = privileged.
struct Tally {
    std::size_t rows = 0;
    std::size_t side[2] = {0, 0};
    std::size_t side_pos[2] = {0, 0};
    std::size_t y_pos[2] = {0, 0};
    std::size_t y_pos_o_pos[2] = {0, 0};
    std::size_t y_neg[2] = {0, 0};
    std::size_t y_neg_o_neg[2] = {0, 0};
};

double rate(std::size_t num, std::size_t den) {
    return double(num) / double(den);
}

FairnessMeasure unconditional(const Tally& t, int which, bool have_truth) {
    FairnessMeasure m;
    switch (which) {
        case 0:
            m.defined = t.side[0] > 0 && t.side[1] > 0;
            if (m.defined) {
                m.value = rate(t.side_pos[1], t.side[1]) -
                          rate(t.side_pos[0], t.side[0]);
            }
            break;
        case 1:
            m.defined = have_truth && t.y_pos[0] > 0 && t.y_pos[1] > 0;
            if (m.defined) {
                m.value = rate(t.y_pos_o_pos[1], t.y_pos[1]) -
                          rate(t.y_pos_o_pos[0], t.y_pos[0]);
            }
            break;
        default:
            m.defined = have_truth && t.y_neg[0] > 0 && t.y_neg[1] > 0;
            if (m.defined) {
                m.value = rate(t.y_neg_o_neg[1], t.y_neg[1]) -
                          rate(t.y_neg_o_neg[0], t.y_neg[0]);
            }
            break;
    }
    return m;
}

FairnessMeasure conditional(const std::map<std::vector<int>, Tally>& groups,
                            std::size_t n, int which, bool have_truth) {
    FairnessMeasure m;
    double usable_weight = 0.0, weighted_sum = 0.0;
    for (const auto& [values, tally] : groups) {
        FairnessGroup g;
        g.values = values;
        g.rows = tally.rows;
        g.weight = double(tally.rows) / double(n);
        FairnessMeasure inner = unconditional(tally, which, have_truth);
        g.usable = inner.defined;
        g.difference = inner.value;
        if (g.usable) {
            usable_weight += g.weight;
            weighted_sum += g.weight * g.difference;
        } else {
            m.skipped_mass += g.weight;
        }
        m.groups.push_back(std::move(g));
    }
    if (usable_weight > 0.0) {
        m.defined = true;
        m.value = weighted_sum / usable_weight;
    }
    return m;
}

}  // namespace

FairnessReport fairness(const DiscreteTable& table, int protected_attr,
                        int outcome_attr, const std::vector<int>& admissible_set,
                        int positive_outcome_value, int privileged_value,
                        const DiscreteTable* truth_table) {
    const Schema& schema = table.schema();
    const int r = int(schema.size());
    const std::size_t n = table.n_rows();
    if (n == 0) throw ConfigError("cannot evaluate fairness of an empty table");
    auto check_attr = [&](int a, const char* what) {
        if (a < 0 || a >= r) {
            throw ConfigError(std::string(what) + " attribute index out of range");
        }
    };
    check_attr(protected_attr, "protected");
    check_attr(outcome_attr, "outcome");
    if (protected_attr == outcome_attr) {
        throw ConfigError("protected and outcome attributes must differ");
    }
    for (int a : admissible_set) {
        check_attr(a, "admissible");
        if (a == protected_attr || a == outcome_attr) {
            throw ConfigError("admissible set overlaps protected or outcome");
        }
    }
    if (privileged_value < 0 ||
        privileged_value >= schema.attributes[std::size_t(protected_attr)].domain_size) {
        throw ConfigError("privileged value outside the protected domain");
    }
    if (positive_outcome_value < 0 ||
        positive_outcome_value >= schema.attributes[std::size_t(outcome_attr)].domain_size) {
        throw ConfigError("positive value outside the outcome domain");
    }
    if (truth_table) {
        check_same_schema(schema, truth_table->schema());
        if (truth_table->n_rows() != n) {
            throw ConfigError("truth table must pair rows withuated table");
        }
    }

    Tally overall;
    std::map<std::vector<int>, Tally> groups;
    std::vector<int> key(admissible_set.size(), 0);
    for (std::size_t row = 0; row < n; ++row) {
        int side = table.cell(row, std::size_t(protected_attr)) == privileged_value;
        bool o_pos =
            table.cell(row, std::size_t(outcome_attr)) == positive_outcome_value;
        bool y_pos = truth_table &&
                     truth_table->cell(row, std::size_t(outcome_attr)) ==
                         positive_outcome_value;
        for (std::size_t k = 0; k < admissible_set.size(); ++k) {
            key[k] = table.cell(row, std::size_t(admissible_set[k]));
        }
        for (Tally* t : {&overall, &groups[key]}) {
            ++t->rows;
            ++t->side[side];
            t->side_pos[side] += o_pos;
            if (truth_table) {
                if (y_pos) {
                    ++t->y_pos[side];
                    t->y_pos_o_pos[side] += o_pos;
                } else {
                    ++t->y_neg[side];
                    t->y_neg_o_neg[side] += !o_pos;
                }
            }
        }
    }

    FairnessReport report;
    const AttributeSpec& ps = schema.attributes[std::size_t(protected_attr)];
    const AttributeSpec& os = schema.attributes[std::size_t(outcome_attr)];
    report.protected_attr = ps.name;
    report.outcome_attr = os.name;
    for (int a : admissible_set) {
        report.admissible.push_back(schema.attributes[std::size_t(a)].name);
    }
    report.privileged_label = ps.label_for(privileged_value);
    report.positive_label = os.label_for(positive_outcome_value);
    report.n_privileged = overall.side[1];
    report.n_unprivileged = overall.side[0];
    const bool have_truth = truth_table != nullptr;
    report.dp = unconditional(overall, 0, have_truth);
    report.tprb = unconditional(overall, 1, have_truth);
    report.tnrb = unconditional(overall, 2, have_truth);
    report.cdp = conditional(groups, n, 0, have_truth);
    report.ctprb = conditional(groups, n, 1, have_truth);
    report.ctnrb = conditional(groups, n, 2, have_truth);
    return report;
}

ComparisonTable compare_runs(const std::vector<RunMetrics>& runs,
                             std::string_view baseline_name) {
    const RunMetrics* base = nullptr;
    for (const auto& run : runs) {
        if (run.name == baseline_name) base = &run;
    }
    if (!base) throw ConfigError("baseline run not found in comparison input");

    ComparisonTable table;
    table.baseline = base->name;
    for (const auto& [name, value] : base->metrics) {
        (void)value;
        table.metric_names.push_back(name);
    }
    for (const auto& run : runs) {
        if (run.metrics.size() != base->metrics.size()) {
            throw ConfigError("runs disagree on the metric list");
        }
        std::vector<ComparisonCell> cells;
        for (std::size_t m = 0; m < run.metrics.size(); ++m) {
            if (run.metrics[m].first != base->metrics[m].first) {
                throw ConfigError("runs disagree on the metric list");
            }
            ComparisonCell cell;
            double denom = base->metrics[m].second;
            if (denom != 0.0) {
                cell.defined = true;
                cell.percent = 100.0 * run.metrics[m].second / denom;
            }
            cells.push_back(cell);
        }
        table.run_names.push_back(run.name);
        table.percent.push_back(std::move(cells));
    }
    return table;
}

namespace {

nlohmann::json measure_json(const FairnessMeasure& m, bool with_groups) {
    nlohmann::json j{{"defined", m.defined},
                     {"value", m.value},
                     {"abs", std::abs(m.value)},
                     {"sign", m.value < 0 ? -1 : (m.value > 0 ? 1 : 0)}};
    if (with_groups) {
        j["skipped_mass"] = m.skipped_mass;
        auto& groups = j["groups"] = nlohmann::json::array();
        for (const auto& g : m.groups) {
            groups.push_back({{"values", g.values},
                              {"rows", g.rows},
                              {"weight", g.weight},
                              {"difference", g.difference},
                              {"usable", g.usable}});
        }
    }
    return j;
}

}  // namespace

std::string quality_report_json(const QualityReport& report) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["avg_tvd_1way"] = report.avg_tvd_1way;
    doc["avg_tvd_2way"] = report.avg_tvd_2way;
    doc["acd"] = report.acd;
    doc["tvd_1way"] = report.tvd_1way;
    auto& pairs = doc["pairs"] = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back({{"a", p.a},
                         {"b", p.b},
                         {"tvd", p.tvd},
                         {"v_original", p.v_original},
                         {"v_synthetic", p.v_synthetic},
                         {"v_difference", p.v_difference}});
    }
    return doc.dump(2);
}

std::string fairness_report_json(const FairnessReport& report) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["protected"] = report.protected_attr;
    doc["outcome"] = report.outcome_attr;
    doc["admissible"] = report.admissible;
    doc["privileged_label"] = report.privileged_label;
    doc["positive_label"] = report.positive_label;
    doc["support"] = {{"privileged", report.n_privileged},
                      {"unprivileged", report.n_unprivileged}};
    doc["dp"] = measure_json(report.dp, false);
    doc["tprb"] = measure_json(report.tprb, false);
    doc["tnrb"] = measure_json(report.tnrb, false);
    doc["cdp"] = measure_json(report.cdp, true);
    doc["ctprb"] = measure_json(report.ctprb, true);
    doc["ctnrb"] = measure_json(report.ctnrb, true);
    return doc.dump(2);
}

std::string comparison_json(const ComparisonTable& table) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["baseline"] = table.baseline;
    doc["metrics"] = table.metric_names;
    auto& runs = doc["runs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < table.run_names.size(); ++i) {
        nlohmann::json row;
        row["name"] = table.run_names[i];
        auto& percent = row["percent"] = nlohmann::json::array();
        for (const auto& cell : table.percent[i]) {
            if (cell.defined) {
                percent.push_back(cell.percent);
            } else {
                percent.push_back(nullptr);
            }
        }
        runs.push_back(std::move(row));
    }
    return doc.dump(2);
}

}  // namespace fairsynth
