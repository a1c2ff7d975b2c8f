#include "fairsynth/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "json.hpp"

#include "fairsynth/marginals.hpp"

namespace fairsynth {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << text;
    if (!out) throw ConfigError("write failed: " + path);
}

struct ResolvedBudget {
    double rho = 0.0;
    double delta = 0.0;
    double epsilon = 0.0;
    double alpha = 0.0;
};

// n_rows = 0 means "no data to default delta from" (graph mode).
ResolvedBudget resolve_budget(const RunConfig& cfg, std::size_t n_rows) {
    ResolvedBudget out;
    if (cfg.noiseless) return out;

    double delta = cfg.delta;
    if (delta <= 0.0) {
        if (n_rows == 0) {
            throw ConfigError(
                "a noisy run without row data cannot default delta; pass --delta");
        }
        delta = 1.0 / (double(n_rows) * double(n_rows));
    }
    out.delta = delta;
    out.rho = cfg.rho > 0.0 ? cfg.rho : dp_to_rho(cfg.epsilon, delta);
    const DpPoint p = rdp_to_dp(out.rho, delta);
    out.epsilon = p.epsilon;
    out.alpha = p.alpha;
    return out;
}

// Pairwise L1 distances between the actual two-way counts and the
// independence estimate built from the (possibly noisy) one-way counts.
AttributeGraph score_graph(const DiscreteTable& table,
                           const std::vector<Marginal>& one_ways) {
    const std::size_t r = table.n_attrs();
    AttributeGraph g(r, table.schema().roles());
    std::vector<std::string> names;
    names.reserve(r);
    for (const auto& a : table.schema().attributes) names.push_back(a.name);
    g.set_names(std::move(names));
    const double n = double(table.n_rows());
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = i + 1; j < r; ++j) {
            const Marginal actual = two_way(table, int(i), int(j));
            const Marginal est =
                estimate_two_way_from_one_way(one_ways[i], one_ways[j], n);
            g.set_weight(int(i), int(j), l1_score(actual, est));
        }
    }
    return g;
}

BudgetReport finish_report(const ResolvedBudget& b, bool noiseless, double s1,
                           double s2, double s3, const RdpAccountant& acc) {
    BudgetReport report;
    report.noiseless = noiseless;
    report.rho = b.rho;
    report.delta = b.delta;
    report.epsilon = b.epsilon;
    report.alpha = b.alpha;
    report.stage_one_way = s1;
    report.stage_selection = s2;
    report.stage_model = s3;
    report.charges = acc.entries();
    report.total_rho = acc.total_rho();
    return report;
}

int resolve_attr(const Schema& schema, const std::string& name, Role fallback_role) {
    if (!name.empty()) {
        const int idx = schema.index_of(name);
        if (idx < 0) throw ConfigError("no attribute named '" + name + "'");
        return idx;
    }
    const auto tagged = schema.indices_with_role(fallback_role);
    if (tagged.size() == 1) return tagged.front();
    return -1;
}

int resolve_label(const AttributeSpec& attr, const std::string& label) {
    for (int code = 0; code < attr.domain_size; ++code) {
        if (attr.label_for(code) == label) return code;
    }
    throw ConfigError("attribute '" + attr.name + "' has no value '" + label + "'");
}

}  // namespace

void RunConfig::validate() const {
    if (!input_csv.empty() && !graph_json.empty()) {
        throw ConfigError("pass either an input CSV or a score graph, not both");
    }
    if (!graph_json.empty() && !out_csv.empty()) {
        throw ConfigError("selection-only runs produce no rows to write");
    }
    const bool has_eps = epsilon >= 0.0;
    const bool has_rho = rho >= 0.0;
    const bool has_delta = delta >= 0.0;
    if (noiseless) {
        if (has_eps || has_rho || has_delta) {
            throw ConfigError("noiseless runs take no privacy budget");
        }
    } else {
        if (has_eps == has_rho) {
            throw ConfigError(
                "set exactly one of epsilon (with optional delta) or rho");
        }
        if (has_eps && !(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (has_rho && !(rho > 0.0)) throw ConfigError("rho must be positive");
        if (has_delta && !(delta > 0.0 && delta < 1.0)) {
            throw ConfigError("delta must lie in (0, 1)");
        }
    }
    if (!(split_one_way > 0.0) || !(split_selection > 0.0) || !(split_model > 0.0)) {
        throw ConfigError("stage fractions must be positive");
    }
    const double sum = split_one_way + split_selection + split_model;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("stage fractions must sum to 1");
    }
}

std::string budget_report_json(const BudgetReport& report) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["noiseless"] = report.noiseless;
    doc["rho"] = report.rho;
    doc["delta"] = report.delta;
    doc["epsilon"] = report.epsilon;
    doc["alpha"] = report.alpha;
    doc["splits"] = {{"one_way", report.stage_one_way},
                     {"selection", report.stage_selection},
                     {"model", report.stage_model}};
    auto charges = nlohmann::json::array();
    for (const auto& e : report.charges) {
        charges.push_back({{"label", e.label}, {"rho", e.rho}});
    }
    doc["charges"] = std::move(charges);
    doc["total_rho"] = report.total_rho;
    return doc.dump(2) + "\n";
}

GenerateResult generate_from_table(const DiscreteTable& table, const RunConfig& cfg) {
    cfg.validate();
    if (table.n_attrs() < 2) {
        throw ConfigError("generation needs at least two attributes");
    }
    if (table.n_rows() == 0) throw ConfigError("generation needs at least one row");

    const ResolvedBudget budget = resolve_budget(cfg, table.n_rows());
    const double rho1 = cfg.split_one_way * budget.rho;
    const double rho2 = cfg.split_selection * budget.rho;
    // Complement, so the three stages sum to the total exactly.
    const double rho3 = budget.rho - rho1 - rho2;

    RdpAccountant accountant;
    RngStream rng_one_way = RngStream::derive(cfg.seed, "pipeline.one_way");
    RngStream rng_select = RngStream::derive(cfg.seed, "pipeline.select");
    RngStream rng_model = RngStream::derive(cfg.seed, "pipeline.model");
    RngStream rng_sample = RngStream::derive(cfg.seed, "pipeline.sample");

    const std::vector<Marginal> one_ways =
        measure_one_way_counts(table, rho1, rng_one_way, accountant, cfg.noiseless);
    const AttributeGraph scores = score_graph(table, one_ways);

    SelectionConfig sel;
    sel.rho = rho2;
    sel.noiseless = cfg.noiseless;

    GenerateResult result;
    const SpanningTree tree =
        run_selector(cfg.selector, scores, sel, rng_select, accountant, &result.stats);

    result.model = measure_model(table, tree, rho3, rng_model, accountant, &one_ways,
                                 cfg.noiseless);
    if (!cfg.noiseless) accountant.assert_total(budget.rho);

    const std::size_t n_out = cfg.n_out > 0 ? cfg.n_out : table.n_rows();
    result.synthetic = sample(result.model, n_out, rng_sample);
    result.budget =
        finish_report(budget, cfg.noiseless, rho1, rho2, rho3, accountant);
    return result;
}

GraphSelectResult select_from_graph(const AttributeGraph& g, const RunConfig& cfg) {
    cfg.validate();
    const ResolvedBudget budget = resolve_budget(cfg, 0);

    RdpAccountant accountant;
    RngStream rng_select = RngStream::derive(cfg.seed, "pipeline.select");

    SelectionConfig sel;
    sel.rho = budget.rho;  // no data stages; the selector takes everything
    sel.noiseless = cfg.noiseless;

    GraphSelectResult result;
    result.tree = run_selector(cfg.selector, g, sel, rng_select, accountant,
                               &result.stats);
    if (!cfg.noiseless) accountant.assert_total(budget.rho);
    result.budget =
        finish_report(budget, cfg.noiseless, 0.0, budget.rho, 0.0, accountant);
    return result;
}

namespace {

std::string selection_result_json(const AttributeGraph& g,
                                  const GraphSelectResult& result,
                                  const RunConfig& cfg) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["selector"] = selector_name(cfg.selector);
    doc["noiseless"] = cfg.noiseless;
    auto edges = nlohmann::json::array();
    for (const auto& [a, b] : result.tree.edges) {
        edges.push_back(
            {{"a", g.name(a)}, {"b", g.name(b)}, {"w", g.weight(a, b)}});
    }
    doc["tree"] = {{"total_weight", result.tree.total_weight},
                   {"edges", std::move(edges)}};
    if (cfg.selector == SelectorMode::ExponentialOptimal) {
        doc["search"] = {{"pops", result.stats.pops},
                         {"pushes", result.stats.pushes},
                         {"max_queue", result.stats.max_queue}};
    }
    return doc.dump(2) + "\n";
}

}  // namespace

GenerateResult run_generate(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.input_csv.empty() == cfg.graph_json.empty()) {
        throw ConfigError("pass exactly one of an input CSV or a score graph");
    }

    if (!cfg.graph_json.empty()) {
        const AttributeGraph g = parse_graph_json(slurp(cfg.graph_json));
        GraphSelectResult sel = select_from_graph(g, cfg);
        if (!cfg.out_model.empty()) {
            spill(cfg.out_model, selection_result_json(g, sel, cfg));
        }
        if (!cfg.out_budget.empty()) {
            spill(cfg.out_budget, budget_report_json(sel.budget));
        }
        GenerateResult out;
        out.model.tree = std::move(sel.tree);
        out.budget = std::move(sel.budget);
        out.stats = sel.stats;
        return out;
    }

    RoleConfig roles;
    if (!cfg.roles_path.empty()) roles = RoleConfig::from_json_file(cfg.roles_path);
    const DiscreteTable table = load_csv(cfg.input_csv, roles);
    GenerateResult result = generate_from_table(table, cfg);
    if (!cfg.out_csv.empty()) write_csv(result.synthetic, cfg.out_csv);
    if (!cfg.out_model.empty()) spill(cfg.out_model, serialize_model_json(result.model));
    if (!cfg.out_budget.empty()) {
        spill(cfg.out_budget, budget_report_json(result.budget));
    }
    return result;
}

DiscreteTable align_to_schema(const Schema& ref, const DiscreteTable& table) {
    if (table.n_attrs() != ref.size()) {
        throw ConfigError("attribute count differs from the reference data");
    }
    for (std::size_t a = 0; a < ref.size(); ++a) {
        if (table.schema().attributes[a].name != ref.attributes[a].name) {
            throw ConfigError("attribute order differs from the reference data: '" +
                              table.schema().attributes[a].name + "' vs '" +
                              ref.attributes[a].name + "'");
        }
    }

    std::vector<std::unordered_map<std::string, int>> code_of(ref.size());
    for (std::size_t a = 0; a < ref.size(); ++a) {
        const auto& spec = ref.attributes[a];
        for (int code = 0; code < spec.domain_size; ++code) {
            code_of[a].emplace(spec.label_for(code), code);
        }
    }

    DiscreteTable out(ref, table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        for (std::size_t a = 0; a < ref.size(); ++a) {
            const std::string label =
                table.schema().attributes[a].label_for(table.cell(r, a));
            const auto hit = code_of[a].find(label);
            if (hit == code_of[a].end()) {
                throw ConfigError("attribute '" + ref.attributes[a].name +
                                  "' holds value '" + label +
                                  "' absent from the reference data");
            }
            out.cell(r, a) = hit->second;
        }
    }
    return out;
}

EvaluateResult run_evaluate(const EvaluateConfig& cfg) {
    RoleConfig roles;
    if (!cfg.roles_path.empty()) roles = RoleConfig::from_json_file(cfg.roles_path);
    const DiscreteTable original = load_csv(cfg.original_csv, roles);
    const DiscreteTable synthetic =
        align_to_schema(original.schema(), load_csv(cfg.synthetic_csv));

    EvaluateResult result;
    result.quality = quality(original, synthetic);
    if (!cfg.out_quality.empty()) {
        spill(cfg.out_quality, quality_report_json(result.quality));
    }

    const Schema& schema = original.schema();
    const int prot = resolve_attr(schema, cfg.protected_name, Role::Protected);
    const int outc = resolve_attr(schema, cfg.outcome_name, Role::Outcome);
    const bool want_fairness = prot >= 0 && outc >= 0 &&
                               !cfg.privileged_label.empty() &&
                               !cfg.positive_label.empty();
    if (want_fairness) {
        const int privileged = resolve_label(schema.attributes[prot],
                                             cfg.privileged_label);
        const int positive = resolve_label(schema.attributes[outc],
                                           cfg.positive_label);
        const std::vector<int> admissible = schema.indices_with_role(Role::Admissible);
        result.fairness_original =
            fairness(original, prot, outc, admissible, positive, privileged);
        result.fairness_synthetic =
            fairness(synthetic, prot, outc, admissible, positive, privileged);
        result.fairness_computed = true;
        if (!cfg.out_fairness.empty()) {
            nlohmann::json doc;
            doc["schema_version"] = 1;
            doc["original"] =
                nlohmann::json::parse(fairness_report_json(result.fairness_original));
            doc["synthetic"] =
                nlohmann::json::parse(fairness_report_json(result.fairness_synthetic));
            spill(cfg.out_fairness, doc.dump(2) + "\n");
        }
    } else if (!cfg.out_fairness.empty()) {
        throw ConfigError(
            "writing a fairness report needs protected and outcome attributes "
            "plus privileged and positive values");
    }
    return result;
}

DiscreteTable make_fidelity_source(std::uint64_t seed, std::size_t rows) {
    Schema schema;
    schema.attributes = {
        {"region", 4, Role::Unlabeled, {}},  {"tier", 3, Role::Unlabeled, {}},
        {"usage", 5, Role::Unlabeled, {}},   {"plan", 3, Role::Unlabeled, {}},
        {"tenure", 4, Role::Unlabeled, {}},  {"churn", 2, Role::Unlabeled, {}},
    };
    schema.validate();

    DiscreteTable table(schema, rows);
    RngStream rng = RngStream::derive(seed, "fidelity.source");
    for (std::size_t r = 0; r < rows; ++r) {
        const int z = int(rng.uniform_index(4));
        const int region = rng.uniform() < 0.7 ? z : int(rng.uniform_index(4));
        const int tier =
            rng.uniform() < 0.6 ? std::min(z, 2) : int(rng.uniform_index(3));
        const int usage = rng.uniform() < 0.65 ? std::min(z + int(rng.uniform_index(2)), 4)
                                               : int(rng.uniform_index(5));
        const int plan = rng.uniform() < 0.55 ? tier : int(rng.uniform_index(3));
        const int tenure = rng.uniform() < 0.5 ? (region + int(rng.uniform_index(2))) % 4
                                               : int(rng.uniform_index(4));
        const double p_churn = usage <= 1 ? 0.6 : 0.25;
        const int churn = rng.uniform() < p_churn ? 1 : 0;
        const int vals[6] = {region, tier, usage, plan, tenure, churn};
        for (std::size_t a = 0; a < 6; ++a) table.cell(r, a) = vals[a];
    }
    return table;
}

DiscreteTable make_biased_source(std::uint64_t seed, std::size_t rows) {
    Schema schema;
    schema.attributes = {
        {"group", 2, Role::Protected, {"g0", "g1"}},
        {"skill", 3, Role::Admissible, {"low", "mid", "high"}},
        {"review", 3, Role::Unlabeled, {"weak", "ok", "strong"}},
        {"approved", 2, Role::Outcome, {"no", "yes"}},
    };
    schema.validate();

    DiscreteTable table(schema, rows);
    RngStream rng = RngStream::derive(seed, "biased.source");
    for (std::size_t r = 0; r < rows; ++r) {
        const int g = rng.uniform() < 0.5 ? 1 : 0;
        const double u = rng.uniform();
        // Privileged group skews high-skill; the disadvantaged one mirrors it.
        int skill;
        if (g == 1) {
            skill = u < 0.1 ? 0 : (u < 0.4 ? 1 : 2);
        } else {
            skill = u < 0.6 ? 0 : (u < 0.9 ? 1 : 2);
        }
        const int review =
            std::clamp(skill + int(rng.uniform_index(3)) - 1, 0, 2);
        static constexpr double kBase[3] = {0.3, 0.35, 0.4};
        // The direct group effect dominates the skill-mediated one, so an
        // unconstrained spanning tree links group to approved directly while
        // fair selection has to cut that edge.
        const double p_yes = kBase[skill] + 0.3 * g;
        const int approved = rng.uniform() < p_yes ? 1 : 0;
        table.cell(r, 0) = g;
        table.cell(r, 1) = skill;
        table.cell(r, 2) = review;
        table.cell(r, 3) = approved;
    }
    return table;
}

bool run_selftest(std::uint64_t seed) {
    bool all_ok = true;
    const auto check = [&](const char* label, bool ok) {
        std::printf("[%s] %s\n", ok ? "ok" : "fail", label);
        if (!ok) all_ok = false;
    };

    {
        const double rho = dp_to_rho(1.0, 1e-6);
        const DpPoint p = rdp_to_dp(rho, 1e-6);
        check("privacy conversion round-trips", std::abs(p.epsilon - 1.0) <= 1e-6);
    }
    {
        DiscreteTable source = make_biased_source(seed, 20000);
        RunConfig cfg;
        cfg.noiseless = true;
        cfg.seed = seed;
        const GenerateResult result = generate_from_table(source, cfg);
        const bool fair =
            is_fair_tree(result.model.tree, source.schema().roles());
        check("noiseless pipeline picks a fair tree", fair);

        const std::vector<int> adm = {1};
        const FairnessReport before = fairness(source, 0, 3, adm, 1, 1);
        const FairnessReport after = fairness(result.synthetic, 0, 3, adm, 1, 1);
        check("synthetic data drops the direct group effect",
              after.cdp.defined && std::abs(after.cdp.value) < std::abs(before.cdp.value));
    }
    {
        DiscreteTable source = make_biased_source(seed + 1, 5000);
        RunConfig cfg;
        cfg.rho = 1.0;
        cfg.seed = seed;
        const GenerateResult result = generate_from_table(source, cfg);
        const bool exact =
            std::abs(result.budget.total_rho - 1.0) <= 1e-12;
        const DpPoint p = rdp_to_dp(result.budget.rho, result.budget.delta);
        check("accountant spends the configured budget exactly", exact);
        check("reported epsilon rederives from the ledger",
              std::abs(p.epsilon - result.budget.epsilon) <= 1e-9);
    }
    return all_ok;
}

}  // namespace fairsynth
