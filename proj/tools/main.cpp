#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fairsynth/hardness.hpp"
#include "fairsynth/pipeline.hpp"

namespace {

using namespace fairsynth;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

int cmd_generate(const RunConfig& cfg) {
    const GenerateResult result = run_generate(cfg);
    if (!cfg.graph_json.empty()) {
        std::printf("selected tree: weight %g, %zu edges (%s)\n",
                    result.model.tree.total_weight, result.model.tree.edges.size(),
                    selector_name(cfg.selector).c_str());
    } else {
        std::printf("synthetic rows: %zu; tree weight: %g (%s)\n",
                    result.synthetic.n_rows(), result.model.tree.total_weight,
                    selector_name(cfg.selector).c_str());
    }
    if (cfg.noiseless) {
        std::printf("budget: noiseless run, nothing spent\n");
    } else {
        std::printf("budget: rho %.12g spent; epsilon %.9g at delta %g\n",
                    result.budget.total_rho, result.budget.epsilon,
                    result.budget.delta);
    }
    return 0;
}

int cmd_evaluate(const EvaluateConfig& cfg) {
    const EvaluateResult result = run_evaluate(cfg);
    std::printf("avg 1-way tvd: %.6f\n", result.quality.avg_tvd_1way);
    std::printf("avg 2-way tvd: %.6f\n", result.quality.avg_tvd_2way);
    std::printf("attribute correlation difference: %.6f\n", result.quality.acd);
    if (result.fairness_computed) {
        const auto print_measure = [](const char* name, const FairnessMeasure& o,
                                      const FairnessMeasure& s) {
            if (o.defined && s.defined) {
                std::printf("%s: original %+.6f, synthetic %+.6f\n", name, o.value,
                            s.value);
            } else {
                std::printf("%s: undefined\n", name);
            }
        };
        print_measure("demographic parity", result.fairness_original.dp,
                      result.fairness_synthetic.dp);
        print_measure("conditional demographic parity",
                      result.fairness_original.cdp, result.fairness_synthetic.cdp);
    }
    return 0;
}

int cmd_reduce(const std::string& cnf_path, const std::string& out_path) {
    const SatInstance phi = parse_dimacs(slurp(cnf_path));
    const ReductionOutput red = reduce(phi);

    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["n_vars"] = phi.n_vars;
    doc["n_clauses"] = phi.clauses.size();
    doc["k"] = red.k;
    doc["graph"] = nlohmann::json::parse(serialize_graph_json(red.graph));
    const std::string text = doc.dump(2) + "\n";

    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw ConfigError("cannot write file: " + out_path);
        out << text;
    } else {
        std::fputs(text.c_str(), stdout);
    }
    std::printf("reduced %d variables, %zu clauses to %zu nodes; target weight k = %g\n",
                phi.n_vars, phi.clauses.size(), red.graph.size(), red.k);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentially private synthetic data with justifiably fair "
                 "tree models"};
    app.require_subcommand(1);

    RunConfig gen;
    std::vector<double> splits;
    std::string selector = "greedy";
    auto* generate = app.add_subcommand(
        "generate", "Fit a private fair tree model and sample a synthetic copy");
    generate->add_option("--input", gen.input_csv, "Source CSV of discrete attributes");
    generate->add_option("--roles", gen.roles_path,
                         "Role config JSON (protected/admissible/outcome)");
    generate->add_option("--graph", gen.graph_json,
                         "Score graph JSON; selection only, no data stages");
    generate->add_option("--epsilon", gen.epsilon, "Privacy budget epsilon");
    generate->add_option("--delta", gen.delta,
                         "Privacy parameter delta (default 1/n^2)");
    generate->add_option("--rho", gen.rho, "Privacy budget rho, bypassing epsilon");
    generate->add_option("--splits", splits,
                         "Stage fractions: one-way, selection, model")
        ->expected(3);
    generate->add_option("--selector", selector, "greedy | optimal | baseline");
    generate->add_flag("--noiseless", gen.noiseless,
                       "Exact measurements, no privacy guarantee");
    generate->add_option("--rows", gen.n_out, "Synthetic rows (default: match input)");
    generate->add_option("--seed", gen.seed, "Root seed for every random draw");
    generate->add_option("--out-csv", gen.out_csv, "Synthetic data destination");
    generate->add_option("--out-model", gen.out_model, "Model JSON destination");
    generate->add_option("--out-budget", gen.out_budget, "Budget report destination");

    EvaluateConfig eval;
    auto* evaluate = app.add_subcommand(
        "evaluate", "Compare a synthetic copy against its original");
    evaluate->add_option("--original", eval.original_csv, "Original CSV")->required();
    evaluate->add_option("--synthetic", eval.synthetic_csv, "Synthetic CSV")->required();
    evaluate->add_option("--roles", eval.roles_path, "Role config JSON");
    evaluate->add_option("--protected", eval.protected_name,
                         "Protected attribute (default: the role-tagged one)");
    evaluate->add_option("--outcome", eval.outcome_name,
                         "Outcome attribute (default: the role-tagged one)");
    evaluate->add_option("--privileged", eval.privileged_label,
                         "Privileged value of the protected attribute");
    evaluate->add_option("--positive", eval.positive_label,
                         "Positive value of the outcome attribute");
    evaluate->add_option("--out-quality", eval.out_quality, "Quality JSON destination");
    evaluate->add_option("--out-fairness", eval.out_fairness,
                         "Fairness JSON destination");

    std::string cnf_path, reduce_out;
    auto* reduce_cmd = app.add_subcommand(
        "reduce", "Turn a 3-CNF DIMACS file into a fair-tree instance");
    reduce_cmd->add_option("--cnf", cnf_path, "DIMACS CNF input")->required();
    reduce_cmd->add_option("--out", reduce_out,
                           "Destination for the instance JSON (default: stdout)");

    std::uint64_t selftest_seed = 1;
    auto* selftest = app.add_subcommand("selftest", "Quick end-to-end smoke checks");
    selftest->add_option("--seed", selftest_seed, "Root seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (generate->parsed()) {
            if (!splits.empty()) {
                gen.split_one_way = splits[0];
                gen.split_selection = splits[1];
                gen.split_model = splits[2];
            }
            gen.selector = selector_from_name(selector);
            return cmd_generate(gen);
        }
        if (evaluate->parsed()) return cmd_evaluate(eval);
        if (reduce_cmd->parsed()) return cmd_reduce(cnf_path, reduce_out);
        if (selftest->parsed()) return run_selftest(selftest_seed) ? 0 : 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const BudgetError& e) {
        std::fprintf(stderr, "budget error: %s\n", e.what());
        return 3;
    } catch (const GuardError& e) {
        std::fprintf(stderr, "guard tripped: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
