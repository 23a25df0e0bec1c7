#include "aet/error.hpp"
#include "aet/io.hpp"
#include "aet/report.hpp"

#include <CLI11.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace aet;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out = "aet-out";
    std::uint64_t seed = 0;
    int replications = 0;
    std::string method;
    std::string scenario;
    double lambda_terms = 0.0;
    double lambda_knots = 0.0;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* reps_opt = nullptr;
    CLI::Option* method_opt = nullptr;
    CLI::Option* scenario_opt = nullptr;
    CLI::Option* lambda_terms_opt = nullptr;
    CLI::Option* lambda_knots_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file; flags override its fields");
    args.seed_opt = cmd->add_option("--seed", args.seed, "Base random seed");
    args.reps_opt = cmd->add_option("--replications", args.replications, "Trial replications");
    args.method_opt = cmd->add_option("--method", args.method, "cutoff, fk, or fkbma");
    args.scenario_opt = cmd->add_option("--scenario", args.scenario, "Scenario id (1-8, A1, A2)");
    args.lambda_terms_opt =
        cmd->add_option("--lambda-terms", args.lambda_terms, "Active-term prior rate");
    args.lambda_knots_opt =
        cmd->add_option("--lambda-knots", args.lambda_knots, "Knot-count prior rate");
    cmd->add_option("--out", args.out, "Output directory (created if missing)");
}

RunConfig merge(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = load_run_config(args.config_path);
    if (args.seed_opt->count() > 0) cfg.seed = args.seed;
    if (args.reps_opt->count() > 0) cfg.replications = args.replications;
    if (args.method_opt->count() > 0) cfg.method = parse_method(args.method);
    if (args.scenario_opt->count() > 0) cfg.scenario = args.scenario;
    if (args.lambda_terms_opt->count() > 0) cfg.trial.prior.lambda_terms = args.lambda_terms;
    if (args.lambda_knots_opt->count() > 0) cfg.trial.prior.lambda_knots = args.lambda_knots;
    return cfg;
}

TrialConfig trial_config(const RunConfig& cfg) {
    TrialConfig trial = cfg.trial;
    trial.method = cfg.method;
    return trial;
}

int method_rank(Method m) {
    switch (m) {
    case Method::Cutoff: return 0;
    case Method::FK: return 1;
    case Method::FKBMA: return 2;
    }
    return 3;
}

std::uint64_t cell_seed(std::uint64_t base, Method method, const std::string& scenario) {
    std::uint64_t tag = scenario == "A1" ? 9 : scenario == "A2" ? 10 : std::stoull(scenario);
    return mix_seed(base, (static_cast<std::uint64_t>(method_rank(method)) << 8) | tag);
}

std::array<BioVec, 4> reference_patterns(int dim) {
    const double vcb = dim >= 3 ? truncated_normal_mean(vcb_law()) : 0.0;
    return {BioVec{20.0, 5.0, vcb}, BioVec{20.0, 15.0, vcb}, BioVec{80.0, 5.0, vcb},
            BioVec{80.0, 15.0, vcb}};
}

int cmd_run_trial(const CommonArgs& args) {
    RunConfig cfg = merge(args);
    cfg.validate();
    const fs::path out(args.out);
    fs::create_directories(out);

    const ScenarioSpec scenario = ScenarioSpec::by_id(cfg.scenario);
    ScenarioSource source(scenario);
    RandomStream rng(cfg.seed);
    const TrialResult result = run_trial(trial_config(cfg), source, rng);

    write_trial_result(out / "result.json", cfg, result);
    if (result.subspace.fit) {
        write_surface_csv(out / "gamma_surface.csv",
                          surface_summary(*result.subspace.fit, surface_grid(scenario.dim)));
        if (const auto spline = std::dynamic_pointer_cast<const SplineFit>(result.subspace.fit)) {
            const auto patterns = reference_patterns(scenario.dim);
            write_traces_csv(out / "trace.csv", patterns, trace_rows(*spline, patterns));
        }
    }
    write_manifest(out, "run-trial", cfg);

    std::cout << "scenario " << cfg.scenario << " " << method_name(cfg.method) << ": "
              << decision_name(result.decision) << ", n=" << result.n_enrolled
              << (result.aborted ? " (enrichment starved)" : "") << "\n"
              << "outputs in " << out.string() << "\n";
    return 0;
}

StudyRow study_cell(const RunConfig& cfg, const std::string& scenario, Method method,
                    std::uint64_t base_seed) {
    RunConfig cell = cfg;
    cell.scenario = scenario;
    cell.method = method;
    const StudyResult study =
        run_study(trial_config(cell), ScenarioSpec::by_id(scenario), cell.replications, base_seed);
    StudyRow row;
    row.scenario = scenario;
    row.method = method;
    row.lambda_terms = cell.trial.prior.lambda_terms;
    row.lambda_knots = cell.trial.prior.lambda_knots;
    row.oc = study.summary;
    std::cout << "scenario " << scenario << " " << method_name(method)
              << ": efficacy_rate=" << row.oc.efficacy_rate << " accuracy=" << row.oc.accuracy
              << " expected_n=" << row.oc.expected_n << " (" << row.oc.replications
              << " completed, " << row.oc.flagged << " flagged)" << std::endl;
    return row;
}

int cmd_study(const CommonArgs& args) {
    RunConfig cfg = merge(args);
    cfg.validate();
    const fs::path out(args.out);
    fs::create_directories(out);

    const StudyResult study = run_study(trial_config(cfg), ScenarioSpec::by_id(cfg.scenario),
                                        cfg.replications, cfg.seed);
    StudyRow row;
    row.scenario = cfg.scenario;
    row.method = cfg.method;
    row.lambda_terms = cfg.trial.prior.lambda_terms;
    row.lambda_knots = cfg.trial.prior.lambda_knots;
    row.oc = study.summary;
    write_study_csv(out / "study.csv", std::span<const StudyRow>(&row, 1));
    write_audit(out / "audit.jsonl", study.records);
    write_manifest(out, "study", cfg);

    std::cout << "scenario " << cfg.scenario << " " << method_name(cfg.method)
              << ": efficacy_rate=" << row.oc.efficacy_rate << " accuracy=" << row.oc.accuracy
              << " edr=" << row.oc.edr << " idr=" << row.oc.idr
              << " expected_n=" << row.oc.expected_n << " (" << row.oc.replications
              << " completed, " << row.oc.flagged << " flagged)\n"
              << "outputs in " << out.string() << "\n";
    return 0;
}

int run_cells(const CommonArgs& args, const std::string& command,
              const std::vector<std::string>& default_scenarios,
              const std::vector<Method>& default_methods, const char* csv_name,
              bool appendix_lambda) {
    RunConfig cfg = merge(args);
    if (appendix_lambda && args.lambda_terms_opt->count() == 0)
        cfg.trial.prior.lambda_terms = 5.0; // three-biomarker default sparsity
    const std::vector<std::string> scenarios =
        args.scenario_opt->count() > 0 ? std::vector<std::string>{args.scenario}
                                       : default_scenarios;
    const std::vector<Method> methods = args.method_opt->count() > 0
                                            ? std::vector<Method>{parse_method(args.method)}
                                            : default_methods;
    for (const std::string& scenario : scenarios) {
        RunConfig probe = cfg;
        probe.scenario = scenario;
        probe.validate();
    }
    const fs::path out(args.out);
    fs::create_directories(out);

    std::vector<StudyRow> rows;
    for (const Method method : methods)
        for (const std::string& scenario : scenarios)
            rows.push_back(study_cell(cfg, scenario, method, cell_seed(cfg.seed, method, scenario)));
    write_study_csv(out / csv_name, rows);
    write_manifest(out, command, cfg);
    std::cout << rows.size() << " cells written to " << (out / csv_name).string() << "\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    return run_cells(args, "sweep", {"1", "2", "3", "4", "5", "6", "7", "8"},
                     {Method::Cutoff, Method::FK}, "sweep.csv", false);
}

int cmd_appendix_study(const CommonArgs& args) {
    return run_cells(args, "appendix-study", {"A1", "A2"}, {Method::Cutoff, Method::FK},
                     "appendix.csv", true);
}

int cmd_illustrate(const CommonArgs& args) {
    RunConfig cfg = merge(args);
    const fs::path out(args.out);
    fs::create_directories(out);

    const IllustrationResult example = run_illustration(cfg.seed);
    write_curves_csv(out / "curves.csv", example);
    write_traces_csv(out / "traces.csv", example.trace_patterns, example.traces);
    write_illustration_json(out / "illustration.json", example);
    write_manifest(out, "illustrate", cfg);

    std::cout << "zero-crossing interval: [" << example.crossing_union.lo << ", "
              << example.crossing_union.hi << "]\n"
              << "max curve gap between display levels: " << example.max_curve_gap << "\n"
              << "scale reduction:";
    for (const double r : example.rhat) std::cout << " " << r;
    std::cout << "\noutputs in " << out.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian adaptive-enrichment trial engine"};
    app.require_subcommand(1);

    CommonArgs trial_args, study_args, sweep_args, appendix_args, illustrate_args;
    CLI::App* trial = app.add_subcommand("run-trial", "Run one adaptive trial replication");
    add_common(trial, trial_args);
    CLI::App* study = app.add_subcommand("study", "Replicated operating-characteristics study");
    add_common(study, study_args);
    CLI::App* sweep =
        app.add_subcommand("sweep", "Study every scenario for the cutoff and free-knot methods");
    add_common(sweep, sweep_args);
    CLI::App* appendix =
        app.add_subcommand("appendix-study", "Three-biomarker study (scenarios A1 and A2)");
    add_common(appendix, appendix_args);
    CLI::App* illustrate =
        app.add_subcommand("illustrate", "Single-dataset worked example with curves and traces");
    add_common(illustrate, illustrate_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (trial->parsed()) return cmd_run_trial(trial_args);
        if (study->parsed()) return cmd_study(study_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (appendix->parsed()) return cmd_appendix_study(appendix_args);
        if (illustrate->parsed()) return cmd_illustrate(illustrate_args);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
