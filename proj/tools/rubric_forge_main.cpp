// rubric-forge: CLI for the contrast-then-synthesis rubric pipeline.

#include <CLI11.hpp>

#include <iostream>

#include "rubric_forge/pipeline.hpp"

namespace rf = rubric_forge;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string mock_dir;
    std::string cache_dir;
    std::string workdir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quiet = false;
    bool verbose = false;
};

rf::PipelineContext build_context(const GlobalArgs& g, const std::string& command,
                                  bool needs_provider = true) {
    std::optional<std::filesystem::path> config_path;
    if (!g.config_path.empty()) config_path = g.config_path;
    rf::PipelineConfig config = rf::load_pipeline_config(config_path);
    if (!g.cache_dir.empty()) config.provider.cache_dir = std::filesystem::path(g.cache_dir);
    if (!g.workdir.empty()) config.paths.workdir = g.workdir;
    if (g.seed_set) config.seed = g.seed;

    std::optional<std::filesystem::path> mock_dir;
    if (!g.mock_dir.empty()) mock_dir = g.mock_dir;
    if (needs_provider && !mock_dir && config.provider.base_url.empty())
        throw std::runtime_error(
            "no provider configured: set RUBRIC_FORGE_BASE_URL, provider.base_url in the config, "
            "or pass --mock <fixtures-dir>");

    rf::PipelineContext ctx = rf::make_context(std::move(config), mock_dir, command, needs_provider);
    ctx.quiet = g.quiet;
    ctx.verbose = g.verbose;
    ctx.audit.set_echo(g.verbose);
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rubric-forge: contrastive profiling, rubric synthesis, and judge evaluation"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand

    GlobalArgs g;
    app.add_option("--config", g.config_path, "pipeline config file (JSON, ${ENV} interpolation)");
    app.add_option("--mock", g.mock_dir, "scripted mock fixtures directory (no network)");
    app.add_option("--cache-dir", g.cache_dir, "response cache directory");
    app.add_option("--workdir", g.workdir, "workdir for snapshots and audit logs");
    app.add_option("--seed", g.seed, "seed for seeded operations")
        ->each([&](const std::string&) { g.seed_set = true; });
    app.add_flag("-q,--quiet", g.quiet, "suppress progress output");
    app.add_flag("-v,--verbose", g.verbose, "echo audit records to stderr");

    // profile
    auto* profile = app.add_subcommand("profile", "profile preference pairs into diagnoses");
    std::string profile_in, profile_out = "profiled.jsonl";
    profile->add_option("-i,--input", profile_in, "PreferencePair JSONL")->required();
    profile->add_option("-o,--output", profile_out, "ProfiledPair JSONL output");

    // synthesize
    auto* synth = app.add_subcommand("synthesize", "synthesize and filter rubrics (D_rubric)");
    std::string synth_in, synth_out = "rubric.jsonl";
    rf::SynthesizeCliOptions synth_cli;
    std::size_t target_kept = 0, input_cap = 0;
    int samples = 0;
    std::string order_policy;
    synth->add_option("-i,--input", synth_in, "ProfiledPair JSONL")->required();
    synth->add_option("-o,--output", synth_out, "D_rubric JSONL output");
    synth->add_option("--target-kept", target_kept, "stop once this many records pass the filter");
    synth->add_option("--input-cap", input_cap, "consume at most this many input records");
    synth->add_option("--synthesis-samples", samples, "best-of-n synthesis samples");
    synth->add_option("--order-policy", order_policy,
                      "alternate | chosen_first | rejected_first");

    // build-judge-data
    auto* judge_data = app.add_subcommand("build-judge-data", "build D_judge from D_rubric");
    std::string jd_in, jd_out = "judge.jsonl";
    std::string judge_gate = "on";
    judge_data->add_option("-i,--input", jd_in, "D_rubric JSONL")->required();
    judge_data->add_option("-o,--output", jd_out, "D_judge JSONL output");
    judge_data->add_option("--judge-gate", judge_gate,
                           "on|off: require teacher verdict to match ground truth");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate judges on pairwise benchmarks");
    std::vector<std::string> eval_benchmarks;
    std::string eval_prefix = "eval";
    rf::EvalCliOptions eval_cli;
    eval->add_option("-b,--benchmark", eval_benchmarks, "benchmark JSONL file(s)")->required();
    eval->add_option("-o,--output", eval_prefix, "output prefix for reports");
    eval->add_option("--mode", eval_cli.mode, "rubric_guided | direct | one_step_rubric");
    eval->add_option("--order", eval_cli.order, "as_given | swap | both");
    eval->add_flag("--micro", eval_cli.micro, "micro (pooled) averaging instead of macro");
    eval->add_flag("--require-all", eval_cli.require_all,
                   "error unless RewardBench, RMBench, and RMB are all present");
    eval->add_option("--convert-order", eval_cli.convert_order,
                     "gold slot policy for trio-form rows: alternate | chosen_first");

    // export-sft
    auto* exp = app.add_subcommand("export-sft", "emit chat-format SFT data and training config");
    std::string exp_in, exp_component, exp_prefix = "sft";
    exp->add_option("-i,--input", exp_in, "D_rubric (generator) or D_judge (judge) JSONL")
        ->required();
    exp->add_option("--component", exp_component, "generator | judge")->required();
    exp->add_option("-o,--output", exp_prefix, "output prefix");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "run the judging-strategy ablation matrix");
    std::vector<std::string> ablate_benchmarks;
    std::vector<std::string> ablate_modes{"direct", "one_step_rubric", "rubric_guided"};
    std::string ablate_prefix = "ablation";
    rf::EvalCliOptions ablate_cli;
    ablate->add_option("-b,--benchmark", ablate_benchmarks, "benchmark JSONL file(s)")->required();
    ablate->add_option("--modes", ablate_modes, "judging modes to compare");
    ablate->add_option("-o,--output", ablate_prefix, "output prefix");
    ablate->add_option("--order", ablate_cli.order, "as_given | swap | both");
    ablate->add_flag("--micro", ablate_cli.micro, "micro averaging");

    // mask
    auto* mask = app.add_subcommand("mask", "randomly mask rubric items (perturbation study)");
    std::string mask_in, mask_out = "masked.jsonl", mask_scope = "hard_rules_only";
    int mask_k = 0;
    mask->add_option("-i,--input", mask_in, "D_rubric JSONL")->required();
    mask->add_option("-o,--output", mask_out, "perturbed JSONL output");
    mask->add_option("--k", mask_k, "items to delete per record")->required();
    mask->add_option("--scope", mask_scope, "hard_rules_only | rules_and_principles");

    // subsample
    auto* sub = app.add_subcommand("subsample", "seeded uniform subsample (scaling harness)");
    std::string sub_in, sub_out = "subsample.jsonl";
    std::size_t sub_n = 0;
    sub->add_option("-i,--input", sub_in, "JSONL input")->required();
    sub->add_option("-o,--output", sub_out, "JSONL output");
    sub->add_option("--n", sub_n, "sample size")->required();

    // case
    auto* case_cmd = app.add_subcommand("case", "render a per-record case study report");
    std::string case_record, case_out = "case.md";
    std::vector<std::string> case_modes{"direct", "rubric_guided"};
    case_cmd->add_option("--record", case_record, "EvalRecord JSON file")->required();
    case_cmd->add_option("--modes", case_modes, "judging modes to include");
    case_cmd->add_option("-o,--output", case_out, "markdown output");

    // report
    auto* report = app.add_subcommand("report", "render the Del-k perturbation table");
    std::string report_baseline, report_out = "perturbation.txt";
    std::vector<std::string> report_variants;
    report->add_option("--baseline", report_baseline, "baseline CategoryReport JSON")->required();
    report->add_option("--variant", report_variants, "label=report.json (repeatable)");
    report->add_option("-o,--output", report_out, "table output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*profile) {
            auto ctx = build_context(g, "profile");
            return rf::run_profile(ctx, profile_in, profile_out);
        }
        if (*synth) {
            if (target_kept > 0) synth_cli.target_kept = target_kept;
            if (input_cap > 0) synth_cli.input_cap = input_cap;
            if (samples > 0) synth_cli.samples = samples;
            if (!order_policy.empty()) synth_cli.order_policy = order_policy;
            auto ctx = build_context(g, "synthesize");
            return rf::run_synthesize(ctx, synth_in, synth_out, synth_cli);
        }
        if (*judge_data) {
            if (judge_gate != "on" && judge_gate != "off") {
                std::cerr << "--judge-gate must be on or off\n";
                return rf::kExitConfigError;
            }
            auto ctx = build_context(g, "build-judge-data");
            return rf::run_build_judge_data(ctx, jd_in, jd_out, judge_gate == "on");
        }
        if (*eval) {
            auto ctx = build_context(g, "eval");
            std::vector<std::filesystem::path> files(eval_benchmarks.begin(),
                                                     eval_benchmarks.end());
            return rf::run_eval(ctx, files, eval_prefix, eval_cli);
        }
        if (*exp) {
            auto component = rf::sft_component_from_string(exp_component);
            if (!component) {
                std::cerr << "--component must be generator or judge\n";
                return rf::kExitConfigError;
            }
            auto ctx = build_context(g, "export-sft");
            return rf::run_export_sft(ctx, exp_in, *component, exp_prefix);
        }
        if (*ablate) {
            auto ctx = build_context(g, "ablate");
            std::vector<std::filesystem::path> files(ablate_benchmarks.begin(),
                                                     ablate_benchmarks.end());
            return rf::run_ablate(ctx, files, ablate_modes, ablate_prefix, ablate_cli);
        }
        if (*mask) {
            auto ctx = build_context(g, "mask", /*needs_provider=*/false);
            return rf::run_mask(ctx, mask_in, mask_out, mask_k, ctx.config.seed, mask_scope);
        }
        if (*sub) {
            auto ctx = build_context(g, "subsample", /*needs_provider=*/false);
            return rf::run_subsample(ctx, sub_in, sub_out, sub_n, ctx.config.seed);
        }
        if (*case_cmd) {
            auto ctx = build_context(g, "case");
            return rf::run_case(ctx, case_record, case_modes, case_out);
        }
        if (*report) {
            std::vector<std::pair<std::string, std::filesystem::path>> variants;
            for (const auto& v : report_variants) {
                size_t eq = v.find('=');
                if (eq == std::string::npos) {
                    std::cerr << "--variant expects label=path, got " << v << "\n";
                    return rf::kExitConfigError;
                }
                variants.emplace_back(v.substr(0, eq), v.substr(eq + 1));
            }
            auto ctx = build_context(g, "report", /*needs_provider=*/false);
            return rf::run_report(ctx, report_baseline, variants, report_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rf::kExitConfigError;
    }
    return rf::kExitOk;
}
