/// @file pipeline.hpp
/// @brief Declarative pipeline configuration and the command drivers behind
/// each CLI subcommand. Every command is resumable: with a warm cache a rerun
/// is a no-network, byte-identical operation.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rubric_forge/audit.hpp"
#include "rubric_forge/judge.hpp"
#include "rubric_forge/profiler.hpp"
#include "rubric_forge/provider.hpp"
#include "rubric_forge/synthesizer.hpp"

namespace rubric_forge {

// Exit-code contract shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;      // record-level skips occurred
inline constexpr int kExitInputError = 2;
inline constexpr int kExitConfigError = 3;  // configuration or benchmark error
inline constexpr int kExitProvider = 4;     // provider exhaustion

struct PipelineConfig {
    ProviderConfig provider;
    std::string model = "teacher";  // default for any stage without an override

    struct Profiling {
        double temperature = 0.7;
        int repair_attempts = 2;
        int max_tokens = 4096;
        bool strict_evidence = false;
        std::string model;  // empty -> top-level model
    } profiling;

    struct Synthesis {
        double temperature = 0.7;
        int samples = 1;
        std::string order_policy = "alternate";
        bool judge_gate = true;
        int repair_attempts = 2;
        int max_tokens = 4096;
        std::string model;
    } synthesis;

    struct Judging {
        std::string order_policy = "as_given";
        std::string mode = "rubric_guided";
        double temperature = 0.0;
        int max_tokens = 4096;
        int repair_attempts = 2;
        bool no_think = true;
        std::string model;
        std::string generator_model;
        std::string one_step_generator_model;
    } judging;

    struct Paths {
        std::string input;
        std::string workdir = "workdir";
        std::string cache_dir;
    } paths;

    std::uint64_t seed = 0;

    std::string profiling_model() const { return profiling.model.empty() ? model : profiling.model; }
    std::string synthesis_model() const { return synthesis.model.empty() ? model : synthesis.model; }
    std::string judging_model() const { return judging.model.empty() ? model : judging.model; }
    std::string generator_model() const {
        return judging.generator_model.empty() ? model : judging.generator_model;
    }
};

/// Loads the declarative config file (JSON, ${ENV_VAR} interpolation in
/// string values). A missing path yields defaults. RUBRIC_FORGE_BASE_URL and
/// RUBRIC_FORGE_API_KEY fill provider fields left empty by the file.
PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path);

ordered_json config_to_json(const PipelineConfig& config, bool redact_secrets = true);

/// Execution context shared by the drivers: resolved config, provider stack,
/// audit log, and the resolved-config snapshot (written before any call).
struct PipelineContext {
    PipelineConfig config;
    ProviderStack stack;
    AuditLog audit;
    bool quiet = false;
    bool verbose = false;

    Provider& provider() { return *stack.provider; }
};

/// Creates workdir, writes the resolved-config snapshot and wires the audit
/// log and provider stack (mock when mock_dir is given). Commands that never
/// call a model (mask, subsample, report) pass needs_provider=false.
PipelineContext make_context(PipelineConfig config,
                             const std::optional<std::filesystem::path>& mock_dir,
                             const std::string& command, bool needs_provider = true);

// ---------------------------------------------------------------------------
// Command drivers (exit codes per the contract above)
// ---------------------------------------------------------------------------

int run_profile(PipelineContext& ctx, const std::filesystem::path& input,
                const std::filesystem::path& output);

struct SynthesizeCliOptions {
    std::optional<std::size_t> target_kept;
    std::optional<std::size_t> input_cap;
    std::optional<int> samples;
    std::optional<std::string> order_policy;
};

int run_synthesize(PipelineContext& ctx, const std::filesystem::path& input,
                   const std::filesystem::path& output, const SynthesizeCliOptions& opts);

int run_build_judge_data(PipelineContext& ctx, const std::filesystem::path& input,
                         const std::filesystem::path& output, std::optional<bool> judge_gate);

struct EvalCliOptions {
    std::string mode = "rubric_guided";
    std::string order = "as_given";
    bool micro = false;
    bool require_all = false;
    std::string convert_order = "alternate";
};

int run_eval(PipelineContext& ctx, const std::vector<std::filesystem::path>& benchmark_files,
             const std::filesystem::path& out_prefix, const EvalCliOptions& opts);

enum class SftComponent { RubricGenerator, JudgeModel };

std::string_view to_string(SftComponent c);
std::optional<SftComponent> sft_component_from_string(std::string_view name);

/// Hyperparameter defaults emitted with every export.
struct TrainingConfigExport {
    SftComponent component = SftComponent::RubricGenerator;
    int epochs = 1;
    int max_length = 25000;
    int batch_size = 128;
    std::string optimizer_name = "adamw";
    double learning_rate = 5e-5;
    double warmup_ratio = 0.05;

    static TrainingConfigExport defaults(SftComponent component);
};

ordered_json training_config_to_json(const TrainingConfigExport& t);

int run_export_sft(PipelineContext& ctx, const std::filesystem::path& input,
                   SftComponent component, const std::filesystem::path& out_prefix);

int run_mask(PipelineContext& ctx, const std::filesystem::path& input,
             const std::filesystem::path& output, int k, std::uint64_t seed,
             const std::string& scope);

int run_subsample(PipelineContext& ctx, const std::filesystem::path& input,
                  const std::filesystem::path& output, std::size_t n, std::uint64_t seed);

int run_ablate(PipelineContext& ctx, const std::vector<std::filesystem::path>& benchmark_files,
               const std::vector<std::string>& modes, const std::filesystem::path& out_prefix,
               const EvalCliOptions& opts);

int run_case(PipelineContext& ctx, const std::filesystem::path& record_file,
             const std::vector<std::string>& modes, const std::filesystem::path& output);

int run_report(PipelineContext& ctx, const std::filesystem::path& baseline_report,
               const std::vector<std::pair<std::string, std::filesystem::path>>& variant_reports,
               const std::filesystem::path& output);

}  // namespace rubric_forge
