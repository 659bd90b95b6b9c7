#include "rubric_forge/pipeline.hpp"

#include <cstdlib>
#include <iostream>
#include <regex>

#include "rubric_forge/experiments.hpp"
#include "rubric_forge/jsonl.hpp"
#include "rubric_forge/prompts.hpp"
#include "rubric_forge/structured.hpp"

namespace rubric_forge {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

std::string interpolate_env(const std::string& value) {
    static const std::regex var_re(R"(\$\{([A-Za-z_][A-Za-z0-9_]*)\})");
    std::string out;
    auto begin = std::sregex_iterator(value.begin(), value.end(), var_re);
    auto end = std::sregex_iterator();
    size_t last = 0;
    for (auto it = begin; it != end; ++it) {
        out += value.substr(last, it->position() - last);
        const char* env = std::getenv((*it)[1].str().c_str());
        if (env) out += env;
        last = it->position() + it->length();
    }
    out += value.substr(last);
    return out;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

std::string get_str(const json& j, const char* key, const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    return interpolate_env(j[key].get<std::string>());
}

}  // namespace

PipelineConfig load_pipeline_config(const std::optional<fs::path>& path) {
    PipelineConfig config;
    json doc = json::object();
    if (path) {
        try {
            doc = json::parse(read_file(*path));
        } catch (const json::exception& e) {
            throw std::runtime_error("config " + path->string() + ": " + e.what());
        }
    }

    const json provider = doc.value("provider", json::object());
    config.provider.base_url = get_str(provider, "base_url", "");
    config.provider.api_key = get_str(provider, "api_key", "");
    config.provider.max_in_flight = provider.value("max_in_flight", 4);
    if (provider.contains("retry")) {
        const auto& r = provider["retry"];
        config.provider.retry.max_attempts = r.value("max_attempts", 4);
        config.provider.retry.initial_backoff_ms = r.value("initial_backoff_ms", 250);
        config.provider.retry.max_backoff_ms = r.value("max_backoff_ms", 8000);
    }
    config.provider.request_timeout_s = provider.value("request_timeout_s", 120);
    if (provider.contains("cache_dir") && provider["cache_dir"].is_string())
        config.provider.cache_dir = fs::path(get_str(provider, "cache_dir", ""));

    // Environment fills what the file left empty.
    if (config.provider.base_url.empty())
        config.provider.base_url = env_or("RUBRIC_FORGE_BASE_URL", "");
    if (config.provider.api_key.empty())
        config.provider.api_key = env_or("RUBRIC_FORGE_API_KEY", "");

    config.model = get_str(doc, "model", config.model);

    const json profiling = doc.value("profiling", json::object());
    config.profiling.temperature = profiling.value("temperature", 0.7);
    config.profiling.repair_attempts = profiling.value("repair_attempts", 2);
    config.profiling.max_tokens = profiling.value("max_tokens", 4096);
    config.profiling.strict_evidence = profiling.value("strict_evidence", false);
    config.profiling.model = get_str(profiling, "model", "");

    const json synthesis = doc.value("synthesis", json::object());
    config.synthesis.temperature = synthesis.value("temperature", 0.7);
    config.synthesis.samples = synthesis.value("samples", 1);
    config.synthesis.order_policy = get_str(synthesis, "order_policy", "alternate");
    config.synthesis.judge_gate = synthesis.value("judge_gate", true);
    config.synthesis.repair_attempts = synthesis.value("repair_attempts", 2);
    config.synthesis.max_tokens = synthesis.value("max_tokens", 4096);
    config.synthesis.model = get_str(synthesis, "model", "");

    const json judging = doc.value("judging", json::object());
    config.judging.order_policy = get_str(judging, "order_policy", "as_given");
    config.judging.mode = get_str(judging, "mode", "rubric_guided");
    config.judging.temperature = judging.value("temperature", 0.0);
    config.judging.max_tokens = judging.value("max_tokens", 4096);
    config.judging.repair_attempts = judging.value("repair_attempts", 2);
    config.judging.no_think = judging.value("no_think", true);
    config.judging.model = get_str(judging, "model", "");
    config.judging.generator_model = get_str(judging, "generator_model", "");
    config.judging.one_step_generator_model = get_str(judging, "one_step_generator_model", "");

    const json paths = doc.value("paths", json::object());
    config.paths.input = get_str(paths, "input", "");
    config.paths.workdir = get_str(paths, "workdir", "workdir");
    config.paths.cache_dir = get_str(paths, "cache_dir", "");
    if (!config.paths.cache_dir.empty() && !config.provider.cache_dir)
        config.provider.cache_dir = fs::path(config.paths.cache_dir);

    config.seed = doc.value("seed", 0ULL);
    return config;
}

ordered_json config_to_json(const PipelineConfig& config, bool redact_secrets) {
    ordered_json j;
    ordered_json provider;
    provider["base_url"] = config.provider.base_url;
    provider["api_key"] = redact_secrets && !config.provider.api_key.empty()
                              ? "<redacted>"
                              : config.provider.api_key;
    provider["max_in_flight"] = config.provider.max_in_flight;
    provider["retry"] = {{"max_attempts", config.provider.retry.max_attempts},
                         {"initial_backoff_ms", config.provider.retry.initial_backoff_ms},
                         {"max_backoff_ms", config.provider.retry.max_backoff_ms}};
    provider["request_timeout_s"] = config.provider.request_timeout_s;
    provider["cache_dir"] =
        config.provider.cache_dir ? config.provider.cache_dir->string() : std::string{};
    j["provider"] = std::move(provider);
    j["model"] = config.model;
    j["profiling"] = {{"temperature", config.profiling.temperature},
                      {"repair_attempts", config.profiling.repair_attempts},
                      {"max_tokens", config.profiling.max_tokens},
                      {"strict_evidence", config.profiling.strict_evidence},
                      {"model", config.profiling_model()}};
    j["synthesis"] = {{"temperature", config.synthesis.temperature},
                      {"samples", config.synthesis.samples},
                      {"order_policy", config.synthesis.order_policy},
                      {"judge_gate", config.synthesis.judge_gate},
                      {"repair_attempts", config.synthesis.repair_attempts},
                      {"max_tokens", config.synthesis.max_tokens},
                      {"model", config.synthesis_model()}};
    j["judging"] = {{"order_policy", config.judging.order_policy},
                    {"mode", config.judging.mode},
                    {"temperature", config.judging.temperature},
                    {"max_tokens", config.judging.max_tokens},
                    {"repair_attempts", config.judging.repair_attempts},
                    {"no_think", config.judging.no_think},
                    {"model", config.judging_model()},
                    {"generator_model", config.generator_model()},
                    {"one_step_generator_model", config.judging.one_step_generator_model}};
    j["paths"] = {{"input", config.paths.input},
                  {"workdir", config.paths.workdir},
                  {"cache_dir", config.paths.cache_dir}};
    j["seed"] = config.seed;
    return j;
}

PipelineContext make_context(PipelineConfig config, const std::optional<fs::path>& mock_dir,
                             const std::string& command, bool needs_provider) {
    fs::path workdir(config.paths.workdir);
    fs::create_directories(workdir);

    // Snapshot before any network call; it must fully determine outputs
    // given the cache/fixtures.
    ordered_json snapshot;
    snapshot["command"] = command;
    snapshot["mock"] = mock_dir ? mock_dir->string() : std::string{};
    snapshot["config"] = config_to_json(config);
    atomic_write(workdir / "config_snapshot.json", snapshot.dump(2) + "\n");

    PipelineContext ctx{std::move(config), {}, AuditLog(workdir / "audit.jsonl"), false, false};
    if (needs_provider) {
        std::optional<fs::path> call_log;
        if (mock_dir) call_log = workdir / "mock_calls.jsonl";
        ctx.stack = make_provider(ctx.config.provider, mock_dir, call_log);
    }
    return ctx;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace {

fs::path sidecar(const fs::path& output, const char* suffix) {
    fs::path p = output;
    p.replace_extension("");
    p += suffix;
    return p;
}

void note(const PipelineContext& ctx, const std::string& message) {
    if (!ctx.quiet) std::cerr << message << "\n";
}

void report_cache(const PipelineContext& ctx) {
    if (!ctx.stack.cache) return;
    long long hits = ctx.stack.cache->hits();
    long long total = hits + ctx.stack.cache->misses();
    if (total == 0) return;
    std::ostringstream msg;
    msg << "cache: " << hits << "/" << total << " hits";
    if (hits == total) msg << " (100% cache hits)";
    note(ctx, msg.str());
}

SynthesizerOptions synthesizer_options(const PipelineConfig& config) {
    SynthesizerOptions opts;
    opts.model = config.synthesis_model();
    opts.temperature = config.synthesis.temperature;
    opts.max_tokens = config.synthesis.max_tokens;
    opts.repair_attempts = config.synthesis.repair_attempts;
    opts.samples = config.synthesis.samples;
    opts.order_policy = config.synthesis.order_policy;
    opts.judge_gate = config.synthesis.judge_gate;
    opts.judge_model = config.judging_model();
    opts.judge_temperature = config.judging.temperature;
    opts.judge_max_tokens = config.judging.max_tokens;
    opts.judge_repair_attempts = config.judging.repair_attempts;
    opts.include_no_think = config.judging.no_think;
    opts.workers = config.provider.max_in_flight;
    return opts;
}

EvalOptions eval_options(const PipelineConfig& config, const EvalCliOptions& cli) {
    EvalOptions opts;
    auto mode = judge_mode_from_string(cli.mode);
    if (!mode) throw std::runtime_error("unknown mode: " + cli.mode);
    opts.mode = *mode;
    auto order = order_policy_from_string(cli.order);
    if (!order) throw std::runtime_error("unknown order policy: " + cli.order);
    opts.order_policy = *order;
    opts.micro = cli.micro;
    opts.judge.model = config.judging_model();
    opts.judge.temperature = config.judging.temperature;
    opts.judge.max_tokens = config.judging.max_tokens;
    opts.judge.repair_attempts = config.judging.repair_attempts;
    opts.judge.include_no_think = config.judging.no_think;
    opts.generator.model = opts.mode == JudgeMode::OneStepRubric &&
                                   !config.judging.one_step_generator_model.empty()
                               ? config.judging.one_step_generator_model
                               : config.generator_model();
    opts.generator.max_tokens = config.judging.max_tokens;
    opts.generator.repair_attempts = config.judging.repair_attempts;
    opts.workers = config.provider.max_in_flight;
    return opts;
}

}  // namespace

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

int run_profile(PipelineContext& ctx, const fs::path& input, const fs::path& output) {
    std::vector<PreferencePair> pairs;
    try {
        pairs = load_preference_pairs(input.string());
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }

    ProfilerOptions opts;
    opts.model = ctx.config.profiling_model();
    opts.temperature = ctx.config.profiling.temperature;
    opts.max_tokens = ctx.config.profiling.max_tokens;
    opts.repair_attempts = ctx.config.profiling.repair_attempts;
    opts.strict_evidence = ctx.config.profiling.strict_evidence;
    opts.workers = ctx.config.provider.max_in_flight;

    ProfileDatasetResult result;
    try {
        result = profile_dataset(ctx.provider(), pairs, opts, &ctx.audit);
    } catch (const ProviderError& e) {
        note(ctx, std::string("provider error: ") + e.what());
        return kExitProvider;
    }

    std::vector<ordered_json> rows;
    rows.reserve(result.rows.size());
    for (const auto& r : result.rows) rows.push_back(profiled_pair_to_json(r));
    write_jsonl(output, rows);
    std::vector<ordered_json> skips;
    for (const auto& s : result.skips) skips.push_back(skip_to_json(s));
    write_jsonl(sidecar(output, ".skips.jsonl"), skips);

    std::ostringstream msg;
    msg << "profiled " << result.rows.size() << "/" << pairs.size() << " pairs, "
        << result.skips.size() << " skipped";
    note(ctx, msg.str());
    report_cache(ctx);

    if (!pairs.empty() && result.rows.empty()) return kExitPartial;
    return result.skips.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

int run_synthesize(PipelineContext& ctx, const fs::path& input, const fs::path& output,
                   const SynthesizeCliOptions& cli) {
    std::vector<ProfiledPair> profiled;
    try {
        for (const auto& row : read_jsonl(input)) profiled.push_back(profiled_pair_from_json(row));
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }

    SynthesizerOptions opts = synthesizer_options(ctx.config);
    if (cli.target_kept) opts.target_kept = cli.target_kept;
    if (cli.input_cap) opts.input_cap = cli.input_cap;
    if (cli.samples) opts.samples = *cli.samples;
    if (cli.order_policy) opts.order_policy = *cli.order_policy;

    RubricDatasetResult result;
    try {
        result = build_rubric_dataset(ctx.provider(), profiled, opts, &ctx.audit);
    } catch (const ProviderError& e) {
        note(ctx, std::string("provider error: ") + e.what());
        return kExitProvider;
    }

    std::vector<ordered_json> rows;
    for (const auto& r : result.records) rows.push_back(rubric_record_to_json(r));
    write_jsonl(output, rows);
    atomic_write(sidecar(output, ".stats.json"), filter_stats_to_json(result.stats).dump(2) + "\n");

    std::ostringstream msg;
    msg << "kept " << result.stats.kept << "/" << result.stats.total << " ("
        << format_pct(result.stats.kept_ratio()) << "%)";
    note(ctx, msg.str());
    report_cache(ctx);
    return result.stats.dropped_parse > 0 ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// build-judge-data
// ---------------------------------------------------------------------------

int run_build_judge_data(PipelineContext& ctx, const fs::path& input, const fs::path& output,
                         std::optional<bool> judge_gate) {
    std::vector<RubricRecord> records;
    try {
        for (const auto& row : read_jsonl(input)) records.push_back(rubric_record_from_json(row));
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }

    SynthesizerOptions opts = synthesizer_options(ctx.config);
    if (judge_gate) opts.judge_gate = *judge_gate;

    JudgeDatasetResult result;
    try {
        result = build_judge_dataset(ctx.provider(), records, opts, &ctx.audit);
    } catch (const ProviderError& e) {
        note(ctx, std::string("provider error: ") + e.what());
        return kExitProvider;
    }

    std::vector<ordered_json> rows;
    for (const auto& r : result.records) rows.push_back(judge_record_to_json(r));
    write_jsonl(output, rows);
    std::vector<ordered_json> skips;
    for (const auto& s : result.skips) skips.push_back(skip_to_json(s));
    write_jsonl(sidecar(output, ".skips.jsonl"), skips);

    std::ostringstream msg;
    msg << "kept " << result.records.size() << "/" << records.size() << " judge records, "
        << result.skips.size() << " skipped";
    note(ctx, msg.str());
    report_cache(ctx);

    bool parse_skips = false;
    for (const auto& s : result.skips)
        if (s.reason == "VerdictMissing") parse_skips = true;
    return parse_skips ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int run_eval(PipelineContext& ctx, const std::vector<fs::path>& benchmark_files,
             const fs::path& out_prefix, const EvalCliOptions& cli) {
    std::map<Benchmark, std::vector<EvalRecord>> groups;
    try {
        LoadOptions load;
        load.convert_order = cli.convert_order;
        for (const auto& file : benchmark_files)
            for (auto& rec : load_eval_records(file, load))
                groups[rec.benchmark].push_back(std::move(rec));
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }

    EvalOptions opts;
    try {
        opts = eval_options(ctx.config, cli);
    } catch (const std::exception& e) {
        note(ctx, std::string("config error: ") + e.what());
        return kExitConfigError;
    }

    if (cli.require_all) {
        for (Benchmark b : {Benchmark::RewardBench, Benchmark::RMBench, Benchmark::RMB})
            if (!groups.count(b)) {
                note(ctx, "MissingBenchmark: " + std::string(to_string(b)));
                return kExitConfigError;
            }
    }

    std::vector<CategoryReport> reports;
    try {
        for (const auto& [benchmark, records] : groups) {
            CategoryReport report = evaluate(ctx.provider(), records, opts, &ctx.audit);
            atomic_write(fs::path(out_prefix.string() + "." +
                                  std::string(to_string(benchmark)) + ".report.json"),
                         report_to_json(report).dump(2) + "\n");
            reports.push_back(std::move(report));
        }
    } catch (const ProviderError& e) {
        note(ctx, std::string("provider error: ") + e.what());
        return kExitProvider;
    }

    std::string table = render_report_table(reports);
    atomic_write(fs::path(out_prefix.string() + ".table.txt"), table);
    if (!ctx.quiet) std::cout << table;
    report_cache(ctx);

    long long missing = 0;
    for (const auto& r : reports) missing += r.verdict_missing;
    return missing > 0 ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// export-sft
// ---------------------------------------------------------------------------

std::string_view to_string(SftComponent c) {
    return c == SftComponent::RubricGenerator ? "RubricGenerator" : "JudgeModel";
}

std::optional<SftComponent> sft_component_from_string(std::string_view name) {
    if (name == "generator" || name == "RubricGenerator") return SftComponent::RubricGenerator;
    if (name == "judge" || name == "JudgeModel") return SftComponent::JudgeModel;
    return std::nullopt;
}

TrainingConfigExport TrainingConfigExport::defaults(SftComponent component) {
    TrainingConfigExport t;
    t.component = component;
    if (component == SftComponent::JudgeModel) {
        t.epochs = 2;
        t.batch_size = 64;
    }
    return t;
}

ordered_json training_config_to_json(const TrainingConfigExport& t) {
    ordered_json j;
    j["component"] = std::string(to_string(t.component));
    j["epochs"] = t.epochs;
    j["max_length"] = t.max_length;
    j["batch_size"] = t.batch_size;
    j["optimizer_name"] = t.optimizer_name;
    j["learning_rate"] = t.learning_rate;
    j["warmup_ratio"] = t.warmup_ratio;
    return j;
}

namespace {

ordered_json chat_row(const std::string& system, const std::string& user,
                      const std::string& assistant) {
    ordered_json row;
    auto& messages = row["messages"] = ordered_json::array();
    messages.push_back({{"role", "system"}, {"content", system}});
    messages.push_back({{"role", "user"}, {"content", user}});
    messages.push_back({{"role", "assistant"}, {"content", assistant}});
    return row;
}

}  // namespace

int run_export_sft(PipelineContext& ctx, const fs::path& input, SftComponent component,
                   const fs::path& out_prefix) {
    std::vector<ordered_json> rows;
    try {
        if (component == SftComponent::RubricGenerator) {
            for (const auto& row : read_jsonl(input)) {
                RubricRecord rec = rubric_record_from_json(row);
                const bool chosen_first = rec.presented_order == PresentationOrder::ChosenFirst;
                std::string user = prompts::fill(
                    prompts::kGeneratorUserTemplate,
                    {{"instruction", rec.pair.instruction},
                     {"response_a", chosen_first ? rec.pair.chosen : rec.pair.rejected},
                     {"response_b", chosen_first ? rec.pair.rejected : rec.pair.chosen}});
                rows.push_back(
                    chat_row(prompts::kGeneratorSystem, user, rubric_to_json(rec.rubric).dump()));
            }
        } else {
            for (const auto& row : read_jsonl(input)) {
                JudgeRecord rec = judge_record_from_json(row);
                const bool chosen_first =
                    rec.base.presented_order == PresentationOrder::ChosenFirst;
                std::string user = prompts::fill(
                    prompts::kJudgeUserTemplate,
                    {{"instruction", rec.base.pair.instruction},
                     {"response_a", chosen_first ? rec.base.pair.chosen : rec.base.pair.rejected},
                     {"response_b", chosen_first ? rec.base.pair.rejected : rec.base.pair.chosen},
                     {"rubric", rubric_to_json(rec.base.rubric).dump(2)}});
                if (!ctx.config.judging.no_think) user = prompts::strip_no_think(user);
                std::string winner_line =
                    "Winner: Response " + std::string(to_string(rec.teacher_verdict));
                std::string assistant = rec.justification.empty()
                                            ? winner_line
                                            : rec.justification + "\n" + winner_line;
                rows.push_back(chat_row(prompts::kJudgeSystem, user, assistant));
            }
        }
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }

    if (rows.empty()) {
        note(ctx, "EmptyDataset: no rows to export");
        return kExitInputError;
    }
    write_jsonl(fs::path(out_prefix.string() + ".jsonl"), rows);
    atomic_write(fs::path(out_prefix.string() + ".train_config.json"),
                 training_config_to_json(TrainingConfigExport::defaults(component)).dump(2) + "\n");
    note(ctx, "exported " + std::to_string(rows.size()) + " rows");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

int run_mask(PipelineContext& ctx, const fs::path& input, const fs::path& output, int k,
             std::uint64_t seed, const std::string& scope_name) {
    auto scope = mask_scope_from_string(scope_name);
    if (!scope) {
        note(ctx, "unknown scope: " + scope_name);
        return kExitConfigError;
    }
    try {
        MaskManifest manifest = mask_rubrics(input, output, MaskSpec{k, seed, *scope});
        atomic_write(sidecar(output, ".manifest.json"),
                     mask_manifest_to_json(manifest).dump(2) + "\n");
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }
    return kExitOk;
}

int run_subsample(PipelineContext& ctx, const fs::path& input, const fs::path& output,
                  std::size_t n, std::uint64_t seed) {
    try {
        SubsampleManifest manifest = subsample(input, output, n, seed);
        atomic_write(sidecar(output, ".manifest.json"),
                     subsample_manifest_to_json(manifest).dump(2) + "\n");
    } catch (const NTooLargeError& e) {
        note(ctx, e.what());
        return kExitInputError;
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }
    return kExitOk;
}

int run_ablate(PipelineContext& ctx, const std::vector<fs::path>& benchmark_files,
               const std::vector<std::string>& mode_names, const fs::path& out_prefix,
               const EvalCliOptions& cli) {
    std::vector<EvalRecord> records;
    try {
        LoadOptions load;
        load.convert_order = cli.convert_order;
        for (const auto& file : benchmark_files)
            for (auto& rec : load_eval_records(file, load)) records.push_back(std::move(rec));
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }

    std::vector<JudgeMode> modes;
    for (const auto& name : mode_names) {
        auto m = judge_mode_from_string(name);
        if (!m) {
            note(ctx, "unknown mode: " + name);
            return kExitConfigError;
        }
        modes.push_back(*m);
    }

    AblationOptions opts;
    try {
        opts.base = eval_options(ctx.config, cli);
    } catch (const std::exception& e) {
        note(ctx, std::string("config error: ") + e.what());
        return kExitConfigError;
    }
    opts.rubric_generator_model = ctx.config.generator_model();
    opts.one_step_generator_model = ctx.config.judging.one_step_generator_model.empty()
                                        ? ctx.config.generator_model()
                                        : ctx.config.judging.one_step_generator_model;

    try {
        AblationResult result = ablation_run(ctx.provider(), records, modes, opts, &ctx.audit);
        atomic_write(fs::path(out_prefix.string() + ".json"),
                     ablation_to_json(result).dump(2) + "\n");
        std::string table = render_ablation_table(result);
        atomic_write(fs::path(out_prefix.string() + ".table.txt"), table);
        if (!ctx.quiet) std::cout << table;
    } catch (const ProviderError& e) {
        note(ctx, std::string("provider error: ") + e.what());
        return kExitProvider;
    }
    report_cache(ctx);
    return kExitOk;
}

int run_case(PipelineContext& ctx, const fs::path& record_file,
             const std::vector<std::string>& mode_names, const fs::path& output) {
    EvalRecord rec;
    try {
        ordered_json row = ordered_json::parse(read_file(record_file));
        // Reuse the loader by writing a one-row temp view.
        auto gold = winner_from_string(row.value("gold", "A"));
        rec.id = row.value("id", record_file.stem().string());
        rec.instruction = row.at("instruction").get<std::string>();
        rec.response_a = row.at("response_a").get<std::string>();
        rec.response_b = row.at("response_b").get<std::string>();
        rec.gold = gold.value_or(Winner::A);
        rec.category = row.value("category", "case");
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }

    EvalCliOptions cli;
    EvalOptions base = eval_options(ctx.config, cli);

    std::optional<RubricSet> rubric;
    std::vector<std::pair<JudgeMode, Judgment>> judgments;
    try {
        for (const auto& name : mode_names) {
            auto mode = judge_mode_from_string(name);
            if (!mode) {
                note(ctx, "unknown mode: " + name);
                return kExitConfigError;
            }
            JudgeCallOptions call = base.judge;
            call.mode = *mode;
            call.order_policy = OrderPolicy::AsGiven;
            const RubricSet* rubric_ptr = nullptr;
            if (*mode != JudgeMode::Direct) {
                if (!rubric) rubric = generate_rubric_for_eval(ctx.provider(), rec, base.generator);
                rubric_ptr = &*rubric;
            }
            JudgeOutcome outcome = judge_pair(ctx.provider(), rec, rubric_ptr, call);
            if (!outcome.judgments.empty())
                judgments.emplace_back(*mode, outcome.judgments.front());
        }
    } catch (const ProviderError& e) {
        note(ctx, std::string("provider error: ") + e.what());
        return kExitProvider;
    } catch (const StructuredOutputFailed& e) {
        note(ctx, std::string("generator failed: ") + e.what());
        return kExitProvider;
    }

    try {
        std::string doc = case_report(rec, judgments, rubric ? &*rubric : nullptr);
        atomic_write(output, doc);
        if (!ctx.quiet) std::cout << doc;
    } catch (const std::invalid_argument& e) {
        note(ctx, e.what());
        return kExitInputError;
    }
    return kExitOk;
}

int run_report(PipelineContext& ctx, const fs::path& baseline_report,
               const std::vector<std::pair<std::string, fs::path>>& variant_reports,
               const fs::path& output) {
    try {
        CategoryReport baseline =
            report_from_json(ordered_json::parse(read_file(baseline_report)));
        std::vector<std::pair<std::string, CategoryReport>> variants;
        for (const auto& [label, path] : variant_reports)
            variants.emplace_back(label,
                                  report_from_json(ordered_json::parse(read_file(path))));
        std::string table = perturbation_report(baseline, variants);
        atomic_write(output, table);
        if (!ctx.quiet) std::cout << table;
    } catch (const MismatchedEvalSetsError& e) {
        note(ctx, e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        note(ctx, std::string("input error: ") + e.what());
        return kExitInputError;
    }
    return kExitOk;
}

}  // namespace rubric_forge
