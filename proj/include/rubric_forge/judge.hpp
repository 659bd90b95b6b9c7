/// @file judge.hpp
/// @brief Rubric-guided and ablation judging, verdict parsing, benchmark
/// loading, and the macro-mean accuracy rollup.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rubric_forge/audit.hpp"
#include "rubric_forge/parse.hpp"
#include "rubric_forge/provider.hpp"
#include "rubric_forge/types.hpp"

namespace rubric_forge {

// ---------------------------------------------------------------------------
// Benchmark records
// ---------------------------------------------------------------------------

enum class Benchmark { RewardBench, RMBench, RMB, Generic };

std::string_view to_string(Benchmark b);
std::optional<Benchmark> benchmark_from_string(std::string_view name);

enum class DifficultyLevel { Easy, Medium, Hard };

std::string_view to_string(DifficultyLevel d);
std::optional<DifficultyLevel> difficulty_from_string(std::string_view name);

struct EvalRecord {
    std::string id;
    std::string instruction;
    std::string response_a;
    std::string response_b;
    Winner gold = Winner::A;
    Benchmark benchmark = Benchmark::Generic;
    std::string category;
    std::optional<DifficultyLevel> difficulty;  // present iff benchmark == RMBench
};

struct LoadOptions {
    /// Slot policy when converting prompt/chosen/rejected trios:
    /// "alternate" (default, even index presents chosen as A) or "chosen_first".
    std::string convert_order = "alternate";
    Benchmark default_benchmark = Benchmark::Generic;
    std::string default_category = "all";
};

/// Loads benchmark JSONL. Rows may be native (response_a/response_b/gold) or
/// prompt-chosen-rejected trios, which are converted under convert_order.
std::vector<EvalRecord> load_eval_records(const std::filesystem::path& path,
                                          const LoadOptions& opts = {});

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CategoryCount {
    long long correct = 0;
    long long total = 0;
    double accuracy() const { return total > 0 ? static_cast<double>(correct) / total : 0.0; }
};

struct CategoryReport {
    Benchmark benchmark = Benchmark::Generic;
    std::map<std::string, CategoryCount> per_category;
    std::map<std::string, CategoryCount> per_difficulty;  // RMBench only
    double overall = 0.0;
    long long n = 0;
    bool micro = false;
    long long verdict_missing = 0;
    long long rubric_fallbacks = 0;
    long long inconsistent = 0;  // Both-order disagreements
};

ordered_json report_to_json(const CategoryReport& r);
CategoryReport report_from_json(const ordered_json& j);

/// Unweighted macro mean over categories, except RMBench, whose overall is
/// the mean over its three difficulty accuracies. micro uses pooled counts.
CategoryReport aggregate_report(Benchmark benchmark,
                                const std::vector<EvalRecord>& records,
                                const std::vector<bool>& correct, bool micro = false);

class MissingBenchmarkError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Mean of the overall scores. All of RewardBench, RMBench, and RMB must be
/// present; throws MissingBenchmarkError otherwise.
double cross_benchmark_average(const std::map<Benchmark, double>& overalls);

/// Percent with round-half-up at `decimals` places, e.g. 0.9039 -> "90.4".
std::string format_pct(double fraction, int decimals = 1);

/// Signed percent delta at two decimals: "+0.05", "-0.42".
std::string format_delta_pp(double delta_pp);

/// Plain-text scoreboard: one detail block per report plus the
/// wide summary row (and Avg.) when all three benchmarks are present.
std::string render_report_table(const std::vector<CategoryReport>& reports);

// ---------------------------------------------------------------------------
// Judging
// ---------------------------------------------------------------------------

struct Verdict {
    Winner winner = Winner::A;
    std::string justification;
};

/// Scans for the last line matching the verdict grammar
/// ("Winner: Response A|B", whitespace and markdown emphasis tolerated).
/// Justification is the "--- Final Judgment ---" section (full text when the
/// marker is absent) minus the winner line. Throws ParseError(VerdictMissing)
/// with the raw text attached.
Verdict parse_verdict(const std::string& text);

enum class OrderPolicy { AsGiven, Swap, Both };

std::string_view to_string(OrderPolicy p);
std::optional<OrderPolicy> order_policy_from_string(std::string_view name);

/// Maps a winner parsed under swapped presentation back to the record frame.
inline Winner map_winner(Winner presented, bool swapped) {
    return swapped ? other(presented) : presented;
}

struct JudgeCallOptions {
    JudgeMode mode = JudgeMode::RubricGuided;
    OrderPolicy order_policy = OrderPolicy::AsGiven;
    bool strict_both = true;  // Both: correct requires both orders on gold
    std::string model = "judge";
    double temperature = 0.0;
    int max_tokens = 4096;
    int repair_attempts = 2;
    bool include_no_think = true;
};

/// Rubric must be present iff mode uses one. Deterministic bytes.
ChatRequest render_judge_prompt(const std::string& instruction, const std::string& response_a,
                                const std::string& response_b, const RubricSet* rubric,
                                JudgeMode mode, const JudgeCallOptions& opts);

struct JudgeOutcome {
    std::vector<Judgment> judgments;        // parsed calls, presented frame
    std::optional<Winner> winner;           // record frame; unset on missing verdict
    bool correct = false;                   // conservative: missing counts incorrect
    bool consistent = true;                 // Both mode agreement
    bool verdict_missing = false;
};

JudgeOutcome judge_pair(Provider& provider, const EvalRecord& rec, const RubricSet* rubric,
                        const JudgeCallOptions& opts);

struct GeneratorOptions {
    std::string model = "generator";
    double temperature = 0.0;
    int max_tokens = 4096;
    int repair_attempts = 2;
};

/// Eval-time rubric generation from the generator templates. Throws
/// StructuredOutputFailed when repairs run out; callers fall back to Direct.
RubricSet generate_rubric_for_eval(Provider& provider, const EvalRecord& rec,
                                   const GeneratorOptions& opts);

struct EvalOptions {
    JudgeMode mode = JudgeMode::RubricGuided;
    OrderPolicy order_policy = OrderPolicy::AsGiven;
    bool strict_both = true;
    bool micro = false;
    JudgeCallOptions judge;
    GeneratorOptions generator;
    int workers = 4;
};

/// Judges every record (rubric generation first in rubric modes; a generation
/// failure downgrades that record to a flagged Direct judgment, never a drop)
/// and aggregates the report. Records must share one benchmark.
CategoryReport evaluate(Provider& provider, const std::vector<EvalRecord>& records,
                        const EvalOptions& opts, AuditLog* audit = nullptr);

}  // namespace rubric_forge
