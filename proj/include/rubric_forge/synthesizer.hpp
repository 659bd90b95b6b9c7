/// @file synthesizer.hpp
/// @brief Rubric synthesis from contrastive profiles, the preference-
/// consistency filter, and construction of the rubric and judge datasets.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rubric_forge/audit.hpp"
#include "rubric_forge/judge.hpp"
#include "rubric_forge/profiler.hpp"
#include "rubric_forge/provider.hpp"
#include "rubric_forge/types.hpp"

namespace rubric_forge {

/// The rendered contrastive concatenation of two profiles. Presentation
/// labels are neutral ("Answer A"/"Answer B"); slot contents follow the
/// order parameter, never the chosen/rejected identity.
struct ContrastBlock {
    struct Span {
        std::size_t begin = 0;
        std::size_t end = 0;
    };
    std::string text;
    Span chosen_section;
    Span rejected_section;
};

ContrastBlock contrastive_concat(const Profile& chosen, const Profile& rejected,
                                 PresentationOrder order);

/// Aggregate of the preference-consistency filter over one run.
/// Invariant: total == kept + dropped_mismatch + dropped_parse.
struct FilterStats {
    long long total = 0;
    long long kept = 0;
    long long dropped_mismatch = 0;
    long long dropped_parse = 0;

    double kept_ratio() const { return total > 0 ? static_cast<double>(kept) / total : 0.0; }
    FilterStats& operator+=(const FilterStats& other);
};

ordered_json filter_stats_to_json(const FilterStats& s);

struct SynthesizerOptions {
    std::string model = "teacher";
    double temperature = 0.7;
    int max_tokens = 4096;
    int repair_attempts = 2;
    /// Best-of-n: up to n synthesis samples, first that passes the filter wins.
    int samples = 1;
    /// alternate | chosen_first | rejected_first
    std::string order_policy = "alternate";
    bool judge_gate = true;  // D_judge retention requires teacher agreement
    std::string judge_model = "judge";
    double judge_temperature = 0.0;
    int judge_max_tokens = 4096;
    int judge_repair_attempts = 2;
    bool include_no_think = true;
    std::optional<std::size_t> target_kept;
    std::optional<std::size_t> input_cap;
    int workers = 4;
};

PresentationOrder order_for_index(const std::string& policy, std::size_t index);

/// One sampled synthesis completion over the contrast block. instruction_id is
/// always overwritten with the pair id. Throws StructuredOutputFailed.
RubricSet synthesize_rubric(Provider& provider, const ProfiledPair& profiled,
                            PresentationOrder order, const SynthesizerOptions& opts,
                            AuditLog* audit = nullptr);

struct ConsistencyResult {
    std::optional<Winner> predicted;  // slot named by the judge
    bool valid = false;               // consistency indicator
    bool parse_failed = false;        // missing verdict counts as invalid
};

/// One rubric-guided judging call at temperature 0; valid iff the predicted
/// winner is the chosen response under the presentation order.
ConsistencyResult consistency_check(Provider& provider, const PreferencePair& pair,
                                    const RubricSet& rubric, PresentationOrder order,
                                    const SynthesizerOptions& opts);

struct RubricDatasetResult {
    std::vector<RubricRecord> records;
    FilterStats stats;
};

/// synthesize -> consistency-check -> keep iff valid, per profiled pair.
/// Record-level failures only; deterministic under the mock provider.
RubricDatasetResult build_rubric_dataset(Provider& provider,
                                         const std::vector<ProfiledPair>& profiled,
                                         const SynthesizerOptions& opts,
                                         AuditLog* audit = nullptr);

struct JudgeDatasetResult {
    std::vector<JudgeRecord> records;
    std::vector<SkipEntry> skips;
};

/// Teacher justification per rubric record; retention requires the teacher's
/// rubric-guided verdict to match ground truth unless judge_gate is off.
JudgeDatasetResult build_judge_dataset(Provider& provider,
                                       const std::vector<RubricRecord>& records,
                                       const SynthesizerOptions& opts,
                                       AuditLog* audit = nullptr);

}  // namespace rubric_forge
