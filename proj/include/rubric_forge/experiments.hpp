/// @file experiments.hpp
/// @brief Analysis harnesses: rubric-masking perturbation study, data-scaling
/// subsampling, the judging-strategy ablation matrix, and case reports.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rubric_forge/judge.hpp"
#include "rubric_forge/rng.hpp"
#include "rubric_forge/types.hpp"

namespace rubric_forge {

// ---------------------------------------------------------------------------
// Rubric masking
// ---------------------------------------------------------------------------

enum class MaskScope { HardRulesOnly, RulesAndPrinciples };

std::string_view to_string(MaskScope s);
std::optional<MaskScope> mask_scope_from_string(std::string_view name);

struct MaskSpec {
    int k = 0;  // items to delete per record
    std::uint64_t seed = 0;
    MaskScope scope = MaskScope::HardRulesOnly;
};

struct MaskRecordNote {
    std::string id;
    std::vector<std::string> deleted_ids;
    bool clamped = false;  // fewer than k deletions were possible
};

struct MaskManifest {
    std::string algorithm{SeededRng::kAlgorithm};
    MaskSpec spec;
    std::vector<MaskRecordNote> records;
};

ordered_json mask_manifest_to_json(const MaskManifest& m);

/// Per record deletes min(k, |rules|-1) uniformly chosen items (never below
/// one hard rule); untouched fields are re-emitted unchanged and k=0 copies
/// the input bytes verbatim.
MaskManifest mask_rubrics(const std::filesystem::path& input,
                          const std::filesystem::path& output, const MaskSpec& spec);

// ---------------------------------------------------------------------------
// Subsampling (scaling harness)
// ---------------------------------------------------------------------------

class NTooLargeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SubsampleManifest {
    std::string algorithm{SeededRng::kAlgorithm};
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t input_size = 0;
};

ordered_json subsample_manifest_to_json(const SubsampleManifest& m);

/// Uniform without replacement via prefix-of-shuffle, so smaller samples are
/// prefixes of larger ones under one seed. Lines are copied byte-verbatim.
SubsampleManifest subsample(const std::filesystem::path& input,
                            const std::filesystem::path& output, std::size_t n,
                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Perturbation report (Del-k table)
// ---------------------------------------------------------------------------

class MismatchedEvalSetsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Accuracy and delta rows for a baseline report plus labeled variants.
/// Throws MismatchedEvalSetsError when any variant's n differs.
std::string perturbation_report(const CategoryReport& baseline,
                                const std::vector<std::pair<std::string, CategoryReport>>& variants);

// ---------------------------------------------------------------------------
// Ablation matrix
// ---------------------------------------------------------------------------

struct AblationOptions {
    EvalOptions base;
    std::string rubric_generator_model = "generator";
    std::string one_step_generator_model = "one-step-generator";
    JudgeMode baseline_mode = JudgeMode::Direct;
};

struct AblationRow {
    JudgeMode mode = JudgeMode::Direct;
    std::map<Benchmark, double> overalls;
    double average = 0.0;  // recomputed, never trusted from input
};

struct AblationResult {
    std::vector<AblationRow> rows;
    std::optional<std::size_t> baseline_index;
};

AblationResult ablation_run(Provider& provider, const std::vector<EvalRecord>& records,
                            const std::vector<JudgeMode>& modes, const AblationOptions& opts,
                            AuditLog* audit = nullptr);

ordered_json ablation_to_json(const AblationResult& r);
std::string render_ablation_table(const AblationResult& r);

// ---------------------------------------------------------------------------
// Case reports
// ---------------------------------------------------------------------------

inline constexpr std::size_t kElisionThreshold = 1200;
inline constexpr std::string_view kElisionMarker = "[...] [Content Omitted for Brevity]";

/// Cuts text beyond the threshold at the nearest paragraph boundary and
/// appends the omission marker.
std::string elide(const std::string& text, std::size_t threshold = kElisionThreshold);

/// Markdown case study: instruction, (elided) responses, rubric hard rules,
/// and per-mode critique plus prediction with correct/incorrect marks.
/// Requires at least one judgment.
std::string case_report(const EvalRecord& rec,
                        const std::vector<std::pair<JudgeMode, Judgment>>& judgments,
                        const RubricSet* rubric);

}  // namespace rubric_forge
