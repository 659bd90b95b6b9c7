/// @file types.hpp
/// @brief Domain types shared by every pipeline stage, plus their JSON schemas.
///
/// Field names on the wire are fixed by the prompt contracts and must not be
/// renamed: criteria_candidates, findings, criterion, status, severity, claim,
/// evidence, instruction_anchor, hard_rules, rule_id, type, test, rationale,
/// derived_from, principles, principle_id, description, pair_consistency_check,
/// expected_winner, rubric_predicts, notes, instruction_id.

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rubric_forge {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Diagnosis taxonomy
// ---------------------------------------------------------------------------

/// The fixed eight-dimension diagnosis taxonomy. Unknown names are a parse
/// error, never coerced.
enum class Dimension {
    InstructionFollowing,
    ContentCoverage,
    FactualAccuracy,
    FormatCompliance,
    LogicalConsistency,
    Safety,
    Conciseness,
    Completeness,
};

inline constexpr std::array<Dimension, 8> kAllDimensions{
    Dimension::InstructionFollowing, Dimension::ContentCoverage,
    Dimension::FactualAccuracy,      Dimension::FormatCompliance,
    Dimension::LogicalConsistency,   Dimension::Safety,
    Dimension::Conciseness,          Dimension::Completeness,
};

std::string_view to_string(Dimension d);
std::optional<Dimension> dimension_from_string(std::string_view name);

enum class FindingStatus { Pass, Fail, Partial, NotApplicable };

std::string_view to_string(FindingStatus s);
std::optional<FindingStatus> finding_status_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Preference data
// ---------------------------------------------------------------------------

/// One (x, y^c, y^r) record. The preference label is implicit: chosen wins.
struct PreferencePair {
    std::string id;
    std::string instruction;
    std::string chosen;
    std::string rejected;
    std::map<std::string, std::string> meta;

    bool operator==(const PreferencePair&) const = default;
};

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// A single evidence-anchored diagnosis on one dimension.
/// Invariant: evidence is non-empty whenever status is fail or partial;
/// instruction_anchor is always non-empty.
struct Finding {
    Dimension criterion = Dimension::InstructionFollowing;
    FindingStatus status = FindingStatus::Pass;
    int severity = 0;  // 0..3; carried but only meaningful on fail/partial
    std::string claim;
    std::string evidence;
    std::string instruction_anchor;

    bool operator==(const Finding&) const = default;
};

/// The diagnosis of one response: active dimensions plus findings.
/// Invariant: every finding.criterion appears in criteria_candidates, and
/// criteria_candidates is a non-empty duplicate-free subset of the taxonomy.
struct Profile {
    std::vector<Dimension> criteria_candidates;
    std::vector<Finding> findings;
    std::string raw;  // original completion text, preserved for audit

    // raw is provenance, not content; equality compares the parsed value.
    friend bool operator==(const Profile& a, const Profile& b) {
        return a.criteria_candidates == b.criteria_candidates && a.findings == b.findings;
    }
};

// ---------------------------------------------------------------------------
// Rubrics
// ---------------------------------------------------------------------------

enum class RuleType { Must, Forbid };

std::string_view to_string(RuleType t);
std::optional<RuleType> rule_type_from_string(std::string_view name);

struct DerivedFrom {
    std::vector<std::string> answer_a_findings;
    std::vector<std::string> answer_b_findings;

    bool operator==(const DerivedFrom&) const = default;
};

struct HardRule {
    std::string rule_id;
    RuleType type = RuleType::Must;
    std::string criterion;
    std::string test;
    std::string rationale;
    std::optional<DerivedFrom> derived_from;

    bool operator==(const HardRule&) const = default;
};

struct Principle {
    std::string principle_id;
    std::string description;
    std::string rationale;

    bool operator==(const Principle&) const = default;
};

enum class RubricPrediction { A, B, Tie };

std::string_view to_string(RubricPrediction p);
std::optional<RubricPrediction> rubric_prediction_from_string(std::string_view name);

/// The synthesis prompt's self-consistency block. expected_winner is stored
/// verbatim and never interpreted beyond logging.
struct PairConsistencyCheck {
    std::string expected_winner;
    RubricPrediction rubric_predicts = RubricPrediction::A;
    std::string notes;

    bool operator==(const PairConsistencyCheck&) const = default;
};

/// R(x): hard rules plus principles for one instruction.
/// Invariant: hard_rules is non-empty; rule and principle ids are unique.
struct RubricSet {
    std::string instruction_id;
    std::vector<HardRule> hard_rules;
    std::vector<Principle> principles;
    std::optional<PairConsistencyCheck> pair_consistency_check;
    std::string raw;

    std::size_t size() const { return hard_rules.size() + principles.size(); }

    friend bool operator==(const RubricSet& a, const RubricSet& b) {
        return a.instruction_id == b.instruction_id && a.hard_rules == b.hard_rules &&
               a.principles == b.principles &&
               a.pair_consistency_check == b.pair_consistency_check;
    }
};

// ---------------------------------------------------------------------------
// Judgments
// ---------------------------------------------------------------------------

enum class Winner { A, B };

std::string_view to_string(Winner w);
std::optional<Winner> winner_from_string(std::string_view name);
inline Winner other(Winner w) { return w == Winner::A ? Winner::B : Winner::A; }

enum class PresentationOrder { ChosenFirst, RejectedFirst };

std::string_view to_string(PresentationOrder o);
std::optional<PresentationOrder> presentation_order_from_string(std::string_view name);

enum class JudgeMode { RubricGuided, Direct, OneStepRubric };

std::string_view to_string(JudgeMode m);
std::optional<JudgeMode> judge_mode_from_string(std::string_view name);

/// A parsed verdict from one judging call.
struct Judgment {
    Winner winner = Winner::A;
    std::string justification;
    PresentationOrder presented_order = PresentationOrder::ChosenFirst;
    std::string raw;
    JudgeMode mode = JudgeMode::RubricGuided;
};

// ---------------------------------------------------------------------------
// Dataset rows
// ---------------------------------------------------------------------------

/// One row of D_rubric. Exists only if the consistency check passed.
struct RubricRecord {
    PreferencePair pair;
    RubricSet rubric;
    PresentationOrder presented_order = PresentationOrder::ChosenFirst;
};

/// One row of D_judge: a RubricRecord plus the teacher's justification.
struct JudgeRecord {
    RubricRecord base;
    std::string justification;
    Winner teacher_verdict = Winner::A;
    std::optional<bool> teacher_agrees;  // present only when the gate is off
};

// ---------------------------------------------------------------------------
// Serialization (ordered, field order fixed)
// ---------------------------------------------------------------------------

ordered_json finding_to_json(const Finding& f);
ordered_json profile_to_json(const Profile& p);
ordered_json hard_rule_to_json(const HardRule& r);
ordered_json principle_to_json(const Principle& p);
ordered_json rubric_to_json(const RubricSet& r);
ordered_json pair_to_json(const PreferencePair& p);
ordered_json rubric_record_to_json(const RubricRecord& r);
ordered_json judge_record_to_json(const JudgeRecord& r);

/// Strict loaders for rows this pipeline itself wrote. Throw std::runtime_error
/// with a field path on malformed rows.
PreferencePair pair_from_json(const ordered_json& j);
RubricRecord rubric_record_from_json(const ordered_json& j);
JudgeRecord judge_record_from_json(const ordered_json& j);

/// Reads a PreferencePair JSONL file and enforces the dataset invariants
/// (unique non-empty ids, non-blank text fields).
std::vector<PreferencePair> load_preference_pairs(const std::string& path);

std::string trim(std::string_view s);

}  // namespace rubric_forge
