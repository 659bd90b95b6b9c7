#include "rubric_forge/types.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "rubric_forge/jsonl.hpp"

namespace rubric_forge {

namespace {

[[noreturn]] void row_error(const std::string& path, const std::string& what) {
    throw std::runtime_error("bad dataset row at " + path + ": " + what);
}

std::string require_string(const ordered_json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_string()) row_error(ctx + "." + key, "missing or not a string");
    return j[key].get<std::string>();
}

}  // namespace

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

std::string_view to_string(Dimension d) {
    switch (d) {
        case Dimension::InstructionFollowing: return "Instruction Following";
        case Dimension::ContentCoverage: return "Content Coverage";
        case Dimension::FactualAccuracy: return "Factual Accuracy";
        case Dimension::FormatCompliance: return "Format Compliance";
        case Dimension::LogicalConsistency: return "Logical Consistency";
        case Dimension::Safety: return "Safety";
        case Dimension::Conciseness: return "Conciseness";
        case Dimension::Completeness: return "Completeness";
    }
    return "Instruction Following";
}

std::optional<Dimension> dimension_from_string(std::string_view name) {
    for (Dimension d : kAllDimensions)
        if (to_string(d) == name) return d;
    return std::nullopt;
}

std::string_view to_string(FindingStatus s) {
    switch (s) {
        case FindingStatus::Pass: return "pass";
        case FindingStatus::Fail: return "fail";
        case FindingStatus::Partial: return "partial";
        case FindingStatus::NotApplicable: return "not_applicable";
    }
    return "pass";
}

std::optional<FindingStatus> finding_status_from_string(std::string_view name) {
    if (name == "pass") return FindingStatus::Pass;
    if (name == "fail") return FindingStatus::Fail;
    if (name == "partial") return FindingStatus::Partial;
    if (name == "not_applicable") return FindingStatus::NotApplicable;
    return std::nullopt;
}

std::string_view to_string(RuleType t) { return t == RuleType::Must ? "must" : "forbid"; }

std::optional<RuleType> rule_type_from_string(std::string_view name) {
    if (name == "must") return RuleType::Must;
    if (name == "forbid") return RuleType::Forbid;
    return std::nullopt;
}

std::string_view to_string(RubricPrediction p) {
    switch (p) {
        case RubricPrediction::A: return "A";
        case RubricPrediction::B: return "B";
        case RubricPrediction::Tie: return "tie";
    }
    return "A";
}

std::optional<RubricPrediction> rubric_prediction_from_string(std::string_view name) {
    if (name == "A") return RubricPrediction::A;
    if (name == "B") return RubricPrediction::B;
    if (name == "tie") return RubricPrediction::Tie;
    return std::nullopt;
}

std::string_view to_string(Winner w) { return w == Winner::A ? "A" : "B"; }

std::optional<Winner> winner_from_string(std::string_view name) {
    if (name == "A") return Winner::A;
    if (name == "B") return Winner::B;
    return std::nullopt;
}

std::string_view to_string(PresentationOrder o) {
    return o == PresentationOrder::ChosenFirst ? "ChosenFirst" : "RejectedFirst";
}

std::optional<PresentationOrder> presentation_order_from_string(std::string_view name) {
    if (name == "ChosenFirst") return PresentationOrder::ChosenFirst;
    if (name == "RejectedFirst") return PresentationOrder::RejectedFirst;
    return std::nullopt;
}

std::string_view to_string(JudgeMode m) {
    switch (m) {
        case JudgeMode::RubricGuided: return "rubric_guided";
        case JudgeMode::Direct: return "direct";
        case JudgeMode::OneStepRubric: return "one_step_rubric";
    }
    return "rubric_guided";
}

std::optional<JudgeMode> judge_mode_from_string(std::string_view name) {
    if (name == "rubric_guided") return JudgeMode::RubricGuided;
    if (name == "direct") return JudgeMode::Direct;
    if (name == "one_step_rubric") return JudgeMode::OneStepRubric;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

ordered_json finding_to_json(const Finding& f) {
    ordered_json j;
    j["criterion"] = std::string(to_string(f.criterion));
    j["status"] = std::string(to_string(f.status));
    j["severity"] = f.severity;
    j["claim"] = f.claim;
    j["evidence"] = f.evidence;
    j["instruction_anchor"] = f.instruction_anchor;
    return j;
}

ordered_json profile_to_json(const Profile& p) {
    ordered_json j;
    auto& cands = j["criteria_candidates"] = ordered_json::array();
    for (Dimension d : p.criteria_candidates) cands.push_back(std::string(to_string(d)));
    auto& findings = j["findings"] = ordered_json::array();
    for (const Finding& f : p.findings) findings.push_back(finding_to_json(f));
    return j;
}

ordered_json hard_rule_to_json(const HardRule& r) {
    ordered_json j;
    j["rule_id"] = r.rule_id;
    j["type"] = std::string(to_string(r.type));
    j["criterion"] = r.criterion;
    j["test"] = r.test;
    j["rationale"] = r.rationale;
    if (r.derived_from) {
        ordered_json d;
        d["answer_a_findings"] = r.derived_from->answer_a_findings;
        d["answer_b_findings"] = r.derived_from->answer_b_findings;
        j["derived_from"] = std::move(d);
    }
    return j;
}

ordered_json principle_to_json(const Principle& p) {
    ordered_json j;
    j["principle_id"] = p.principle_id;
    j["description"] = p.description;
    j["rationale"] = p.rationale;
    return j;
}

ordered_json rubric_to_json(const RubricSet& r) {
    ordered_json j;
    j["instruction_id"] = r.instruction_id;
    auto& rules = j["hard_rules"] = ordered_json::array();
    for (const HardRule& hr : r.hard_rules) rules.push_back(hard_rule_to_json(hr));
    auto& principles = j["principles"] = ordered_json::array();
    for (const Principle& p : r.principles) principles.push_back(principle_to_json(p));
    if (r.pair_consistency_check) {
        ordered_json c;
        c["expected_winner"] = r.pair_consistency_check->expected_winner;
        c["rubric_predicts"] = std::string(to_string(r.pair_consistency_check->rubric_predicts));
        c["notes"] = r.pair_consistency_check->notes;
        j["pair_consistency_check"] = std::move(c);
    }
    return j;
}

ordered_json pair_to_json(const PreferencePair& p) {
    ordered_json j;
    j["id"] = p.id;
    j["instruction"] = p.instruction;
    j["chosen"] = p.chosen;
    j["rejected"] = p.rejected;
    j["meta"] = ordered_json::object();
    for (const auto& [k, v] : p.meta) j["meta"][k] = v;
    return j;
}

ordered_json rubric_record_to_json(const RubricRecord& r) {
    ordered_json j;
    j["id"] = r.pair.id;
    j["instruction"] = r.pair.instruction;
    j["chosen"] = r.pair.chosen;
    j["rejected"] = r.pair.rejected;
    j["rubric"] = rubric_to_json(r.rubric);
    j["presented_order"] = std::string(to_string(r.presented_order));
    return j;
}

ordered_json judge_record_to_json(const JudgeRecord& r) {
    ordered_json j = rubric_record_to_json(r.base);
    j["justification"] = r.justification;
    j["teacher_verdict"] = std::string(to_string(r.teacher_verdict));
    if (r.teacher_agrees) j["teacher_agrees"] = *r.teacher_agrees;
    return j;
}

// ---------------------------------------------------------------------------
// Row loaders
// ---------------------------------------------------------------------------

PreferencePair pair_from_json(const ordered_json& j) {
    PreferencePair p;
    p.id = require_string(j, "id", "pair");
    p.instruction = require_string(j, "instruction", "pair");
    p.chosen = require_string(j, "chosen", "pair");
    p.rejected = require_string(j, "rejected", "pair");
    if (j.contains("meta")) {
        if (!j["meta"].is_object()) row_error("pair.meta", "not an object");
        for (const auto& [k, v] : j["meta"].items()) {
            if (!v.is_string()) row_error("pair.meta." + k, "not a string");
            p.meta[k] = v.get<std::string>();
        }
    }
    return p;
}

namespace {

RubricSet rubric_from_row_json(const ordered_json& j) {
    RubricSet r;
    r.instruction_id = require_string(j, "instruction_id", "rubric");
    if (!j.contains("hard_rules") || !j["hard_rules"].is_array() || j["hard_rules"].empty())
        row_error("rubric.hard_rules", "missing, not an array, or empty");
    for (const auto& rj : j["hard_rules"]) {
        HardRule hr;
        hr.rule_id = require_string(rj, "rule_id", "rubric.hard_rules");
        auto t = rule_type_from_string(require_string(rj, "type", "rubric.hard_rules"));
        if (!t) row_error("rubric.hard_rules.type", "not must/forbid");
        hr.type = *t;
        hr.criterion = require_string(rj, "criterion", "rubric.hard_rules");
        hr.test = require_string(rj, "test", "rubric.hard_rules");
        hr.rationale = require_string(rj, "rationale", "rubric.hard_rules");
        if (rj.contains("derived_from") && rj["derived_from"].is_object()) {
            DerivedFrom d;
            for (const auto& s : rj["derived_from"].value("answer_a_findings", ordered_json::array()))
                d.answer_a_findings.push_back(s.get<std::string>());
            for (const auto& s : rj["derived_from"].value("answer_b_findings", ordered_json::array()))
                d.answer_b_findings.push_back(s.get<std::string>());
            hr.derived_from = std::move(d);
        }
        r.hard_rules.push_back(std::move(hr));
    }
    for (const auto& pj : j.value("principles", ordered_json::array())) {
        Principle p;
        p.principle_id = require_string(pj, "principle_id", "rubric.principles");
        p.description = require_string(pj, "description", "rubric.principles");
        p.rationale = require_string(pj, "rationale", "rubric.principles");
        r.principles.push_back(std::move(p));
    }
    if (j.contains("pair_consistency_check") && j["pair_consistency_check"].is_object()) {
        const auto& cj = j["pair_consistency_check"];
        PairConsistencyCheck c;
        c.expected_winner = require_string(cj, "expected_winner", "rubric.pair_consistency_check");
        auto pred = rubric_prediction_from_string(
            require_string(cj, "rubric_predicts", "rubric.pair_consistency_check"));
        if (!pred) row_error("rubric.pair_consistency_check.rubric_predicts", "not A/B/tie");
        c.rubric_predicts = *pred;
        c.notes = cj.value("notes", std::string{});
        r.pair_consistency_check = std::move(c);
    }
    return r;
}

}  // namespace

RubricRecord rubric_record_from_json(const ordered_json& j) {
    RubricRecord r;
    r.pair.id = require_string(j, "id", "record");
    r.pair.instruction = require_string(j, "instruction", "record");
    r.pair.chosen = require_string(j, "chosen", "record");
    r.pair.rejected = require_string(j, "rejected", "record");
    if (!j.contains("rubric") || !j["rubric"].is_object()) row_error("record.rubric", "missing");
    r.rubric = rubric_from_row_json(j["rubric"]);
    auto order = presentation_order_from_string(require_string(j, "presented_order", "record"));
    if (!order) row_error("record.presented_order", "not ChosenFirst/RejectedFirst");
    r.presented_order = *order;
    return r;
}

JudgeRecord judge_record_from_json(const ordered_json& j) {
    JudgeRecord r;
    r.base = rubric_record_from_json(j);
    r.justification = require_string(j, "justification", "record");
    auto w = winner_from_string(require_string(j, "teacher_verdict", "record"));
    if (!w) row_error("record.teacher_verdict", "not A/B");
    r.teacher_verdict = *w;
    if (j.contains("teacher_agrees")) r.teacher_agrees = j["teacher_agrees"].get<bool>();
    return r;
}

std::vector<PreferencePair> load_preference_pairs(const std::string& path) {
    std::vector<PreferencePair> pairs;
    std::set<std::string> seen;
    size_t line_no = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line_no;
        PreferencePair p = pair_from_json(row);
        if (trim(p.id).empty())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty id");
        if (!seen.insert(p.id).second)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate id " + p.id);
        if (trim(p.instruction).empty() || trim(p.chosen).empty() || trim(p.rejected).empty())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": blank field in pair " +
                                     p.id);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace rubric_forge
