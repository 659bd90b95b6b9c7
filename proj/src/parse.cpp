#include "rubric_forge/parse.hpp"

#include <set>

namespace rubric_forge {

namespace {

using json = nlohmann::json;

/// Scans from the first '{' at or after `from`, honoring strings and escapes.
std::optional<std::string> balanced_object(std::string_view text, size_t from) {
    size_t start = text.find('{', from);
    if (start == std::string_view::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0)
            return std::string(text.substr(start, i - start + 1));
    }
    return std::nullopt;
}

json parse_document(const std::string& text, const std::string& raw) {
    auto obj = extract_json_object(text);
    if (!obj)
        throw ParseError(ParseError::Kind::MalformedJson, "", "no JSON object found in completion",
                         raw);
    try {
        return json::parse(*obj);
    } catch (const json::exception& e) {
        throw ParseError(ParseError::Kind::MalformedJson, "", e.what(), raw);
    }
}

[[noreturn]] void violation(const std::string& path, const std::string& what,
                            const std::string& raw) {
    throw ParseError(ParseError::Kind::SchemaViolation, path, what, raw);
}

std::string get_string(const json& j, const char* key, const std::string& ctx,
                       const std::string& raw) {
    if (!j.contains(key)) violation(ctx.empty() ? key : ctx + "." + key, "missing field", raw);
    if (!j[key].is_string())
        violation(ctx.empty() ? key : ctx + "." + key, "expected a string", raw);
    return j[key].get<std::string>();
}

}  // namespace

std::string ParseError::describe(Kind kind, const std::string& path, const std::string& message) {
    std::string out(to_string(kind));
    if (!path.empty()) out += " at " + path;
    out += ": " + message;
    return out;
}

std::string_view to_string(ParseError::Kind k) {
    switch (k) {
        case ParseError::Kind::MalformedJson: return "MalformedJson";
        case ParseError::Kind::SchemaViolation: return "SchemaViolation";
        case ParseError::Kind::VerdictMissing: return "VerdictMissing";
        case ParseError::Kind::VerdictAmbiguous: return "VerdictAmbiguous";
    }
    return "MalformedJson";
}

std::optional<std::string> extract_json_object(std::string_view text) {
    // Prefer the first fenced block that holds an object; fall back to the
    // whole text. Fences may carry a language tag ("```json").
    size_t pos = 0;
    while (true) {
        size_t open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        size_t body = text.find('\n', open);
        if (body == std::string_view::npos) break;
        size_t close = text.find("```", body);
        if (close == std::string_view::npos) break;
        if (auto obj = balanced_object(text.substr(body + 1, close - body - 1), 0)) return obj;
        pos = close + 3;
    }
    return balanced_object(text, 0);
}

Profile parse_profile(const std::string& json_text) {
    json doc = parse_document(json_text, json_text);
    if (!doc.is_object())
        throw ParseError(ParseError::Kind::SchemaViolation, "", "top level is not an object",
                         json_text);

    Profile profile;
    profile.raw = json_text;

    if (!doc.contains("criteria_candidates")) violation("criteria_candidates", "missing field", json_text);
    if (!doc["criteria_candidates"].is_array())
        violation("criteria_candidates", "expected an array", json_text);
    if (doc["criteria_candidates"].empty())
        violation("criteria_candidates", "empty candidate set", json_text);

    std::set<Dimension> seen;
    size_t i = 0;
    for (const auto& entry : doc["criteria_candidates"]) {
        std::string path = "criteria_candidates[" + std::to_string(i) + "]";
        if (!entry.is_string()) violation(path, "expected a string", json_text);
        auto dim = dimension_from_string(entry.get<std::string>());
        if (!dim) violation(path, "unknown dimension \"" + entry.get<std::string>() + "\"", json_text);
        if (!seen.insert(*dim).second) violation(path, "duplicate dimension", json_text);
        profile.criteria_candidates.push_back(*dim);
        ++i;
    }

    if (!doc.contains("findings")) violation("findings", "missing field", json_text);
    if (!doc["findings"].is_array()) violation("findings", "expected an array", json_text);

    i = 0;
    for (const auto& fj : doc["findings"]) {
        std::string ctx = "findings[" + std::to_string(i) + "]";
        if (!fj.is_object()) violation(ctx, "expected an object", json_text);

        Finding f;
        auto dim = dimension_from_string(get_string(fj, "criterion", ctx, json_text));
        if (!dim) violation(ctx + ".criterion", "unknown dimension", json_text);
        f.criterion = *dim;
        if (seen.find(*dim) == seen.end())
            violation(ctx + ".criterion", "criterion not in criteria_candidates", json_text);

        auto status = finding_status_from_string(get_string(fj, "status", ctx, json_text));
        if (!status) violation(ctx + ".status", "unknown status", json_text);
        f.status = *status;

        if (!fj.contains("severity")) violation(ctx + ".severity", "missing field", json_text);
        if (!fj["severity"].is_number_integer())
            violation(ctx + ".severity", "expected an integer", json_text);
        f.severity = fj["severity"].get<int>();
        if (f.severity < 0 || f.severity > 3)
            violation(ctx + ".severity", "out of range 0..3", json_text);

        f.claim = get_string(fj, "claim", ctx, json_text);
        f.evidence = get_string(fj, "evidence", ctx, json_text);
        f.instruction_anchor = get_string(fj, "instruction_anchor", ctx, json_text);

        // Findings without evidence are invalid on fail/partial; anchors are
        // mandatory everywhere.
        if ((f.status == FindingStatus::Fail || f.status == FindingStatus::Partial) &&
            trim(f.evidence).empty())
            violation(ctx + ".evidence", "evidence required when status is fail or partial",
                      json_text);
        if (trim(f.instruction_anchor).empty())
            violation(ctx + ".instruction_anchor", "must be non-empty", json_text);

        profile.findings.push_back(std::move(f));
        ++i;
    }
    return profile;
}

RubricSet parse_rubric(const std::string& json_text) {
    json doc = parse_document(json_text, json_text);
    if (!doc.is_object())
        throw ParseError(ParseError::Kind::SchemaViolation, "", "top level is not an object",
                         json_text);

    RubricSet rubric;
    rubric.raw = json_text;

    if (doc.contains("instruction_id") && doc["instruction_id"].is_string())
        rubric.instruction_id = doc["instruction_id"].get<std::string>();

    if (!doc.contains("hard_rules")) violation("hard_rules", "missing field", json_text);
    if (!doc["hard_rules"].is_array()) violation("hard_rules", "expected an array", json_text);
    if (doc["hard_rules"].empty()) violation("hard_rules", "zero hard rules", json_text);

    std::set<std::string> rule_ids;
    size_t i = 0;
    for (const auto& rj : doc["hard_rules"]) {
        std::string ctx = "hard_rules[" + std::to_string(i) + "]";
        if (!rj.is_object()) violation(ctx, "expected an object", json_text);

        HardRule rule;
        rule.rule_id = get_string(rj, "rule_id", ctx, json_text);
        if (trim(rule.rule_id).empty()) violation(ctx + ".rule_id", "must be non-empty", json_text);
        if (!rule_ids.insert(rule.rule_id).second)
            violation(ctx + ".rule_id", "duplicate rule_id \"" + rule.rule_id + "\"", json_text);

        auto type = rule_type_from_string(get_string(rj, "type", ctx, json_text));
        if (!type) violation(ctx + ".type", "must be \"must\" or \"forbid\"", json_text);
        rule.type = *type;

        rule.criterion = get_string(rj, "criterion", ctx, json_text);
        rule.test = get_string(rj, "test", ctx, json_text);
        rule.rationale = get_string(rj, "rationale", ctx, json_text);

        if (rj.contains("derived_from")) {
            if (!rj["derived_from"].is_object())
                violation(ctx + ".derived_from", "expected an object", json_text);
            DerivedFrom d;
            for (const char* key : {"answer_a_findings", "answer_b_findings"}) {
                if (!rj["derived_from"].contains(key)) continue;
                if (!rj["derived_from"][key].is_array())
                    violation(ctx + ".derived_from." + key, "expected an array", json_text);
                auto& dst = std::string_view(key) == "answer_a_findings" ? d.answer_a_findings
                                                                         : d.answer_b_findings;
                size_t k = 0;
                for (const auto& s : rj["derived_from"][key]) {
                    if (!s.is_string())
                        violation(ctx + ".derived_from." + key + "[" + std::to_string(k) + "]",
                                  "expected a string", json_text);
                    dst.push_back(s.get<std::string>());
                    ++k;
                }
            }
            rule.derived_from = std::move(d);
        }
        rubric.hard_rules.push_back(std::move(rule));
        ++i;
    }

    if (doc.contains("principles")) {
        if (!doc["principles"].is_array()) violation("principles", "expected an array", json_text);
        std::set<std::string> principle_ids;
        i = 0;
        for (const auto& pj : doc["principles"]) {
            std::string ctx = "principles[" + std::to_string(i) + "]";
            if (!pj.is_object()) violation(ctx, "expected an object", json_text);
            Principle p;
            p.principle_id = get_string(pj, "principle_id", ctx, json_text);
            if (!principle_ids.insert(p.principle_id).second)
                violation(ctx + ".principle_id", "duplicate principle_id", json_text);
            p.description = get_string(pj, "description", ctx, json_text);
            p.rationale = get_string(pj, "rationale", ctx, json_text);
            rubric.principles.push_back(std::move(p));
            ++i;
        }
    }

    if (doc.contains("pair_consistency_check")) {
        const auto& cj = doc["pair_consistency_check"];
        if (!cj.is_object()) violation("pair_consistency_check", "expected an object", json_text);
        PairConsistencyCheck check;
        check.expected_winner =
            get_string(cj, "expected_winner", "pair_consistency_check", json_text);
        auto pred = rubric_prediction_from_string(
            get_string(cj, "rubric_predicts", "pair_consistency_check", json_text));
        if (!pred)
            violation("pair_consistency_check.rubric_predicts", "must be A, B, or tie", json_text);
        check.rubric_predicts = *pred;
        if (cj.contains("notes")) {
            if (!cj["notes"].is_string())
                violation("pair_consistency_check.notes", "expected a string", json_text);
            check.notes = cj["notes"].get<std::string>();
        }
        rubric.pair_consistency_check = std::move(check);
    }
    return rubric;
}

}  // namespace rubric_forge
