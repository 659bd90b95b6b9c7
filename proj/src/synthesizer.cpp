#include "rubric_forge/synthesizer.hpp"

#include <chrono>

#include "rubric_forge/prompts.hpp"
#include "rubric_forge/structured.hpp"

namespace rubric_forge {

namespace {

void render_profile_section(std::string& out, const char* label, const Profile& p,
                            ContrastBlock::Span& span) {
    span.begin = out.size();
    out += "## ";
    out += label;
    out += " Diagnosis\n";
    out += "Criteria candidates: ";
    for (size_t i = 0; i < p.criteria_candidates.size(); ++i) {
        if (i) out += ", ";
        out += to_string(p.criteria_candidates[i]);
    }
    out += "\nFindings:\n";
    for (const Finding& f : p.findings) {
        out += "- [";
        out += to_string(f.criterion);
        out += "][";
        out += to_string(f.status);
        out += "][";
        out += std::to_string(f.severity);
        out += "] ";
        out += f.claim;
        out += " | ";
        out += f.evidence;
        out += " | ";
        out += f.instruction_anchor;
        out += "\n";
    }
    span.end = out.size();
}

}  // namespace

ContrastBlock contrastive_concat(const Profile& chosen, const Profile& rejected,
                                 PresentationOrder order) {
    ContrastBlock block;
    const Profile& first = order == PresentationOrder::ChosenFirst ? chosen : rejected;
    const Profile& second = order == PresentationOrder::ChosenFirst ? rejected : chosen;
    ContrastBlock::Span first_span, second_span;
    render_profile_section(block.text, "Answer A", first, first_span);
    block.text += "\n";
    render_profile_section(block.text, "Answer B", second, second_span);
    if (order == PresentationOrder::ChosenFirst) {
        block.chosen_section = first_span;
        block.rejected_section = second_span;
    } else {
        block.chosen_section = second_span;
        block.rejected_section = first_span;
    }
    return block;
}

FilterStats& FilterStats::operator+=(const FilterStats& other) {
    total += other.total;
    kept += other.kept;
    dropped_mismatch += other.dropped_mismatch;
    dropped_parse += other.dropped_parse;
    return *this;
}

ordered_json filter_stats_to_json(const FilterStats& s) {
    ordered_json j;
    j["total"] = s.total;
    j["kept"] = s.kept;
    j["dropped_mismatch"] = s.dropped_mismatch;
    j["dropped_parse"] = s.dropped_parse;
    j["kept_ratio"] = s.kept_ratio();
    return j;
}

PresentationOrder order_for_index(const std::string& policy, std::size_t index) {
    if (policy == "chosen_first") return PresentationOrder::ChosenFirst;
    if (policy == "rejected_first") return PresentationOrder::RejectedFirst;
    if (policy == "alternate")
        return index % 2 == 0 ? PresentationOrder::ChosenFirst : PresentationOrder::RejectedFirst;
    throw std::invalid_argument("unknown order policy: " + policy);
}

RubricSet synthesize_rubric(Provider& provider, const ProfiledPair& profiled,
                            PresentationOrder order, const SynthesizerOptions& opts,
                            AuditLog* audit) {
    ContrastBlock block =
        contrastive_concat(profiled.profile_chosen, profiled.profile_rejected, order);

    std::string user;
    user += "Instruction ID: ";
    user += profiled.pair.id;
    user += "\nInstruction:\n";
    user += profiled.pair.instruction;
    user += "\n\n## Diagnoses\n";
    user += block.text;

    ChatRequest req;
    req.model = opts.model;
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    req.messages = {{Role::System, prompts::kSynthesisSystem}, {Role::User, std::move(user)}};

    auto result = complete_structured(provider, std::move(req), parse_rubric, opts.repair_attempts);
    RubricSet rubric = std::move(result.value);
    rubric.instruction_id = profiled.pair.id;

    if (audit && rubric.pair_consistency_check) {
        const auto& check = *rubric.pair_consistency_check;
        if (check.rubric_predicts == RubricPrediction::Tie)
            audit->record(profiled.pair.id, "synthesize", "self_check_tie", result.attempts, -1,
                          check.notes);
        else if (check.expected_winner != to_string(check.rubric_predicts))
            audit->record(profiled.pair.id, "synthesize", "self_check_mismatch", result.attempts,
                          -1, "expected=" + check.expected_winner + " predicts=" +
                                  std::string(to_string(check.rubric_predicts)));
    }
    return rubric;
}

ConsistencyResult consistency_check(Provider& provider, const PreferencePair& pair,
                                    const RubricSet& rubric, PresentationOrder order,
                                    const SynthesizerOptions& opts) {
    EvalRecord rec;
    rec.id = pair.id;
    rec.instruction = pair.instruction;
    const bool chosen_first = order == PresentationOrder::ChosenFirst;
    rec.response_a = chosen_first ? pair.chosen : pair.rejected;
    rec.response_b = chosen_first ? pair.rejected : pair.chosen;
    rec.gold = chosen_first ? Winner::A : Winner::B;
    rec.benchmark = Benchmark::Generic;
    rec.category = "consistency";

    JudgeCallOptions judge;
    judge.mode = JudgeMode::RubricGuided;
    judge.order_policy = OrderPolicy::AsGiven;
    judge.model = opts.judge_model;
    judge.temperature = opts.judge_temperature;
    judge.max_tokens = opts.judge_max_tokens;
    judge.repair_attempts = opts.judge_repair_attempts;
    judge.include_no_think = opts.include_no_think;

    JudgeOutcome outcome = judge_pair(provider, rec, &rubric, judge);
    ConsistencyResult result;
    if (outcome.verdict_missing || !outcome.winner) {
        result.parse_failed = true;
        return result;  // an unparseable judgment cannot certify a rubric
    }
    result.predicted = outcome.winner;
    result.valid = outcome.correct;
    return result;
}

namespace {

struct SynthOutcome {
    std::optional<RubricRecord> record;
    bool dropped_parse = false;
    bool dropped_mismatch = false;
};

SynthOutcome process_pair(Provider& provider, const ProfiledPair& profiled, std::size_t index,
                          const SynthesizerOptions& opts, AuditLog* audit) {
    const PresentationOrder order = order_for_index(opts.order_policy, index);
    auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    };

    SynthOutcome out;
    bool saw_mismatch = false;
    for (int sample = 0; sample < std::max(1, opts.samples); ++sample) {
        RubricSet rubric;
        try {
            rubric = synthesize_rubric(provider, profiled, order, opts, audit);
        } catch (const StructuredOutputFailed& e) {
            if (audit) audit->record(profiled.pair.id, "synthesize", "dropped_parse",
                                     static_cast<int>(e.raw_completions().size()), elapsed());
            out.dropped_parse = true;
            return out;
        }
        ConsistencyResult check = consistency_check(provider, profiled.pair, rubric, order, opts);
        if (check.parse_failed) {
            if (audit) audit->record(profiled.pair.id, "consistency", "dropped_parse", 0, elapsed());
            out.dropped_parse = true;
            return out;
        }
        if (check.valid) {
            if (audit) audit->record(profiled.pair.id, "consistency", "kept", 0, elapsed());
            out.record = RubricRecord{profiled.pair, std::move(rubric), order};
            return out;
        }
        saw_mismatch = true;
    }
    if (saw_mismatch) {
        if (audit) audit->record(profiled.pair.id, "consistency", "dropped_mismatch", 0, elapsed());
        out.dropped_mismatch = true;
    }
    return out;
}

}  // namespace

RubricDatasetResult build_rubric_dataset(Provider& provider,
                                         const std::vector<ProfiledPair>& profiled,
                                         const SynthesizerOptions& opts, AuditLog* audit) {
    RubricDatasetResult result;
    std::size_t limit = profiled.size();
    if (opts.input_cap) limit = std::min(limit, *opts.input_cap);

    if (opts.target_kept) {
        // Sequential so input consumption stops exactly when the target is met.
        for (std::size_t i = 0; i < limit && result.stats.kept <
                                                 static_cast<long long>(*opts.target_kept);
             ++i) {
            SynthOutcome o = process_pair(provider, profiled[i], i, opts, audit);
            ++result.stats.total;
            if (o.record) {
                ++result.stats.kept;
                result.records.push_back(std::move(*o.record));
            } else if (o.dropped_parse) {
                ++result.stats.dropped_parse;
            } else if (o.dropped_mismatch) {
                ++result.stats.dropped_mismatch;
            }
        }
        return result;
    }

    std::vector<ProfiledPair> work(profiled.begin(), profiled.begin() + limit);
    auto outcomes = parallel_map_ordered(
        work,
        [&](const ProfiledPair& p, std::size_t i) { return process_pair(provider, p, i, opts, audit); },
        opts.workers);
    // Associative merge of per-record partials, in input order.
    for (auto& o : outcomes) {
        ++result.stats.total;
        if (o.record) {
            ++result.stats.kept;
            result.records.push_back(std::move(*o.record));
        } else if (o.dropped_parse) {
            ++result.stats.dropped_parse;
        } else if (o.dropped_mismatch) {
            ++result.stats.dropped_mismatch;
        }
    }
    return result;
}

JudgeDatasetResult build_judge_dataset(Provider& provider,
                                       const std::vector<RubricRecord>& records,
                                       const SynthesizerOptions& opts, AuditLog* audit) {
    auto process = [&](const RubricRecord& record, std::size_t) -> std::pair<std::optional<JudgeRecord>, std::optional<SkipEntry>> {
        EvalRecord rec;
        rec.id = record.pair.id;
        rec.instruction = record.pair.instruction;
        const bool chosen_first = record.presented_order == PresentationOrder::ChosenFirst;
        rec.response_a = chosen_first ? record.pair.chosen : record.pair.rejected;
        rec.response_b = chosen_first ? record.pair.rejected : record.pair.chosen;
        rec.gold = chosen_first ? Winner::A : Winner::B;
        rec.benchmark = Benchmark::Generic;
        rec.category = "judge_data";

        JudgeCallOptions judge;
        judge.mode = JudgeMode::RubricGuided;
        judge.order_policy = OrderPolicy::AsGiven;
        judge.model = opts.judge_model;
        judge.temperature = opts.judge_temperature;
        judge.max_tokens = opts.judge_max_tokens;
        judge.repair_attempts = opts.judge_repair_attempts;
        judge.include_no_think = opts.include_no_think;

        JudgeOutcome outcome = judge_pair(provider, rec, &record.rubric, judge);
        if (outcome.verdict_missing || outcome.judgments.empty()) {
            if (audit) audit->record(rec.id, "judge_data", "skipped", 0, -1, "VerdictMissing");
            return {std::nullopt, SkipEntry{rec.id, "judge_data", "VerdictMissing", ""}};
        }
        const Judgment& judgment = outcome.judgments.front();
        const bool agrees = outcome.correct;
        if (!agrees && opts.judge_gate) {
            if (audit) audit->record(rec.id, "judge_data", "skipped", 0, -1, "TeacherDisagrees");
            return {std::nullopt, SkipEntry{rec.id, "judge_data", "TeacherDisagrees",
                                            judgment.raw.substr(0, 200)}};
        }
        JudgeRecord out;
        out.base = record;
        out.justification = judgment.justification;
        out.teacher_verdict = judgment.winner;
        if (!opts.judge_gate && !agrees) out.teacher_agrees = false;
        if (audit) audit->record(rec.id, "judge_data", "kept");
        return {std::move(out), std::nullopt};
    };

    auto outcomes = parallel_map_ordered(records, process, opts.workers);
    JudgeDatasetResult result;
    for (auto& [record, skip] : outcomes) {
        if (record) result.records.push_back(std::move(*record));
        if (skip) result.skips.push_back(std::move(*skip));
    }
    return result;
}

}  // namespace rubric_forge
