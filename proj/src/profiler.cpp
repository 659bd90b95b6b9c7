#include "rubric_forge/profiler.hpp"

#include <chrono>

#include "rubric_forge/parse.hpp"
#include "rubric_forge/prompts.hpp"
#include "rubric_forge/structured.hpp"

namespace rubric_forge {

namespace {

std::string excerpt(const std::string& text, size_t limit = 200) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

/// Evidence must appear verbatim in the response under strict mode.
void check_strict_evidence(const Profile& profile, const std::string& answer,
                           const std::string& raw) {
    for (size_t i = 0; i < profile.findings.size(); ++i) {
        const Finding& f = profile.findings[i];
        if (f.status != FindingStatus::Fail && f.status != FindingStatus::Partial) continue;
        if (answer.find(f.evidence) == std::string::npos)
            throw ParseError(ParseError::Kind::SchemaViolation,
                             "findings[" + std::to_string(i) + "].evidence",
                             "evidence is not a substring of the response (strict mode)", raw);
    }
}

}  // namespace

ChatRequest render_profile_prompt(const std::string& instruction, const std::string& answer,
                                  const ProfilerOptions& opts) {
    const bool escaped =
        prompts::needs_fence_escape(instruction) || prompts::needs_fence_escape(answer);
    std::string user;
    if (escaped && opts.include_fence_note) user += prompts::kFenceNote;
    user += "- Instruction: ";
    user += prompts::escape_fences(instruction);
    user += "\n- Answer: ";
    user += prompts::escape_fences(answer);

    ChatRequest req;
    req.model = opts.model;
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    req.messages = {{Role::System, prompts::kProfilingSystem}, {Role::User, std::move(user)}};
    return req;
}

ProfileCallResult profile_response(Provider& provider, const std::string& instruction,
                                   const std::string& answer, const ProfilerOptions& opts) {
    ChatRequest req = render_profile_prompt(instruction, answer, opts);
    auto parse = [&](const std::string& text) {
        Profile p = parse_profile(text);
        if (opts.strict_evidence) check_strict_evidence(p, answer, text);
        return p;
    };
    auto result = complete_structured(provider, std::move(req), parse, opts.repair_attempts);
    return {std::move(result.value), result.attempts};
}

ProfileDatasetResult profile_dataset(Provider& provider, const std::vector<PreferencePair>& pairs,
                                     const ProfilerOptions& opts, AuditLog* audit) {
    struct PerPair {
        std::optional<ProfiledPair> row;
        std::optional<SkipEntry> skip;
    };

    auto process = [&](const PreferencePair& pair, size_t) -> PerPair {
        auto start = std::chrono::steady_clock::now();
        auto elapsed_ms = [&] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                .count();
        };
        // No contrast exists when both responses are byte-identical.
        if (pair.chosen == pair.rejected) {
            if (audit) audit->record(pair.id, "profile", "skipped", 0, elapsed_ms(),
                                     "DuplicateResponses");
            return {.row = std::nullopt,
                    .skip = SkipEntry{pair.id, "profile", "DuplicateResponses", ""}};
        }
        ProfiledPair out;
        out.pair = pair;
        out.provenance.model = opts.model;
        out.provenance.temperature = opts.temperature;
        try {
            auto chosen = profile_response(provider, pair.instruction, pair.chosen, opts);
            out.profile_chosen = std::move(chosen.profile);
            out.provenance.attempts_chosen = chosen.attempts;
        } catch (const StructuredOutputFailed& e) {
            if (audit) audit->record(pair.id, "profile_chosen", "skipped",
                                     static_cast<int>(e.raw_completions().size()), elapsed_ms(),
                                     e.what());
            return {.row = std::nullopt,
                    .skip = SkipEntry{pair.id, "profile_chosen", "StructuredOutputFailed",
                                      e.raw_completions().empty()
                                          ? ""
                                          : excerpt(e.raw_completions().back())}};
        } catch (const ProviderError& e) {
            if (audit) audit->record(pair.id, "profile_chosen", "skipped", 0, elapsed_ms(), e.what());
            return {.row = std::nullopt,
                    .skip = SkipEntry{pair.id, "profile_chosen", "ProviderError", e.what()}};
        }
        try {
            auto rejected = profile_response(provider, pair.instruction, pair.rejected, opts);
            out.profile_rejected = std::move(rejected.profile);
            out.provenance.attempts_rejected = rejected.attempts;
        } catch (const StructuredOutputFailed& e) {
            if (audit) audit->record(pair.id, "profile_rejected", "skipped",
                                     static_cast<int>(e.raw_completions().size()), elapsed_ms(),
                                     e.what());
            return {.row = std::nullopt,
                    .skip = SkipEntry{pair.id, "profile_rejected", "StructuredOutputFailed",
                                      e.raw_completions().empty()
                                          ? ""
                                          : excerpt(e.raw_completions().back())}};
        } catch (const ProviderError& e) {
            if (audit) audit->record(pair.id, "profile_rejected", "skipped", 0, elapsed_ms(),
                                     e.what());
            return {.row = std::nullopt,
                    .skip = SkipEntry{pair.id, "profile_rejected", "ProviderError", e.what()}};
        }
        if (audit) audit->record(pair.id, "profile", "ok",
                                 out.provenance.attempts_chosen + out.provenance.attempts_rejected,
                                 elapsed_ms());
        return {.row = std::move(out), .skip = std::nullopt};
    };

    auto results = parallel_map_ordered(pairs, process, opts.workers);

    ProfileDatasetResult out;
    for (auto& r : results) {
        if (r.row) out.rows.push_back(std::move(*r.row));
        if (r.skip) out.skips.push_back(std::move(*r.skip));
    }
    return out;
}

ordered_json profiled_pair_to_json(const ProfiledPair& p) {
    ordered_json j = pair_to_json(p.pair);
    j["profile_chosen"] = profile_to_json(p.profile_chosen);
    j["profile_rejected"] = profile_to_json(p.profile_rejected);
    ordered_json prov;
    prov["model"] = p.provenance.model;
    prov["temperature"] = p.provenance.temperature;
    prov["attempts_chosen"] = p.provenance.attempts_chosen;
    prov["attempts_rejected"] = p.provenance.attempts_rejected;
    j["provenance"] = std::move(prov);
    return j;
}

ProfiledPair profiled_pair_from_json(const ordered_json& j) {
    ProfiledPair p;
    p.pair = pair_from_json(j);
    // Reuse the strict completion parser; rows were written by profile_to_json
    // and satisfy the same schema.
    p.profile_chosen = parse_profile(j.at("profile_chosen").dump());
    p.profile_rejected = parse_profile(j.at("profile_rejected").dump());
    if (j.contains("provenance")) {
        const auto& prov = j["provenance"];
        p.provenance.model = prov.value("model", std::string{});
        p.provenance.temperature = prov.value("temperature", 0.7);
        p.provenance.attempts_chosen = prov.value("attempts_chosen", 0);
        p.provenance.attempts_rejected = prov.value("attempts_rejected", 0);
    }
    return p;
}

ordered_json skip_to_json(const SkipEntry& s) {
    ordered_json j;
    j["id"] = s.id;
    j["stage"] = s.stage;
    j["reason"] = s.reason;
    j["raw_excerpt"] = s.raw_excerpt;
    return j;
}

}  // namespace rubric_forge
