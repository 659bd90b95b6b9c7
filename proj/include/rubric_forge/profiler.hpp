/// @file profiler.hpp
/// @brief Contrastive profiling: per-response evidence-anchored diagnoses over
/// the adaptive taxonomy, assembled into the profiled dataset.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rubric_forge/audit.hpp"
#include "rubric_forge/provider.hpp"
#include "rubric_forge/types.hpp"

namespace rubric_forge {

struct ProfilerOptions {
    std::string model = "teacher";
    double temperature = 0.7;
    int max_tokens = 4096;
    int repair_attempts = 2;
    /// When set, evidence on fail/partial findings must be an exact substring
    /// of the response (corpus auditing; the prompt otherwise allows location
    /// descriptions).
    bool strict_evidence = false;
    int workers = 4;
    bool include_fence_note = true;
};

struct Provenance {
    std::string model;
    double temperature = 0.7;
    int attempts_chosen = 0;
    int attempts_rejected = 0;
};

struct ProfiledPair {
    PreferencePair pair;
    Profile profile_chosen;
    Profile profile_rejected;
    Provenance provenance;
};

struct SkipEntry {
    std::string id;
    std::string stage;
    std::string reason;
    std::string raw_excerpt;
};

struct ProfileDatasetResult {
    std::vector<ProfiledPair> rows;
    std::vector<SkipEntry> skips;
};

/// Deterministic bytes for fixed inputs. Payload backtick fences are escaped
/// with the documented sentinel.
ChatRequest render_profile_prompt(const std::string& instruction, const std::string& answer,
                                  const ProfilerOptions& opts);

struct ProfileCallResult {
    Profile profile;
    int attempts = 1;
};

/// One validated diagnosis for (x, y). The model picks the active dimension
/// subset; nothing is filtered post-hoc. Throws StructuredOutputFailed after
/// repairs are exhausted, ParseError never escapes (it feeds the repair loop).
ProfileCallResult profile_response(Provider& provider, const std::string& instruction,
                                   const std::string& answer, const ProfilerOptions& opts);

/// Profiles chosen and rejected independently for every pair. Output order
/// equals input order minus skips; record failures never abort the stream.
ProfileDatasetResult profile_dataset(Provider& provider,
                                     const std::vector<PreferencePair>& pairs,
                                     const ProfilerOptions& opts, AuditLog* audit = nullptr);

ordered_json profiled_pair_to_json(const ProfiledPair& p);
ProfiledPair profiled_pair_from_json(const ordered_json& j);
ordered_json skip_to_json(const SkipEntry& s);

}  // namespace rubric_forge
