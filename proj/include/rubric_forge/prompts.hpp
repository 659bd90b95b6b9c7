/// @file prompts.hpp
/// @brief Prompt templates and deterministic renderers for every LLM call.
///
/// Template text is fixed; renderers only fill the named slots. Changing a
/// template changes request hashes and therefore invalidates caches.

#pragma once

#include <string>
#include <string_view>

namespace rubric_forge::prompts {

// Contrastive profiling (per-response diagnosis).
extern const std::string kProfilingSystem;

// One-step rubric generation from (instruction, response A, response B).
extern const std::string kGeneratorSystem;
extern const std::string kGeneratorUserTemplate;  // slots: {instruction}{response_a}{response_b}

// Rubric synthesis from contrastive profiles.
extern const std::string kSynthesisSystem;

// Rubric-guided judging.
extern const std::string kJudgeSystem;
extern const std::string kJudgeUserTemplate;  // slots: {instruction}{response_a}{response_b}{rubric}

// Direct judging (no rubric anywhere in the prompt).
extern const std::string kDirectJudgeSystem;
extern const std::string kDirectJudgeUserTemplate;  // slots: {instruction}{response_a}{response_b}

/// Replaces every "{slot}" occurrence with its value. Unknown braces in the
/// template are left untouched.
std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> slots);

/// True when the text contains a run of three or more backticks.
bool needs_fence_escape(std::string_view text);

/// Prefixes every run of 3+ backticks with the "<<<LITERAL>>>" sentinel so
/// payload fences cannot be read as prompt structure. Idempotent on
/// fence-free text.
std::string escape_fences(std::string_view text);

inline constexpr std::string_view kFenceSentinel = "<<<LITERAL>>>";

/// Note prepended to a user message when escape_fences fired on its payload.
extern const std::string kFenceNote;

/// Drops the trailing "/no_think" directive from a user template when the
/// target model family does not understand it.
std::string strip_no_think(std::string_view user_message);

}  // namespace rubric_forge::prompts
