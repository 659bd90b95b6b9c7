/// @file structured.hpp
/// @brief complete() + parse with bounded self-repair re-prompting.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rubric_forge/parse.hpp"
#include "rubric_forge/provider.hpp"

namespace rubric_forge {

/// Raised when every attempt (1 + repair_attempts) failed to parse. Carries
/// every raw completion for the audit log.
class StructuredOutputFailed : public std::runtime_error {
  public:
    StructuredOutputFailed(const std::string& msg, std::vector<std::string> raws)
        : std::runtime_error(msg), raw_completions_(std::move(raws)) {}

    const std::vector<std::string>& raw_completions() const { return raw_completions_; }

  private:
    std::vector<std::string> raw_completions_;
};

template <typename T>
struct StructuredResult {
    T value;
    int attempts = 1;                        // 1 = first completion parsed
    std::vector<std::string> raw_completions;
};

/// Calls complete(); on parser failure, appends the failed reply plus a user
/// message naming the error path and asking for valid JSON only, then retries
/// up to repair_attempts times.
template <typename Parser>
auto complete_structured(Provider& provider, ChatRequest req, Parser&& parser,
                         int repair_attempts)
    -> StructuredResult<decltype(parser(std::string{}))> {
    using Value = decltype(parser(std::string{}));
    StructuredResult<Value> result;
    for (int attempt = 1; attempt <= 1 + repair_attempts; ++attempt) {
        ChatResponse resp = provider.complete(req);
        result.raw_completions.push_back(resp.content);
        try {
            result.value = parser(resp.content);
            result.attempts = attempt;
            return result;
        } catch (const ParseError& e) {
            if (attempt == 1 + repair_attempts) break;
            req.messages.push_back({Role::Assistant, resp.content});
            std::string where = e.path().empty() ? "the top level" : e.path();
            req.messages.push_back(
                {Role::User, "Your previous reply failed validation (" +
                                 std::string(to_string(e.kind())) + " at " + where + ": " +
                                 e.what() +
                                 "). Re-emit the complete corrected reply as valid JSON only, "
                                 "with no code fences and no other text."});
        }
    }
    throw StructuredOutputFailed(
        "structured output failed after " + std::to_string(1 + repair_attempts) + " attempt(s)",
        std::move(result.raw_completions));
}

/// Order-preserving parallel map. Record-level failures belong in the result
/// type; an exception escaping fn aborts the batch and rethrows here.
template <typename In, typename Fn>
auto parallel_map_ordered(const std::vector<In>& items, Fn fn, int workers)
    -> std::vector<std::invoke_result_t<Fn, const In&, std::size_t>>;

}  // namespace rubric_forge

#include "rubric_forge/parallel_impl.hpp"
