/// @file parse.hpp
/// @brief Strict structured-output parsing for model completions.
///
/// Parsing is total: every input maps to a value, MalformedJson, or
/// SchemaViolation. Inputs may be wrapped in code fences or surrounded by
/// prose; the first balanced top-level JSON object is extracted.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rubric_forge/types.hpp"

namespace rubric_forge {

class ParseError : public std::runtime_error {
  public:
    enum class Kind { MalformedJson, SchemaViolation, VerdictMissing, VerdictAmbiguous };

    ParseError(Kind kind, std::string path, const std::string& message, std::string raw = {})
        : std::runtime_error(describe(kind, path, message)),
          kind_(kind),
          path_(std::move(path)),
          raw_(std::move(raw)) {}

    Kind kind() const { return kind_; }
    /// Offending JSON path, e.g. "findings[0].evidence". Empty for
    /// document-level failures.
    const std::string& path() const { return path_; }
    /// Original completion text, attached for the audit log.
    const std::string& raw() const { return raw_; }

    static std::string describe(Kind kind, const std::string& path, const std::string& message);

  private:
    Kind kind_;
    std::string path_;
    std::string raw_;
};

std::string_view to_string(ParseError::Kind k);

/// Extracts the first balanced top-level JSON object from a completion,
/// preferring the contents of a ``` fence when one is present. Returns
/// nullopt when no balanced object exists.
std::optional<std::string> extract_json_object(std::string_view text);

/// Parses a profiling completion. Throws ParseError on malformed JSON or any
/// schema violation (empty candidate set, unknown dimension, missing evidence
/// on fail/partial, finding criterion outside the candidate set, ...).
Profile parse_profile(const std::string& json_text);

/// Parses a rubric completion. Accepts both the synthesis and the generator
/// schema; derived_from and pair_consistency_check are optional. Throws
/// ParseError on malformed JSON, zero hard rules, duplicate ids, or a bad
/// type/prediction enum. Unknown extra fields are preserved in raw, ignored.
RubricSet parse_rubric(const std::string& json_text);

}  // namespace rubric_forge
