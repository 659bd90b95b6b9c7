// Shared test utilities: fixture builders, temp dirs, and canned payloads.

#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rubric_forge/provider.hpp"
#include "rubric_forge/types.hpp"

namespace rf_test {

inline std::filesystem::path fixtures_dir() { return RF_FIXTURES_DIR; }

/// Unique scratch directory; removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path = std::filesystem::temp_directory_path() /
               ("rf-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

// The profiling prompt's worked output example, verbatim.
inline std::string worked_profile_example() {
    return R"RAW(```json
{
  "criteria_candidates": ["Instruction Following", "Content Coverage", "Conciseness"],
  "findings": [
    {
      "criterion": "Conciseness",
      "status": "fail",
      "severity": 3,
      "claim": "The answer exceeds 100 characters, violating the length limit requirement in the instruction",
      "evidence": "The entire answer text (approximately 150 characters)",
      "instruction_anchor": "Instruction requirement: no more than 100 characters"
    },
    {
      "criterion": "Content Coverage",
      "status": "pass",
      "severity": 0,
      "claim": "The answer covers key information about Python: creator, characteristics, application areas",
      "evidence": "Created by Guido van Rossum in 1991... widely used in web development, data science...",
      "instruction_anchor": "Instruction requirement: introduction about Python"
    }
  ]
}
```)RAW";
}

/// A minimal valid synthesis-schema rubric completion.
inline std::string simple_rubric_json(const std::string& rule_criterion = "States the correct result",
                                      const std::string& predicts = "A") {
    return R"({
  "instruction_id": "model-made-up-id",
  "hard_rules": [
    {
      "rule_id": "rule_1",
      "type": "must",
      "criterion": ")" + rule_criterion + R"(",
      "rationale": "Answer B fails this while Answer A passes",
      "derived_from": {
        "answer_a_findings": ["pass on Factual Accuracy"],
        "answer_b_findings": ["fail on Factual Accuracy"]
      },
      "test": "check the final statement"
    },
    {
      "rule_id": "rule_2",
      "type": "forbid",
      "criterion": "Must not be truncated mid-sentence",
      "rationale": "one answer ends abruptly",
      "test": "last sentence is complete"
    }
  ],
  "principles": [
    {
      "principle_id": "principle_1",
      "description": "Prefer the clearer explanation when rules tie",
      "rationale": "subjective tiebreaker"
    }
  ],
  "pair_consistency_check": {
    "expected_winner": "A",
    "rubric_predicts": ")" + predicts + R"(",
    "notes": ""
  }
})";
}

/// A judge completion in the required output format.
inline std::string judge_completion(char winner, const std::string& reason = "meets the rubric") {
    std::string w(1, winner);
    return "--- Analysis ---\n**Response A:**\n- [Hard Rule]: Justification: checked\n\n"
           "**Response B:**\n- [Hard Rule]: Justification: checked\n\n"
           "--- Final Judgment ---\nJustification: " +
           reason + "\nWinner: Response " + w;
}

/// A profile completion with one pass finding on the given dimension.
inline std::string pass_profile_json(const std::string& dimension = "Completeness") {
    return R"({"criteria_candidates": [")" + dimension + R"("], "findings": [{"criterion": ")" +
           dimension +
           R"(", "status": "pass", "severity": 0, "claim": "covers the request", "evidence": "whole answer", "instruction_anchor": "the request itself"}]})";
}

inline rubric_forge::PreferencePair make_pair(const std::string& id,
                                              const std::string& instruction = "Explain GCD.",
                                              const std::string& chosen = "A clear, correct answer.",
                                              const std::string& rejected = "A flawed answer (truncated") {
    rubric_forge::PreferencePair p;
    p.id = id;
    p.instruction = instruction;
    p.chosen = chosen;
    p.rejected = rejected;
    p.meta["source"] = "fixture";
    return p;
}

}  // namespace rf_test
