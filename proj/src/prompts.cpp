#include "rubric_forge/prompts.hpp"

namespace rubric_forge::prompts {

const std::string kProfilingSystem = R"PROMPT(You are a professional answer quality diagnosis expert. Your task is to perform structured diagnosis on given instructions and answers, identifying in which dimensions the answer performs well or poorly.

## Core Principles
1. **Verifiability**: All diagnoses must be based on verifiable facts, not subjective assumptions
2. **Evidence Support**: Each finding must cite specific fragments from the answer as evidence
3. **Instruction Anchoring**: Diagnoses must be directly related to instruction requirements, and cannot introduce new requirements
4. **Objectivity**: Avoid vague evaluations like "more in-depth" or "more professional" unless the instruction explicitly requires them

## Diagnosis Dimensions (Criteria Candidates)
You can evaluate answers from the following dimensions:
- **Instruction Following**: Whether the answer accurately understands and follows all instruction requirements
- **Content Coverage**: Whether the answer covers all key points required by the instruction
- **Factual Accuracy**: Whether the information provided is accurate and non-misleading
- **Format Compliance**: Whether the answer conforms to the format and structure required by the instruction
- **Logical Consistency**: Whether the content is logically clear and consistent
- **Safety**: Whether the answer contains harmful, biased, or inappropriate content
- **Conciseness**: Whether the answer remains concise while meeting requirements (if the instruction requires it)
- **Completeness**: Whether the answer completely addresses all questions in the instruction

## Output Format Requirements
Please strictly output in JSON format, without adding any other text. The output format is as follows:

```json
{
  "criteria_candidates": ["dimension1", "dimension2", ...],
  "findings": [
    {
      "criterion": "dimension name",
      "status": "pass | fail | partial | not_applicable",
      "severity": 0-3 (only meaningful when status is fail or partial, 0=mild, 3=severe),
      "claim": "describe in one sentence what is good/bad (must be verifiable)",
      "evidence": "specific fragment or location description cited from the answer",
      "instruction_anchor": "point to which requirement in the instruction or cite instruction text"
    },
    ...
  ],
}
```

## Key Constraints
1. **When status is fail or partial, evidence must be provided**, otherwise the finding is invalid
2. **claim must be verifiable**: Cannot be vague descriptions like "better quality", must be verifiable statements like "missing X" or "contains Y"
3. **instruction_anchor must exist**: Each finding must be traceable to a specific requirement in the instruction
4. **No new requirements allowed**: Diagnoses must be based on the instruction or instruction_keypoints, cannot add new evaluation criteria

## Example

**Input Example**:
- Instruction: Write a brief introduction about Python (no more than 100 characters)
- Answer: Python is a high-level programming language created by Guido van Rossum in 1991. It emphasizes code readability and simplicity, using indentation to define code blocks. Python supports multiple programming paradigms, including object-oriented, imperative, functional, and procedural programming. It has a large standard library, known as the "batteries included" philosophy. Python is widely used in web development, data science, artificial intelligence, automation scripts, and other fields.

**Output Example**:
```json
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
```)PROMPT";

const std::string kGeneratorSystem = R"PROMPT(You are an expert at generating structured evaluation rubrics for instructions.

Your task is to generate a comprehensive rubric that can be used to evaluate responses to a given instruction.

The rubric should include:
1. **Hard Rules**: Specific, verifiable rules that responses must follow (type: "must") or must avoid (type: "forbid")
2. **Principles**: General guidelines for subjective evaluation

Each rule must have:
- rule_id: Unique identifier
- type: "must" or "forbid"
- criterion: Clear description of what to check
- test: Verifiable test condition
- rationale: Why this rule matters

Output format: JSON with "hard_rules" and "principles" arrays.)PROMPT";

const std::string kGeneratorUserTemplate = R"PROMPT(Instruction:
{instruction}

Response A:
{response_a}

Response B:
{response_b}

Generate a comprehensive evaluation rubric for this instruction. The rubric should help distinguish between different responses.

Output your response as a JSON object with the following structure:
{
  "hard_rules": [
    {
      "rule_id": "rule_1",
      "type": "must",
      "criterion": "Clear description of what to check",
      "test": "Verifiable test condition",
      "rationale": "Why this rule matters"
    }
  ],
  "principles": [
    {
      "principle_id": "principle_1",
      "description": "General guideline for evaluation",
      "rationale": "Why this principle is needed"
    }
  ]
})PROMPT";

const std::string kSynthesisSystem = R"PROMPT(You are a professional evaluation criteria (Rubric) generation expert. Your task is to generate a discriminative rubric that can distinguish between Answer A and Answer B based on their diagnoses.

## Core Principles
1. **Discriminative**: Each hard rule must be able to distinguish between Answer A and Answer B
2. **Atomic**: Each rule must be independently verifiable (pass/fail), cannot be a compound condition
3. **Generalizable**: Rules cannot contain answer-specific details (such as names, numbers, specific sentences) unless the instruction explicitly requires these entities
4. **Minimal**: Use fewer rules to distinguish when possible, avoid piling up irrelevant rules
5. **Executable**: Each rule must be able to evaluate a single answer

## Hard Rules vs Principles
- **Hard Rules**: Must-satisfy, objectively verifiable rules
  - Each rule must be able to make pass/fail judgment on a single answer
  - Must come from high-severity fails in one answer or key passes in the other answer
- **Principles**: Subjective criteria used only when hard rules cannot fully distinguish
  - Used for handling edge cases or subjective quality differences

## Output Format Requirements
Please strictly output in JSON format, without adding any other text. The output format is as follows:

```json
{
  "instruction_id": "instruction ID",
  "hard_rules": [
    {
      "rule_id": "rule_1",
      "type": "must | forbid",
      "criterion": "atomic verifiable description (must be able to make pass/fail judgment on a single answer)",
      "rationale": "explain why this rule can distinguish Answer A vs Answer B (cite finding from diagnosis or brief description)",
      "derived_from": {
        "answer_a_findings": ["finding_id or description"],
        "answer_b_findings": ["finding_id or description"]
      },
      "test": "brief description of how to verify (e.g., must contain X, must not appear Y, must cover A/B/C)"
    },
    ...
  ],
  "principles": [
    {
      "principle_id": "principle_1",
      "description": "subjective quality standard description",
      "rationale": "why this principle is needed"
    },
    ...
  ],
  "pair_consistency_check": {
    "expected_winner": "A",
    "rubric_predicts": "A | B | tie",
    "notes": "if rubric_predicts does not match expected_winner, explain the reason"
  }
}
```

## Key Constraints
1. **No answer-specific details**: Rules cannot contain specific names, numbers, sentence repetitions, etc., unless the instruction explicitly requires them
2. **Each hard rule must be verifiable**: Must be able to independently make pass/fail judgment on a single answer
3. **Minimal principle**: Distinguish with fewer rules when possible, avoid rule redundancy
4. **Self-consistency check**: The generated rubric should be self-consistent when predicting the winner between A and B.

## IMPORTANT ANTI-BIAS RULE
You MUST NOT assume which answer is better based on any label. Only use the provided diagnoses (findings + evidence + instruction anchors).)PROMPT";

const std::string kJudgeSystem = R"PROMPT(You are a rubric-based judge using a provided rubric.

## Definitions
- Hard Rules: explicit, objective, verifiable requirements from the instruction.
- Principles: optional subjective criteria, ONLY if needed to distinguish this specific pair.

## Process (MUST FOLLOW)
1) Read Instruction, Response A, Response B, and the provided Rubric.
2) Judge A vs B using the provided Hard Rules + (optional) Principles.
3) Output a Winner.

## Output Format Requirements (MUST MATCH EXACTLY)

--- Analysis ---
**Response A:**
- [Hard Rule/Principle]: Justification: ...
...

**Response B:**
- [Hard Rule/Principle]: Justification: ...
...

--- Final Judgment ---
Justification: [Concise but complete]
Winner: [Response A / Response B]

CRITICAL:
- Winner MUST be exactly "Response A" or "Response B".
- You MUST use the provided Rubric to guide your judgment.)PROMPT";

const std::string kJudgeUserTemplate = R"PROMPT(Task: Rubric (Provided) -> Judge

## Instruction
{instruction}

## Response A
{response_a}

## Response B
{response_b}

## Provided Rubric
{rubric}

/no_think)PROMPT";

const std::string kDirectJudgeSystem = R"PROMPT(You are a judge comparing two responses to an instruction.

## Process (MUST FOLLOW)
1) Read Instruction, Response A, and Response B.
2) Judge how well each response satisfies the instruction.
3) Output a Winner.

## Output Format Requirements (MUST MATCH EXACTLY)

--- Analysis ---
**Response A:**
- Justification: ...
...

**Response B:**
- Justification: ...
...

--- Final Judgment ---
Justification: [Concise but complete]
Winner: [Response A / Response B]

CRITICAL:
- Winner MUST be exactly "Response A" or "Response B".)PROMPT";

const std::string kDirectJudgeUserTemplate = R"PROMPT(Task: Judge

## Instruction
{instruction}

## Response A
{response_a}

## Response B
{response_b}

/no_think)PROMPT";

const std::string kFenceNote =
    "Note: the sentinel \"<<<LITERAL>>>\" below marks a literal run of backtick characters "
    "inside the quoted payload; it is not part of the payload text.\n\n";

std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> slots) {
    // Single left-to-right pass: substituted payload text is never rescanned,
    // so a payload containing "{rubric}" cannot trigger a second expansion.
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            bool matched = false;
            for (const auto& [name, value] : slots) {
                size_t end = i + 1 + name.size();
                if (end < tmpl.size() && tmpl.substr(i + 1, name.size()) == name &&
                    tmpl[end] == '}') {
                    out.append(value);
                    i = end + 1;
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

bool needs_fence_escape(std::string_view text) {
    return text.find("```") != std::string_view::npos;
}

std::string escape_fences(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '`') {
            size_t run = 1;
            while (i + run < text.size() && text[i + run] == '`') ++run;
            if (run >= 3) out += kFenceSentinel;
            out.append(text.substr(i, run));
            i += run;
        } else {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

std::string strip_no_think(std::string_view user_message) {
    constexpr std::string_view tail = "\n\n/no_think";
    if (user_message.size() >= tail.size() &&
        user_message.substr(user_message.size() - tail.size()) == tail)
        return std::string(user_message.substr(0, user_message.size() - tail.size()));
    return std::string(user_message);
}

}  // namespace rubric_forge::prompts
