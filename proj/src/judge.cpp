#include "rubric_forge/judge.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "rubric_forge/jsonl.hpp"
#include "rubric_forge/prompts.hpp"
#include "rubric_forge/structured.hpp"

namespace rubric_forge {

std::string_view to_string(Benchmark b) {
    switch (b) {
        case Benchmark::RewardBench: return "RewardBench";
        case Benchmark::RMBench: return "RMBench";
        case Benchmark::RMB: return "RMB";
        case Benchmark::Generic: return "Generic";
    }
    return "Generic";
}

std::optional<Benchmark> benchmark_from_string(std::string_view name) {
    if (name == "RewardBench") return Benchmark::RewardBench;
    if (name == "RMBench" || name == "RM-Bench") return Benchmark::RMBench;
    if (name == "RMB") return Benchmark::RMB;
    if (name == "Generic") return Benchmark::Generic;
    return std::nullopt;
}

std::string_view to_string(DifficultyLevel d) {
    switch (d) {
        case DifficultyLevel::Easy: return "easy";
        case DifficultyLevel::Medium: return "medium";
        case DifficultyLevel::Hard: return "hard";
    }
    return "easy";
}

std::optional<DifficultyLevel> difficulty_from_string(std::string_view name) {
    if (name == "easy") return DifficultyLevel::Easy;
    if (name == "medium") return DifficultyLevel::Medium;
    if (name == "hard") return DifficultyLevel::Hard;
    return std::nullopt;
}

std::string_view to_string(OrderPolicy p) {
    switch (p) {
        case OrderPolicy::AsGiven: return "as_given";
        case OrderPolicy::Swap: return "swap";
        case OrderPolicy::Both: return "both";
    }
    return "as_given";
}

std::optional<OrderPolicy> order_policy_from_string(std::string_view name) {
    if (name == "as_given") return OrderPolicy::AsGiven;
    if (name == "swap") return OrderPolicy::Swap;
    if (name == "both") return OrderPolicy::Both;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

std::vector<EvalRecord> load_eval_records(const std::filesystem::path& path,
                                          const LoadOptions& opts) {
    std::vector<EvalRecord> records;
    size_t line_no = 0;
    size_t trio_index = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line_no;
        auto fail = [&](const std::string& what) -> std::runtime_error {
            return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
        };
        EvalRecord rec;
        rec.id = row.value("id", std::string{});
        if (rec.id.empty()) rec.id = path.filename().string() + ":" + std::to_string(line_no);

        if (row.contains("benchmark")) {
            auto b = benchmark_from_string(row["benchmark"].get<std::string>());
            if (!b) throw fail("unknown benchmark " + row["benchmark"].dump());
            rec.benchmark = *b;
        } else {
            rec.benchmark = opts.default_benchmark;
        }
        rec.category = row.value("category", opts.default_category);
        if (rec.category.empty()) throw fail("empty category");

        if (row.contains("difficulty")) {
            auto d = difficulty_from_string(row["difficulty"].get<std::string>());
            if (!d) throw fail("unknown difficulty " + row["difficulty"].dump());
            rec.difficulty = d;
        }
        if (rec.benchmark == Benchmark::RMBench && !rec.difficulty)
            throw fail("RMBench record without difficulty");
        if (rec.benchmark != Benchmark::RMBench && rec.difficulty)
            throw fail("difficulty tag outside RMBench");

        if (row.contains("chosen") || row.contains("rejected")) {
            // prompt-chosen-rejected trio form
            if (!row.contains("chosen") || !row.contains("rejected"))
                throw fail("trio row needs both chosen and rejected");
            rec.instruction = row.contains("instruction") ? row["instruction"].get<std::string>()
                                                          : row.value("prompt", std::string{});
            if (rec.instruction.empty()) throw fail("trio row needs instruction or prompt");
            const std::string chosen = row["chosen"].get<std::string>();
            const std::string rejected = row["rejected"].get<std::string>();
            bool chosen_first = opts.convert_order == "chosen_first" || trio_index % 2 == 0;
            if (opts.convert_order != "chosen_first" && opts.convert_order != "alternate")
                throw fail("unknown convert_order " + opts.convert_order);
            rec.response_a = chosen_first ? chosen : rejected;
            rec.response_b = chosen_first ? rejected : chosen;
            rec.gold = chosen_first ? Winner::A : Winner::B;
            ++trio_index;
        } else {
            for (const char* key : {"instruction", "response_a", "response_b", "gold"})
                if (!row.contains(key)) throw fail(std::string("missing field ") + key);
            rec.instruction = row["instruction"].get<std::string>();
            rec.response_a = row["response_a"].get<std::string>();
            rec.response_b = row["response_b"].get<std::string>();
            auto gold = winner_from_string(row["gold"].get<std::string>());
            if (!gold) throw fail("gold must be A or B");
            rec.gold = *gold;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Reports & aggregation
// ---------------------------------------------------------------------------

ordered_json report_to_json(const CategoryReport& r) {
    ordered_json j;
    j["benchmark"] = std::string(to_string(r.benchmark));
    j["n"] = r.n;
    j["overall"] = r.overall;
    j["micro"] = r.micro;
    auto dump_counts = [](const std::map<std::string, CategoryCount>& m) {
        ordered_json out = ordered_json::object();
        for (const auto& [name, c] : m)
            out[name] = {{"correct", c.correct}, {"total", c.total}, {"accuracy", c.accuracy()}};
        return out;
    };
    j["per_category"] = dump_counts(r.per_category);
    if (!r.per_difficulty.empty()) j["per_difficulty"] = dump_counts(r.per_difficulty);
    j["verdict_missing"] = r.verdict_missing;
    j["rubric_fallbacks"] = r.rubric_fallbacks;
    j["inconsistent"] = r.inconsistent;
    return j;
}

CategoryReport report_from_json(const ordered_json& j) {
    CategoryReport r;
    auto b = benchmark_from_string(j.at("benchmark").get<std::string>());
    if (!b) throw std::runtime_error("unknown benchmark in report");
    r.benchmark = *b;
    r.n = j.at("n").get<long long>();
    r.overall = j.at("overall").get<double>();
    r.micro = j.value("micro", false);
    auto load_counts = [](const ordered_json& src, std::map<std::string, CategoryCount>& dst) {
        for (const auto& [name, c] : src.items())
            dst[name] = CategoryCount{c.at("correct").get<long long>(),
                                      c.at("total").get<long long>()};
    };
    if (j.contains("per_category")) load_counts(j["per_category"], r.per_category);
    if (j.contains("per_difficulty")) load_counts(j["per_difficulty"], r.per_difficulty);
    r.verdict_missing = j.value("verdict_missing", 0LL);
    r.rubric_fallbacks = j.value("rubric_fallbacks", 0LL);
    r.inconsistent = j.value("inconsistent", 0LL);
    return r;
}

namespace {

double macro_mean(const std::map<std::string, CategoryCount>& counts) {
    if (counts.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [_, c] : counts) sum += c.accuracy();
    return sum / static_cast<double>(counts.size());
}

}  // namespace

CategoryReport aggregate_report(Benchmark benchmark, const std::vector<EvalRecord>& records,
                                const std::vector<bool>& correct, bool micro) {
    CategoryReport report;
    report.benchmark = benchmark;
    report.micro = micro;
    report.n = static_cast<long long>(records.size());
    long long correct_total = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        auto& cat = report.per_category[records[i].category];
        ++cat.total;
        if (correct[i]) ++cat.correct;
        if (records[i].difficulty) {
            auto& diff = report.per_difficulty[std::string(to_string(*records[i].difficulty))];
            ++diff.total;
            if (correct[i]) ++diff.correct;
        }
        if (correct[i]) ++correct_total;
    }
    if (micro) {
        report.overall = report.n > 0 ? static_cast<double>(correct_total) / report.n : 0.0;
    } else if (benchmark == Benchmark::RMBench && !report.per_difficulty.empty()) {
        report.overall = macro_mean(report.per_difficulty);
    } else {
        report.overall = macro_mean(report.per_category);
    }
    return report;
}

double cross_benchmark_average(const std::map<Benchmark, double>& overalls) {
    for (Benchmark b : {Benchmark::RewardBench, Benchmark::RMBench, Benchmark::RMB})
        if (overalls.find(b) == overalls.end())
            throw MissingBenchmarkError("missing benchmark overall: " +
                                        std::string(to_string(b)));
    double sum = 0.0;
    for (const auto& [_, v] : overalls) sum += v;
    return sum / static_cast<double>(overalls.size());
}

std::string format_pct(double fraction, int decimals) {
    double scale = std::pow(10.0, decimals);
    double rounded = std::floor(fraction * 100.0 * scale + 0.5) / scale;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
    return buf;
}

std::string format_delta_pp(double delta_pp) {
    double rounded = std::floor(delta_pp * 100.0 + 0.5) / 100.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.2f", rounded);
    return buf;
}

std::string render_report_table(const std::vector<CategoryReport>& reports) {
    std::ostringstream out;
    auto pad = [](const std::string& s, size_t width) {
        return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
    };

    for (const auto& r : reports) {
        out << std::string(to_string(r.benchmark)) << " (n=" << r.n << ")\n";
        const auto& groups = (r.benchmark == Benchmark::RMBench && !r.per_difficulty.empty())
                                 ? r.per_difficulty
                                 : r.per_category;
        for (const auto& [name, c] : groups)
            out << "  " << pad(name, 14) << pad(format_pct(c.accuracy()), 8) << "(" << c.correct
                << "/" << c.total << ")\n";
        out << "  " << pad("Overall", 14) << format_pct(r.overall) << "\n\n";
    }

    std::map<Benchmark, const CategoryReport*> by_bench;
    for (const auto& r : reports) by_bench[r.benchmark] = &r;
    bool all_three = by_bench.count(Benchmark::RewardBench) && by_bench.count(Benchmark::RMBench) &&
                     by_bench.count(Benchmark::RMB);
    if (all_three) {
        const auto& rb = *by_bench[Benchmark::RewardBench];
        const auto& rmb = *by_bench[Benchmark::RMBench];
        const auto& rmbset = *by_bench[Benchmark::RMB];
        auto diff_acc = [&](const char* level) {
            auto it = rmb.per_difficulty.find(level);
            return it == rmb.per_difficulty.end() ? std::string("-")
                                                  : format_pct(it->second.accuracy());
        };
        auto cat_acc = [&](const CategoryReport& r, const char* cat) {
            auto it = r.per_category.find(cat);
            return it == r.per_category.end() ? std::string("-")
                                              : format_pct(it->second.accuracy());
        };
        double avg = cross_benchmark_average({{Benchmark::RewardBench, rb.overall},
                                              {Benchmark::RMBench, rmb.overall},
                                              {Benchmark::RMB, rmbset.overall}});
        out << pad("RewardBench", 12) << pad("| RMBench", 34) << pad("| RMB", 26) << "|\n";
        out << pad("Overall", 12) << "| " << pad("Easy", 8) << pad("Medium", 8) << pad("Hard", 8)
            << pad("Overall", 8) << "| " << pad("Help", 8) << pad("Harm", 8) << pad("Overall", 8)
            << "| " << "Avg.\n";
        out << pad(format_pct(rb.overall), 12) << "| " << pad(diff_acc("easy"), 8)
            << pad(diff_acc("medium"), 8) << pad(diff_acc("hard"), 8)
            << pad(format_pct(rmb.overall), 8) << "| " << pad(cat_acc(rmbset, "help"), 8)
            << pad(cat_acc(rmbset, "harm"), 8) << pad(format_pct(rmbset.overall), 8) << "| "
            << format_pct(avg) << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Verdict parsing
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kJudgmentMarker = "--- Final Judgment ---";

// "Winner: Response A" with optional whitespace / markdown emphasis.
const std::regex& winner_line_re() {
    static const std::regex re(
        R"(^[\s*_]*Winner[\s*_]*:[\s*_]*Response[\s*_]+([AB])[\s*_.!]*$)");
    return re;
}

std::vector<std::pair<size_t, std::string>> split_lines_with_offsets(const std::string& text) {
    std::vector<std::pair<size_t, std::string>> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            lines.emplace_back(start, text.substr(start));
            break;
        }
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.emplace_back(start, std::move(line));
        start = end + 1;
    }
    return lines;
}

}  // namespace

Verdict parse_verdict(const std::string& text) {
    auto lines = split_lines_with_offsets(text);

    std::optional<Winner> winner;
    size_t winner_line_start = std::string::npos;
    size_t marker_end = std::string::npos;
    for (const auto& [offset, line] : lines) {
        std::smatch m;
        if (std::regex_match(line, m, winner_line_re())) {
            winner = m[1].str() == "A" ? Winner::A : Winner::B;
            winner_line_start = offset;
        }
        if (trim(line) == kJudgmentMarker) marker_end = offset + line.size();
    }
    if (!winner)
        throw ParseError(ParseError::Kind::VerdictMissing, "winner",
                         "no line matches the verdict grammar", text);

    // Justification: the judgment section when present, else the whole
    // completion; the winner line itself is excluded either way.
    std::string section =
        marker_end != std::string::npos ? text.substr(marker_end) : text;
    size_t section_base = marker_end != std::string::npos ? marker_end : 0;
    if (winner_line_start != std::string::npos && winner_line_start >= section_base)
        section = text.substr(section_base, winner_line_start - section_base);

    return Verdict{*winner, trim(section)};
}

// ---------------------------------------------------------------------------
// Prompt rendering & judging
// ---------------------------------------------------------------------------

ChatRequest render_judge_prompt(const std::string& instruction, const std::string& response_a,
                                const std::string& response_b, const RubricSet* rubric,
                                JudgeMode mode, const JudgeCallOptions& opts) {
    const bool with_rubric = mode != JudgeMode::Direct;
    if (with_rubric && rubric == nullptr)
        throw std::invalid_argument("render_judge_prompt: rubric required for mode " +
                                    std::string(to_string(mode)));
    std::string user;
    if (with_rubric) {
        user = prompts::fill(prompts::kJudgeUserTemplate, {{"instruction", instruction},
                                                           {"response_a", response_a},
                                                           {"response_b", response_b},
                                                           {"rubric", rubric_to_json(*rubric).dump(2)}});
    } else {
        user = prompts::fill(prompts::kDirectJudgeUserTemplate, {{"instruction", instruction},
                                                                 {"response_a", response_a},
                                                                 {"response_b", response_b}});
    }
    if (!opts.include_no_think) user = prompts::strip_no_think(user);

    ChatRequest req;
    req.model = opts.model;
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    req.messages = {{Role::System, with_rubric ? prompts::kJudgeSystem : prompts::kDirectJudgeSystem},
                    {Role::User, std::move(user)}};
    return req;
}

namespace {

/// One judging call under a fixed slot assignment.
Judgment judge_once(Provider& provider, const EvalRecord& rec, const RubricSet* rubric,
                    const JudgeCallOptions& opts, bool swapped) {
    const std::string& ya = swapped ? rec.response_b : rec.response_a;
    const std::string& yb = swapped ? rec.response_a : rec.response_b;
    ChatRequest req = render_judge_prompt(rec.instruction, ya, yb, rubric, opts.mode, opts);
    auto result = complete_structured(provider, std::move(req), parse_verdict,
                                      opts.repair_attempts);
    Judgment j;
    j.winner = result.value.winner;  // presented frame
    j.justification = result.value.justification;
    // ChosenFirst iff the gold response sits in slot A.
    Winner gold_slot = swapped ? other(rec.gold) : rec.gold;
    j.presented_order = gold_slot == Winner::A ? PresentationOrder::ChosenFirst
                                               : PresentationOrder::RejectedFirst;
    j.raw = result.raw_completions.back();
    j.mode = opts.mode;
    return j;
}

}  // namespace

JudgeOutcome judge_pair(Provider& provider, const EvalRecord& rec, const RubricSet* rubric,
                        const JudgeCallOptions& opts) {
    JudgeOutcome out;
    auto run = [&](bool swapped) -> std::optional<Winner> {
        try {
            Judgment j = judge_once(provider, rec, rubric, opts, swapped);
            Winner mapped = map_winner(j.winner, swapped);
            out.judgments.push_back(std::move(j));
            return mapped;
        } catch (const StructuredOutputFailed&) {
            out.verdict_missing = true;
            return std::nullopt;
        }
    };

    switch (opts.order_policy) {
        case OrderPolicy::AsGiven: {
            auto w = run(false);
            out.winner = w;
            out.correct = w && *w == rec.gold;
            break;
        }
        case OrderPolicy::Swap: {
            auto w = run(true);
            out.winner = w;
            out.correct = w && *w == rec.gold;
            break;
        }
        case OrderPolicy::Both: {
            auto w1 = run(false);
            auto w2 = run(true);
            out.consistent = w1 && w2 && *w1 == *w2;
            if (opts.strict_both) {
                out.correct = w1 && w2 && *w1 == rec.gold && *w2 == rec.gold;
                out.winner = out.consistent ? w1 : std::nullopt;
            } else {
                out.winner = w1;
                out.correct = w1 && *w1 == rec.gold;
            }
            break;
        }
    }
    return out;
}

RubricSet generate_rubric_for_eval(Provider& provider, const EvalRecord& rec,
                                   const GeneratorOptions& opts) {
    ChatRequest req;
    req.model = opts.model;
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    req.messages = {{Role::System, prompts::kGeneratorSystem},
                    {Role::User, prompts::fill(prompts::kGeneratorUserTemplate,
                                               {{"instruction", rec.instruction},
                                                {"response_a", rec.response_a},
                                                {"response_b", rec.response_b}})}};
    auto result = complete_structured(provider, std::move(req), parse_rubric,
                                      opts.repair_attempts);
    result.value.instruction_id = rec.id;  // models hallucinate identifiers
    return result.value;
}

CategoryReport evaluate(Provider& provider, const std::vector<EvalRecord>& records,
                        const EvalOptions& opts, AuditLog* audit) {
    if (records.empty()) {
        CategoryReport empty;
        empty.micro = opts.micro;
        return empty;
    }
    Benchmark benchmark = records.front().benchmark;
    for (const auto& r : records)
        if (r.benchmark != benchmark)
            throw std::invalid_argument("evaluate: mixed benchmarks in one record set");

    struct Outcome {
        bool correct = false;
        bool verdict_missing = false;
        bool fallback = false;
        bool inconsistent = false;
    };

    JudgeCallOptions judge_opts = opts.judge;
    judge_opts.mode = opts.mode;
    judge_opts.order_policy = opts.order_policy;
    judge_opts.strict_both = opts.strict_both;

    auto process = [&](const EvalRecord& rec, size_t) -> Outcome {
        auto start = std::chrono::steady_clock::now();
        Outcome o;
        std::optional<RubricSet> rubric;
        JudgeCallOptions call = judge_opts;
        if (opts.mode != JudgeMode::Direct) {
            try {
                rubric = generate_rubric_for_eval(provider, rec, opts.generator);
            } catch (const StructuredOutputFailed&) {
                // Never drop a benchmark record: judge it directly, flagged.
                o.fallback = true;
                call.mode = JudgeMode::Direct;
            }
        }
        JudgeOutcome outcome =
            judge_pair(provider, rec, rubric ? &*rubric : nullptr, call);
        o.correct = outcome.correct;
        o.verdict_missing = outcome.verdict_missing;
        o.inconsistent = !outcome.consistent;
        if (audit) {
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
            audit->record(rec.id, "judge", o.correct ? "correct" : "incorrect",
                          static_cast<int>(outcome.judgments.size()), ms,
                          o.fallback ? "rubric_fallback" : "");
        }
        return o;
    };

    auto outcomes = parallel_map_ordered(records, process, opts.workers);

    std::vector<bool> correct(records.size());
    for (size_t i = 0; i < records.size(); ++i) correct[i] = outcomes[i].correct;
    CategoryReport report = aggregate_report(benchmark, records, correct, opts.micro);
    for (const auto& o : outcomes) {
        if (o.verdict_missing) ++report.verdict_missing;
        if (o.fallback) ++report.rubric_fallbacks;
        if (o.inconsistent) ++report.inconsistent;
    }
    return report;
}

}  // namespace rubric_forge
