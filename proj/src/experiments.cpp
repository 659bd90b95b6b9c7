#include "rubric_forge/experiments.hpp"

#include <fstream>
#include <sstream>

#include "rubric_forge/jsonl.hpp"

namespace rubric_forge {

std::string_view to_string(MaskScope s) {
    return s == MaskScope::HardRulesOnly ? "hard_rules_only" : "rules_and_principles";
}

std::optional<MaskScope> mask_scope_from_string(std::string_view name) {
    if (name == "hard_rules_only") return MaskScope::HardRulesOnly;
    if (name == "rules_and_principles") return MaskScope::RulesAndPrinciples;
    return std::nullopt;
}

ordered_json mask_manifest_to_json(const MaskManifest& m) {
    ordered_json j;
    j["algorithm"] = m.algorithm;
    j["k"] = m.spec.k;
    j["seed"] = m.spec.seed;
    j["scope"] = std::string(to_string(m.spec.scope));
    auto& records = j["records"] = ordered_json::array();
    for (const auto& r : m.records) {
        ordered_json rj;
        rj["id"] = r.id;
        rj["deleted_ids"] = r.deleted_ids;
        rj["clamped"] = r.clamped;
        records.push_back(std::move(rj));
    }
    return j;
}

MaskManifest mask_rubrics(const std::filesystem::path& input,
                          const std::filesystem::path& output, const MaskSpec& spec) {
    MaskManifest manifest;
    manifest.spec = spec;

    if (spec.k == 0) {
        // Identity, bit for bit.
        atomic_write(output, read_file(input));
        for (const auto& row : read_jsonl(input))
            manifest.records.push_back({row.value("id", std::string{}), {}, false});
        return manifest;
    }

    SeededRng rng(spec.seed);
    std::vector<ordered_json> rows = read_jsonl(input);
    std::vector<std::string> lines;
    lines.reserve(rows.size());

    for (auto& row : rows) {
        MaskRecordNote note;
        note.id = row.value("id", std::string{});
        auto& rubric = row.at("rubric");
        auto& rules = rubric.at("hard_rules");
        const std::size_t n_rules = rules.size();

        if (spec.scope == MaskScope::HardRulesOnly) {
            // Never below one remaining hard rule.
            const std::size_t deletable = n_rules > 0 ? n_rules - 1 : 0;
            const std::size_t d = std::min<std::size_t>(spec.k, deletable);
            note.clamped = d < static_cast<std::size_t>(spec.k);
            auto victims = rng.sample_indices(n_rules, d);
            std::sort(victims.begin(), victims.end(), std::greater<>());
            for (std::size_t idx : victims) {
                note.deleted_ids.push_back(rules[idx].value("rule_id", std::string{}));
                rules.erase(idx);
            }
        } else {
            auto& principles = rubric["principles"];
            const std::size_t pool = n_rules + principles.size();
            std::vector<std::size_t> order(pool);
            for (std::size_t i = 0; i < pool; ++i) order[i] = i;
            rng.shuffle(order);
            std::size_t deleted = 0;
            std::vector<std::size_t> rule_victims, principle_victims;
            std::size_t rules_left = n_rules;
            for (std::size_t idx : order) {
                if (deleted == static_cast<std::size_t>(spec.k)) break;
                if (idx < n_rules) {
                    if (rules_left <= 1) continue;  // keep at least one hard rule
                    rule_victims.push_back(idx);
                    --rules_left;
                } else {
                    principle_victims.push_back(idx - n_rules);
                }
                ++deleted;
            }
            note.clamped = deleted < static_cast<std::size_t>(spec.k);
            std::sort(rule_victims.begin(), rule_victims.end(), std::greater<>());
            for (std::size_t idx : rule_victims) {
                note.deleted_ids.push_back(rules[idx].value("rule_id", std::string{}));
                rules.erase(idx);
            }
            std::sort(principle_victims.begin(), principle_victims.end(), std::greater<>());
            for (std::size_t idx : principle_victims) {
                note.deleted_ids.push_back(principles[idx].value("principle_id", std::string{}));
                principles.erase(idx);
            }
        }
        manifest.records.push_back(std::move(note));
        lines.push_back(row.dump());
    }
    write_lines(output, lines);
    return manifest;
}

ordered_json subsample_manifest_to_json(const SubsampleManifest& m) {
    ordered_json j;
    j["algorithm"] = m.algorithm;
    j["seed"] = m.seed;
    j["n"] = m.n;
    j["input_size"] = m.input_size;
    return j;
}

SubsampleManifest subsample(const std::filesystem::path& input,
                            const std::filesystem::path& output, std::size_t n,
                            std::uint64_t seed) {
    // Keep raw lines so output rows stay byte-identical to input rows.
    std::ifstream in(input, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + input.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (!blank) lines.push_back(line);
    }
    if (n > lines.size())
        throw NTooLargeError("subsample n=" + std::to_string(n) + " exceeds dataset size " +
                             std::to_string(lines.size()));

    SeededRng rng(seed);
    auto picks = rng.sample_indices(lines.size(), n);
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t idx : picks) out.push_back(lines[idx]);
    write_lines(output, out);

    SubsampleManifest manifest;
    manifest.seed = seed;
    manifest.n = n;
    manifest.input_size = lines.size();
    return manifest;
}

std::string perturbation_report(
    const CategoryReport& baseline,
    const std::vector<std::pair<std::string, CategoryReport>>& variants) {
    for (const auto& [label, report] : variants)
        if (report.n != baseline.n)
            throw MismatchedEvalSetsError("variant \"" + label + "\" has n=" +
                                          std::to_string(report.n) + ", baseline n=" +
                                          std::to_string(baseline.n));

    auto pad = [](const std::string& s, std::size_t width) {
        return s.size() >= width ? s + "  " : s + std::string(width - s.size(), ' ');
    };
    constexpr std::size_t kCol = 10;

    std::ostringstream head, acc, delta;
    head << pad("Del", kCol) << pad("Baseline", kCol);
    acc << pad("Acc. (%)", kCol) << pad(format_pct(baseline.overall, 2), kCol);
    delta << pad("Delta (%)", kCol) << pad("0.00", kCol);
    for (const auto& [label, report] : variants) {
        head << pad(label, kCol);
        acc << pad(format_pct(report.overall, 2), kCol);
        delta << pad(format_delta_pp((report.overall - baseline.overall) * 100.0), kCol);
    }
    std::ostringstream out;
    out << head.str() << "\n" << acc.str() << "\n" << delta.str() << "\n";
    return out.str();
}

AblationResult ablation_run(Provider& provider, const std::vector<EvalRecord>& records,
                            const std::vector<JudgeMode>& modes, const AblationOptions& opts,
                            AuditLog* audit) {
    std::map<Benchmark, std::vector<EvalRecord>> groups;
    for (const auto& r : records) groups[r.benchmark].push_back(r);

    AblationResult result;
    for (JudgeMode mode : modes) {
        EvalOptions eval_opts = opts.base;
        eval_opts.mode = mode;
        eval_opts.generator.model = mode == JudgeMode::OneStepRubric
                                        ? opts.one_step_generator_model
                                        : opts.rubric_generator_model;
        AblationRow row;
        row.mode = mode;
        double sum = 0.0;
        for (const auto& [benchmark, group] : groups) {
            CategoryReport report = evaluate(provider, group, eval_opts, audit);
            row.overalls[benchmark] = report.overall;
            sum += report.overall;
        }
        row.average = groups.empty() ? 0.0 : sum / static_cast<double>(groups.size());
        result.rows.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < result.rows.size(); ++i)
        if (result.rows[i].mode == opts.baseline_mode) {
            result.baseline_index = i;
            break;
        }
    return result;
}

ordered_json ablation_to_json(const AblationResult& r) {
    ordered_json j;
    auto& rows = j["rows"] = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json rj;
        rj["mode"] = std::string(to_string(row.mode));
        ordered_json overalls;
        for (const auto& [b, v] : row.overalls) overalls[std::string(to_string(b))] = v;
        rj["overalls"] = std::move(overalls);
        rj["average"] = row.average;
        if (r.baseline_index) {
            rj["delta_average_vs_baseline"] =
                row.average - r.rows[*r.baseline_index].average;
        }
        rows.push_back(std::move(rj));
    }
    if (r.baseline_index)
        j["baseline_mode"] = std::string(to_string(r.rows[*r.baseline_index].mode));
    return j;
}

std::string render_ablation_table(const AblationResult& r) {
    auto pad = [](const std::string& s, std::size_t width) {
        return s.size() >= width ? s + "  " : s + std::string(width - s.size(), ' ');
    };
    std::vector<Benchmark> columns;
    for (Benchmark b :
         {Benchmark::RewardBench, Benchmark::RMBench, Benchmark::RMB, Benchmark::Generic})
        for (const auto& row : r.rows)
            if (row.overalls.count(b)) {
                columns.push_back(b);
                break;
            }

    std::ostringstream out;
    out << pad("Method", 18);
    for (Benchmark b : columns) out << pad(std::string(to_string(b)), 13);
    out << pad("Average", 10);
    if (r.baseline_index) out << "Delta vs " << to_string(r.rows[*r.baseline_index].mode);
    out << "\n";
    for (const auto& row : r.rows) {
        out << pad(std::string(to_string(row.mode)), 18);
        for (Benchmark b : columns) {
            auto it = row.overalls.find(b);
            out << pad(it == row.overalls.end() ? "-" : format_pct(it->second), 13);
        }
        out << pad(format_pct(row.average), 10);
        if (r.baseline_index) {
            double delta = (row.average - r.rows[*r.baseline_index].average) * 100.0;
            out << (&row == &r.rows[*r.baseline_index] ? "0.00" : format_delta_pp(delta));
        }
        out << "\n";
    }
    return out.str();
}

std::string elide(const std::string& text, std::size_t threshold) {
    if (text.size() <= threshold) return text;
    std::size_t cut = text.rfind("\n\n", threshold);
    if (cut == std::string::npos || cut == 0) cut = threshold;
    std::string out = text.substr(0, cut);
    out += "\n";
    out += kElisionMarker;
    return out;
}

std::string case_report(const EvalRecord& rec,
                        const std::vector<std::pair<JudgeMode, Judgment>>& judgments,
                        const RubricSet* rubric) {
    if (judgments.empty()) throw std::invalid_argument("case_report: no judgments");

    std::ostringstream out;
    out << "# Case Report: " << rec.id << "\n\n";
    out << "## Instruction\n" << rec.instruction << "\n\n";
    out << "## Response A" << (rec.gold == Winner::A ? " (gold)" : "") << "\n"
        << elide(rec.response_a) << "\n\n";
    out << "## Response B" << (rec.gold == Winner::B ? " (gold)" : "") << "\n"
        << elide(rec.response_b) << "\n\n";

    if (rubric) {
        out << "## Rubric Hard Rules\n";
        int i = 1;
        for (const auto& rule : rubric->hard_rules)
            out << i++ << ". [" << to_string(rule.type) << "] " << rule.criterion << "\n";
        out << "\n";
    }

    out << "## Judgments\n\n";
    for (const auto& [mode, judgment] : judgments) {
        const bool correct = judgment.winner == rec.gold;
        out << "### " << to_string(mode) << " — " << (correct ? "CORRECT" : "INCORRECT") << "\n";
        out << "Critique: " << (judgment.justification.empty() ? "(none)" : judgment.justification)
            << "\n";
        out << "Prediction: Winner: Response " << to_string(judgment.winner) << " ("
            << (correct ? "Correct" : "Incorrect") << ")\n\n";
    }
    return out.str();
}

}  // namespace rubric_forge
