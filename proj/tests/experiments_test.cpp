#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "rubric_forge/experiments.hpp"
#include "rubric_forge/jsonl.hpp"
#include "rubric_forge/parse.hpp"
#include "test_support.hpp"

using namespace rubric_forge;

namespace {

/// A D_rubric file with `rules` hard rules and `principles` principles per record.
std::filesystem::path write_rubric_file(const std::filesystem::path& dir, int records, int rules,
                                        int principles = 1) {
    std::vector<ordered_json> rows;
    for (int i = 0; i < records; ++i) {
        RubricRecord rec;
        rec.pair = rf_test::make_pair("rec-" + std::to_string(i));
        rec.rubric.instruction_id = rec.pair.id;
        for (int r = 0; r < rules; ++r)
            rec.rubric.hard_rules.push_back({"rule_" + std::to_string(r + 1), RuleType::Must,
                                             "criterion " + std::to_string(r), "test", "why",
                                             std::nullopt});
        for (int p = 0; p < principles; ++p)
            rec.rubric.principles.push_back(
                {"principle_" + std::to_string(p + 1), "description", "why"});
        rec.presented_order =
            i % 2 == 0 ? PresentationOrder::ChosenFirst : PresentationOrder::RejectedFirst;
        rows.push_back(rubric_record_to_json(rec));
    }
    auto path = dir / "rubric.jsonl";
    write_jsonl(path, rows);
    return path;
}

CategoryReport report_with_overall(double overall, long long n = 100) {
    CategoryReport r;
    r.benchmark = Benchmark::Generic;
    r.overall = overall;
    r.n = n;
    r.per_category["all"] = {static_cast<long long>(overall * n), n};
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------------

TEST_CASE("mask: k=2 on 7 rules leaves 5, rerun with same seed is identical") {
    rf_test::TempDir tmp;
    auto input = write_rubric_file(tmp.path, 3, 7);
    auto out1 = tmp.path / "masked1.jsonl";
    auto out2 = tmp.path / "masked2.jsonl";

    MaskSpec spec{2, 11, MaskScope::HardRulesOnly};
    MaskManifest m1 = mask_rubrics(input, out1, spec);
    MaskManifest m2 = mask_rubrics(input, out2, spec);
    CHECK(rf_test::slurp(out1) == rf_test::slurp(out2));

    auto rows = read_jsonl(out1);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) CHECK(row["rubric"]["hard_rules"].size() == 5);
    for (const auto& note : m1.records) {
        CHECK(note.deleted_ids.size() == 2);
        CHECK_FALSE(note.clamped);
    }
    CHECK(m1.algorithm == SeededRng::kAlgorithm);
    // Different seed, different victims (overwhelmingly).
    MaskManifest m3 = mask_rubrics(input, tmp.path / "masked3.jsonl",
                                   MaskSpec{2, 12, MaskScope::HardRulesOnly});
    bool any_diff = false;
    for (size_t i = 0; i < m1.records.size(); ++i)
        if (m1.records[i].deleted_ids != m3.records[i].deleted_ids) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("mask: k=0 is the byte-identity") {
    rf_test::TempDir tmp;
    auto input = write_rubric_file(tmp.path, 4, 3);
    auto output = tmp.path / "masked.jsonl";
    mask_rubrics(input, output, MaskSpec{0, 99, MaskScope::HardRulesOnly});
    CHECK(rf_test::slurp(output) == rf_test::slurp(input));
}

TEST_CASE("mask: clamps to one remaining hard rule and notes it") {
    rf_test::TempDir tmp;
    auto input = write_rubric_file(tmp.path, 2, 2);
    auto output = tmp.path / "masked.jsonl";
    MaskManifest manifest = mask_rubrics(input, output, MaskSpec{3, 5, MaskScope::HardRulesOnly});
    for (const auto& row : read_jsonl(output))
        CHECK(row["rubric"]["hard_rules"].size() == 1);
    for (const auto& note : manifest.records) {
        CHECK(note.deleted_ids.size() == 1);
        CHECK(note.clamped);
    }
}

TEST_CASE("mask: record count, ids, and non-rubric fields are preserved") {
    rf_test::TempDir tmp;
    auto input = write_rubric_file(tmp.path, 5, 4);
    auto output = tmp.path / "masked.jsonl";
    mask_rubrics(input, output, MaskSpec{1, 3, MaskScope::HardRulesOnly});
    auto before = read_jsonl(input);
    auto after = read_jsonl(output);
    REQUIRE(after.size() == before.size());
    for (size_t i = 0; i < after.size(); ++i) {
        CHECK(after[i]["id"] == before[i]["id"]);
        CHECK(after[i]["instruction"] == before[i]["instruction"]);
        CHECK(after[i]["chosen"] == before[i]["chosen"]);
        CHECK(after[i]["rejected"] == before[i]["rejected"]);
        CHECK(after[i]["presented_order"] == before[i]["presented_order"]);
        CHECK(after[i]["rubric"]["principles"] == before[i]["rubric"]["principles"]);
        // Masked rows still parse as valid rubric records.
        CHECK_NOTHROW(rubric_record_from_json(after[i]));
    }
}

TEST_CASE("mask: rules_and_principles scope can delete principles too") {
    rf_test::TempDir tmp;
    auto input = write_rubric_file(tmp.path, 1, 1, 3);
    auto output = tmp.path / "masked.jsonl";
    // Only one hard rule: it must survive, so all deletions hit principles.
    MaskManifest manifest =
        mask_rubrics(input, output, MaskSpec{2, 7, MaskScope::RulesAndPrinciples});
    auto rows = read_jsonl(output);
    CHECK(rows[0]["rubric"]["hard_rules"].size() == 1);
    CHECK(rows[0]["rubric"]["principles"].size() == 1);
    CHECK(manifest.records[0].deleted_ids.size() == 2);
}

// ---------------------------------------------------------------------------
// Subsampling
// ---------------------------------------------------------------------------

namespace {

std::filesystem::path write_numbered_jsonl(const std::filesystem::path& path, int n) {
    std::vector<std::string> lines;
    for (int i = 0; i < n; ++i)
        lines.push_back(R"({"id":"row-)" + std::to_string(i) + R"("})");
    write_lines(path, lines);
    return path;
}

std::set<std::string> line_set(const std::filesystem::path& path) {
    std::set<std::string> out;
    for (const auto& row : read_jsonl(path)) out.insert(row["id"].get<std::string>());
    return out;
}

}  // namespace

TEST_CASE("subsample: n == size is a permutation of the full set") {
    rf_test::TempDir tmp;
    auto input = write_numbered_jsonl(tmp.path / "data.jsonl", 50);
    auto output = tmp.path / "all.jsonl";
    subsample(input, output, 50, 3);
    CHECK(line_set(output) == line_set(input));
    // Stable: same seed, same permutation.
    auto output2 = tmp.path / "all2.jsonl";
    subsample(input, output2, 50, 3);
    CHECK(rf_test::slurp(output) == rf_test::slurp(output2));
}

TEST_CASE("subsample: prefix inclusion under one seed") {
    rf_test::TempDir tmp;
    auto input = write_numbered_jsonl(tmp.path / "data.jsonl", 300);
    for (std::uint64_t seed : {1, 2, 3}) {
        auto small = tmp.path / ("s" + std::to_string(seed) + ".jsonl");
        auto large = tmp.path / ("l" + std::to_string(seed) + ".jsonl");
        subsample(input, small, 100, seed);
        subsample(input, large, 250, seed);
        auto small_set = line_set(small);
        auto large_set = line_set(large);
        for (const auto& id : small_set) CHECK(large_set.count(id) == 1);
        // And the small file is literally the first 100 lines of the large one.
        std::string large_text = rf_test::slurp(large);
        CHECK(large_text.rfind(rf_test::slurp(small), 0) == 0);
    }
}

TEST_CASE("subsample: different seeds give different subsets") {
    rf_test::TempDir tmp;
    auto input = write_numbered_jsonl(tmp.path / "data.jsonl", 3000);
    auto a = tmp.path / "a.jsonl";
    auto b = tmp.path / "b.jsonl";
    subsample(input, a, 1000, 101);
    subsample(input, b, 1000, 202);
    auto sa = line_set(a);
    auto sb = line_set(b);
    size_t overlap = 0;
    for (const auto& id : sa) overlap += sb.count(id);
    CHECK(overlap < 1000);  // distinct subsets with overwhelming probability
}

TEST_CASE("subsample: n too large raises") {
    rf_test::TempDir tmp;
    auto input = write_numbered_jsonl(tmp.path / "data.jsonl", 5);
    CHECK_THROWS_AS(subsample(input, tmp.path / "out.jsonl", 6, 1), NTooLargeError);
}

TEST_CASE("subsample lines are byte-verbatim copies") {
    rf_test::TempDir tmp;
    auto input = tmp.path / "data.jsonl";
    // Deliberately non-canonical spacing that a reserializer would destroy.
    write_lines(input, {R"({ "id":"one" ,  "x": 1 })", R"({"id":"two","x":2})",
                        R"({  "id" : "three"})"});
    subsample(input, tmp.path / "out.jsonl", 3, 9);
    std::string out = rf_test::slurp(tmp.path / "out.jsonl");
    CHECK(out.find(R"({ "id":"one" ,  "x": 1 })") != std::string::npos);
    CHECK(out.find(R"({  "id" : "three"})") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Perturbation report
// ---------------------------------------------------------------------------

TEST_CASE("perturbation table reproduces the published deltas") {
    CategoryReport baseline = report_with_overall(0.9565, 10000);
    std::vector<std::pair<std::string, CategoryReport>> variants = {
        {"Del 0", report_with_overall(0.9570, 10000)},
        {"Del 1", report_with_overall(0.9523, 10000)},
        {"Del 2", report_with_overall(0.9537, 10000)},
    };
    std::string table = perturbation_report(baseline, variants);
    CHECK(table.find("95.65") != std::string::npos);
    CHECK(table.find("95.70") != std::string::npos);
    CHECK(table.find("95.23") != std::string::npos);
    CHECK(table.find("+0.05") != std::string::npos);
    CHECK(table.find("-0.42") != std::string::npos);
    CHECK(table.find("-0.28") != std::string::npos);
    CHECK(table.find("0.00") != std::string::npos);  // baseline delta
}

TEST_CASE("perturbation: variant equal to baseline shows +0.00") {
    CategoryReport baseline = report_with_overall(0.80);
    std::string table = perturbation_report(baseline, {{"Del 1", report_with_overall(0.80)}});
    CHECK(table.find("+0.00") != std::string::npos);
}

TEST_CASE("perturbation: mismatched eval sets are rejected") {
    CategoryReport baseline = report_with_overall(0.9, 100);
    CHECK_THROWS_AS(perturbation_report(baseline, {{"Del 1", report_with_overall(0.9, 99)}}),
                    MismatchedEvalSetsError);
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

namespace {

void add_ablation_mock(MockProvider& mock) {
    // Rubric-guided judging fixes two of the direct judge's errors: records
    // whose instruction carries RUBRIC-SAVES are judged correctly only when a
    // rubric section is present. Generator calls must match first.
    mock.add_pattern({"Generate a comprehensive evaluation rubric", std::nullopt,
                      rf_test::simple_rubric_json(), FinishReason::Stop});
    mock.add_pattern({"RUBRIC-SAVES[\\s\\S]*## Provided Rubric", std::nullopt,
                      rf_test::judge_completion('A'), FinishReason::Stop});
    mock.add_pattern({"RUBRIC-SAVES", std::nullopt, rf_test::judge_completion('B'),
                      FinishReason::Stop});
    mock.add_pattern({".*", std::nullopt, rf_test::judge_completion('A'), FinishReason::Stop});
}

std::vector<EvalRecord> ablation_records(int n, int rubric_saves) {
    std::vector<EvalRecord> records;
    for (int i = 0; i < n; ++i) {
        EvalRecord rec;
        rec.id = "r" + std::to_string(i);
        rec.instruction = i < rubric_saves ? "RUBRIC-SAVES question " + std::to_string(i)
                                           : "plain question " + std::to_string(i);
        rec.response_a = "answer one";
        rec.response_b = "answer two";
        rec.gold = Winner::A;
        rec.benchmark = Benchmark::Generic;
        rec.category = "all";
        records.push_back(rec);
    }
    return records;
}

}  // namespace

TEST_CASE("ablation: rubric-guided minus direct equals the scripted 2/n exactly") {
    MockProvider mock;
    add_ablation_mock(mock);
    auto records = ablation_records(10, 2);

    AblationOptions opts;
    opts.base.workers = 2;
    AblationResult result = ablation_run(
        mock, records, {JudgeMode::Direct, JudgeMode::RubricGuided}, opts);
    REQUIRE(result.rows.size() == 2);
    CHECK(result.rows[0].mode == JudgeMode::Direct);
    CHECK(result.rows[0].average == doctest::Approx(0.8));
    CHECK(result.rows[1].average == doctest::Approx(1.0));
    CHECK(result.rows[1].average - result.rows[0].average == doctest::Approx(2.0 / 10.0));
    REQUIRE(result.baseline_index.has_value());
    CHECK(*result.baseline_index == 0);
}

TEST_CASE("ablation: single mode, single benchmark equals evaluate's overall") {
    MockProvider mock;
    add_ablation_mock(mock);
    auto records = ablation_records(4, 0);
    AblationOptions opts;
    AblationResult result = ablation_run(mock, records, {JudgeMode::Direct}, opts);
    REQUIRE(result.rows.size() == 1);
    EvalOptions eval_opts;
    eval_opts.mode = JudgeMode::Direct;
    CategoryReport direct = evaluate(mock, records, eval_opts);
    CHECK(result.rows[0].average == doctest::Approx(direct.overall));
    CHECK(result.rows[0].overalls.at(Benchmark::Generic) == doctest::Approx(direct.overall));
}

TEST_CASE("ablation table lists every mode with an Average column") {
    MockProvider mock;
    add_ablation_mock(mock);
    auto records = ablation_records(6, 1);
    AblationOptions opts;
    AblationResult result = ablation_run(
        mock, records, {JudgeMode::Direct, JudgeMode::OneStepRubric, JudgeMode::RubricGuided},
        opts);
    std::string table = render_ablation_table(result);
    CHECK(table.find("Method") != std::string::npos);
    CHECK(table.find("Average") != std::string::npos);
    CHECK(table.find("direct") != std::string::npos);
    CHECK(table.find("one_step_rubric") != std::string::npos);
    CHECK(table.find("rubric_guided") != std::string::npos);
    auto j = ablation_to_json(result);
    CHECK(j["rows"].size() == 3);
    CHECK(j["baseline_mode"] == "direct");
}

// ---------------------------------------------------------------------------
// Case report
// ---------------------------------------------------------------------------

TEST_CASE("case report: elision, rubric citation, and correctness marks") {
    EvalRecord rec;
    rec.id = "lottadigital";
    rec.instruction = "GIVE ME AN EXECUTIVE SUMMARY OF LOTTADIGITAL.COM";
    rec.response_a = "A concise complete summary.";
    std::string para = "A very long paragraph about services and strengths. ";
    while (para.size() < 700) para += para;
    rec.response_b = para + "\n\n" + para + "\n\n- Client";
    rec.gold = Winner::A;
    rec.category = "chat";

    RubricSet rubric;
    rubric.instruction_id = rec.id;
    rubric.hard_rules.push_back({"rule_1", RuleType::Must,
                                 "must provide a complete executive summary", "no truncation",
                                 "B is cut off", std::nullopt});

    Judgment direct;
    direct.winner = Winner::B;
    direct.justification = "Response B is comprehensive and well-structured.";
    direct.mode = JudgeMode::Direct;
    Judgment guided;
    guided.winner = Winner::A;
    guided.justification = "Response B violates the completeness rule.";
    guided.mode = JudgeMode::RubricGuided;

    std::string doc = case_report(
        rec, {{JudgeMode::Direct, direct}, {JudgeMode::RubricGuided, guided}}, &rubric);

    CHECK(doc.find("[Content Omitted for Brevity]") != std::string::npos);
    CHECK(doc.find("must provide a complete executive summary") != std::string::npos);
    CHECK(doc.find("direct — INCORRECT") != std::string::npos);
    CHECK(doc.find("rubric_guided — CORRECT") != std::string::npos);
    CHECK(doc.find("Winner: Response A (Correct)") != std::string::npos);
    CHECK(doc.find("Winner: Response B (Incorrect)") != std::string::npos);

    // Deterministic bytes.
    std::string again = case_report(
        rec, {{JudgeMode::Direct, direct}, {JudgeMode::RubricGuided, guided}}, &rubric);
    CHECK(doc == again);
}

TEST_CASE("case report requires at least one judgment") {
    EvalRecord rec;
    rec.id = "empty";
    rec.instruction = "q";
    rec.response_a = "a";
    rec.response_b = "b";
    CHECK_THROWS_AS(case_report(rec, {}, nullptr), std::invalid_argument);
}

TEST_CASE("elide cuts at a paragraph boundary under the threshold") {
    std::string text;
    for (int i = 0; i < 30; ++i) text += "Paragraph " + std::to_string(i) + " body text.\n\n";
    std::string cut = elide(text, 300);
    CHECK(cut.size() < text.size());
    CHECK(cut.find(std::string(kElisionMarker)) != std::string::npos);
    // The cut lands right after a full paragraph, not mid-sentence.
    auto marker_pos = cut.find(std::string(kElisionMarker));
    CHECK(cut.substr(marker_pos - 1, 1) == "\n");
    CHECK(elide("short", 300) == "short");
}
