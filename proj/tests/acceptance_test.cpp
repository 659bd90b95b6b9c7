// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "rubric_forge/experiments.hpp"
#include "rubric_forge/jsonl.hpp"
#include "rubric_forge/judge.hpp"
#include "rubric_forge/parse.hpp"
#include "rubric_forge/profiler.hpp"
#include "rubric_forge/structured.hpp"
#include "rubric_forge/synthesizer.hpp"
#include "test_support.hpp"

using namespace rubric_forge;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void criterion(int number, const std::string& name, const std::function<void()>& body) {
    auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
        body();
    } catch (const std::exception& e) {
        error = e.what();
    } catch (...) {
        error = "unknown exception";
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
    if (error.empty()) {
        std::cout << "[PASS] criterion " << number << ": " << name << " (" << ms << " ms)\n";
    } else {
        ++failures;
        std::cout << "[FAIL] criterion " << number << ": " << name << " (" << ms
                  << " ms) -- " << error << "\n";
    }
}

void require(bool condition, const std::string& message) {
    if (!condition) throw std::runtime_error(message);
}

void require_close_pp(double actual_fraction, double expected_pct, const std::string& what) {
    double actual_pct = actual_fraction * 100.0;
    if (std::abs(actual_pct - expected_pct) > 0.05) {
        std::ostringstream msg;
        msg << what << ": got " << actual_pct << ", expected " << expected_pct << " (+/-0.05 pp)";
        throw std::runtime_error(msg.str());
    }
}

void require_under(std::chrono::steady_clock::time_point start, double seconds,
                   const std::string& what) {
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > seconds)
        throw std::runtime_error(what + ": took " + std::to_string(elapsed) + " s, budget " +
                                 std::to_string(seconds) + " s");
}

int run_cli(const std::string& args, const fs::path& scratch, const std::string& tag) {
    fs::create_directories(scratch);
    std::string cmd = std::string(RF_CLI_BIN) + " " + args + " >" +
                      (scratch / (tag + ".out")).string() + " 2>" +
                      (scratch / (tag + ".err")).string();
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// --------------------------------------------------------------------------
// 1. Aggregation fidelity
// --------------------------------------------------------------------------

std::vector<EvalRecord> synthetic_records(Benchmark benchmark,
                                          const std::vector<std::tuple<std::string, std::string,
                                                                       int, int>>& groups) {
    // groups: (category, difficulty-or-empty, correct, total)
    std::vector<EvalRecord> records;
    int serial = 0;
    for (const auto& [category, difficulty, correct, total] : groups) {
        for (int i = 0; i < total; ++i) {
            EvalRecord rec;
            rec.id = std::string(to_string(benchmark)) + "-" + std::to_string(++serial);
            rec.instruction = i < correct ? "q ANSWER-A" : "q ANSWER-B";
            rec.response_a = "first";
            rec.response_b = "second";
            rec.gold = Winner::A;
            rec.benchmark = benchmark;
            rec.category = category;
            if (!difficulty.empty()) rec.difficulty = difficulty_from_string(difficulty);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

void criterion_aggregation() {
    auto start = std::chrono::steady_clock::now();
    MockProvider mock;
    mock.add_pattern({"ANSWER-A", std::nullopt, "Winner: Response A", FinishReason::Stop});
    mock.add_pattern({".*", std::nullopt, "Winner: Response B", FinishReason::Stop});

    EvalOptions opts;
    opts.mode = JudgeMode::Direct;
    opts.workers = 1;

    // RewardBench per-category accuracies of the reference judge run.
    auto rb = evaluate(mock, synthetic_records(Benchmark::RewardBench,
                                               {{"chat", "", 939, 1000},
                                                {"chat-hard", "", 865, 1000},
                                                {"safety", "", 909, 1000},
                                                {"reasoning", "", 903, 1000}}),
                       opts);
    require_close_pp(rb.overall, 90.4, "RewardBench overall");

    // RMB: 85.3 / 76.3 -> 80.8.
    auto rmb = evaluate(mock, synthetic_records(Benchmark::RMB,
                                                {{"help", "", 853, 1000},
                                                 {"harm", "", 763, 1000}}),
                        opts);
    require_close_pp(rmb.overall, 80.8, "RMB overall");

    // RMBench: easy/medium/hard 90.4 / 86.8 / 81.1 -> 86.1.
    auto rmbench = evaluate(mock, synthetic_records(Benchmark::RMBench,
                                                    {{"chat", "easy", 904, 1000},
                                                     {"chat", "medium", 868, 1000},
                                                     {"chat", "hard", 811, 1000}}),
                            opts);
    require_close_pp(rmbench.overall, 86.1, "RMBench overall");

    double avg = cross_benchmark_average({{Benchmark::RewardBench, rb.overall},
                                          {Benchmark::RMBench, rmbench.overall},
                                          {Benchmark::RMB, rmb.overall}});
    require_close_pp(avg, 85.8, "cross-benchmark average");
    require(format_pct(avg) == "85.8", "rendered average must be 85.8");
    require_under(start, 1.0, "aggregation runtime");
}

// --------------------------------------------------------------------------
// 2. Schema fidelity
// --------------------------------------------------------------------------

void criterion_schema() {
    auto start = std::chrono::steady_clock::now();
    Profile p = parse_profile(rf_test::worked_profile_example());
    require(p.findings.size() == 2, "worked example must have two findings");
    require(p.findings[0].criterion == Dimension::Conciseness &&
                p.findings[0].status == FindingStatus::Fail && p.findings[0].severity == 3,
            "first finding must be a Conciseness fail with severity 3");
    require(p.findings[1].criterion == Dimension::ContentCoverage &&
                p.findings[1].status == FindingStatus::Pass,
            "second finding must be a ContentCoverage pass");

    // Every contract field name round-trips byte-exactly.
    auto j = profile_to_json(p);
    Profile back = parse_profile(j.dump());
    require(back == p, "profile serialize/parse round-trip");
    require(profile_to_json(back).dump() == j.dump(), "byte-stable profile re-serialization");
    for (const char* key : {"criteria_candidates", "findings"})
        require(j.contains(key), std::string("missing field ") + key);
    for (const char* key :
         {"criterion", "status", "severity", "claim", "evidence", "instruction_anchor"})
        require(j["findings"][0].contains(key), std::string("missing finding field ") + key);

    RubricSet r = parse_rubric(rf_test::simple_rubric_json());
    auto rj = rubric_to_json(r);
    require(parse_rubric(rj.dump()) == r, "rubric round-trip");
    for (const char* key :
         {"instruction_id", "hard_rules", "principles", "pair_consistency_check"})
        require(rj.contains(key), std::string("missing rubric field ") + key);
    for (const char* key : {"rule_id", "type", "criterion", "test", "rationale", "derived_from"})
        require(rj["hard_rules"][0].contains(key), std::string("missing rule field ") + key);
    for (const char* key : {"expected_winner", "rubric_predicts", "notes"})
        require(rj["pair_consistency_check"].contains(key),
                std::string("missing consistency field ") + key);
    require_under(start, 1.0, "schema runtime");
}

// --------------------------------------------------------------------------
// 3. Filter oracle equivalence (200 records, no network)
// --------------------------------------------------------------------------

void criterion_filter_oracle() {
    auto start = std::chrono::steady_clock::now();
    MockProvider mock;
    mock.add_pattern({"SYNTHFAIL[\\s\\S]*## Diagnoses", std::nullopt, "garbage {",
                      FinishReason::Stop});
    mock.add_pattern({"failed validation", std::nullopt, "more garbage", FinishReason::Stop});
    mock.add_pattern({"## Diagnoses", std::nullopt, rf_test::simple_rubric_json(),
                      FinishReason::Stop});
    mock.add_pattern({"PICK_A[\\s\\S]*## Provided Rubric", std::nullopt,
                      rf_test::judge_completion('A'), FinishReason::Stop});
    mock.add_pattern({"PICK_B[\\s\\S]*## Provided Rubric", std::nullopt,
                      rf_test::judge_completion('B'), FinishReason::Stop});

    std::mt19937_64 rng(20240801);
    std::vector<ProfiledPair> profiled;
    std::set<std::string> expected_kept;
    for (int i = 0; i < 200; ++i) {
        int outcome = static_cast<int>(rng() % 3);  // 0 valid, 1 mismatch, 2 parse-fail
        bool chosen_is_a = i % 2 == 0;
        std::string marker = outcome == 2 ? "SYNTHFAIL"
                             : (outcome == 0) == chosen_is_a ? "PICK_A"
                                                             : "PICK_B";
        ProfiledPair pp;
        pp.pair = rf_test::make_pair("rec-" + std::to_string(i), marker + " corpus item");
        Profile prof;
        prof.criteria_candidates = {Dimension::Completeness};
        pp.profile_chosen = prof;
        pp.profile_rejected = prof;
        profiled.push_back(std::move(pp));
        if (outcome == 0) expected_kept.insert("rec-" + std::to_string(i));
    }

    SynthesizerOptions opts;
    opts.workers = 4;
    auto result = build_rubric_dataset(mock, profiled, opts);

    // Independent reference replay of the consistency gate, record by record.
    std::set<std::string> replay_kept;
    long long replay_mismatch = 0, replay_parse = 0;
    for (size_t i = 0; i < profiled.size(); ++i) {
        PresentationOrder order = order_for_index("alternate", i);
        try {
            RubricSet rubric = synthesize_rubric(mock, profiled[i], order, opts);
            auto check = consistency_check(mock, profiled[i].pair, rubric, order, opts);
            if (check.parse_failed) ++replay_parse;
            else if (check.valid) replay_kept.insert(profiled[i].pair.id);
            else ++replay_mismatch;
        } catch (const StructuredOutputFailed&) {
            ++replay_parse;
        }
    }

    std::set<std::string> kept_ids;
    for (const auto& r : result.records) kept_ids.insert(r.pair.id);
    require(kept_ids == replay_kept, "kept set equals the independent replay");
    require(kept_ids == expected_kept, "kept set equals the script");
    require(result.stats.dropped_mismatch == replay_mismatch, "mismatch counts agree");
    require(result.stats.dropped_parse == replay_parse, "parse-drop counts agree");
    require(result.stats.total == result.stats.kept + result.stats.dropped_mismatch +
                                      result.stats.dropped_parse,
            "FilterStats conservation");
    require(result.stats.total == 200, "all 200 records accounted for");
    require_under(start, 10.0, "filter oracle runtime");
}

// --------------------------------------------------------------------------
// 4. End-to-end determinism over the 20-pair fixture
// --------------------------------------------------------------------------

void criterion_determinism() {
    auto start = std::chrono::steady_clock::now();
    rf_test::TempDir tmp;
    std::string mock_dir = (rf_test::fixtures_dir() / "mock").string();
    auto pipeline = [&](const fs::path& dir) {
        fs::create_directories(dir);
        std::string base = " --workdir " + (dir / "work").string() + " --mock " + mock_dir + " -q";
        require(run_cli("profile -i " + (rf_test::fixtures_dir() / "pairs_20.jsonl").string() +
                            " -o " + (dir / "profiled.jsonl").string() + base,
                        dir, "profile") == 0,
                "profile step");
        require(run_cli("synthesize -i " + (dir / "profiled.jsonl").string() + " -o " +
                            (dir / "rubric.jsonl").string() + base,
                        dir, "synthesize") == 0,
                "synthesize step");
        require(run_cli("build-judge-data -i " + (dir / "rubric.jsonl").string() + " -o " +
                            (dir / "judge.jsonl").string() + base,
                        dir, "judge-data") == 0,
                "build-judge-data step");
        require(run_cli("export-sft -i " + (dir / "rubric.jsonl").string() +
                            " --component generator -o " + (dir / "sft_gen").string() + base,
                        dir, "export-gen") == 0,
                "export generator step");
        require(run_cli("export-sft -i " + (dir / "judge.jsonl").string() +
                            " --component judge -o " + (dir / "sft_judge").string() + base,
                        dir, "export-judge") == 0,
                "export judge step");
    };
    pipeline(tmp.path / "run1");
    pipeline(tmp.path / "run2");
    for (const char* name :
         {"profiled.jsonl", "profiled.skips.jsonl", "rubric.jsonl", "rubric.stats.json",
          "judge.jsonl", "judge.skips.jsonl", "sft_gen.jsonl", "sft_gen.train_config.json",
          "sft_judge.jsonl", "sft_judge.train_config.json"}) {
        require(rf_test::slurp(tmp.path / "run1" / name) ==
                    rf_test::slurp(tmp.path / "run2" / name),
                std::string("byte-identical ") + name);
        require(!rf_test::slurp(tmp.path / "run1" / name).empty() ||
                    std::string(name).find("skips") != std::string::npos,
                std::string("non-empty ") + name);
    }
    require_under(start, 30.0, "determinism runtime");
}

// --------------------------------------------------------------------------
// 5. Perturbation-report arithmetic
// --------------------------------------------------------------------------

void criterion_perturbation() {
    auto make_report = [](long long correct) {
        CategoryReport r;
        r.benchmark = Benchmark::Generic;
        r.n = 10000;
        r.per_category["all"] = {correct, 10000};
        r.overall = static_cast<double>(correct) / 10000.0;
        return r;
    };
    std::string table = perturbation_report(make_report(9565), {{"Del 0", make_report(9570)},
                                                                {"Del 1", make_report(9523)}});
    require(table.find("95.65") != std::string::npos, "baseline accuracy 95.65 rendered");
    require(table.find("95.70") != std::string::npos, "Del 0 accuracy rendered");
    require(table.find("95.23") != std::string::npos, "Del 1 accuracy rendered");
    require(table.find("+0.05") != std::string::npos, "Del 0 delta +0.05");
    require(table.find("-0.42") != std::string::npos, "Del 1 delta -0.42");
}

// --------------------------------------------------------------------------
// 6. Verdict-parser totality over >= 10k fuzz inputs
// --------------------------------------------------------------------------

void criterion_verdict_fuzz() {
    std::mt19937_64 rng(616);
    int planted = 0;
    const std::string seedling = rf_test::judge_completion('A');
    for (int i = 0; i < 12000; ++i) {
        std::string text;
        int shape = static_cast<int>(rng() % 3);
        if (shape == 0) {
            size_t len = rng() % 160;
            for (size_t k = 0; k < len; ++k) text.push_back(static_cast<char>(rng() % 256));
        } else if (shape == 1) {
            text = seedling;
            for (int m = 0; m < 5 && !text.empty(); ++m) {
                size_t pos = rng() % text.size();
                switch (rng() % 3) {
                    case 0: text[pos] = static_cast<char>(rng() % 256); break;
                    case 1: text.erase(pos, 1); break;
                    case 2: text.insert(pos, 1, static_cast<char>(rng() % 128)); break;
                }
            }
        } else {
            // Noise lines guaranteed outside the grammar, plus exactly one
            // well-formed Winner line.
            size_t lines = rng() % 6;
            for (size_t l = 0; l < lines; ++l) {
                std::string line;
                size_t len = rng() % 30;
                for (size_t k = 0; k < len; ++k)
                    line.push_back(static_cast<char>(32 + rng() % 95));
                if (line.find("Winner") != std::string::npos) line = "noise line";
                text += line + "\n";
            }
        }
        bool plant = shape == 2;
        Winner expected = rng() % 2 ? Winner::A : Winner::B;
        if (plant)
            text += std::string("Winner: Response ") + (expected == Winner::A ? "A" : "B");
        try {
            Verdict v = parse_verdict(text);
            if (plant) {
                require(v.winner == expected, "planted verdict must parse to its winner");
                ++planted;
            }
        } catch (const ParseError& e) {
            require(e.kind() == ParseError::Kind::VerdictMissing,
                    "only VerdictMissing may escape");
            require(!plant, "planted verdict must not be missed");
        }
    }
    require(planted >= 3000, "enough planted verdicts exercised");
}

// --------------------------------------------------------------------------
// 7. Swap-map soundness (exhaustive)
// --------------------------------------------------------------------------

void criterion_swap() {
    for (Winner gold : {Winner::A, Winner::B}) {
        for (Winner presented : {Winner::A, Winner::B}) {
            bool as_given_correct = map_winner(presented, false) == gold;
            require(as_given_correct == (presented == gold), "as-given identity");
            // Swapped presentation: gold sits in the other slot; judging the
            // swapped record directly and mapping back must agree.
            bool direct_on_swapped_record = presented == other(gold);
            bool mapped_back_correct = map_winner(presented, true) == gold;
            require(direct_on_swapped_record == mapped_back_correct, "swap soundness");
        }
    }
}

// --------------------------------------------------------------------------
// 8. SFT export round-trip and training-config defaults
// --------------------------------------------------------------------------

void criterion_sft_export() {
    rf_test::TempDir tmp;
    std::string mock_dir = (rf_test::fixtures_dir() / "mock").string();
    std::string base = " --workdir " + (tmp.path / "work").string() + " --mock " + mock_dir + " -q";
    require(run_cli("profile -i " + (rf_test::fixtures_dir() / "pairs_20.jsonl").string() +
                        " -o " + (tmp.path / "profiled.jsonl").string() + base,
                    tmp.path, "profile") == 0,
            "profile step");
    require(run_cli("synthesize -i " + (tmp.path / "profiled.jsonl").string() + " -o " +
                        (tmp.path / "rubric.jsonl").string() + base,
                    tmp.path, "synthesize") == 0,
            "synthesize step");
    require(run_cli("build-judge-data -i " + (tmp.path / "rubric.jsonl").string() + " -o " +
                        (tmp.path / "judge.jsonl").string() + base,
                    tmp.path, "judge-data") == 0,
            "build-judge-data step");
    require(run_cli("export-sft -i " + (tmp.path / "rubric.jsonl").string() +
                        " --component generator -o " + (tmp.path / "gen").string() + base,
                    tmp.path, "export-gen") == 0,
            "generator export");
    require(run_cli("export-sft -i " + (tmp.path / "judge.jsonl").string() +
                        " --component judge -o " + (tmp.path / "jd").string() + base,
                    tmp.path, "export-judge") == 0,
            "judge export");

    auto sources = read_jsonl(tmp.path / "rubric.jsonl");
    auto gen_rows = read_jsonl(tmp.path / "gen.jsonl");
    require(!gen_rows.empty() && gen_rows.size() == sources.size(), "generator rows exported");
    for (size_t i = 0; i < gen_rows.size(); ++i) {
        RubricSet exported =
            parse_rubric(gen_rows[i]["messages"][2]["content"].get<std::string>());
        RubricSet source = rubric_record_from_json(sources[i]).rubric;
        require(exported == source, "generator assistant reparses to the source rubric");
    }
    auto judge_rows = read_jsonl(tmp.path / "jd.jsonl");
    require(!judge_rows.empty(), "judge rows exported");
    for (const auto& row : judge_rows) {
        std::string assistant = row["messages"][2]["content"].get<std::string>();
        Verdict v = parse_verdict(assistant);
        require(assistant.size() >= 18 &&
                    (assistant.substr(assistant.size() - 18) ==
                         std::string("Winner: Response ") + std::string(to_string(v.winner))),
                "judge assistant ends with a valid Winner line");
    }

    auto gen_config = nlohmann::json::parse(rf_test::slurp(tmp.path / "gen.train_config.json"));
    require(gen_config["epochs"] == 1 && gen_config["max_length"] == 25000 &&
                gen_config["batch_size"] == 128 && gen_config["optimizer_name"] == "adamw" &&
                gen_config["learning_rate"] == 5e-5 && gen_config["warmup_ratio"] == 0.05,
            "generator training config matches the published defaults");
    auto judge_config = nlohmann::json::parse(rf_test::slurp(tmp.path / "jd.train_config.json"));
    require(judge_config["epochs"] == 2 && judge_config["max_length"] == 25000 &&
                judge_config["batch_size"] == 64 && judge_config["optimizer_name"] == "adamw" &&
                judge_config["learning_rate"] == 5e-5 && judge_config["warmup_ratio"] == 0.05,
            "judge training config matches the published defaults");
}

// --------------------------------------------------------------------------
// 9. Subsample inclusion and mask identity
// --------------------------------------------------------------------------

void criterion_subsample_mask() {
    rf_test::TempDir tmp;
    std::vector<std::string> lines;
    for (int i = 0; i < 3000; ++i)
        lines.push_back(R"({"id":"row-)" + std::to_string(i) + R"("})");
    write_lines(tmp.path / "data.jsonl", lines);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto small = tmp.path / ("s" + std::to_string(seed) + ".jsonl");
        auto large = tmp.path / ("l" + std::to_string(seed) + ".jsonl");
        subsample(tmp.path / "data.jsonl", small, 1000, seed);
        subsample(tmp.path / "data.jsonl", large, 3000, seed);
        std::set<std::string> small_ids, large_ids;
        for (const auto& row : read_jsonl(small)) small_ids.insert(row["id"].get<std::string>());
        for (const auto& row : read_jsonl(large)) large_ids.insert(row["id"].get<std::string>());
        for (const auto& id : small_ids)
            require(large_ids.count(id) == 1,
                    "seed " + std::to_string(seed) + ": 1000-subset included in 3000-subset");
    }

    // mask k=0 is the identity, byte for byte.
    std::vector<ordered_json> rubric_rows;
    for (int i = 0; i < 5; ++i) {
        RubricRecord rec;
        rec.pair = rf_test::make_pair("rec-" + std::to_string(i));
        rec.rubric.instruction_id = rec.pair.id;
        for (int r = 0; r < 4; ++r)
            rec.rubric.hard_rules.push_back({"rule_" + std::to_string(r + 1), RuleType::Must,
                                             "criterion", "test", "why", std::nullopt});
        rubric_rows.push_back(rubric_record_to_json(rec));
    }
    write_jsonl(tmp.path / "rubric.jsonl", rubric_rows);
    mask_rubrics(tmp.path / "rubric.jsonl", tmp.path / "masked.jsonl",
                 MaskSpec{0, 7, MaskScope::HardRulesOnly});
    require(rf_test::slurp(tmp.path / "masked.jsonl") == rf_test::slurp(tmp.path / "rubric.jsonl"),
            "mask with k=0 is the identity");
}

}  // namespace

int main() {
    std::cout << "acceptance suite\n================\n";
    criterion(1, "aggregation fidelity (macro means and cross-benchmark average)",
              criterion_aggregation);
    criterion(2, "schema fidelity (worked profiling example, byte-exact fields)",
              criterion_schema);
    criterion(3, "filter oracle equivalence on a 200-record scripted corpus",
              criterion_filter_oracle);
    criterion(4, "end-to-end determinism over the 20-pair fixture", criterion_determinism);
    criterion(5, "perturbation-report arithmetic (Del-k deltas)", criterion_perturbation);
    criterion(6, "verdict-parser totality over 12k fuzz inputs", criterion_verdict_fuzz);
    criterion(7, "swap-map soundness (exhaustive)", criterion_swap);
    criterion(8, "SFT export round-trip and training-config defaults", criterion_sft_export);
    criterion(9, "subsample inclusion (seeds 1..10) and mask k=0 identity",
              criterion_subsample_mask);
    if (failures == 0) {
        std::cout << "all 9 criteria passed\n";
        return 0;
    }
    std::cout << failures << " criteria failed\n";
    return 1;
}
