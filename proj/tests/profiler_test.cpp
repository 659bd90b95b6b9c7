#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rubric_forge/profiler.hpp"
#include "rubric_forge/prompts.hpp"
#include "rubric_forge/structured.hpp"
#include "test_support.hpp"

using namespace rubric_forge;

namespace {

ProfilerOptions test_options() {
    ProfilerOptions opts;
    opts.model = "teacher";
    opts.workers = 2;
    return opts;
}

}  // namespace

TEST_CASE("profile prompt carries the profiling system prompt verbatim") {
    auto req = render_profile_prompt("Write a brief introduction about Python (no more than 100 characters)",
                                     "a long answer", test_options());
    REQUIRE(req.messages.size() == 2);
    CHECK(req.messages[0].role == Role::System);
    CHECK(req.messages[0].content.find("Diagnosis Dimensions (Criteria Candidates)") !=
          std::string::npos);
    CHECK(req.messages[0].content.find("professional answer quality diagnosis expert") !=
          std::string::npos);
    // Placeholders resolved: no doubled braces survive.
    CHECK(req.messages[0].content.find("{{") == std::string::npos);
    CHECK(req.messages[1].content.find("- Instruction: Write a brief introduction") !=
          std::string::npos);
    CHECK(req.messages[1].content.find("- Answer: a long answer") != std::string::npos);
    CHECK(req.temperature == doctest::Approx(0.7));
}

TEST_CASE("identical inputs render byte-identical requests") {
    auto a = render_profile_prompt("x", "y", test_options());
    auto b = render_profile_prompt("x", "y", test_options());
    CHECK(a.messages[0].content == b.messages[0].content);
    CHECK(a.messages[1].content == b.messages[1].content);
    CHECK(request_hash(a) == request_hash(b));
}

TEST_CASE("fence escaping matches the committed golden snapshot") {
    std::string instruction = "Fix this snippet:\n```python\nprint(1)\n```\nkeep it short";
    std::string answer = "Use:\n````\nprint(2)\n````\ndone";
    auto req = render_profile_prompt(instruction, answer, test_options());

    CHECK(req.messages[1].content.find(prompts::kFenceSentinel) != std::string::npos);
    // No line in the user message starts with a raw fence anymore.
    std::istringstream lines(req.messages[1].content);
    std::string line;
    while (std::getline(lines, line)) CHECK(line.rfind("```", 0) != 0);

    auto golden_path = rf_test::fixtures_dir() / "golden" / "profile_prompt_fenced.txt";
    REQUIRE_MESSAGE(std::filesystem::exists(golden_path),
                    "golden snapshot missing: " << golden_path);
    CHECK(req.messages[1].content == rf_test::slurp(golden_path));
}

TEST_CASE("escape_fences leaves fence-free text untouched") {
    CHECK(prompts::escape_fences("plain text `code` ``two``") == "plain text `code` ``two``");
    CHECK(prompts::escape_fences("```abc```") ==
          std::string(prompts::kFenceSentinel) + "```abc" + std::string(prompts::kFenceSentinel) +
              "```");
}

TEST_CASE("profile_response: worked example over the scripted mock") {
    MockProvider mock;
    mock.add_pattern({"brief introduction about Python", std::nullopt,
                      rf_test::worked_profile_example(), FinishReason::Stop});
    auto result = profile_response(
        mock, "Write a brief introduction about Python (no more than 100 characters)",
        "Python is a high-level programming language created by Guido van Rossum in 1991...",
        test_options());
    CHECK(result.attempts == 1);
    REQUIRE(result.profile.findings.size() == 2);
    CHECK(result.profile.findings[0].criterion == Dimension::Conciseness);
    CHECK(result.profile.findings[0].status == FindingStatus::Fail);
    CHECK(result.profile.findings[0].severity == 3);
    CHECK(result.profile.findings[1].criterion == Dimension::ContentCoverage);
    CHECK(result.profile.findings[1].status == FindingStatus::Pass);
}

TEST_CASE("profile_response: flawless response fixture yields all-pass profile") {
    MockProvider mock;
    mock.add_pattern(
        {".*", std::nullopt,
         R"({"criteria_candidates":["Instruction Following","Completeness"],"findings":[{"criterion":"Instruction Following","status":"pass","severity":0,"claim":"follows the request","evidence":"whole answer","instruction_anchor":"the request"},{"criterion":"Completeness","status":"pass","severity":0,"claim":"answers fully","evidence":"final paragraph","instruction_anchor":"the request"}]})",
         FinishReason::Stop});
    auto result = profile_response(mock, "q", "a perfect answer", test_options());
    for (const auto& f : result.profile.findings) {
        CHECK(f.status == FindingStatus::Pass);
        CHECK(f.severity == 0);
    }
}

TEST_CASE("profile_response: criterion outside the taxonomy fails after repairs") {
    MockProvider mock;
    mock.add_pattern({".*", std::nullopt,
                      R"({"criteria_candidates":["Creativity"],"findings":[]})",
                      FinishReason::Stop});
    ProfilerOptions opts = test_options();
    opts.repair_attempts = 1;
    CHECK_THROWS_AS(profile_response(mock, "q", "a", opts), StructuredOutputFailed);
}

TEST_CASE("strict evidence mode requires substrings of the response") {
    MockProvider mock;
    mock.add_pattern(
        {".*", std::nullopt,
         R"({"criteria_candidates":["Factual Accuracy"],"findings":[{"criterion":"Factual Accuracy","status":"fail","severity":2,"claim":"wrong year","evidence":"founded in 1850","instruction_anchor":"ask for founding year"}]})",
         FinishReason::Stop});
    ProfilerOptions opts = test_options();
    opts.repair_attempts = 0;

    // Default mode accepts location descriptions.
    auto lax = profile_response(mock, "q", "The company was founded in 1900.", opts);
    CHECK(lax.profile.findings.size() == 1);

    opts.strict_evidence = true;
    CHECK_THROWS_AS(profile_response(mock, "q", "The company was founded in 1900.", opts),
                    StructuredOutputFailed);
    auto strict_ok = profile_response(mock, "q", "It was founded in 1850, allegedly.", opts);
    CHECK(strict_ok.profile.findings.size() == 1);
}

TEST_CASE("profile_dataset: happy path keeps order, no skips") {
    MockProvider mock;
    mock.add_pattern({".*", std::nullopt, rf_test::pass_profile_json(), FinishReason::Stop});
    std::vector<PreferencePair> pairs = {rf_test::make_pair("p1"), rf_test::make_pair("p2"),
                                         rf_test::make_pair("p3")};
    auto result = profile_dataset(mock, pairs, test_options());
    REQUIRE(result.rows.size() == 3);
    CHECK(result.skips.empty());
    CHECK(result.rows[0].pair.id == "p1");
    CHECK(result.rows[1].pair.id == "p2");
    CHECK(result.rows[2].pair.id == "p3");
    CHECK(result.rows[0].provenance.attempts_chosen == 1);
    CHECK(mock.call_count() == 6);  // two calls per pair
}

TEST_CASE("profile_dataset: malformed rejected-response fixture skips that pair only") {
    MockProvider mock;
    // p2's rejected answer triggers garbage, and so does its repair prompt;
    // everything else is valid.
    mock.add_pattern({"BROKEN-ANSWER", std::nullopt, "not json at all", FinishReason::Stop});
    mock.add_pattern({"failed validation", std::nullopt, "still not json", FinishReason::Stop});
    mock.add_pattern({".*", std::nullopt, rf_test::pass_profile_json(), FinishReason::Stop});
    std::vector<PreferencePair> pairs = {
        rf_test::make_pair("p1"),
        rf_test::make_pair("p2", "q", "fine answer", "BROKEN-ANSWER marker"),
        rf_test::make_pair("p3")};
    ProfilerOptions opts = test_options();
    opts.repair_attempts = 1;
    auto result = profile_dataset(mock, pairs, opts);
    REQUIRE(result.rows.size() == 2);
    CHECK(result.rows[0].pair.id == "p1");
    CHECK(result.rows[1].pair.id == "p3");
    REQUIRE(result.skips.size() == 1);
    CHECK(result.skips[0].id == "p2");
    CHECK(result.skips[0].stage == "profile_rejected");
    CHECK(result.skips[0].reason == "StructuredOutputFailed");
    CHECK_FALSE(result.skips[0].raw_excerpt.empty());
}

TEST_CASE("profile_dataset: empty input, empty output") {
    MockProvider mock;
    auto result = profile_dataset(mock, {}, test_options());
    CHECK(result.rows.empty());
    CHECK(result.skips.empty());
    CHECK(mock.call_count() == 0);
}

TEST_CASE("profile_dataset: byte-identical duplicate responses are pre-skipped") {
    MockProvider mock;  // no patterns needed: no call should happen
    std::vector<PreferencePair> pairs = {
        rf_test::make_pair("dup", "q", "same text", "same text")};
    auto result = profile_dataset(mock, pairs, test_options());
    CHECK(result.rows.empty());
    REQUIRE(result.skips.size() == 1);
    CHECK(result.skips[0].reason == "DuplicateResponses");
    CHECK(mock.call_count() == 0);
}

TEST_CASE("profile_dataset: order preserved under parallel workers") {
    MockProvider mock;
    mock.set_latency(std::chrono::milliseconds(2));
    mock.add_pattern({".*", std::nullopt, rf_test::pass_profile_json(), FinishReason::Stop});
    std::vector<PreferencePair> pairs;
    for (int i = 0; i < 12; ++i) pairs.push_back(rf_test::make_pair("p" + std::to_string(i)));
    ProfilerOptions opts = test_options();
    opts.workers = 4;
    auto result = profile_dataset(mock, pairs, opts);
    REQUIRE(result.rows.size() == pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) CHECK(result.rows[i].pair.id == pairs[i].id);
}

TEST_CASE("warm cache makes a rerun byte-identical with zero provider calls") {
    rf_test::TempDir tmp;
    auto serialize = [](const ProfileDatasetResult& r) {
        std::string out;
        for (const auto& row : r.rows) out += profiled_pair_to_json(row).dump() + "\n";
        return out;
    };
    std::vector<PreferencePair> pairs = {rf_test::make_pair("p1"), rf_test::make_pair("p2")};

    auto cache_dir = tmp.path / "cache";
    std::string first_bytes, second_bytes;
    {
        auto mock = std::make_unique<MockProvider>();
        mock->add_pattern({".*", std::nullopt, rf_test::pass_profile_json(), FinishReason::Stop});
        CachingProvider caching(std::move(mock), CacheStore(cache_dir));
        first_bytes = serialize(profile_dataset(caching, pairs, test_options()));
    }
    {
        // Fresh provider, no patterns: any miss would throw.
        auto mock = std::make_unique<MockProvider>();
        MockProvider* raw = mock.get();
        CachingProvider caching(std::move(mock), CacheStore(cache_dir));
        second_bytes = serialize(profile_dataset(caching, pairs, test_options()));
        CHECK(raw->call_count() == 0);
        CHECK(caching.hits() == 4);
    }
    CHECK(first_bytes == second_bytes);
}

TEST_CASE("profiled rows satisfy the evidence and taxonomy laws") {
    MockProvider mock;
    mock.add_pattern(
        {".*", std::nullopt,
         R"({"criteria_candidates":["Conciseness","Safety"],"findings":[{"criterion":"Conciseness","status":"fail","severity":1,"claim":"padding","evidence":"second paragraph","instruction_anchor":"be brief"}]})",
         FinishReason::Stop});
    auto result = profile_dataset(mock, {rf_test::make_pair("p1")}, test_options());
    REQUIRE(result.rows.size() == 1);
    for (const Profile* p :
         {&result.rows[0].profile_chosen, &result.rows[0].profile_rejected}) {
        CHECK_FALSE(p->criteria_candidates.empty());
        for (const Finding& f : p->findings) {
            if (f.status == FindingStatus::Fail || f.status == FindingStatus::Partial)
                CHECK_FALSE(f.evidence.empty());
        }
    }
}

TEST_CASE("profiled pair rows round-trip through JSONL") {
    MockProvider mock;
    mock.add_pattern({".*", std::nullopt, rf_test::pass_profile_json(), FinishReason::Stop});
    auto result = profile_dataset(mock, {rf_test::make_pair("p1")}, test_options());
    REQUIRE(result.rows.size() == 1);
    auto j = profiled_pair_to_json(result.rows[0]);
    ProfiledPair back = profiled_pair_from_json(j);
    CHECK(back.pair == result.rows[0].pair);
    CHECK(back.profile_chosen == result.rows[0].profile_chosen);
    CHECK(back.profile_rejected == result.rows[0].profile_rejected);
    CHECK(back.provenance.attempts_chosen == 1);
}
