#include <numeric>

#include "doctest.h"
#include "sketchsearch/error.hpp"
#include "sketchsearch/harness.hpp"

using namespace sketchsearch;

namespace {

SuiteConfig small_config() {
    SuiteConfig c;
    c.seed = 11;
    c.count = 12;
    c.depth = {1, 3};
    c.branching = {2, 4};
    c.sketch_len = {3, 4};
    c.false_conjecture_rate = {0.0, 0.3};
    c.budget.samples_per_expansion = 8;
    c.budget.max_expansions = 64;
    c.noise.truth_top_prob = 0.8;
    return c;
}

}  // namespace

TEST_CASE("config text") {
    SuiteConfig c;
    apply_config_text(c, "# comment\nseed=7\n\nL=2..4\nb=3\ne=16\nengines=baseline\ntruth_top_prob=0.5\n");
    CHECK(c.seed == 7);
    CHECK(c.depth == IntRange{2, 4});
    CHECK(c.branching == IntRange{3, 3});
    CHECK(c.budget.samples_per_expansion == 16);
    CHECK(c.engines == std::vector<EngineKind>{EngineKind::Baseline});
    CHECK(c.noise.truth_top_prob == 0.5);

    SuiteConfig again;
    apply_config_text(again, config_to_text(c));
    CHECK(config_to_text(again) == config_to_text(c));

    CHECK_THROWS_WITH_AS(apply_config_value(c, "bogus", "1"), doctest::Contains("InvalidConfig"), Error);
    CHECK_THROWS_AS(apply_config_value(c, "L", "x"), Error);
    c.depth = {3, 2};
    CHECK_THROWS_AS(validate(c), Error);
    c = SuiteConfig{};
    c.budget.max_expansions = 0;
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("InvalidBudget"), Error);
}

TEST_CASE("manifest generation and round trip") {
    const auto c = small_config();
    const auto m = generate_manifest(c);
    REQUIRE(m.theorems.size() == 12);
    CHECK(generate_manifest(c).theorems == m.theorems);
    for (const auto& id : m.theorems) {
        const auto spec = parse_theorem_id(id);
        CHECK(spec.depth >= 1);
        CHECK(spec.depth <= 3);
        CHECK(spec.sketch_len >= 3);
        CHECK(spec.false_conjecture_rate <= 0.3);
    }
    const auto back = manifest_from_json(manifest_to_json(m));
    CHECK(back.theorems == m.theorems);
    CHECK(back.budget == m.budget);
    CHECK_THROWS_AS(manifest_from_json("{"), Error);
}

TEST_CASE("empty engine set") {
    auto c = small_config();
    c.engines.clear();
    const auto r = run_suite(c);
    CHECK(r.attempts.empty());
    CHECK(r.to_json()["pass_at_1"].is_null());
    CHECK(r.to_csv() == "id,engine,outcome,expansions,wall_time,proof_length\n");
    CHECK_THROWS_WITH_AS(length_stats(r), doctest::Contains("NoProofs"), Error);
}

TEST_CASE("suite report bookkeeping") {
    const auto c = small_config();
    const auto r = run_suite(c);
    CHECK(r.attempts.size() == 24);
    CHECK(r.audit_violations == 0);
    for (const auto& e : r.engines) {
        CHECK(e.attempts == 12);
        CHECK(e.proved + e.failed + e.timeout == e.attempts);
        REQUIRE(e.pass_at_1.has_value());
        CHECK(*e.pass_at_1 == doctest::Approx(double(e.proved) / 12));
    }
    for (const auto& a : r.attempts) {
        CHECK(a.expansions <= c.budget.max_expansions);
        CHECK((a.outcome == Outcome::Proved) == (a.proof_length > 0));
        CHECK(a.proof_length == a.proof.size());
    }
    const auto csv = r.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);

    const auto stats = length_stats(r);
    for (const auto& e : stats.engines) {
        const size_t total = std::accumulate(e.histogram.begin(), e.histogram.end(), size_t{0},
                                             [](size_t s, const auto& kv) { return s + kv.second; });
        CHECK(total == e.proved);
        CHECK(e.proved == r.summary(e.engine)->proved);
    }

    const auto back = report_from_json(r.to_json().dump());
    CHECK(back.to_csv() == csv);
    CHECK(back.to_json().dump() == r.to_json().dump());
}

TEST_CASE("parallelism does not change results") {
    auto c = small_config();
    c.keep_traces = true;
    const auto one = run_suite(c);
    c.parallelism = 4;
    const auto four = run_suite(c);
    CHECK(one.to_json().dump() == four.to_json().dump());
    REQUIRE(one.attempts.size() == four.attempts.size());
    for (size_t i = 0; i < one.attempts.size(); ++i) CHECK(one.attempts[i].trace_jsonl == four.attempts[i].trace_jsonl);
}

TEST_CASE("ground truth length statistics") {
    SuiteConfig c;
    c.seed = 3;
    c.count = 5;
    c.depth = {3, 3};
    c.sketch_len = {4, 4};
    c.noise.truth_top_prob = 1.0;
    c.budget.samples_per_expansion = 8;
    const auto r = run_suite(c);
    CHECK(r.ground_truth.theorems == 5);
    CHECK(r.ground_truth.max_flat_length == 12);
    CHECK(r.ground_truth.mean_flat_length == 12.0);
    CHECK(r.ground_truth.max_sketch_length == 4);
    const auto stats = length_stats(r);
    CHECK(stats.ground_truth.max_flat_length == 12);
}
