#include "doctest.h"
#include "sketchsearch/error.hpp"
#include "sketchsearch/sketch.hpp"

using namespace sketchsearch;

namespace {

std::vector<ProofLine> lines(std::initializer_list<std::pair<const char*, int>> l) {
    std::vector<ProofLine> out;
    for (auto& [s, v] : l) out.push_back({s, v});
    return out;
}

}  // namespace

TEST_CASE("single level proof is its own sketch") {
    const auto ls = lines({{"s1", 1}, {"s2", 1}});
    const auto r = extract_proof_sketches(ls, 0);
    REQUIRE(r.sketches.size() == 1);
    CHECK(r.sketches[0].steps == std::vector<std::string>{"s1", "s2"});
    CHECK(r.sketches[0].level == 1);
    CHECK(r.next_index == 2);
}

TEST_CASE("five line example") {
    const auto ls = lines({{"a", 1}, {"b", 1}, {"c", 2}, {"d", 2}, {"e", 1}});
    const auto r = extract_proof_sketches(ls, 0);
    REQUIRE(r.sketches.size() == 2);
    CHECK(r.sketches[0].steps == std::vector<std::string>{"c", "d"});
    CHECK(r.sketches[0].level == 2);
    CHECK(r.sketches[0].target_index == 2);
    CHECK(r.sketches[1].steps == std::vector<std::string>{"a", "b sorry", "e"});
    CHECK(r.sketches[1].level == 1);
    CHECK(r.sketches[1].target_index == 0);
    CHECK(r.next_index == 5);

    const ProofScript script{"T", ls};
    CHECK(flatten_proof(script) == std::vector<std::string>{"a", "b", "c", "d", "e"});
    CHECK(reconstruct(extract_sketches(script)) == script);
}

TEST_CASE("inner call stops at the first shallower line") {
    const auto ls = lines({{"a", 1}, {"b", 1}, {"c", 2}, {"d", 2}, {"e", 1}});
    const auto r = extract_proof_sketches(ls, 2);
    REQUIRE(r.sketches.size() == 1);
    CHECK(r.sketches[0].steps == std::vector<std::string>{"c", "d"});
    CHECK(r.next_index == 4);
}

TEST_CASE("three levels come out deepest first") {
    // Top sketch defers one conjecture whose own proof defers another.
    const auto ls = lines({{"have \"g\"", 1},
                           {"have \"h\"", 2},
                           {"by simp", 3},
                           {"by auto", 2},
                           {"show ?thesis", 1},
                           {"by blast", 2}});
    // Only lines followed by a deeper line carry sorry.
    const auto r = extract_proof_sketches(ls, 0);
    REQUIRE(r.sketches.size() == 4);
    CHECK(r.sketches[0] == Sketch{2, 3, {"by simp"}});
    CHECK(r.sketches[1] == Sketch{1, 2, {"have \"h\" sorry", "by auto"}});
    CHECK(r.sketches[2] == Sketch{5, 2, {"by blast"}});
    CHECK(r.sketches[3] == Sketch{0, 1, {"have \"g\" sorry", "show ?thesis sorry"}});

    const auto chain = lines({{"a", 1}, {"have \"g\"", 1}, {"b", 2}, {"have \"h\"", 2}, {"c", 3}, {"d", 2}, {"e", 1}});
    const auto r2 = extract_proof_sketches(chain, 0);
    REQUIRE(r2.sketches.size() == 3);
    CHECK(r2.sketches[0].steps == std::vector<std::string>{"c"});
    CHECK(r2.sketches[1].steps == std::vector<std::string>{"b", "have \"h\" sorry", "d"});
    CHECK(r2.sketches[2].steps == std::vector<std::string>{"a", "have \"g\" sorry", "e"});
    CHECK(reconstruct(SketchSet{r2.sketches, ProofScript{"T", chain}}) == ProofScript{"T", chain});
}

TEST_CASE("extraction errors") {
    const auto ls = lines({{"a", 1}, {"b", 3}, {"c", 1}});
    CHECK_THROWS_WITH_AS(extract_proof_sketches(ls, 0), doctest::Contains("MalformedLevels"), Error);
    CHECK_THROWS_AS(extract_proof_sketches(lines({{"a", 1}}), 1), Error);
    CHECK_THROWS_WITH_AS(extract_proof_sketches(lines({{"a sorry", 1}}), 0), doctest::Contains("UnexpectedSorry"), Error);
}

TEST_CASE("reconstruct rejects inconsistent sets") {
    SketchSet orphan{{Sketch{0, 1, {"a", "b sorry", "e"}}}, ProofScript{"T", {}}};
    CHECK_THROWS_WITH_AS(reconstruct(orphan), doctest::Contains("OrphanSorry"), Error);
    SketchSet surplus{{Sketch{2, 2, {"c"}}, Sketch{0, 1, {"a", "e"}}}, ProofScript{"T", {}}};
    CHECK_THROWS_WITH_AS(reconstruct(surplus), doctest::Contains("SurplusSketch"), Error);
}

TEST_CASE("training examples") {
    const ProofScript script{"T", lines({{"a", 1}, {"have \"x + 2 = 2x\"", 1}, {"c", 2}, {"d", 1}})};
    const auto set = extract_sketches(script);
    const std::vector<std::vector<std::string>> states{{"g2"}, {"g0", "g1", "g3"}};
    const auto ex = emit_training_examples(set, states);
    REQUIRE(ex.size() == 4);
    CHECK(ex[0] == TrainingExample{"", "g2", "c"});
    CHECK(ex[1] == TrainingExample{"", "g0", "a"});
    CHECK(ex[2] == TrainingExample{"a", "g1", "have \"x + 2 = 2x\" sorry"});
    CHECK(ex[3] == TrainingExample{"a have \"x + 2 = 2x\" sorry", "g3", "d"});
    CHECK(render_training_example(ex[2]) ==
          "INPUT: CONTEXT a GOAL g1 STEP\nOUTPUT: have \"x + 2 = 2x\" sorry");
    CHECK(render_prompt("", "g") == "INPUT: CONTEXT  GOAL g STEP");
    CHECK(training_example_to_jsonl(ex[0]) == "{\"context\":\"\",\"goal\":\"g2\",\"step\":\"c\"}");
    CHECK(sketch_to_jsonl(set.sketches[1]) == "{\"level\":1,\"steps\":[\"a\",\"have \\\"x + 2 = 2x\\\" sorry\",\"d\"]}");
    CHECK_THROWS_WITH_AS(emit_training_examples(set, {{"g2"}, {"g0"}}), doctest::Contains("AlignmentError"), Error);
}

TEST_CASE("sorry helpers") {
    CHECK(has_sorry_suffix("have \"c\" sorry"));
    CHECK_FALSE(has_sorry_suffix("sorry"));
    CHECK_FALSE(has_sorry_suffix("have \"c\"sorry"));
    CHECK(strip_sorry("have \"c\" sorry") == "have \"c\"");
    CHECK(with_sorry("x") == "x sorry");
}
