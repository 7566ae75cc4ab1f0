#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sketchsearch/script.hpp"

namespace sketchsearch {

inline constexpr std::string_view kSorrySuffix = " sorry";

bool has_sorry_suffix(std::string_view step);
std::string strip_sorry(std::string_view step);
std::string with_sorry(std::string_view step);

/// Single-level proof outline: the steps of one proof level, with every
/// deferred deeper block folded into a ` sorry` suffix on the step that
/// introduced it.
struct Sketch {
    size_t target_index = 0;
    int level = 1;
    std::vector<std::string> steps;

    bool operator==(const Sketch&) const = default;
};

/// Sketches in extraction order: every deeper sketch precedes the sketch
/// whose sorry step spawned it, so the top-level sketch is last.
struct SketchSet {
    std::vector<Sketch> sketches;
    ProofScript source;
};

struct ExtractionResult {
    std::vector<Sketch> sketches;
    size_t next_index = 0;
};

/// Recursive sketch extraction starting at `index`. Consumes every line at or
/// below the entry level and returns the sketches in recursion order plus the
/// index of the first line above it (== lines.size() at the end of a proof).
///
/// Errors: IndexOutOfRange, MalformedLevels (a jump of more than +1, or a
/// level below 1), UnexpectedSorry (source step already ends in sorry).
ExtractionResult extract_proof_sketches(std::span<const ProofLine> lines, size_t index);

SketchSet extract_sketches(const ProofScript& script);

std::vector<std::string> flatten_proof(const ProofScript& script);

/// For each sketch, the index of the deeper sketch attached to each of its
/// steps (-1 for steps without a sorry suffix), plus the top-level sketch.
struct SketchLinks {
    std::vector<std::vector<int>> child_of_step;
    size_t top = 0;
};

/// Recovers the sorry-to-sketch correspondence from extraction order alone.
/// Errors: OrphanSorry, SurplusSketch, MalformedLevels.
SketchLinks link_sketches(std::span<const Sketch> sketches);

/// Splices every deeper sketch back in place of its sorry suffix.
ProofScript reconstruct(const SketchSet& set);

struct TrainingExample {
    std::string context;
    std::string goal;
    std::string step;

    bool operator==(const TrainingExample&) const = default;
};

/// One example per sketch step. `states[s][i]` is the proof state before
/// step i of sketch s; the context is the preceding steps of the same
/// sketch joined by single spaces. Error: AlignmentError.
std::vector<TrainingExample> emit_training_examples(const SketchSet& set,
                                                    const std::vector<std::vector<std::string>>& states);

std::string join_context(std::span<const std::string> steps);

/// `INPUT: CONTEXT <context> GOAL <goal> STEP`
std::string render_prompt(std::string_view context, std::string_view goal);

/// The prompt line followed by `OUTPUT: <step>`.
std::string render_training_example(const TrainingExample& example);

std::string sketch_to_jsonl(const Sketch& sketch);
std::string training_example_to_jsonl(const TrainingExample& example);

}  // namespace sketchsearch
