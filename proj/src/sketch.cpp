#include "sketchsearch/sketch.hpp"

#include <nlohmann/json.hpp>

#include "sketchsearch/error.hpp"

namespace sketchsearch {

bool has_sorry_suffix(std::string_view step) {
    return step.size() > kSorrySuffix.size() && step.ends_with(kSorrySuffix);
}

std::string strip_sorry(std::string_view step) {
    if (!has_sorry_suffix(step)) return std::string(step);
    return std::string(step.substr(0, step.size() - kSorrySuffix.size()));
}

std::string with_sorry(std::string_view step) {
    std::string out(step);
    out += kSorrySuffix;
    return out;
}

namespace {

// `lines` carries a trailing sentinel at level 0, so lines[index + 1] is
// always readable while index points at a real line.
ExtractionResult extract_level(const std::vector<ProofLine>& lines, size_t index) {
    ExtractionResult result;
    const int current_level = lines[index].level;
    Sketch current{index, current_level, {}};

    while (lines[index].level >= current_level) {
        const ProofLine& line = lines[index];
        if (line.level > current_level)
            throw Error(ErrorKind::MalformedLevels, "line " + std::to_string(index) + " is above the sketch level");
        const int next_level = lines[index + 1].level;
        if (next_level > current_level + 1)
            throw Error(ErrorKind::MalformedLevels, "level jumps by more than one after line " + std::to_string(index));

        if (next_level > current_level) {
            current.steps.push_back(with_sorry(line.step));
            auto deeper = extract_level(lines, index + 1);
            for (auto& s : deeper.sketches) result.sketches.push_back(std::move(s));
            index = deeper.next_index;
        } else {
            // Same level, or the block ends here; the loop condition stops on
            // the next read in the latter case.
            current.steps.push_back(line.step);
            ++index;
        }
    }

    result.sketches.push_back(std::move(current));
    result.next_index = index;
    return result;
}

}  // namespace

ExtractionResult extract_proof_sketches(std::span<const ProofLine> lines, size_t index) {
    if (index >= lines.size())
        throw Error(ErrorKind::IndexOutOfRange,
                    "index " + std::to_string(index) + " with " + std::to_string(lines.size()) + " lines");
    std::vector<ProofLine> padded;
    padded.reserve(lines.size() + 1);
    for (size_t i = 0; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if (l.level < 1) throw Error(ErrorKind::MalformedLevels, "line " + std::to_string(i) + " has level < 1");
        if (l.step == "sorry" || has_sorry_suffix(l.step))
            throw Error(ErrorKind::UnexpectedSorry, "source line " + std::to_string(i) + " already ends in sorry");
        padded.push_back(l);
    }
    padded.push_back({"", 0});
    return extract_level(padded, index);
}

SketchSet extract_sketches(const ProofScript& script) {
    validate(script);
    auto result = extract_proof_sketches(script.lines, 0);
    return SketchSet{std::move(result.sketches), script};
}

std::vector<std::string> flatten_proof(const ProofScript& script) {
    std::vector<std::string> out;
    out.reserve(script.lines.size());
    for (const auto& line : script.lines) out.push_back(strip_sorry(line.step));
    return out;
}

namespace {

struct Linker {
    std::span<const Sketch> sketches;
    SketchLinks links;

    // Parses the subtree whose root sketch sits at end - 1; returns the index
    // of the first sketch belonging to that subtree.
    size_t parse(size_t end) {
        if (end == 0) throw Error(ErrorKind::OrphanSorry, "sorry step has no deeper sketch");
        const size_t root = end - 1;
        const Sketch& sketch = sketches[root];
        size_t cursor = root;
        for (size_t i = sketch.steps.size(); i-- > 0;) {
            if (!has_sorry_suffix(sketch.steps[i])) continue;
            const size_t child_start = parse(cursor);
            const size_t child = cursor - 1;
            if (sketches[child].level != sketch.level + 1)
                throw Error(ErrorKind::MalformedLevels, "deeper sketch " + std::to_string(child) +
                                                            " is not one level below sketch " + std::to_string(root));
            links.child_of_step[root][i] = static_cast<int>(child);
            cursor = child_start;
        }
        return cursor;
    }
};

}  // namespace

SketchLinks link_sketches(std::span<const Sketch> sketches) {
    if (sketches.empty()) throw Error(ErrorKind::EmptyScript, "no sketches");
    Linker linker{sketches, {}};
    linker.links.child_of_step.resize(sketches.size());
    for (size_t s = 0; s < sketches.size(); ++s) linker.links.child_of_step[s].assign(sketches[s].steps.size(), -1);
    const size_t start = linker.parse(sketches.size());
    if (start != 0)
        throw Error(ErrorKind::SurplusSketch, std::to_string(start) + " sketch(es) not attached to any sorry step");
    linker.links.top = sketches.size() - 1;
    return linker.links;
}

namespace {

void splice(const std::vector<Sketch>& sketches, const SketchLinks& links, size_t s, std::vector<ProofLine>& out) {
    const Sketch& sketch = sketches[s];
    for (size_t i = 0; i < sketch.steps.size(); ++i) {
        const int child = links.child_of_step[s][i];
        if (child < 0) {
            out.push_back({sketch.steps[i], sketch.level});
        } else {
            out.push_back({strip_sorry(sketch.steps[i]), sketch.level});
            splice(sketches, links, static_cast<size_t>(child), out);
        }
    }
}

}  // namespace

ProofScript reconstruct(const SketchSet& set) {
    const SketchLinks links = link_sketches(set.sketches);
    ProofScript script;
    script.theorem = set.source.theorem;
    splice(set.sketches, links, links.top, script.lines);
    return script;
}

std::string join_context(std::span<const std::string> steps) {
    std::string out;
    for (size_t i = 0; i < steps.size(); ++i) {
        if (i) out.push_back(' ');
        out += steps[i];
    }
    return out;
}

std::vector<TrainingExample> emit_training_examples(const SketchSet& set,
                                                    const std::vector<std::vector<std::string>>& states) {
    if (states.size() != set.sketches.size())
        throw Error(ErrorKind::AlignmentError, std::to_string(states.size()) + " state lists for " +
                                                   std::to_string(set.sketches.size()) + " sketches");
    std::vector<TrainingExample> out;
    for (size_t s = 0; s < set.sketches.size(); ++s) {
        const auto& steps = set.sketches[s].steps;
        if (states[s].size() != steps.size())
            throw Error(ErrorKind::AlignmentError, "sketch " + std::to_string(s) + " has " +
                                                       std::to_string(steps.size()) + " steps but " +
                                                       std::to_string(states[s].size()) + " states");
        for (size_t i = 0; i < steps.size(); ++i) {
            out.push_back({join_context(std::span(steps).first(i)), states[s][i], steps[i]});
        }
    }
    return out;
}

std::string render_prompt(std::string_view context, std::string_view goal) {
    std::string out = "INPUT: CONTEXT ";
    out += context;
    out += " GOAL ";
    out += goal;
    out += " STEP";
    return out;
}

std::string render_training_example(const TrainingExample& example) {
    return render_prompt(example.context, example.goal) + "\nOUTPUT: " + example.step;
}

std::string sketch_to_jsonl(const Sketch& sketch) {
    nlohmann::ordered_json obj;
    obj["level"] = sketch.level;
    obj["steps"] = sketch.steps;
    return obj.dump();
}

std::string training_example_to_jsonl(const TrainingExample& example) {
    nlohmann::ordered_json obj;
    obj["context"] = example.context;
    obj["goal"] = example.goal;
    obj["step"] = example.step;
    return obj.dump();
}

}  // namespace sketchsearch
