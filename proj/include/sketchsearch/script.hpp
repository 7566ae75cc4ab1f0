#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sketchsearch {

/// One proof step together with the proof level at which it is issued.
struct ProofLine {
    std::string step;
    int level = 1;

    bool operator==(const ProofLine&) const = default;
};

struct ProofScript {
    std::string theorem;
    std::vector<ProofLine> lines;

    bool operator==(const ProofScript&) const = default;
};

/// Keyword sets driving level inference for plain-text scripts.
///
/// Each opener token in a step leaves one more goal pending, so the steps
/// after it sit one level deeper; each closer token discharges one pending
/// goal. Block openers (`proof`) start a block for the goal that is already
/// pending and leave the level unchanged; the matching `qed` is a closer.
/// Tokens inside double quotes are never keywords.
struct LevelRules {
    std::set<std::string> openers;
    std::set<std::string> closers;
    std::set<std::string> block_openers;

    static LevelRules isar_defaults();
};

/// Throws Error(InvalidLine | MalformedLevels | UnbalancedProof | EmptyScript)
/// when the script breaks a structural invariant.
void validate(const ProofScript& script);

/// Level change a single step contributes under `rules`.
int level_delta(std::string_view step, const LevelRules& rules);

ProofScript parse_script(std::string_view text, const LevelRules& rules = LevelRules::isar_defaults());
std::string serialize_script(const ProofScript& script);

// Annotated form: a `{"theorem": ...}` header object followed by one
// `{"step": ..., "level": ...}` object per line.
ProofScript parse_annotated(std::string_view text);
std::string serialize_annotated(const ProofScript& script);
/// Several annotated scripts back to back; each header starts a new one.
std::vector<ProofScript> parse_annotated_corpus(std::string_view text);

std::string trim(std::string_view s);

}  // namespace sketchsearch
