#include "sketchsearch/script.hpp"

#include <nlohmann/json.hpp>

#include "sketchsearch/error.hpp"

namespace sketchsearch {

using nlohmann::json;

std::string trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    size_t b = 0;
    size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

LevelRules LevelRules::isar_defaults() {
    LevelRules rules;
    rules.openers = {"have", "obtain", "show"};
    rules.closers = {"by", "qed", "done", "sorry"};
    rules.block_openers = {"proof"};
    return rules;
}

namespace {

std::vector<std::string> unquoted_tokens(std::string_view step) {
    std::vector<std::string> tokens;
    std::string current;
    bool quoted = false;
    for (char c : step) {
        if (c == '"') {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
            quoted = !quoted;
            continue;
        }
        if (quoted) continue;
        if (c == ' ' || c == '\t' || c == '(' || c == ')') {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty() && !quoted) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        out.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

}  // namespace

int level_delta(std::string_view step, const LevelRules& rules) {
    int delta = 0;
    for (const auto& tok : unquoted_tokens(step)) {
        if (rules.openers.count(tok)) ++delta;
        else if (rules.closers.count(tok)) --delta;
    }
    return delta;
}

void validate(const ProofScript& script) {
    if (script.lines.empty()) throw Error(ErrorKind::EmptyScript, "script has no proof steps");
    if (trim(script.theorem).empty() || script.theorem.find('\n') != std::string::npos)
        throw Error(ErrorKind::InvalidLine, "theorem statement must be a single non-empty line");
    for (size_t i = 0; i < script.lines.size(); ++i) {
        const auto& line = script.lines[i];
        if (line.step.empty() || line.step != trim(line.step) || line.step.find('\n') != std::string::npos)
            throw Error(ErrorKind::InvalidLine, "step " + std::to_string(i) + " is empty or not trimmed");
        if (line.level < 1) throw Error(ErrorKind::InvalidLine, "step " + std::to_string(i) + " has level < 1");
        if (i > 0) {
            const int d = line.level - script.lines[i - 1].level;
            if (d > 1 || d < -1)
                throw Error(ErrorKind::MalformedLevels,
                            "level jumps by " + std::to_string(d) + " at step " + std::to_string(i));
        }
    }
    if (script.lines.front().level != 1) throw Error(ErrorKind::UnbalancedProof, "first step is not at level 1");
    if (script.lines.back().level != 1) throw Error(ErrorKind::UnbalancedProof, "final step is not at level 1");
}

ProofScript parse_script(std::string_view text, const LevelRules& rules) {
    ProofScript script;
    bool have_theorem = false;
    int depth = 1;
    for (auto raw : split_lines(text)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (!have_theorem) {
            script.theorem = std::move(line);
            have_theorem = true;
            continue;
        }
        if (depth < 1)
            throw Error(ErrorKind::UnbalancedProof, "step after the proof was already closed: " + line);
        const int delta = level_delta(line, rules);
        script.lines.push_back({std::move(line), depth});
        depth += delta;
    }
    if (!have_theorem || script.lines.empty()) throw Error(ErrorKind::EmptyScript, "no theorem statement or steps");
    if (depth != 0)
        throw Error(ErrorKind::UnbalancedProof, "levels never return to 1 (" + std::to_string(depth) +
                                                    " goal(s) still pending)");
    validate(script);
    return script;
}

std::string serialize_script(const ProofScript& script) {
    std::string out = script.theorem;
    out.push_back('\n');
    for (const auto& line : script.lines) {
        out.append(2 * static_cast<size_t>(line.level - 1), ' ');
        out += line.step;
        out.push_back('\n');
    }
    return out;
}

ProofScript parse_annotated(std::string_view text) {
    ProofScript script;
    bool have_header = false;
    try {
        for (auto raw : split_lines(text)) {
            std::string line = trim(raw);
            if (line.empty()) continue;
            const json obj = json::parse(line);
            if (!have_header) {
                script.theorem = obj.at("theorem").get<std::string>();
                have_header = true;
                continue;
            }
            script.lines.push_back({obj.at("step").get<std::string>(), obj.at("level").get<int>()});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    if (!have_header) throw Error(ErrorKind::EmptyScript, "missing theorem header");
    validate(script);
    return script;
}

std::vector<ProofScript> parse_annotated_corpus(std::string_view text) {
    std::vector<ProofScript> out;
    std::string current;
    for (auto raw : split_lines(text)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        bool header = false;
        try {
            header = json::parse(line).contains("theorem");
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ParseError, e.what());
        }
        if (header && !current.empty()) {
            out.push_back(parse_annotated(current));
            current.clear();
        }
        current += line;
        current.push_back('\n');
    }
    if (!current.empty()) out.push_back(parse_annotated(current));
    return out;
}

std::string serialize_annotated(const ProofScript& script) {
    std::string out = nlohmann::ordered_json{{"theorem", script.theorem}}.dump();
    out.push_back('\n');
    for (const auto& line : script.lines) {
        nlohmann::ordered_json obj;
        obj["step"] = line.step;
        obj["level"] = line.level;
        out += obj.dump();
        out.push_back('\n');
    }
    return out;
}

}  // namespace sketchsearch
