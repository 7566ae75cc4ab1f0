#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchsearch/policy.hpp"
#include "sketchsearch/search.hpp"
#include "sketchsearch/synthetic.hpp"

namespace sketchsearch {

enum class EngineKind { Recursive, Baseline };

std::string_view to_string(EngineKind engine);
EngineKind parse_engine(std::string_view name);

struct IntRange {
    int lo = 1;
    int hi = 1;
    bool operator==(const IntRange&) const = default;
};

struct RealRange {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const RealRange&) const = default;
};

struct SuiteConfig {
    uint64_t seed = 0;
    int count = 20;
    IntRange depth{1, 1};
    IntRange branching{4, 4};
    IntRange sketch_len{4, 4};
    IntRange distractor_depth{2, 2};
    RealRange false_conjecture_rate{0.0, 0.0};
    SearchBudget budget;
    std::vector<EngineKind> engines{EngineKind::Recursive, EngineKind::Baseline};
    OracleNoiseSpec noise;
    StepCostModel costs;
    int parallelism = 1;
    /// Keep every trace in the report (for determinism checks and dumps).
    bool keep_traces = false;
    /// Replay-check every PROVED outcome while auditing.
    bool audit = true;
};

/// Throws Error(InvalidConfig) / Error(InvalidBudget).
void validate(const SuiteConfig& config);

/// Applies `key=value` lines (blank lines and `#` comments ignored) on top
/// of `config`. Range keys accept `n` or `lo..hi`. Unknown keys throw
/// Error(InvalidConfig).
void apply_config_text(SuiteConfig& config, std::string_view text);
void apply_config_value(SuiteConfig& config, std::string_view key, std::string_view value);
std::string config_to_text(const SuiteConfig& config);

/// The theorems a suite runs, in order, with the budget they run under.
struct SuiteManifest {
    std::vector<std::string> theorems;
    SearchBudget budget;
};

SuiteManifest generate_manifest(const SuiteConfig& config);
std::string manifest_to_json(const SuiteManifest& manifest);
SuiteManifest manifest_from_json(std::string_view text);

struct AttemptRecord {
    size_t index = 0;
    std::string theorem;
    EngineKind engine = EngineKind::Recursive;
    Outcome outcome = Outcome::Failed;
    int expansions = 0;
    /// Seconds on the search clock.
    double wall_time = 0.0;
    size_t proof_length = 0;
    std::vector<std::string> proof;
    std::string abort_reason;
    size_t audit_violations = 0;
    std::vector<std::string> audit_messages;
    std::string trace_jsonl;
};

struct EngineSummary {
    EngineKind engine = EngineKind::Recursive;
    size_t attempts = 0;
    size_t proved = 0;
    size_t failed = 0;
    size_t timeout = 0;
    std::optional<double> pass_at_1;
};

struct GroundTruthStats {
    size_t theorems = 0;
    double mean_flat_length = 0.0;
    size_t max_flat_length = 0;
    double mean_max_sketch_length = 0.0;
    size_t max_sketch_length = 0;
};

struct SuiteReport {
    std::vector<AttemptRecord> attempts;
    std::vector<EngineSummary> engines;
    GroundTruthStats ground_truth;
    size_t audit_violations = 0;

    const EngineSummary* summary(EngineKind engine) const;
    std::string to_csv() const;
    nlohmann::ordered_json to_json() const;
};

/// Runs every engine on every theorem of the manifest (one attempt each)
/// with a fresh session and the engine's policy view. Deterministic given
/// the config regardless of parallelism.
SuiteReport run_suite(const SuiteConfig& config);
SuiteReport run_manifest(const SuiteManifest& manifest, const SuiteConfig& config);

struct EngineLengthStats {
    EngineKind engine = EngineKind::Recursive;
    size_t proved = 0;
    std::map<size_t, size_t> histogram;
    double mean = 0.0;
    size_t max = 0;
};

struct LengthStats {
    std::vector<EngineLengthStats> engines;
    GroundTruthStats ground_truth;
};

/// Proof lengths count every step of the spliced final proof. Throws
/// Error(NoProofs) when nothing was proved.
LengthStats length_stats(const SuiteReport& report);
nlohmann::ordered_json length_stats_to_json(const LengthStats& stats);

/// Reads a report back from its JSON summary (attempt rows included).
SuiteReport report_from_json(std::string_view text);

}  // namespace sketchsearch
