#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sketchsearch/environment.hpp"
#include "sketchsearch/sketch.hpp"

namespace sketchsearch {

struct ScoredStep {
    std::string step;
    double log_prob = 0.0;

    bool operator==(const ScoredStep&) const = default;
};

/// Proposes candidate proof steps for a proof state; stands in for the
/// fine-tuned language model.
class Policy {
public:
    virtual ~Policy() = default;
    /// At most `e` pairwise-distinct candidates. Throws Error(PolicyError).
    virtual std::vector<ScoredStep> propose_steps(std::string_view context, std::string_view proof_state, int e) = 0;
};

/// Drops repeated step texts (first occurrence wins), caps at `e`, and checks
/// that every log-probability is finite and <= 0 (Error(PolicyError)).
std::vector<ScoredStep> normalize_proposals(std::vector<ScoredStep> steps, int e);

enum class TrainingView { Recursive, Flat };

std::string_view to_string(TrainingView view);

/// Ground-truth next step for every proof state visited by replaying the
/// training view of a proof in the environment.
struct OracleTruth {
    TrainingView view = TrainingView::Recursive;
    std::map<std::string, std::string, std::less<>> step_at_state;
};

/// Sorry-merged sketch steps, keyed by the states met when replaying each
/// sketch from its own root. Throws Error(MisalignedTruth).
OracleTruth oracle_truth_from_sketches(ProverEnvironment& env, const SketchSet& sketches);
/// Flattened steps keyed by the states of a sequential replay.
OracleTruth oracle_truth_from_flat(ProverEnvironment& env, std::string_view statement,
                                   const std::vector<std::string>& steps);

struct OracleNoiseSpec {
    /// Probability the truth is ranked first; otherwise each further rank is
    /// taken with the same probability (truncated geometric). In (0, 1].
    double truth_top_prob = 1.0;
    /// Scales how close wrong candidates score to the ones ranked above
    /// them. Larger means flatter scores. > 0.
    double junk_mass = 1.0;
    /// Sorry-suffixed candidates have their log-probability scaled by
    /// (1 - sorry_bias). In [0, 1).
    double sorry_bias = 0.0;
    /// When false the truth is never proposed.
    bool include_truth = true;

    bool operator==(const OracleNoiseSpec&) const = default;
};

void validate(const OracleNoiseSpec& noise);

/// Plausible wrong steps for a proof state, best first.
using CandidateSource = std::function<std::vector<std::string>(std::string_view proof_state)>;

class OraclePolicy final : public Policy {
public:
    OraclePolicy(OracleTruth truth, OracleNoiseSpec noise, uint64_t seed, CandidateSource wrong_candidates = {});

    /// Proposals depend on the proof state and seed only.
    std::vector<ScoredStep> propose_steps(std::string_view context, std::string_view proof_state, int e) override;

    TrainingView view() const { return truth_.view; }

private:
    OracleTruth truth_;
    OracleNoiseSpec noise_;
    uint64_t seed_;
    CandidateSource wrong_candidates_;
};

std::unique_ptr<Policy> build_oracle_policy(OracleTruth truth, OracleNoiseSpec noise, uint64_t seed,
                                            CandidateSource wrong_candidates = {});

/// Proposes the first `e` steps the source lists, in order, with slowly
/// decreasing scores.
class ExhaustivePolicy final : public Policy {
public:
    explicit ExhaustivePolicy(CandidateSource source) : source_(std::move(source)) {}
    std::vector<ScoredStep> propose_steps(std::string_view context, std::string_view proof_state, int e) override;

private:
    CandidateSource source_;
};

/// Removes each candidate of the wrapped policy with probability
/// `drop_probability`, decided by a hash of (seed, proof state, step).
class FilteredPolicy final : public Policy {
public:
    FilteredPolicy(std::shared_ptr<Policy> inner, double drop_probability, uint64_t seed)
        : inner_(std::move(inner)), drop_(drop_probability), seed_(seed) {}
    std::vector<ScoredStep> propose_steps(std::string_view context, std::string_view proof_state, int e) override;

private:
    std::shared_ptr<Policy> inner_;
    double drop_;
    uint64_t seed_;
};

/// Fixed proposals per proof state; unknown states get none.
class TablePolicy final : public Policy {
public:
    void set(const std::string& proof_state, std::vector<ScoredStep> steps) { table_[proof_state] = std::move(steps); }
    std::vector<ScoredStep> propose_steps(std::string_view context, std::string_view proof_state, int e) override;

private:
    std::map<std::string, std::vector<ScoredStep>, std::less<>> table_;
};

}  // namespace sketchsearch
