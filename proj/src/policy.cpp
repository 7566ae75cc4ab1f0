#include "sketchsearch/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "sketchsearch/error.hpp"
#include "sketchsearch/random.hpp"
#include "sketchsearch/script.hpp"

namespace sketchsearch {

std::vector<ScoredStep> normalize_proposals(std::vector<ScoredStep> steps, int e) {
    std::vector<ScoredStep> out;
    std::set<std::string, std::less<>> seen;
    for (auto& s : steps) {
        if (!std::isfinite(s.log_prob) || s.log_prob > 0.0)
            throw Error(ErrorKind::PolicyError, "log_prob " + std::to_string(s.log_prob) + " for '" + s.step + "'");
        if (static_cast<int>(out.size()) >= e) break;
        if (!seen.insert(s.step).second) continue;
        out.push_back(std::move(s));
    }
    return out;
}

std::string_view to_string(TrainingView view) { return view == TrainingView::Recursive ? "recursive" : "flat"; }

namespace {

void record(OracleTruth& truth, const std::string& state, const std::string& step) {
    auto [it, inserted] = truth.step_at_state.emplace(state, step);
    if (!inserted && it->second != step)
        throw Error(ErrorKind::MisalignedTruth, "state '" + state + "' has two ground-truth steps");
}

}  // namespace

OracleTruth oracle_truth_from_sketches(ProverEnvironment& env, const SketchSet& sketches) {
    const auto states = replay_sketches(env, sketches);
    OracleTruth truth{TrainingView::Recursive, {}};
    for (size_t s = 0; s < sketches.sketches.size(); ++s)
        for (size_t i = 0; i < sketches.sketches[s].steps.size(); ++i)
            record(truth, states[s][i].proof_state, sketches.sketches[s].steps[i]);
    return truth;
}

OracleTruth oracle_truth_from_flat(ProverEnvironment& env, std::string_view statement,
                                   const std::vector<std::string>& steps) {
    for (const auto& s : steps)
        if (has_sorry_suffix(s)) throw Error(ErrorKind::MisalignedTruth, "flat proof contains sorry: " + s);
    auto session = env.init_theorem(statement);
    const auto states = replay_states(*session, steps);
    OracleTruth truth{TrainingView::Flat, {}};
    for (size_t i = 0; i < steps.size(); ++i) record(truth, states[i].proof_state, steps[i]);
    return truth;
}

void validate(const OracleNoiseSpec& noise) {
    if (!(noise.truth_top_prob > 0.0 && noise.truth_top_prob <= 1.0))
        throw Error(ErrorKind::InvalidConfig, "truth_top_prob must be in (0, 1]");
    if (!(noise.junk_mass > 0.0)) throw Error(ErrorKind::InvalidConfig, "junk_mass must be > 0");
    if (!(noise.sorry_bias >= 0.0 && noise.sorry_bias < 1.0))
        throw Error(ErrorKind::InvalidConfig, "sorry_bias must be in [0, 1)");
}

OraclePolicy::OraclePolicy(OracleTruth truth, OracleNoiseSpec noise, uint64_t seed, CandidateSource wrong_candidates)
    : truth_(std::move(truth)), noise_(noise), seed_(seed), wrong_candidates_(std::move(wrong_candidates)) {
    validate(noise_);
}

std::vector<ScoredStep> OraclePolicy::propose_steps(std::string_view, std::string_view proof_state, int e) {
    if (e < 1) throw Error(ErrorKind::PolicyError, "e must be >= 1");
    Rng rng(hash_combine(seed_, hash_string(proof_state)));

    std::optional<std::string> truth;
    if (noise_.include_truth) {
        if (auto it = truth_.step_at_state.find(proof_state); it != truth_.step_at_state.end()) truth = it->second;
    }

    // A model trained on sketches states conjectures together with sorry; a
    // model trained on flat proofs never emits sorry.
    const LevelRules rules = LevelRules::isar_defaults();
    std::vector<std::string> wrong;
    std::set<std::string, std::less<>> used;
    if (truth) used.insert(*truth);
    if (wrong_candidates_) {
        for (auto& c : wrong_candidates_(proof_state)) {
            std::string step = strip_sorry(c);
            if (truth_.view == TrainingView::Recursive && level_delta(step, rules) > 0) step = with_sorry(step);
            if (used.insert(step).second) wrong.push_back(std::move(step));
        }
    }

    int truth_rank = -1;
    if (truth) {
        truth_rank = 0;
        while (truth_rank < e - 1 && !rng.bernoulli(noise_.truth_top_prob)) ++truth_rank;
    }

    std::vector<ScoredStep> ranked;
    size_t next_wrong = 0;
    double score = -(0.05 + 0.25 * rng.uniform());
    for (int r = 0; r < e; ++r) {
        std::string step;
        if (r == truth_rank) {
            step = *truth;
        } else if (next_wrong < wrong.size()) {
            step = wrong[next_wrong++];
        } else {
            char buf[32];
            std::snprintf(buf, sizeof buf, "apply (junk_%08llx)", static_cast<unsigned long long>(rng.next() >> 32));
            step = buf;
        }
        if (r > 0) score -= (0.1 + 0.9 * rng.uniform()) / noise_.junk_mass;
        ranked.push_back({std::move(step), score});
    }
    for (auto& s : ranked)
        if (has_sorry_suffix(s.step)) s.log_prob *= (1.0 - noise_.sorry_bias);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ScoredStep& a, const ScoredStep& b) { return a.log_prob > b.log_prob; });
    return ranked;
}

std::unique_ptr<Policy> build_oracle_policy(OracleTruth truth, OracleNoiseSpec noise, uint64_t seed,
                                            CandidateSource wrong_candidates) {
    return std::make_unique<OraclePolicy>(std::move(truth), noise, seed, std::move(wrong_candidates));
}

std::vector<ScoredStep> ExhaustivePolicy::propose_steps(std::string_view, std::string_view proof_state, int e) {
    std::vector<ScoredStep> out;
    for (auto& step : source_(proof_state)) {
        if (static_cast<int>(out.size()) >= e) break;
        out.push_back({std::move(step), -0.01 * static_cast<double>(out.size() + 1)});
    }
    return out;
}

std::vector<ScoredStep> FilteredPolicy::propose_steps(std::string_view context, std::string_view proof_state, int e) {
    auto inner = inner_->propose_steps(context, proof_state, e);
    std::vector<ScoredStep> out;
    const uint64_t state_hash = hash_combine(seed_, hash_string(proof_state));
    for (auto& s : inner)
        if (unit_interval(hash_combine(state_hash, hash_string(s.step))) >= drop_) out.push_back(std::move(s));
    return out;
}

std::vector<ScoredStep> TablePolicy::propose_steps(std::string_view, std::string_view proof_state, int e) {
    auto it = table_.find(proof_state);
    if (it == table_.end()) return {};
    std::vector<ScoredStep> out = it->second;
    if (static_cast<int>(out.size()) > e) out.resize(static_cast<size_t>(e));
    return out;
}

}  // namespace sketchsearch
