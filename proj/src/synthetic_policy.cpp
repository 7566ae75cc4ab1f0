#include "sketchsearch/synthetic_policy.hpp"

namespace sketchsearch {

CandidateSource synthetic_wrong_candidates(std::shared_ptr<const SyntheticWorld> world) {
    return [world = std::move(world)](std::string_view proof_state) {
        std::vector<std::string> out;
        const auto key = SyntheticWorld::key_of(proof_state);
        if (!key) return out;
        if (auto fc = world->false_conjecture(*key)) out.push_back(*fc);
        for (auto& d : world->distractor_steps(*key)) out.push_back(std::move(d));
        return out;
    };
}

CandidateSource synthetic_available_steps(std::shared_ptr<const SyntheticWorld> world) {
    return [world = std::move(world)](std::string_view proof_state) {
        const auto key = SyntheticWorld::key_of(proof_state);
        return key ? world->available_steps(*key) : std::vector<std::string>{};
    };
}

OracleTruth synthetic_truth(ProverEnvironment& env, const SyntheticWorld& world, TrainingView view) {
    const ProofScript truth = world.ground_truth();
    if (view == TrainingView::Recursive) return oracle_truth_from_sketches(env, extract_sketches(truth));
    return oracle_truth_from_flat(env, truth.theorem, flatten_proof(truth));
}

std::unique_ptr<Policy> synthetic_oracle_policy(ProverEnvironment& env, std::shared_ptr<const SyntheticWorld> world,
                                                TrainingView view, const OracleNoiseSpec& noise, uint64_t seed) {
    OracleTruth truth = synthetic_truth(env, *world, view);
    return build_oracle_policy(std::move(truth), noise, seed, synthetic_wrong_candidates(std::move(world)));
}

}  // namespace sketchsearch
