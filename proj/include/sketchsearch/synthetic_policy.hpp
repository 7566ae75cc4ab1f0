#pragma once

#include <cstdint>
#include <memory>

#include "sketchsearch/policy.hpp"
#include "sketchsearch/synthetic.hpp"

namespace sketchsearch {

/// The false conjecture offered at a state (if any) followed by its
/// distractor steps.
CandidateSource synthetic_wrong_candidates(std::shared_ptr<const SyntheticWorld> world);

/// Every step the world accepts at a state, ground truth first.
CandidateSource synthetic_available_steps(std::shared_ptr<const SyntheticWorld> world);

/// Ground truth of the world in the requested training view, keyed by the
/// states `env` reports while replaying it.
OracleTruth synthetic_truth(ProverEnvironment& env, const SyntheticWorld& world, TrainingView view);

std::unique_ptr<Policy> synthetic_oracle_policy(ProverEnvironment& env, std::shared_ptr<const SyntheticWorld> world,
                                                TrainingView view, const OracleNoiseSpec& noise, uint64_t seed);

}  // namespace sketchsearch
