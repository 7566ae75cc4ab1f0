#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sketchsearch/sketch.hpp"

namespace sketchsearch {

using StateId = uint64_t;

/// What the prover reports after a step: the goal rendering and the level
/// at which the next step will be issued. `is_done` means every goal of the
/// session's root has been closed.
struct StateReport {
    StateId id = 0;
    std::string proof_state;
    int proof_level = 1;
    bool is_done = false;

    bool operator==(const StateReport&) const = default;
};

struct StepSuccess {
    StateReport state;
    /// Present when the step ended in ` sorry`: the deferred conjecture as a
    /// fresh root one level deeper.
    std::optional<StateReport> skipped_goal;
    double cost = 0.0;
};

struct StepError {
    enum class Kind { Rejected, Timeout };
    Kind kind = Kind::Rejected;
    std::string message;
    double cost = 0.0;
};

using StepResult = std::variant<StepSuccess, StepError>;

inline bool succeeded(const StepResult& r) { return std::holds_alternative<StepSuccess>(r); }

/// One proof attempt. A session is used by a single executor at a time.
class ProverSession {
public:
    virtual ~ProverSession() = default;
    virtual const StateReport& root() const = 0;
    /// Throws Error(DeadSession) for unknown state ids and
    /// Error(EnvironmentDown) when the backing prover is gone.
    virtual StepResult apply_step(StateId state, std::string_view step, double timeout) = 0;
};

class ProverEnvironment {
public:
    virtual ~ProverEnvironment() = default;
    /// Fresh session rooted at the theorem. Errors: UnknownTheorem, SessionLimit.
    virtual std::unique_ptr<ProverSession> init_theorem(std::string_view statement) = 0;
};

struct ReplayOutcome {
    bool proved = false;
    /// First step that failed to apply; steps.size() when every step applied
    /// but goals remain.
    std::optional<size_t> failing_index;
    std::string message;
};

ReplayOutcome replay(ProverEnvironment& env, std::string_view statement, std::span<const std::string> steps,
                     double step_timeout = 10.0);

/// Proof states before each step of a sequential proof. Throws
/// Error(MisalignedTruth) if a step is rejected.
std::vector<StateReport> replay_states(ProverSession& session, std::span<const std::string> steps,
                                       double step_timeout = 10.0);

/// Replays every sketch of `set`, starting the top sketch at the theorem root
/// and each deeper sketch at the goal skipped by its sorry step. Returns the
/// proof state before each step, aligned with `set.sketches`. Throws
/// Error(MisalignedTruth) on any rejection or when a sketch does not close
/// its goal.
std::vector<std::vector<StateReport>> replay_sketches(ProverEnvironment& env, const SketchSet& set,
                                                      double step_timeout = 10.0);

}  // namespace sketchsearch
