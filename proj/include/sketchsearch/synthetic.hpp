#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchsearch/environment.hpp"
#include "sketchsearch/script.hpp"

namespace sketchsearch {

/// Parameters of a generated theorem. Identified on the wire by
/// `syn:seed=<n>,L=<n>,b=<n>,len=<n>,fcr=<float>,dd=<n>`.
struct SyntheticTheoremSpec {
    uint64_t seed = 0;
    int depth = 1;              // proof levels of the ground truth
    int branching = 4;          // distractor steps per state
    int sketch_len = 4;         // steps per level
    double false_conjecture_rate = 0.0;
    int distractor_depth = 2;   // distractor chains dead-end after this many steps

    bool operator==(const SyntheticTheoremSpec&) const = default;
};

inline constexpr int kMaxSyntheticDepth = 8;
inline constexpr int kMaxSyntheticBranching = 16;
inline constexpr int kMaxSketchLen = 16;
inline constexpr int kMaxDistractorDepth = 8;

/// Throws Error(SpecOutOfRange).
void validate(const SyntheticTheoremSpec& spec);

std::string format_theorem_id(const SyntheticTheoremSpec& spec);
/// Missing fields take the defaults above. Throws Error(UnknownTheorem) for
/// anything that is not a well-formed synthetic id.
SyntheticTheoremSpec parse_theorem_id(std::string_view id);

/// Declared cost of each step application, drawn per (state, step).
struct StepCostModel {
    double min_seconds = 0.05;
    double max_seconds = 0.5;
};

/// The finite proof world behind one synthetic theorem.
///
/// Goal 0 is the theorem; goal i + 1 is the conjecture introduced by the
/// ground-truth sketch of goal i. Each goal's sketch has `sketch_len` steps:
/// plain `apply` steps, at most one `have "cj_.."` conjecture step and a
/// closing `done`. Every state also accepts `branching` distractor steps
/// leading into chains that die after `distractor_depth` steps, and some
/// states accept a false conjecture whose goal has no proof.
///
/// States are addressed by a textual key `<base>|<frames>|<junk>` that is
/// embedded in the rendered proof state, so a proof state string alone
/// identifies the state.
class SyntheticWorld {
public:
    explicit SyntheticWorld(SyntheticTheoremSpec spec, StepCostModel costs = {});

    const SyntheticTheoremSpec& spec() const { return spec_; }
    std::string statement() const { return format_theorem_id(spec_); }
    ProofScript ground_truth() const;

    struct Transition {
        std::string next;
        std::optional<std::string> skipped;
    };

    std::string root_key() const;
    std::optional<Transition> apply(std::string_view key, std::string_view step) const;
    /// Every step `apply` accepts at `key`, in a fixed order.
    std::vector<std::string> available_steps(std::string_view key) const;
    std::vector<std::string> distractor_steps(std::string_view key) const;
    /// Base text (without sorry) of the false conjecture offered at `key`.
    std::optional<std::string> false_conjecture(std::string_view key) const;

    int level(std::string_view key) const;
    bool is_done(std::string_view key) const;
    std::string render(std::string_view key) const;
    double step_cost(std::string_view key, std::string_view step) const;

    /// Recovers the key from a rendered proof state.
    static std::optional<std::string> key_of(std::string_view proof_state);

    const std::vector<std::vector<std::string>>& goal_steps() const { return steps_; }
    std::string goal_name(int goal) const;

private:
    struct Frame {
        bool false_goal = false;
        int goal = 0;
        int progress = 0;
    };
    struct Key {
        int base = 1;
        std::vector<Frame> frames;
        std::vector<int> junk;
    };

    static Key decode(std::string_view key);
    static std::string encode(const Key& key);
    bool offers_false_conjecture(int goal, int progress) const;
    std::string false_goal_name(int goal, int progress) const;
    std::string distractor_step(std::string_view key, int choice) const;

    SyntheticTheoremSpec spec_;
    StepCostModel costs_;
    std::vector<int> conjecture_pos_;
    std::vector<std::vector<std::string>> steps_;
};

/// Environment over generated theorems; any well-formed synthetic id is
/// accepted and its world is built on first use.
class SyntheticEnvironment final : public ProverEnvironment {
public:
    explicit SyntheticEnvironment(StepCostModel costs = {}, size_t max_sessions = 1'000'000);

    std::unique_ptr<ProverSession> init_theorem(std::string_view statement) override;
    std::shared_ptr<const SyntheticWorld> world(std::string_view statement);

private:
    StepCostModel costs_;
    size_t max_sessions_;
    size_t sessions_opened_ = 0;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const SyntheticWorld>, std::less<>> worlds_;
};

/// Builds the world for `spec` together with its ground-truth script.
struct GeneratedTheorem {
    std::string statement;
    ProofScript ground_truth;
    std::shared_ptr<const SyntheticWorld> world;
};

GeneratedTheorem generate_synthetic_theorem(const SyntheticTheoremSpec& spec, StepCostModel costs = {});

}  // namespace sketchsearch
