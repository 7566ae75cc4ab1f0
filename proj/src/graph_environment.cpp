#include "sketchsearch/graph_environment.hpp"

#include <algorithm>

#include "sketchsearch/error.hpp"

namespace sketchsearch {

void GraphEnvironment::add_state(const std::string& name, int level, bool done, std::string proof_state) {
    if (proof_state.empty()) proof_state = done ? "no goals" : name;
    by_proof_state_[proof_state] = name;
    states_[name] = State{std::move(proof_state), level, done, {}};
}

void GraphEnvironment::add_theorem(const std::string& statement, const std::string& root_state) {
    theorems_[statement] = root_state;
}

void GraphEnvironment::add_step(const std::string& from, const std::string& step, Transition transition) {
    states_.at(from).steps.emplace_back(step, std::move(transition));
}

std::vector<std::string> GraphEnvironment::available_steps(const std::string& proof_state) const {
    std::vector<std::string> out;
    auto it = by_proof_state_.find(proof_state);
    if (it == by_proof_state_.end()) return out;
    for (const auto& [step, _] : states_.at(it->second).steps) out.push_back(step);
    return out;
}

class GraphSession final : public ProverSession {
public:
    GraphSession(const GraphEnvironment& env, const std::string& root_name) : env_(env) {
        root_ = report(root_name);
    }

    const StateReport& root() const override { return root_; }

    StepResult apply_step(StateId state, std::string_view step, double timeout) override {
        if (state >= names_.size()) throw Error(ErrorKind::DeadSession, "unknown state id " + std::to_string(state));
        const auto& node = env_.states_.at(names_[state]);
        for (const auto& [text, transition] : node.steps) {
            if (text != step) continue;
            if (transition.cost >= timeout) return StepError{StepError::Kind::Timeout, "step timed out", timeout};
            StepSuccess ok;
            ok.state = report(transition.target);
            if (!transition.skipped.empty()) ok.skipped_goal = report(transition.skipped);
            ok.cost = transition.cost;
            return ok;
        }
        const double cost = std::min(env_.rejection_cost_, timeout);
        return StepError{StepError::Kind::Rejected, "Failed to apply proof step: " + std::string(step), cost};
    }

private:
    StateReport report(const std::string& name) {
        auto [it, inserted] = ids_.try_emplace(name, names_.size());
        if (inserted) names_.push_back(name);
        const auto& s = env_.states_.at(name);
        return StateReport{it->second, s.proof_state, s.level, s.done};
    }

    const GraphEnvironment& env_;
    std::map<std::string, StateId> ids_;
    std::vector<std::string> names_;
    StateReport root_;
};

std::unique_ptr<ProverSession> GraphEnvironment::init_theorem(std::string_view statement) {
    auto it = theorems_.find(statement);
    if (it == theorems_.end()) throw Error(ErrorKind::UnknownTheorem, std::string(statement));
    return std::make_unique<GraphSession>(*this, it->second);
}

}  // namespace sketchsearch
