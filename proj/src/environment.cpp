#include "sketchsearch/environment.hpp"

#include "sketchsearch/error.hpp"

namespace sketchsearch {

ReplayOutcome replay(ProverEnvironment& env, std::string_view statement, std::span<const std::string> steps,
                     double step_timeout) {
    auto session = env.init_theorem(statement);
    StateReport current = session->root();
    for (size_t i = 0; i < steps.size(); ++i) {
        auto result = session->apply_step(current.id, steps[i], step_timeout);
        if (auto* err = std::get_if<StepError>(&result)) return {false, i, err->message};
        current = std::get<StepSuccess>(result).state;
    }
    if (!current.is_done) return {false, steps.size(), "goals remain after the last step"};
    return {true, std::nullopt, {}};
}

std::vector<StateReport> replay_states(ProverSession& session, std::span<const std::string> steps,
                                       double step_timeout) {
    std::vector<StateReport> states;
    StateReport current = session.root();
    for (size_t i = 0; i < steps.size(); ++i) {
        states.push_back(current);
        auto result = session.apply_step(current.id, steps[i], step_timeout);
        if (auto* err = std::get_if<StepError>(&result))
            throw Error(ErrorKind::MisalignedTruth, "step " + std::to_string(i) + " '" + steps[i] +
                                                        "' rejected: " + err->message);
        current = std::get<StepSuccess>(result).state;
    }
    if (!current.is_done) throw Error(ErrorKind::MisalignedTruth, "proof does not close the goal");
    return states;
}

namespace {

void replay_sketch(ProverSession& session, const SketchSet& set, const SketchLinks& links, size_t s,
                   const StateReport& start, double step_timeout, std::vector<std::vector<StateReport>>& out) {
    const Sketch& sketch = set.sketches[s];
    StateReport current = start;
    for (size_t i = 0; i < sketch.steps.size(); ++i) {
        out[s].push_back(current);
        auto result = session.apply_step(current.id, sketch.steps[i], step_timeout);
        if (auto* err = std::get_if<StepError>(&result))
            throw Error(ErrorKind::MisalignedTruth,
                        "sketch " + std::to_string(s) + " step '" + sketch.steps[i] + "' rejected: " + err->message);
        auto& ok = std::get<StepSuccess>(result);
        const int child = links.child_of_step[s][i];
        if (child >= 0) {
            if (!ok.skipped_goal)
                throw Error(ErrorKind::MisalignedTruth, "sorry step '" + sketch.steps[i] + "' skipped no goal");
            replay_sketch(session, set, links, static_cast<size_t>(child), *ok.skipped_goal, step_timeout, out);
        }
        current = ok.state;
    }
    if (!current.is_done)
        throw Error(ErrorKind::MisalignedTruth, "sketch " + std::to_string(s) + " does not close its goal");
}

}  // namespace

std::vector<std::vector<StateReport>> replay_sketches(ProverEnvironment& env, const SketchSet& set,
                                                      double step_timeout) {
    const SketchLinks links = link_sketches(set.sketches);
    auto session = env.init_theorem(set.source.theorem);
    std::vector<std::vector<StateReport>> out(set.sketches.size());
    replay_sketch(*session, set, links, links.top, session->root(), step_timeout, out);
    return out;
}

}  // namespace sketchsearch
