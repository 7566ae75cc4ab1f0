#pragma once

#include <map>
#include <string>
#include <vector>

#include "sketchsearch/environment.hpp"

namespace sketchsearch {

/// Hand-written state graph. Used for walkthrough fixtures and timing tests
/// where every transition and its cost must be spelled out.
class GraphEnvironment final : public ProverEnvironment {
public:
    struct Transition {
        std::string target;
        double cost = 0.0;
        /// State name of the deferred goal for sorry steps.
        std::string skipped;
    };

    void add_state(const std::string& name, int level, bool done = false, std::string proof_state = {});
    void add_theorem(const std::string& statement, const std::string& root_state);
    void add_step(const std::string& from, const std::string& step, Transition transition);
    void set_rejection_cost(double seconds) { rejection_cost_ = seconds; }

    /// Steps accepted at the state rendered as `proof_state`, in insertion order.
    std::vector<std::string> available_steps(const std::string& proof_state) const;

    std::unique_ptr<ProverSession> init_theorem(std::string_view statement) override;

    struct State {
        std::string proof_state;
        int level = 1;
        bool done = false;
        std::vector<std::pair<std::string, Transition>> steps;
    };

private:
    friend class GraphSession;
    std::map<std::string, State, std::less<>> states_;
    std::map<std::string, std::string, std::less<>> theorems_;
    std::map<std::string, std::string, std::less<>> by_proof_state_;
    double rejection_cost_ = 0.0;
};

}  // namespace sketchsearch
