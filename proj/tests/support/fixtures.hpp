#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sketchsearch/graph_environment.hpp"
#include "sketchsearch/policy.hpp"
#include "sketchsearch/search.hpp"
#include "sketchsearch/synthetic.hpp"

namespace fixtures {

using namespace sketchsearch;

// Root R offers two sketches. The better scored one rests on the false
// conjecture "fc", whose goal nothing proves; the other rests on "c",
// proved by `by arith`.
struct Walkthrough {
    GraphEnvironment env;
    TablePolicy policy;
    std::string theorem = "walkthrough";
};

inline std::unique_ptr<Walkthrough> make_walkthrough() {
    auto w = std::make_unique<Walkthrough>();
    auto& g = w->env;
    g.add_state("R", 1, false, "goal R");
    g.add_state("A", 1, false, "goal R assuming fc");
    g.add_state("B", 1, false, "goal R assuming c");
    g.add_state("FC", 2, false, "goal fc");
    g.add_state("C", 2, false, "goal c");
    g.add_state("C_open", 2, false, "goal c inline");
    g.add_state("done_A", 1, true, "no goals (A)");
    g.add_state("done_B", 1, true, "no goals");
    g.add_state("done_C", 1, true, "no goals (c)");
    g.add_theorem(w->theorem, "R");
    g.add_step("R", "have \"fc\" sorry", {"A", 0.0, "FC"});
    g.add_step("R", "have \"c\" sorry", {"B", 0.0, "C"});
    g.add_step("R", "have \"c\"", {"C_open", 0.0, ""});
    g.add_step("C_open", "by arith", {"B", 0.0, ""});
    g.add_step("A", "by auto", {"done_A", 0.0, ""});
    g.add_step("B", "by auto", {"done_B", 0.0, ""});
    g.add_step("C", "by arith", {"done_C", 0.0, ""});

    auto& p = w->policy;
    p.set("goal R", {{"have \"fc\" sorry", -0.1}, {"have \"c\" sorry", -0.7}});
    p.set("goal R assuming fc", {{"by auto", -0.05}});
    p.set("goal R assuming c", {{"by auto", -0.05}});
    p.set("goal fc", {{"by simp", -0.2}});
    p.set("goal c", {{"by arith", -0.1}});
    return w;
}

// A level-1 chain of `n` steps of `cost` each ending in a done state, with a
// policy that proposes exactly the next step.
struct Chain {
    GraphEnvironment env;
    TablePolicy policy;
    std::string theorem = "chain";
};

inline void add_chain(GraphEnvironment& g, TablePolicy& p, const std::string& prefix, int level, int n, double cost,
                      bool closes) {
    for (int i = 0; i <= n; ++i) {
        const bool last = i == n;
        g.add_state(prefix + std::to_string(i), level, last && closes,
                    last && closes ? "no goals " + prefix : prefix + " step " + std::to_string(i));
    }
    for (int i = 0; i < n; ++i) {
        const std::string step = "apply (" + prefix + "_" + std::to_string(i) + ")";
        g.add_step(prefix + std::to_string(i), step, {prefix + std::to_string(i + 1), cost, ""});
        p.set(prefix + " step " + std::to_string(i), {{step, -0.1}});
    }
}

inline std::unique_ptr<Chain> make_chain(int n, double cost, bool closes = true) {
    auto c = std::make_unique<Chain>();
    add_chain(c->env, c->policy, "s", 1, n, cost, closes);
    c->env.add_theorem(c->theorem, "s0");
    return c;
}

// Compact view of the level and status events of a trace.
inline std::vector<std::string> level_story(const Trace& trace) {
    std::vector<std::string> out;
    for (const auto& ev : trace.events()) {
        const std::string kind = ev.at("event");
        if (kind == "enter_level")
            out.push_back("enter " + std::to_string(ev.at("root").get<int>()) + " depth " +
                          std::to_string(ev.at("depth").get<int>()));
        else if (kind == "exit_level")
            out.push_back("exit " + std::to_string(ev.at("root").get<int>()) + " " + ev.at("result").get<std::string>());
        else if (kind == "status_change")
            out.push_back(std::to_string(ev.at("node").get<int>()) + " " + ev.at("from").get<std::string>() + "->" +
                          ev.at("to").get<std::string>());
        else if (kind == "select")
            out.push_back("select " + std::to_string(ev.at("node").get<int>()));
        else if (kind == "terminate")
            out.push_back("terminate " + ev.at("outcome").get<std::string>());
    }
    return out;
}

inline const nlohmann::ordered_json* find_event(const Trace& trace, std::string_view kind, size_t nth = 0) {
    for (const auto& ev : trace.events())
        if (ev.at("event") == kind && nth-- == 0) return &ev;
    return nullptr;
}

}  // namespace fixtures
