#include "doctest.h"
#include "fixtures.hpp"
#include "sketchsearch/audit.hpp"
#include "sketchsearch/error.hpp"
#include "sketchsearch/synthetic_policy.hpp"

using namespace sketchsearch;

namespace {

StateReport st(StateId id, bool done = false) { return StateReport{id, "s" + std::to_string(id), 1, done}; }

}  // namespace

TEST_CASE("select_node orders by score then insertion") {
    SearchTree tree;
    const NodeId root = tree.add_root(st(0));
    tree.node(root).expanded = true;
    LevelSearch level;
    level.root = root;
    const NodeId a = tree.edge(tree.add_child(root, "a", -0.5, st(1))).child;
    const NodeId b = tree.edge(tree.add_child(root, "b", -1.2, st(2))).child;
    const NodeId c = tree.edge(tree.add_child(root, "c", -0.1, st(3))).child;
    for (NodeId n : {a, b, c}) level.frontier.push(n, tree.node(n).score);
    CHECK(select_node(tree, level) == c);

    LevelSearch tie;
    tie.root = root;
    const NodeId n1 = tree.edge(tree.add_child(root, "n1", -0.3, st(4))).child;
    const NodeId n2 = tree.edge(tree.add_child(root, "n2", -0.3, st(5))).child;
    tie.frontier.push(n1, -0.3);
    tie.frontier.push(n2, -0.3);
    CHECK(select_node(tree, tie) == n1);
    CHECK(select_node(tree, tie) == n2);
    CHECK_THROWS_WITH_AS(select_node(tree, tie), doctest::Contains("FrontierEmpty"), Error);
}

TEST_CASE("sub-roots are never selected by the parent level") {
    SearchTree tree;
    const NodeId root = tree.add_root(st(0));
    tree.node(root).expanded = true;
    const EdgeId e = tree.add_child(root, "have \"c\" sorry", -0.2, st(1), st(2));
    const NodeId sub = tree.edge(e).sub_root;
    CHECK(tree.node(sub).score == 0.0);
    CHECK(tree.node(sub).level_depth == 2);
    CHECK(tree.node(sub).is_sub_root);
    CHECK(tree.parent_of(sub) == root);
    LevelSearch level;
    level.root = root;
    level.frontier.push(sub, 0.0);
    CHECK_FALSE(has_selectable(tree, level));
    CHECK_THROWS_AS(select_node(tree, level), Error);
    LevelSearch own;
    own.root = sub;
    own.depth = 2;
    own.frontier.push(sub, 0.0);
    CHECK(select_node(tree, own) == sub);
}

TEST_CASE("status propagation") {
    SearchTree tree;
    const NodeId r = tree.add_root(st(0));
    tree.node(r).expanded = true;
    const EdgeId es = tree.add_child(r, "have \"c\" sorry", -0.1, st(1), st(2));
    const NodeId a = tree.edge(es).child;
    const NodeId sub = tree.edge(es).sub_root;
    const EdgeId eb = tree.add_child(r, "apply x", -0.5, st(3));
    const NodeId b = tree.edge(eb).child;

    // A proved child behind an unresolved sorry makes the path HALF_PROVED.
    tree.node(a).expanded = true;
    const NodeId leaf = tree.edge(tree.add_child(a, "by auto", -0.1, st(4, true))).child;
    CHECK(tree.node(leaf).status == NodeStatus::Proved);
    auto changes = tree.apply_status_update(a);
    CHECK(changes == std::vector<StatusChange>{{a, NodeStatus::Open, NodeStatus::Proved},
                                               {r, NodeStatus::Open, NodeStatus::HalfProved}});
    CHECK(tree.edge_state(es) == EdgeState::Live);
    const auto path = tree.proved_sketch_path(r);
    CHECK(path == std::vector<EdgeId>{es});
    CHECK(tree.find_last_unproved_sorry_edge(path) == es);

    // Failure of the deferred goal reverts the root to OPEN.
    tree.force_status(sub, NodeStatus::Failed);
    changes = tree.apply_status_update(r);
    CHECK(changes == std::vector<StatusChange>{{r, NodeStatus::HalfProved, NodeStatus::Open}});
    CHECK(tree.edge_state(es) == EdgeState::Dead);
    CHECK(tree.is_settled(leaf));
    CHECK_FALSE(tree.is_settled(b));

    // FAILED never moves again.
    CHECK_FALSE(tree.force_status(sub, NodeStatus::Open).has_value());

    // The other branch dies: every child dead means FAILED.
    tree.node(b).expanded = true;
    changes = tree.apply_status_update(b);
    CHECK(changes == std::vector<StatusChange>{{b, NodeStatus::Open, NodeStatus::Failed},
                                               {r, NodeStatus::Open, NodeStatus::Failed}});
    CHECK_THROWS_WITH_AS(tree.extract_final_proof(r), doctest::Contains("DanglingSorry"), Error);
}

TEST_CASE("find_last_unproved_sorry_edge") {
    // Path of six edges with sorry edges at positions 2 and 5.
    SearchTree tree;
    NodeId n = tree.add_root(st(0));
    std::vector<EdgeId> path;
    std::vector<NodeId> subs;
    for (int i = 1; i <= 6; ++i) {
        tree.node(n).expanded = true;
        const bool sorry = i == 2 || i == 5;
        const EdgeId e = sorry ? tree.add_child(n, "have \"x\" sorry", -0.1, st(10 * i), st(10 * i + 1))
                               : tree.add_child(n, "apply y", -0.1, st(10 * i), std::nullopt);
        if (sorry) subs.push_back(tree.edge(e).sub_root);
        path.push_back(e);
        n = tree.edge(e).child;
    }
    CHECK(tree.find_last_unproved_sorry_edge(path) == path[4]);
    tree.node(subs[1]).status = NodeStatus::Proved;
    CHECK(tree.find_last_unproved_sorry_edge(path) == path[1]);
    tree.node(subs[0]).status = NodeStatus::Proved;
    CHECK_THROWS_WITH_AS(tree.find_last_unproved_sorry_edge(path), doctest::Contains("NoUnprovedSorry"), Error);
}

TEST_CASE("final proof splices nested sub-proofs") {
    SearchTree tree;
    const NodeId r = tree.add_root(st(0));
    tree.node(r).expanded = true;
    const EdgeId e1 = tree.add_child(r, "s", -0.1, st(1));
    const NodeId n1 = tree.edge(e1).child;
    tree.node(n1).expanded = true;
    const EdgeId es = tree.add_child(n1, "have \"c\" sorry", -0.1, st(2), st(3));
    const NodeId n2 = tree.edge(es).child;
    const NodeId sub = tree.edge(es).sub_root;
    tree.node(n2).expanded = true;
    tree.add_child(n2, "done", -0.1, st(4, true));
    // Inside the deferred goal, another deferred goal.
    tree.node(sub).expanded = true;
    const EdgeId inner = tree.add_child(sub, "have \"d\" sorry", -0.1, st(5), st(6));
    const NodeId m = tree.edge(inner).child;
    const NodeId sub2 = tree.edge(inner).sub_root;
    tree.node(m).expanded = true;
    tree.add_child(m, "p", -0.1, st(7, true));
    tree.node(sub2).expanded = true;
    tree.add_child(sub2, "q", -0.1, st(8, true));
    for (NodeId x : {n2, m, sub2}) tree.apply_status_update(x);
    CHECK(tree.node(r).status == NodeStatus::Proved);
    CHECK(tree.extract_final_proof(r) == std::vector<std::string>{"s", "have \"c\"", "have \"d\"", "q", "p", "done"});
}

TEST_CASE("walkthrough: false conjecture first, then the true sketch") {
    auto w = fixtures::make_walkthrough();
    SearchOptions opts;
    const auto result = recursive_bfs(w->theorem, w->env, w->policy, opts);
    REQUIRE(result.outcome == Outcome::Proved);
    CHECK(*result.proof == std::vector<std::string>{"have \"c\"", "by arith", "by auto"});
    CHECK(replay(w->env, w->theorem, *result.proof).proved);
    // Node ids: 0 root, 1 A, 2 fc sub-root, 3 B, 4 c sub-root, 5 and 6 done leaves.
    const auto story = fixtures::level_story(result.trace);
    const std::vector<std::string> want{"enter 0 depth 1",
                                        "select 0",
                                        "select 1",
                                        "1 OPEN->PROVED",
                                        "0 OPEN->HALF_PROVED",
                                        "enter 2 depth 2",
                                        "select 2",
                                        "2 OPEN->FAILED",
                                        "0 HALF_PROVED->OPEN",
                                        "exit 2 FAILED",
                                        "select 3",
                                        "3 OPEN->PROVED",
                                        "0 OPEN->HALF_PROVED",
                                        "enter 4 depth 2",
                                        "select 4",
                                        "4 OPEN->PROVED",
                                        "0 HALF_PROVED->PROVED",
                                        "exit 4 PROVED",
                                        "exit 0 PROVED",
                                        "terminate PROVED"};
    CHECK(story == want);
    CHECK(audit_trace(result.trace, &w->env, w->theorem).ok());
    CHECK(result.stats.max_level_depth == 2);
}

TEST_CASE("baseline rejects sorry candidates before the prover sees them") {
    auto w = fixtures::make_walkthrough();
    const auto result = baseline_bfs(w->theorem, w->env, w->policy, SearchOptions{});
    CHECK(result.outcome == Outcome::Failed);
    const auto* expand = fixtures::find_event(result.trace, "expand");
    REQUIRE(expand);
    for (const auto& c : expand->at("candidates")) CHECK(c.at("result") == "sorry_disabled");
    CHECK(audit_trace(result.trace).ok());
}

TEST_CASE("recursion depth 1 cannot resolve any sorry") {
    auto w = fixtures::make_walkthrough();
    SearchOptions opts;
    opts.budget.max_recursion_depth = 1;
    const auto result = recursive_bfs(w->theorem, w->env, w->policy, opts);
    CHECK(result.outcome == Outcome::Failed);
    CHECK(fixtures::find_event(result.trace, "enter_level", 1) == nullptr);
}

TEST_CASE("all candidates rejected means FAILED") {
    GraphEnvironment g;
    g.add_state("r", 1, false, "goal");
    g.add_theorem("t", "r");
    TablePolicy p;
    p.set("goal", {{"a", -0.1}, {"b", -0.2}});
    const auto result = recursive_bfs("t", g, p, SearchOptions{});
    CHECK(result.outcome == Outcome::Failed);
    CHECK(result.stats.expansions == 1);
    CHECK(fixtures::level_story(result.trace) ==
          std::vector<std::string>{"enter 0 depth 1", "select 0", "0 OPEN->FAILED", "exit 0 FAILED", "terminate FAILED"});
}

TEST_CASE("duplicate proposals are applied once") {
    GraphEnvironment g;
    g.add_state("r", 1, false, "goal");
    g.add_state("x", 1, false, "x");
    g.add_theorem("t", "r");
    g.add_step("r", "a", {"x", 0.0, ""});
    TablePolicy p;
    p.set("goal", {{"a", -0.1}, {"a", -0.2}, {"b", -0.3}, {"a", -0.4}});
    const auto result = recursive_bfs("t", g, p, SearchOptions{});
    const auto* expand = fixtures::find_event(result.trace, "expand");
    REQUIRE(expand);
    CHECK(expand->at("candidates").size() == 2);
}

TEST_CASE("lost environment aborts the search") {
    class Flaky final : public ProverEnvironment {
    public:
        std::unique_ptr<ProverSession> init_theorem(std::string_view) override {
            class S final : public ProverSession {
            public:
                const StateReport& root() const override { return root_; }
                StepResult apply_step(StateId, std::string_view, double) override {
                    throw Error(ErrorKind::EnvironmentDown, "prover crashed");
                }
                StateReport root_{0, "goal", 1, false};
            };
            return std::make_unique<S>();
        }
    } env;
    TablePolicy p;
    p.set("goal", {{"a", -0.1}});
    const auto result = recursive_bfs("t", env, p, SearchOptions{});
    CHECK(result.outcome == Outcome::Failed);
    CHECK(result.abort_reason.find("prover crashed") != std::string::npos);
    CHECK(audit_trace(result.trace).ok());
}

TEST_CASE("policy errors abort the search") {
    GraphEnvironment g;
    g.add_state("r", 1, false, "goal");
    g.add_theorem("t", "r");
    TablePolicy p;
    p.set("goal", {{"a", 0.3}});
    const auto result = baseline_bfs("t", g, p, SearchOptions{});
    CHECK(result.outcome == Outcome::Failed);
    CHECK(result.abort_reason.find("PolicyError") != std::string::npos);
}

TEST_CASE("oracle replay on a single-level theorem") {
    SyntheticEnvironment env;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const auto id = format_theorem_id(SyntheticTheoremSpec{seed, 1, 4, 5, 0.0, 2});
        const auto world = env.world(id);
        const auto truth = flatten_proof(world->ground_truth());
        auto rp = synthetic_oracle_policy(env, world, TrainingView::Recursive, {}, seed);
        auto bp = synthetic_oracle_policy(env, world, TrainingView::Flat, {}, seed);
        SearchOptions opts;
        opts.budget.samples_per_expansion = 1;
        const auto r = recursive_bfs(id, env, *rp, opts);
        const auto b = baseline_bfs(id, env, *bp, opts);
        REQUIRE(r.outcome == Outcome::Proved);
        CHECK(*r.proof == truth);
        CHECK(r.stats.expansions <= static_cast<int>(truth.size()));
        CHECK(b.proof == r.proof);
        CHECK(b.trace.to_jsonl() == r.trace.to_jsonl());
    }
}

TEST_CASE("multi-level oracle search finds the spliced ground truth") {
    SyntheticEnvironment env;
    const std::string id = "syn:seed=31,L=3,b=4,len=4,fcr=0.3,dd=2";
    const auto world = env.world(id);
    auto p = synthetic_oracle_policy(env, world, TrainingView::Recursive, {}, 3);
    SearchOptions opts;
    opts.budget.samples_per_expansion = 8;
    const auto r = recursive_bfs(id, env, *p, opts);
    REQUIRE(r.outcome == Outcome::Proved);
    CHECK(*r.proof == flatten_proof(world->ground_truth()));
    CHECK(r.stats.max_level_depth == 3);
    CHECK(audit_trace(r.trace, &env, id).ok());
}

TEST_CASE("trace jsonl round trip") {
    auto w = fixtures::make_walkthrough();
    const auto result = recursive_bfs(w->theorem, w->env, w->policy, SearchOptions{});
    const std::string text = result.trace.to_jsonl();
    CHECK(Trace::from_jsonl(text).to_jsonl() == text);
    CHECK_THROWS_AS(Trace::from_jsonl("{not json}\n"), Error);
}

TEST_CASE("budget validation") {
    SearchBudget b;
    CHECK_NOTHROW(validate(b));
    CHECK(b.global_timeout == 600);
    CHECK(b.sublevel_timeout == 120);
    CHECK(b.step_timeout == 10);
    CHECK(b.samples_per_expansion == 32);
    CHECK(b.max_expansions == 128);
    CHECK(b.max_recursion_depth == 10);
    b.max_recursion_depth = 0;
    CHECK_THROWS_WITH_AS(validate(b), doctest::Contains("InvalidBudget"), Error);
}
