#include "doctest.h"
#include "fixtures.hpp"
#include "sketchsearch/audit.hpp"
#include "sketchsearch/error.hpp"
#include "sketchsearch/remote.hpp"
#include "sketchsearch/synthetic_policy.hpp"

using namespace sketchsearch;

namespace {

std::shared_ptr<LineTransport> canned(std::string reply) {
    return std::make_shared<LoopbackTransport>([reply](std::string_view) { return reply; });
}

}  // namespace

TEST_CASE("environment protocol messages") {
    SyntheticEnvironment env;
    EnvironmentService service(env);
    CHECK(*service.handle(R"({"op":"hello","version":1})") == R"({"ok":true,"version":1})");
    CHECK(service.handle(R"({"op":"hello","version":2})")->find("\"ok\":false") != std::string::npos);
    const auto init = nlohmann::json::parse(*service.handle(R"({"op":"init","theorem":"syn:seed=1,L=1,b=2,len=2"})"));
    CHECK(init["ok"] == true);
    CHECK(init["state"]["proof_level"] == 1);
    const auto bad = nlohmann::json::parse(*service.handle(R"({"op":"init","theorem":"nope"})"));
    CHECK(bad["error"] == "UnknownTheorem");
    nlohmann::json apply{{"op", "apply"}, {"session", init["session"]}, {"state", init["state"]["id"]}, {"step", "x"}};
    const auto rej = nlohmann::json::parse(*service.handle(apply.dump()));
    CHECK(rej["ok"] == false);
    CHECK(rej["error"] == "StepRejected");
    apply["session"] = 999;
    CHECK(nlohmann::json::parse(*service.handle(apply.dump()))["error"] == "DeadSession");
    CHECK(service.handle("garbage")->find("ProtocolError") != std::string::npos);
    CHECK_FALSE(service.handle(R"({"op":"close"})").has_value());
}

TEST_CASE("remote environment matches the local one") {
    SyntheticEnvironment local;
    EnvironmentService service(local);
    auto transport = std::make_shared<LoopbackTransport>([&](std::string_view l) { return service.handle(l); });
    RemoteEnvironment remote(transport);

    const std::string id = "syn:seed=5,L=2,b=4,len=4,fcr=0.3,dd=2";
    auto policy_a = synthetic_oracle_policy(local, local.world(id), TrainingView::Recursive, {0.7, 1, 0, true}, 9);
    auto policy_b = synthetic_oracle_policy(local, local.world(id), TrainingView::Recursive, {0.7, 1, 0, true}, 9);
    SearchOptions opts;
    opts.budget.samples_per_expansion = 8;
    const auto a = recursive_bfs(id, local, *policy_a, opts);
    const auto b = recursive_bfs(id, remote, *policy_b, opts);
    CHECK(a.trace.to_jsonl() == b.trace.to_jsonl());
    CHECK(a.outcome == b.outcome);
    CHECK(audit_trace(b.trace, &remote, id).ok());
    CHECK_THROWS_WITH_AS(remote.init_theorem("nope"), doctest::Contains("UnknownTheorem"), Error);
}

TEST_CASE("environment over a child process") {
    auto transport = std::make_shared<ProcessTransport>(std::vector<std::string>{SKETCHSEARCH_CLI, "serve-env"});
    RemoteEnvironment remote(transport);
    SyntheticEnvironment local;
    const std::string id = "syn:seed=2,L=2,b=3,len=3";
    const auto steps = flatten_proof(local.world(id)->ground_truth());
    CHECK(replay(remote, id, steps).proved);
    auto cut = steps;
    cut.pop_back();
    CHECK_FALSE(replay(remote, id, cut).proved);
}

TEST_CASE("a vanished environment surfaces as EnvironmentDown and aborts search") {
    int calls = 0;
    SyntheticEnvironment local;
    EnvironmentService service(local);
    auto transport = std::make_shared<LoopbackTransport>([&](std::string_view l) -> std::optional<std::string> {
        if (++calls > 3) return std::nullopt;
        return service.handle(l);
    });
    RemoteEnvironment remote(transport);
    const std::string id = "syn:seed=5,L=1,b=4,len=4";
    auto policy = synthetic_oracle_policy(local, local.world(id), TrainingView::Flat, {}, 1);
    const auto r = baseline_bfs(id, remote, *policy, SearchOptions{});
    CHECK(r.outcome == Outcome::Failed);
    CHECK(r.abort_reason.find("EnvironmentDown") != std::string::npos);
}

TEST_CASE("remote policy client contract") {
    RemotePolicy two(canned(R"({"steps":[{"text":"by simp","log_prob":-0.1},{"text":"by auto","log_prob":-0.4}]})"));
    CHECK(two.propose_steps("", "g", 4) == std::vector<ScoredStep>{{"by simp", -0.1}, {"by auto", -0.4}});

    RemotePolicy dup(canned(R"({"steps":[{"text":"a","log_prob":-0.1},{"text":"a","log_prob":-0.2},{"text":"b","log_prob":-0.3}]})"));
    CHECK(dup.propose_steps("", "g", 4).size() == 2);
    CHECK(dup.propose_steps("", "g", 1).size() == 1);

    RemotePolicy positive(canned(R"({"steps":[{"text":"a","log_prob":0.5}]})"));
    CHECK_THROWS_WITH_AS(positive.propose_steps("", "g", 4), doctest::Contains("PolicyError"), Error);
    RemotePolicy malformed(canned(R"({"steps":"nope"})"));
    CHECK_THROWS_WITH_AS(malformed.propose_steps("", "g", 4), doctest::Contains("PolicyError"), Error);
    RemotePolicy not_json(canned("<html>"));
    CHECK_THROWS_AS(not_json.propose_steps("", "g", 4), Error);

    std::string seen;
    RemotePolicy spy(std::make_shared<LoopbackTransport>([&](std::string_view l) {
        seen = l;
        return std::optional<std::string>(R"({"steps":[]})");
    }));
    spy.propose_steps("a b", "goal x", 3);
    const auto req = nlohmann::json::parse(seen);
    CHECK(req["context"] == "a b");
    CHECK(req["goal"] == "goal x");
    CHECK(req["n"] == 3);
    CHECK(req["prompt"] == "INPUT: CONTEXT a b GOAL goal x STEP");
}

TEST_CASE("remote policy timeout") {
    auto slow = std::make_shared<ProcessTransport>(std::vector<std::string>{"/bin/sh", "-c", "read x; sleep 5"});
    RemotePolicy p(slow, 0.2);
    CHECK_THROWS_WITH_AS(p.propose_steps("", "g", 2), doctest::Contains("timed out"), Error);
}

TEST_CASE("policy service round trip") {
    SyntheticEnvironment env;
    const std::string id = "syn:seed=3,L=2,b=4,len=4";
    auto local = synthetic_oracle_policy(env, env.world(id), TrainingView::Recursive, {0.6, 1, 0, true}, 4);
    PolicyService service(*local);
    RemotePolicy remote(std::make_shared<LoopbackTransport>([&](std::string_view l) {
        return std::optional<std::string>(service.handle(l));
    }));
    auto session = env.init_theorem(id);
    const auto& ps = session->root().proof_state;
    CHECK(remote.propose_steps("", ps, 8) == local->propose_steps("", ps, 8));

    auto child = std::make_shared<ProcessTransport>(
        std::vector<std::string>{SKETCHSEARCH_CLI, "serve-policy", "--theorem", id, "--seed", "4", "--truth_top_prob", "0.6"});
    RemotePolicy over_pipe(child);
    CHECK(over_pipe.propose_steps("", ps, 8) == local->propose_steps("", ps, 8));
}
