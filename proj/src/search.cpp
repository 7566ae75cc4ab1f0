#include "sketchsearch/search.hpp"

#include <algorithm>

#include "sketchsearch/error.hpp"

namespace sketchsearch {

using nlohmann::ordered_json;

std::string_view to_string(NodeStatus status) {
    switch (status) {
        case NodeStatus::Open: return "OPEN";
        case NodeStatus::Failed: return "FAILED";
        case NodeStatus::Proved: return "PROVED";
        case NodeStatus::HalfProved: return "HALF_PROVED";
    }
    return "?";
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::Continue: return "CONTINUE";
        case Termination::LevelProved: return "LEVEL_PROVED";
        case Termination::LevelFailed: return "LEVEL_FAILED";
        case Termination::GlobalTimeout: return "TIMEOUT";
        case Termination::BudgetExhausted: return "BUDGET_EXHAUSTED";
    }
    return "?";
}

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Proved: return "PROVED";
        case Outcome::Failed: return "FAILED";
        case Outcome::Timeout: return "TIMEOUT";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// SearchTree

NodeId SearchTree::add_root(StateReport state) {
    SearchNode root;
    root.status = state.is_done ? NodeStatus::Proved : NodeStatus::Open;
    root.state = std::move(state);
    nodes_.push_back(std::move(root));
    return static_cast<NodeId>(nodes_.size() - 1);
}

EdgeId SearchTree::add_child(NodeId parent, std::string step, double log_prob, StateReport child_state,
                             std::optional<StateReport> skipped_goal) {
    const EdgeId eid = static_cast<EdgeId>(edges_.size());
    const SearchNode& p = nodes_.at(parent);
    const double parent_score = p.score;
    const int depth = p.level_depth;

    SearchEdge edge;
    edge.step = std::move(step);
    edge.log_prob = log_prob;
    edge.is_sorry = skipped_goal.has_value();
    edge.parent = parent;

    SearchNode child;
    child.status = child_state.is_done ? NodeStatus::Proved : NodeStatus::Open;
    child.state = std::move(child_state);
    child.score = parent_score + log_prob;
    child.level_depth = depth;
    child.parent_edge = eid;
    nodes_.push_back(std::move(child));
    edge.child = static_cast<NodeId>(nodes_.size() - 1);

    if (skipped_goal) {
        SearchNode sub;
        sub.status = skipped_goal->is_done ? NodeStatus::Proved : NodeStatus::Open;
        sub.state = std::move(*skipped_goal);
        sub.score = 0.0;
        sub.level_depth = depth + 1;
        sub.is_sub_root = true;
        sub.parent_edge = eid;
        nodes_.push_back(std::move(sub));
        edge.sub_root = static_cast<NodeId>(nodes_.size() - 1);
    }

    edges_.push_back(std::move(edge));
    nodes_.at(parent).children.push_back(eid);
    return eid;
}

NodeId SearchTree::parent_of(NodeId id) const {
    const EdgeId e = nodes_.at(id).parent_edge;
    return e == kNoEdge ? kNoNode : edges_.at(e).parent;
}

EdgeState SearchTree::edge_state(EdgeId id) const {
    const SearchEdge& e = edges_.at(id);
    const NodeStatus child = nodes_.at(e.child).status;
    if (child == NodeStatus::Failed) return EdgeState::Dead;
    NodeStatus sub = NodeStatus::Proved;
    if (e.is_sorry) {
        sub = nodes_.at(e.sub_root).status;
        if (sub == NodeStatus::Failed) return EdgeState::Dead;
    }
    if (child == NodeStatus::Proved && sub == NodeStatus::Proved) return EdgeState::Proved;
    if (child == NodeStatus::Proved || child == NodeStatus::HalfProved) return EdgeState::Live;
    return EdgeState::Open;
}

NodeStatus SearchTree::evaluate(NodeId id) const {
    const SearchNode& n = nodes_.at(id);
    if (is_terminal(n.status) || !n.expanded) return n.status;
    bool all_dead = true;
    bool any_live = false;
    for (EdgeId e : n.children) {
        switch (edge_state(e)) {
            case EdgeState::Proved: return NodeStatus::Proved;
            case EdgeState::Live: any_live = true; [[fallthrough]];
            case EdgeState::Open: all_dead = false; break;
            case EdgeState::Dead: break;
        }
    }
    if (all_dead) return NodeStatus::Failed;
    return any_live ? NodeStatus::HalfProved : NodeStatus::Open;
}

std::vector<StatusChange> SearchTree::apply_status_update(NodeId start) {
    std::vector<StatusChange> changes;
    for (NodeId n = start; n != kNoNode; n = parent_of(n)) {
        const NodeStatus before = nodes_.at(n).status;
        const NodeStatus after = evaluate(n);
        if (after == before) break;
        nodes_.at(n).status = after;
        changes.push_back({n, before, after});
    }
    return changes;
}

std::optional<StatusChange> SearchTree::force_status(NodeId id, NodeStatus status) {
    SearchNode& n = nodes_.at(id);
    if (is_terminal(n.status) || n.status == status) return std::nullopt;
    StatusChange change{id, n.status, status};
    n.status = status;
    return change;
}

std::vector<EdgeId> SearchTree::proved_sketch_path(NodeId level_root) const {
    std::vector<EdgeId> path;
    NodeId n = level_root;
    while (nodes_.at(n).status == NodeStatus::HalfProved) {
        EdgeId next = kNoEdge;
        for (EdgeId e : nodes_.at(n).children) {
            const EdgeState st = edge_state(e);
            if (st == EdgeState::Live || st == EdgeState::Proved) {
                next = e;
                break;
            }
        }
        if (next == kNoEdge) break;
        path.push_back(next);
        n = edges_.at(next).child;
    }
    return path;
}

EdgeId SearchTree::find_last_unproved_sorry_edge(const std::vector<EdgeId>& path) const {
    for (size_t i = path.size(); i-- > 0;) {
        const SearchEdge& e = edges_.at(path[i]);
        if (e.is_sorry && nodes_.at(e.sub_root).status != NodeStatus::Proved) return path[i];
    }
    throw Error(ErrorKind::NoUnprovedSorry, "every sorry edge on the sketch path is resolved");
}

std::vector<std::string> SearchTree::context_steps(NodeId node) const {
    std::vector<std::string> steps;
    for (NodeId n = node; !nodes_.at(n).is_sub_root;) {
        const EdgeId e = nodes_.at(n).parent_edge;
        if (e == kNoEdge) break;
        steps.push_back(edges_.at(e).step);
        n = edges_.at(e).parent;
    }
    std::reverse(steps.begin(), steps.end());
    return steps;
}

bool SearchTree::is_settled(NodeId node) const {
    for (NodeId n = node; !nodes_.at(n).is_sub_root;) {
        const EdgeId e = nodes_.at(n).parent_edge;
        if (e == kNoEdge) break;
        const SearchEdge& edge = edges_.at(e);
        if (edge.is_sorry && nodes_.at(edge.sub_root).status == NodeStatus::Failed) return true;
        n = edge.parent;
        if (is_terminal(nodes_.at(n).status)) return true;
    }
    return false;
}

namespace {

void splice_proof(const SearchTree& tree, NodeId root, std::vector<std::string>& out, int depth_guard) {
    if (depth_guard > 1000) throw Error(ErrorKind::DanglingSorry, "proof nesting too deep");
    NodeId n = root;
    while (!tree.node(n).state.is_done) {
        EdgeId chosen = kNoEdge;
        for (EdgeId e : tree.node(n).children) {
            if (tree.edge_state(e) == EdgeState::Proved) {
                chosen = e;
                break;
            }
        }
        if (chosen == kNoEdge)
            throw Error(ErrorKind::DanglingSorry, "node " + std::to_string(n) + " has no proved edge");
        const SearchEdge& edge = tree.edge(chosen);
        if (edge.is_sorry) {
            out.push_back(strip_sorry(edge.step));
            splice_proof(tree, edge.sub_root, out, depth_guard + 1);
        } else {
            out.push_back(edge.step);
        }
        n = edge.child;
    }
}

}  // namespace

std::vector<std::string> SearchTree::extract_final_proof(NodeId root) const {
    if (nodes_.at(root).status != NodeStatus::Proved)
        throw Error(ErrorKind::DanglingSorry, "root is " + std::string(to_string(nodes_.at(root).status)));
    std::vector<std::string> out;
    splice_proof(*this, root, out, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Budget, frontier, termination

void validate(const SearchBudget& b) {
    const auto bad = [](const char* what) { throw Error(ErrorKind::InvalidBudget, what); };
    if (!(b.global_timeout > 0)) bad("global_timeout must be positive");
    if (!(b.sublevel_timeout > 0)) bad("sublevel_timeout must be positive");
    if (!(b.step_timeout > 0)) bad("step_timeout must be positive");
    if (b.samples_per_expansion < 1) bad("e must be >= 1");
    if (b.max_expansions < 1) bad("max_expansions must be >= 1");
    if (b.max_recursion_depth < 1) bad("max_recursion_depth must be >= 1");
}

void Frontier::push(NodeId node, double score) { heap_.push(Entry{score, next_seq_++, node}); }

namespace {

bool selectable(const SearchTree& tree, const LevelSearch& level, NodeId id) {
    const SearchNode& n = tree.node(id);
    if (n.status != NodeStatus::Open || n.expanded) return false;
    if (n.is_sub_root && id != level.root) return false;
    return !tree.is_settled(id);
}

}  // namespace

bool has_selectable(const SearchTree& tree, LevelSearch& level) {
    while (!level.frontier.empty() && !selectable(tree, level, level.frontier.top())) level.frontier.pop();
    return !level.frontier.empty();
}

NodeId select_node(const SearchTree& tree, LevelSearch& level) {
    if (!has_selectable(tree, level)) throw Error(ErrorKind::FrontierEmpty, "no open node left in this level");
    const NodeId id = level.frontier.top();
    level.frontier.pop();
    return id;
}

Termination check_termination(const SearchTree& tree, LevelSearch& level, const SearchBudget& budget,
                              const TerminationInput& input) {
    const NodeStatus root = tree.node(level.root).status;
    if (root == NodeStatus::Proved) return Termination::LevelProved;
    if (input.now - input.search_started_at >= budget.global_timeout) return Termination::GlobalTimeout;
    if (budget.per_level_expansions) {
        if (level.expansions >= budget.max_expansions) return Termination::LevelFailed;
    } else if (input.expansions_used >= budget.max_expansions) {
        return Termination::BudgetExhausted;
    }
    if (root == NodeStatus::Failed) return Termination::LevelFailed;
    if (level.depth > 1 && input.now - level.started_at >= budget.sublevel_timeout) return Termination::LevelFailed;
    if (root == NodeStatus::HalfProved)
        return level.depth + 1 > budget.max_recursion_depth ? Termination::LevelFailed : Termination::Continue;
    if (!has_selectable(tree, level)) return Termination::LevelFailed;
    return Termination::Continue;
}

// ---------------------------------------------------------------------------
// Trace

void Trace::emit(std::string_view kind, ordered_json fields) {
    ordered_json event;
    event["id"] = events_.size();
    event["event"] = kind;
    for (auto& [k, v] : fields.items()) event[k] = v;
    events_.push_back(std::move(event));
}

std::string Trace::to_jsonl() const {
    std::string out;
    for (const auto& e : events_) {
        out += e.dump();
        out.push_back('\n');
    }
    return out;
}

Trace Trace::from_jsonl(std::string_view text) {
    Trace trace;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text.substr(pos, nl - pos);
        if (!line.empty()) {
            try {
                trace.events_.push_back(ordered_json::parse(line));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::ParseError, e.what());
            }
        }
        pos = nl + 1;
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

enum class LevelOutcome { Proved, Failed, Aborted };

struct Abort {
    Outcome outcome;
    std::string reason;
};

class Engine {
public:
    Engine(ProverEnvironment& env, Policy& policy, const SearchOptions& options, bool recursive)
        : env_(env), policy_(policy), budget_(options.budget), clock_(options.clock), recursive_(recursive) {
        validate(budget_);
        if (!clock_) clock_ = &own_clock_;
    }

    SearchResult run(std::string_view theorem) {
        started_at_ = clock_->now();
        session_ = env_.init_theorem(theorem);
        const NodeId root = tree_.add_root(session_->root());

        LevelOutcome outcome = LevelOutcome::Failed;
        try {
            outcome = run_level(root, 1);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EnvironmentDown && e.kind() != ErrorKind::DeadSession &&
                e.kind() != ErrorKind::PolicyError && e.kind() != ErrorKind::ProtocolError)
                throw;
            abort_ = Abort{Outcome::Failed, e.what()};
            outcome = LevelOutcome::Aborted;
        }

        SearchResult result;
        if (outcome == LevelOutcome::Proved) {
            auto proof = tree_.extract_final_proof(root);
            const auto check = replay(env_, theorem, proof, budget_.step_timeout);
            if (check.proved) {
                result.outcome = Outcome::Proved;
                result.proof = std::move(proof);
            } else {
                result.outcome = Outcome::Failed;
                result.abort_reason = "final proof failed replay at step " +
                                      std::to_string(check.failing_index.value_or(0)) + ": " + check.message;
            }
        } else if (outcome == LevelOutcome::Aborted) {
            result.outcome = abort_->outcome;
            result.abort_reason = abort_->reason;
        } else {
            result.outcome = Outcome::Failed;
        }

        result.stats.expansions = expansions_;
        result.stats.elapsed = clock_->now() - started_at_;
        result.stats.proof_length = result.proof ? result.proof->size() : 0;
        result.stats.nodes = tree_.node_count();
        result.stats.max_level_depth = max_depth_;

        ordered_json fields;
        fields["outcome"] = to_string(result.outcome);
        if (!result.abort_reason.empty()) fields["reason"] = result.abort_reason;
        fields["expansions"] = expansions_;
        fields["t"] = clock_->now();
        if (result.proof) fields["proof"] = *result.proof;
        trace_.emit("terminate", std::move(fields));
        result.trace = std::move(trace_);
        return result;
    }

private:
    double now() const { return clock_->now(); }

    void emit_changes(const std::vector<StatusChange>& changes) {
        for (const auto& c : changes)
            trace_.emit("status_change", {{"node", c.node}, {"from", to_string(c.from)}, {"to", to_string(c.to)}});
    }

    LevelOutcome exit_level(NodeId root, int depth, LevelOutcome outcome, std::string_view reason) {
        ordered_json fields{{"root", root}, {"depth", depth}};
        fields["result"] = outcome == LevelOutcome::Proved ? "PROVED"
                           : outcome == LevelOutcome::Failed ? "FAILED"
                                                             : "ABORTED";
        if (!reason.empty()) fields["reason"] = reason;
        fields["t"] = now();
        trace_.emit("exit_level", std::move(fields));
        return outcome;
    }

    LevelOutcome run_level(NodeId root, int depth) {
        max_depth_ = std::max(max_depth_, depth);
        LevelSearch level;
        level.root = root;
        level.depth = depth;
        level.started_at = now();
        if (tree_.node(root).status == NodeStatus::Open) level.frontier.push(root, 0.0);
        trace_.emit("enter_level", {{"root", root},
                                    {"depth", depth},
                                    {"status", to_string(tree_.node(root).status)},
                                    {"proof_state", tree_.node(root).state.proof_state},
                                    {"t", level.started_at}});

        while (true) {
            const Termination term =
                check_termination(tree_, level, budget_, TerminationInput{now(), started_at_, expansions_});
            switch (term) {
                case Termination::LevelProved:
                    return exit_level(root, depth, LevelOutcome::Proved, {});
                case Termination::LevelFailed: {
                    if (auto c = tree_.force_status(root, NodeStatus::Failed)) {
                        emit_changes({*c});
                        const NodeId up = tree_.parent_of(root);
                        if (up != kNoNode) emit_changes(tree_.apply_status_update(up));
                    }
                    return exit_level(root, depth, LevelOutcome::Failed, level_failure_reason(level));
                }
                case Termination::GlobalTimeout:
                    if (!abort_) abort_ = Abort{Outcome::Timeout, "global timeout"};
                    return exit_level(root, depth, LevelOutcome::Aborted, "global timeout");
                case Termination::BudgetExhausted:
                    if (!abort_) abort_ = Abort{Outcome::Failed, "expansion budget exhausted"};
                    return exit_level(root, depth, LevelOutcome::Aborted, "expansion budget exhausted");
                case Termination::Continue:
                    break;
            }

            if (tree_.node(root).status == NodeStatus::HalfProved) {
                // Pause this level and prove the deferred goal nearest the end
                // of the sketch first.
                const auto path = tree_.proved_sketch_path(root);
                const EdgeId edge = tree_.find_last_unproved_sorry_edge(path);
                const LevelOutcome sub = run_level(tree_.edge(edge).sub_root, depth + 1);
                if (sub == LevelOutcome::Aborted) return exit_level(root, depth, LevelOutcome::Aborted, abort_->reason);
                continue;
            }

            const NodeId node = select_node(tree_, level);
            trace_.emit("select", {{"node", node},
                                   {"score", tree_.node(node).score},
                                   {"depth", depth},
                                   {"t", now()}});
            expand(node, level);
        }
    }

    std::string level_failure_reason(const LevelSearch& level) const {
        const NodeStatus root = tree_.node(level.root).status;
        if (budget_.per_level_expansions && level.expansions >= budget_.max_expansions) return "level budget exhausted";
        if (level.depth > 1 && now() - level.started_at >= budget_.sublevel_timeout) return "sublevel timeout";
        if (root == NodeStatus::HalfProved) return "max recursion depth";
        return "exhausted";
    }

    void expand(NodeId id, LevelSearch& level) {
        const auto context = join_context(tree_.context_steps(id));
        const std::string proof_state = tree_.node(id).state.proof_state;
        const StateId state = tree_.node(id).state.id;
        auto proposals = normalize_proposals(
            policy_.propose_steps(context, proof_state, budget_.samples_per_expansion), budget_.samples_per_expansion);

        ordered_json candidates = ordered_json::array();
        for (auto& cand : proposals) {
            ordered_json c{{"step", cand.step}, {"log_prob", cand.log_prob}};
            const bool sorry = has_sorry_suffix(cand.step);
            if (sorry && !recursive_) {
                c["result"] = "sorry_disabled";
                candidates.push_back(std::move(c));
                continue;
            }
            StepResult result = session_->apply_step(state, cand.step, budget_.step_timeout);
            if (auto* err = std::get_if<StepError>(&result)) {
                clock_->charge(err->cost);
                c["result"] = err->kind == StepError::Kind::Timeout ? "timeout" : "rejected";
                c["message"] = err->message;
                candidates.push_back(std::move(c));
                continue;
            }
            auto& ok = std::get<StepSuccess>(result);
            clock_->charge(ok.cost);
            if (sorry && !ok.skipped_goal) {
                c["result"] = "rejected";
                c["message"] = "sorry step did not report a skipped goal";
                candidates.push_back(std::move(c));
                continue;
            }
            std::optional<StateReport> skipped;
            if (sorry) skipped = std::move(ok.skipped_goal);
            const EdgeId eid = tree_.add_child(id, cand.step, cand.log_prob, std::move(ok.state), std::move(skipped));
            const SearchEdge& edge = tree_.edge(eid);
            const SearchNode& child = tree_.node(edge.child);
            c["result"] = "ok";
            c["child"] = edge.child;
            c["score"] = child.score;
            c["status"] = to_string(child.status);
            if (edge.is_sorry) {
                c["sub_root"] = edge.sub_root;
                c["sub_root_status"] = to_string(tree_.node(edge.sub_root).status);
            }
            if (child.status == NodeStatus::Open) level.frontier.push(edge.child, child.score);
            candidates.push_back(std::move(c));
        }

        tree_.node(id).expanded = true;
        ++expansions_;
        ++level.expansions;
        trace_.emit("expand", {{"node", id}, {"candidates", std::move(candidates)}, {"t", now()}});
        emit_changes(tree_.apply_status_update(id));
    }

    ProverEnvironment& env_;
    Policy& policy_;
    SearchBudget budget_;
    Clock* clock_;
    VirtualClock own_clock_;
    bool recursive_;

    std::unique_ptr<ProverSession> session_;
    SearchTree tree_;
    Trace trace_;
    double started_at_ = 0.0;
    int expansions_ = 0;
    int max_depth_ = 1;
    std::optional<Abort> abort_;
};

}  // namespace

SearchResult recursive_bfs(std::string_view theorem, ProverEnvironment& env, Policy& policy,
                           const SearchOptions& options) {
    return Engine(env, policy, options, true).run(theorem);
}

SearchResult baseline_bfs(std::string_view theorem, ProverEnvironment& env, Policy& policy,
                          const SearchOptions& options) {
    return Engine(env, policy, options, false).run(theorem);
}

}  // namespace sketchsearch
