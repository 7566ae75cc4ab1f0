#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchsearch/clock.hpp"
#include "sketchsearch/environment.hpp"
#include "sketchsearch/policy.hpp"

namespace sketchsearch {

enum class NodeStatus { Open, Failed, Proved, HalfProved };

std::string_view to_string(NodeStatus status);
inline bool is_terminal(NodeStatus s) { return s == NodeStatus::Proved || s == NodeStatus::Failed; }

using NodeId = uint32_t;
using EdgeId = uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();

struct SearchEdge {
    std::string step;
    double log_prob = 0.0;
    bool is_sorry = false;
    NodeId parent = kNoNode;
    NodeId child = kNoNode;
    /// Root of the next-level search for the deferred goal; set iff is_sorry.
    NodeId sub_root = kNoNode;
};

struct SearchNode {
    StateReport state;
    NodeStatus status = NodeStatus::Open;
    /// Cumulative log-probability from the root of the owning level search.
    double score = 0.0;
    int level_depth = 1;
    bool expanded = false;
    bool is_sub_root = false;
    /// Edge this node hangs from: the step edge for ordinary nodes, the
    /// sorry edge for sub-roots, kNoEdge for the theorem root.
    EdgeId parent_edge = kNoEdge;
    std::vector<EdgeId> children;
};

/// How an edge currently contributes to its parent's status.
enum class EdgeState { Open, Live, Proved, Dead };

struct StatusChange {
    NodeId node = kNoNode;
    NodeStatus from = NodeStatus::Open;
    NodeStatus to = NodeStatus::Open;

    bool operator==(const StatusChange&) const = default;
};

/// Node and edge arena shared by every level of one search. Level searches
/// are frames over this single tree.
class SearchTree {
public:
    NodeId add_root(StateReport state);
    /// Adds `parent --step--> child`; for sorry steps also the sub-root for
    /// the deferred goal (score 0, one level deeper). Returns the edge.
    EdgeId add_child(NodeId parent, std::string step, double log_prob, StateReport child_state,
                     std::optional<StateReport> skipped_goal = std::nullopt);

    const SearchNode& node(NodeId id) const { return nodes_.at(id); }
    SearchNode& node(NodeId id) { return nodes_.at(id); }
    const SearchEdge& edge(EdgeId id) const { return edges_.at(id); }
    size_t node_count() const { return nodes_.size(); }
    size_t edge_count() const { return edges_.size(); }

    /// Parent node across level boundaries: a sub-root's parent is the node
    /// its sorry edge leaves from.
    NodeId parent_of(NodeId id) const;

    EdgeState edge_state(EdgeId id) const;
    /// Status implied by the node's children. PROVED and FAILED are final and
    /// returned unchanged; unexpanded nodes keep their status.
    NodeStatus evaluate(NodeId id) const;

    /// Re-evaluates `start` and walks toward the theorem root while statuses
    /// keep changing. Returns the changes in the order they were made.
    std::vector<StatusChange> apply_status_update(NodeId start);
    /// Sets a status directly (level termination); no-op on final statuses.
    std::optional<StatusChange> force_status(NodeId id, NodeStatus status);

    /// Edges from `level_root` down to a PROVED node along live edges,
    /// taking the first live edge at each node. Empty unless `level_root` is
    /// HALF_PROVED or PROVED.
    std::vector<EdgeId> proved_sketch_path(NodeId level_root) const;
    /// Sorry edge nearest the end of `path` whose sub-root is not PROVED.
    /// Throws Error(NoUnprovedSorry).
    EdgeId find_last_unproved_sorry_edge(const std::vector<EdgeId>& path) const;

    /// Steps from `level_root` to `node`, the same-level context of `node`.
    std::vector<std::string> context_steps(NodeId node) const;
    /// True when an ancestor inside the node's level is final or a sorry edge
    /// above it is dead, so expanding it cannot change any status.
    bool is_settled(NodeId node) const;

    /// Splices sub-proofs into the proved sketch under `root`. Throws
    /// Error(DanglingSorry) if `root` is not PROVED through proved edges.
    std::vector<std::string> extract_final_proof(NodeId root = 0) const;

private:
    std::vector<SearchNode> nodes_;
    std::vector<SearchEdge> edges_;
};

struct SearchBudget {
    double global_timeout = 600.0;
    double sublevel_timeout = 120.0;
    double step_timeout = 10.0;
    int samples_per_expansion = 32;
    int max_expansions = 128;
    int max_recursion_depth = 10;
    /// Count max_expansions per level search instead of per theorem.
    bool per_level_expansions = false;

    bool operator==(const SearchBudget&) const = default;
};

/// Throws Error(InvalidBudget).
void validate(const SearchBudget& budget);

/// Best-first frontier of one level: highest score first, earliest
/// insertion on ties.
class Frontier {
public:
    void push(NodeId node, double score);
    bool empty() const { return heap_.empty(); }
    NodeId top() const { return heap_.top().node; }
    void pop() { heap_.pop(); }
    size_t size() const { return heap_.size(); }

private:
    struct Entry {
        double score;
        uint64_t seq;
        NodeId node;
    };
    struct Worse {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.score != b.score) return a.score < b.score;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, Worse> heap_;
    uint64_t next_seq_ = 0;
};

struct LevelSearch {
    NodeId root = kNoNode;
    int depth = 1;
    double started_at = 0.0;
    int expansions = 0;
    Frontier frontier;
};

/// Pops nodes that can no longer be selected and returns the best remaining
/// one. Throws Error(FrontierEmpty).
NodeId select_node(const SearchTree& tree, LevelSearch& level);
/// Whether select_node would succeed.
bool has_selectable(const SearchTree& tree, LevelSearch& level);

enum class Termination { Continue, LevelProved, LevelFailed, GlobalTimeout, BudgetExhausted };

std::string_view to_string(Termination t);

struct TerminationInput {
    double now = 0.0;
    double search_started_at = 0.0;
    int expansions_used = 0;
};

Termination check_termination(const SearchTree& tree, LevelSearch& level, const SearchBudget& budget,
                              const TerminationInput& input);

/// Ordered event log of one search, one JSON object per event with a
/// monotone `id` and an `event` kind.
class Trace {
public:
    void emit(std::string_view kind, nlohmann::ordered_json fields);
    const std::vector<nlohmann::ordered_json>& events() const { return events_; }
    std::string to_jsonl() const;
    static Trace from_jsonl(std::string_view text);

private:
    std::vector<nlohmann::ordered_json> events_;
};

enum class Outcome { Proved, Failed, Timeout };

std::string_view to_string(Outcome outcome);

struct SearchStats {
    int expansions = 0;
    double elapsed = 0.0;
    size_t proof_length = 0;
    size_t nodes = 0;
    int max_level_depth = 1;
};

struct SearchResult {
    Outcome outcome = Outcome::Failed;
    std::optional<std::vector<std::string>> proof;
    Trace trace;
    SearchStats stats;
    /// Set when the search stopped for a reason other than its own rules
    /// (lost environment, policy failure, replay mismatch).
    std::string abort_reason;
};

struct SearchOptions {
    SearchBudget budget;
    /// Defaults to a fresh VirtualClock owned by the search.
    Clock* clock = nullptr;
};

/// Level-by-level best-first search with sorry edges.
SearchResult recursive_bfs(std::string_view theorem, ProverEnvironment& env, Policy& policy,
                           const SearchOptions& options);

/// The same engine with sorry edges disabled: a single level, and any
/// candidate ending in ` sorry` is rejected before reaching the prover.
SearchResult baseline_bfs(std::string_view theorem, ProverEnvironment& env, Policy& policy,
                          const SearchOptions& options);

}  // namespace sketchsearch
