#include "sketchsearch/audit.hpp"

#include <map>
#include <optional>

namespace sketchsearch {

namespace {

struct NodeInfo {
    std::string status = "OPEN";
    double score = 0.0;
    uint64_t level_root = 0;
    bool is_level_root = false;
    bool selected = false;
};

class Auditor {
public:
    explicit Auditor(AuditReport& report) : report_(report) {}

    void fail(size_t event, std::string rule, std::string detail) {
        report_.violations.push_back({event, std::move(rule), std::move(detail)});
    }

    void enter_level(size_t id, const nlohmann::ordered_json& ev) {
        const uint64_t root = ev.at("root").get<uint64_t>();
        auto it = nodes_.find(root);
        if (it == nodes_.end()) {
            if (!nodes_.empty()) fail(id, "frontier_exclusion", "level entered at unknown node " + std::to_string(root));
            NodeInfo info;
            info.status = ev.value("status", std::string("OPEN"));
            info.level_root = root;
            info.is_level_root = true;
            it = nodes_.emplace(root, info).first;
        } else if (!it->second.is_level_root) {
            fail(id, "frontier_exclusion", "level entered at non sub-root node " + std::to_string(root));
        }
        if (it->second.score != 0.0) fail(id, "score_additivity", "level root with non-zero score");
        levels_.push_back(root);
    }

    void exit_level(size_t id, const nlohmann::ordered_json& ev) {
        const uint64_t root = ev.at("root").get<uint64_t>();
        if (levels_.empty() || levels_.back() != root) {
            fail(id, "event_order", "exit_level does not match the innermost level");
            return;
        }
        levels_.pop_back();
    }

    void select(size_t id, const nlohmann::ordered_json& ev) {
        ++report_.selections;
        const uint64_t node = ev.at("node").get<uint64_t>();
        auto it = nodes_.find(node);
        if (it == nodes_.end()) {
            fail(id, "frontier_exclusion", "selected unknown node " + std::to_string(node));
            return;
        }
        NodeInfo& info = it->second;
        if (info.selected) fail(id, "frontier_exclusion", "node " + std::to_string(node) + " selected twice");
        info.selected = true;
        if (info.status != "OPEN")
            fail(id, "frontier_exclusion", "selected node " + std::to_string(node) + " is " + info.status);
        if (levels_.empty() || info.level_root != levels_.back())
            fail(id, "frontier_exclusion", "node " + std::to_string(node) + " selected outside its own level");
        if (ev.contains("score") && ev.at("score").get<double>() != info.score)
            fail(id, "score_additivity", "select score differs from recorded score");
        expected_expand_ = node;
    }

    void expand(size_t id, const nlohmann::ordered_json& ev) {
        const uint64_t node = ev.at("node").get<uint64_t>();
        if (!expected_expand_ || *expected_expand_ != node)
            fail(id, "frontier_exclusion", "expansion of node " + std::to_string(node) + " without selection");
        expected_expand_.reset();
        auto it = nodes_.find(node);
        if (it == nodes_.end()) return;
        const NodeInfo parent = it->second;
        for (const auto& c : ev.at("candidates")) {
            if (c.value("result", std::string()) != "ok") continue;
            const uint64_t child = c.at("child").get<uint64_t>();
            const double lp = c.at("log_prob").get<double>();
            const double score = c.at("score").get<double>();
            if (nodes_.count(child)) fail(id, "event_order", "child id " + std::to_string(child) + " reused");
            if (score != parent.score + lp)
                fail(id, "score_additivity", "child " + std::to_string(child) + " score is not parent score + log_prob");
            NodeInfo info;
            info.status = c.value("status", std::string("OPEN"));
            info.score = score;
            info.level_root = parent.level_root;
            nodes_[child] = info;
            if (c.contains("sub_root")) {
                const uint64_t sub = c.at("sub_root").get<uint64_t>();
                NodeInfo root;
                root.status = c.value("sub_root_status", std::string("OPEN"));
                root.level_root = sub;
                root.is_level_root = true;
                nodes_[sub] = root;
            }
        }
    }

    void status_change(size_t id, const nlohmann::ordered_json& ev) {
        ++report_.status_changes;
        const uint64_t node = ev.at("node").get<uint64_t>();
        const std::string from = ev.at("from").get<std::string>();
        const std::string to = ev.at("to").get<std::string>();
        auto it = nodes_.find(node);
        if (it == nodes_.end()) {
            fail(id, "monotone_terminality", "status change on unknown node " + std::to_string(node));
            return;
        }
        if (it->second.status != from)
            fail(id, "monotone_terminality",
                 "node " + std::to_string(node) + " changes from " + from + " but was " + it->second.status);
        if (it->second.status == "PROVED" || it->second.status == "FAILED")
            fail(id, "monotone_terminality",
                 "node " + std::to_string(node) + " left terminal status " + it->second.status + " for " + to);
        it->second.status = to;
    }

    const std::string* status_of(uint64_t node) const {
        auto it = nodes_.find(node);
        return it == nodes_.end() ? nullptr : &it->second.status;
    }

private:
    AuditReport& report_;
    std::map<uint64_t, NodeInfo> nodes_;
    std::vector<uint64_t> levels_;
    std::optional<uint64_t> expected_expand_;
};

}  // namespace

AuditReport audit_trace(const Trace& trace, ProverEnvironment* env, std::string_view theorem, double step_timeout) {
    AuditReport report;
    Auditor auditor(report);
    const auto& events = trace.events();
    report.events = events.size();

    bool terminated = false;
    for (size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        try {
            if (ev.at("id").get<size_t>() != i) auditor.fail(i, "event_order", "event ids are not consecutive");
            if (terminated) auditor.fail(i, "event_order", "event after terminate");
            const std::string kind = ev.at("event").get<std::string>();
            if (kind == "enter_level") {
                auditor.enter_level(i, ev);
            } else if (kind == "exit_level") {
                auditor.exit_level(i, ev);
            } else if (kind == "select") {
                auditor.select(i, ev);
            } else if (kind == "expand") {
                auditor.expand(i, ev);
            } else if (kind == "status_change") {
                auditor.status_change(i, ev);
            } else if (kind == "terminate") {
                terminated = true;
                if (ev.at("outcome") != "PROVED") continue;
                const std::string* root = auditor.status_of(0);
                if (!root || *root != "PROVED") auditor.fail(i, "proved_verified", "PROVED outcome with unproved root");
                if (!ev.contains("proof")) {
                    auditor.fail(i, "proved_verified", "PROVED outcome without a proof");
                    continue;
                }
                const auto proof = ev.at("proof").get<std::vector<std::string>>();
                for (const auto& step : proof)
                    if (has_sorry_suffix(step) || step == "sorry")
                        auditor.fail(i, "proved_verified", "proof contains sorry: " + step);
                if (env) {
                    const auto check = replay(*env, theorem, proof, step_timeout);
                    if (!check.proved) auditor.fail(i, "proved_verified", "proof does not replay: " + check.message);
                }
            } else {
                auditor.fail(i, "event_order", "unknown event kind " + kind);
            }
        } catch (const nlohmann::json::exception& e) {
            auditor.fail(i, "event_order", std::string("malformed event: ") + e.what());
        }
    }
    if (!events.empty() && !terminated) auditor.fail(events.size(), "event_order", "trace has no terminate event");
    return report;
}

}  // namespace sketchsearch
