#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sketchsearch/environment.hpp"
#include "sketchsearch/search.hpp"

namespace sketchsearch {

struct AuditViolation {
    size_t event = 0;
    /// One of: event_order, monotone_terminality, frontier_exclusion,
    /// score_additivity, proved_verified.
    std::string rule;
    std::string detail;
};

struct AuditReport {
    size_t events = 0;
    size_t selections = 0;
    size_t status_changes = 0;
    std::vector<AuditViolation> violations;

    bool ok() const { return violations.empty(); }
};

/// Re-checks a search trace from its events alone. When `env` is given, a
/// PROVED outcome must carry a sorry-free proof that replays in a fresh
/// session of `theorem`.
AuditReport audit_trace(const Trace& trace, ProverEnvironment* env = nullptr, std::string_view theorem = {},
                        double step_timeout = 10.0);

}  // namespace sketchsearch
