#include "sketchsearch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "sketchsearch/audit.hpp"
#include "sketchsearch/error.hpp"
#include "sketchsearch/random.hpp"
#include "sketchsearch/script.hpp"
#include "sketchsearch/synthetic_policy.hpp"

namespace sketchsearch {

using nlohmann::ordered_json;

std::string_view to_string(EngineKind engine) { return engine == EngineKind::Recursive ? "recursive" : "baseline"; }

EngineKind parse_engine(std::string_view name) {
    if (name == "recursive") return EngineKind::Recursive;
    if (name == "baseline") return EngineKind::Baseline;
    throw Error(ErrorKind::InvalidConfig, "unknown engine '" + std::string(name) + "'");
}

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
T parse_value(std::string_view key, std::string_view s) {
    T out{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error(ErrorKind::InvalidConfig, std::string(key) + ": cannot parse '" + std::string(s) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw Error(ErrorKind::InvalidConfig, std::string(key) + ": expected a boolean, got '" + std::string(s) + "'");
}

IntRange parse_int_range(std::string_view key, std::string_view s) {
    if (auto dots = s.find(".."); dots != std::string_view::npos)
        return {parse_value<int>(key, s.substr(0, dots)), parse_value<int>(key, s.substr(dots + 2))};
    const int v = parse_value<int>(key, s);
    return {v, v};
}

RealRange parse_real_range(std::string_view key, std::string_view s) {
    if (auto dots = s.find(".."); dots != std::string_view::npos)
        return {parse_value<double>(key, s.substr(0, dots)), parse_value<double>(key, s.substr(dots + 2))};
    const double v = parse_value<double>(key, s);
    return {v, v};
}

std::string range_text(const IntRange& r) {
    return r.lo == r.hi ? std::to_string(r.lo) : std::to_string(r.lo) + ".." + std::to_string(r.hi);
}

std::string range_text(const RealRange& r) { return r.lo == r.hi ? fmt(r.lo) : fmt(r.lo) + ".." + fmt(r.hi); }

}  // namespace

void validate(const SuiteConfig& c) {
    const auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (c.count < 1) bad("count must be >= 1");
    if (c.parallelism < 1) bad("parallelism must be >= 1");
    for (const auto* r : {&c.depth, &c.branching, &c.sketch_len, &c.distractor_depth})
        if (r->lo > r->hi) bad("empty range " + range_text(*r));
    if (c.false_conjecture_rate.lo > c.false_conjecture_rate.hi) bad("empty fcr range");
    if (!(c.costs.min_seconds >= 0 && c.costs.min_seconds <= c.costs.max_seconds)) bad("invalid step cost range");
    // Every corner of the ranges must be a valid theorem spec.
    for (int l : {c.depth.lo, c.depth.hi})
        for (int b : {c.branching.lo, c.branching.hi})
            for (int len : {c.sketch_len.lo, c.sketch_len.hi})
                for (int dd : {c.distractor_depth.lo, c.distractor_depth.hi})
                    for (double f : {c.false_conjecture_rate.lo, c.false_conjecture_rate.hi}) {
                        SyntheticTheoremSpec spec{0, l, b, len, f, dd};
                        try {
                            validate(spec);
                        } catch (const Error& e) {
                            bad(std::string("theorem range out of bounds: ") + e.detail());
                        }
                    }
    validate(c.budget);
    validate(c.noise);
}

void apply_config_value(SuiteConfig& c, std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    if (key == "seed") c.seed = parse_value<uint64_t>(key, v);
    else if (key == "count") c.count = parse_value<int>(key, v);
    else if (key == "L" || key == "depth") c.depth = parse_int_range(key, v);
    else if (key == "b" || key == "branching") c.branching = parse_int_range(key, v);
    else if (key == "len" || key == "sketch_len") c.sketch_len = parse_int_range(key, v);
    else if (key == "dd" || key == "distractor_depth") c.distractor_depth = parse_int_range(key, v);
    else if (key == "fcr" || key == "false_conjecture_rate") c.false_conjecture_rate = parse_real_range(key, v);
    else if (key == "global_timeout") c.budget.global_timeout = parse_value<double>(key, v);
    else if (key == "sublevel_timeout") c.budget.sublevel_timeout = parse_value<double>(key, v);
    else if (key == "step_timeout") c.budget.step_timeout = parse_value<double>(key, v);
    else if (key == "e" || key == "samples_per_expansion") c.budget.samples_per_expansion = parse_value<int>(key, v);
    else if (key == "max_expansions") c.budget.max_expansions = parse_value<int>(key, v);
    else if (key == "max_recursion_depth") c.budget.max_recursion_depth = parse_value<int>(key, v);
    else if (key == "per_level_expansions") c.budget.per_level_expansions = parse_bool(key, v);
    else if (key == "engines") {
        c.engines.clear();
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty() || item == "none") continue;
            const EngineKind e = parse_engine(item);
            if (std::find(c.engines.begin(), c.engines.end(), e) == c.engines.end()) c.engines.push_back(e);
        }
    } else if (key == "truth_top_prob") c.noise.truth_top_prob = parse_value<double>(key, v);
    else if (key == "junk_mass") c.noise.junk_mass = parse_value<double>(key, v);
    else if (key == "sorry_bias") c.noise.sorry_bias = parse_value<double>(key, v);
    else if (key == "include_truth") c.noise.include_truth = parse_bool(key, v);
    else if (key == "cost_min") c.costs.min_seconds = parse_value<double>(key, v);
    else if (key == "cost_max") c.costs.max_seconds = parse_value<double>(key, v);
    else if (key == "parallelism") c.parallelism = parse_value<int>(key, v);
    else if (key == "keep_traces") c.keep_traces = parse_bool(key, v);
    else if (key == "audit") c.audit = parse_bool(key, v);
    else throw Error(ErrorKind::InvalidConfig, "unknown key '" + std::string(key) + "'");
}

void apply_config_text(SuiteConfig& config, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(lineno) + ": expected key=value");
        apply_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

std::string config_to_text(const SuiteConfig& c) {
    std::string engines;
    for (auto e : c.engines) engines += (engines.empty() ? "" : ",") + std::string(to_string(e));
    std::ostringstream out;
    out << "seed=" << c.seed << "\ncount=" << c.count << "\nL=" << range_text(c.depth)
        << "\nb=" << range_text(c.branching) << "\nlen=" << range_text(c.sketch_len)
        << "\ndd=" << range_text(c.distractor_depth) << "\nfcr=" << range_text(c.false_conjecture_rate)
        << "\nglobal_timeout=" << fmt(c.budget.global_timeout) << "\nsublevel_timeout=" << fmt(c.budget.sublevel_timeout)
        << "\nstep_timeout=" << fmt(c.budget.step_timeout) << "\ne=" << c.budget.samples_per_expansion
        << "\nmax_expansions=" << c.budget.max_expansions << "\nmax_recursion_depth=" << c.budget.max_recursion_depth
        << "\nper_level_expansions=" << (c.budget.per_level_expansions ? "true" : "false")
        << "\nengines=" << (engines.empty() ? "none" : engines) << "\ntruth_top_prob=" << fmt(c.noise.truth_top_prob)
        << "\njunk_mass=" << fmt(c.noise.junk_mass) << "\nsorry_bias=" << fmt(c.noise.sorry_bias)
        << "\ninclude_truth=" << (c.noise.include_truth ? "true" : "false") << "\ncost_min=" << fmt(c.costs.min_seconds)
        << "\ncost_max=" << fmt(c.costs.max_seconds) << "\nparallelism=" << c.parallelism << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Manifest

SuiteManifest generate_manifest(const SuiteConfig& config) {
    validate(config);
    SuiteManifest manifest;
    manifest.budget = config.budget;
    for (int i = 0; i < config.count; ++i) {
        Rng rng(hash_combine(config.seed, static_cast<uint64_t>(i)));
        SyntheticTheoremSpec spec;
        spec.seed = rng.next() >> 34;
        spec.depth = static_cast<int>(rng.between(config.depth.lo, config.depth.hi));
        spec.branching = static_cast<int>(rng.between(config.branching.lo, config.branching.hi));
        spec.sketch_len = static_cast<int>(rng.between(config.sketch_len.lo, config.sketch_len.hi));
        spec.distractor_depth = static_cast<int>(rng.between(config.distractor_depth.lo, config.distractor_depth.hi));
        const auto& f = config.false_conjecture_rate;
        spec.false_conjecture_rate = f.lo == f.hi ? f.lo : std::round(rng.uniform(f.lo, f.hi) * 100.0) / 100.0;
        manifest.theorems.push_back(format_theorem_id(spec));
    }
    return manifest;
}

namespace {

ordered_json budget_to_json(const SearchBudget& b) {
    return ordered_json{{"global_timeout", b.global_timeout},
                        {"sublevel_timeout", b.sublevel_timeout},
                        {"step_timeout", b.step_timeout},
                        {"e", b.samples_per_expansion},
                        {"max_expansions", b.max_expansions},
                        {"max_recursion_depth", b.max_recursion_depth},
                        {"per_level_expansions", b.per_level_expansions}};
}

SearchBudget budget_from_json(const nlohmann::json& j) {
    SearchBudget b;
    b.global_timeout = j.value("global_timeout", b.global_timeout);
    b.sublevel_timeout = j.value("sublevel_timeout", b.sublevel_timeout);
    b.step_timeout = j.value("step_timeout", b.step_timeout);
    b.samples_per_expansion = j.value("e", b.samples_per_expansion);
    b.max_expansions = j.value("max_expansions", b.max_expansions);
    b.max_recursion_depth = j.value("max_recursion_depth", b.max_recursion_depth);
    b.per_level_expansions = j.value("per_level_expansions", b.per_level_expansions);
    return b;
}

}  // namespace

std::string manifest_to_json(const SuiteManifest& m) {
    return ordered_json{{"theorems", m.theorems}, {"budget", budget_to_json(m.budget)}}.dump(2) + "\n";
}

SuiteManifest manifest_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        SuiteManifest m;
        m.theorems = j.at("theorems").get<std::vector<std::string>>();
        m.budget = budget_from_json(j.value("budget", nlohmann::json::object()));
        validate(m.budget);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("manifest: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Running

namespace {

AttemptRecord run_attempt(SyntheticEnvironment& env, const std::string& theorem, size_t index, EngineKind engine,
                          const SearchBudget& budget, const SuiteConfig& config) {
    AttemptRecord rec;
    rec.index = index;
    rec.theorem = theorem;
    rec.engine = engine;
    try {
        auto world = env.world(theorem);
        const TrainingView view = engine == EngineKind::Recursive ? TrainingView::Recursive : TrainingView::Flat;
        // Both engines see the same proposal stream wherever their views agree.
        const uint64_t policy_seed = hash_combine(config.seed, hash_string(theorem));
        auto policy = synthetic_oracle_policy(env, world, view, config.noise, policy_seed);
        SearchOptions options{budget, nullptr};
        SearchResult result = engine == EngineKind::Recursive ? recursive_bfs(theorem, env, *policy, options)
                                                              : baseline_bfs(theorem, env, *policy, options);
        rec.outcome = result.outcome;
        rec.expansions = result.stats.expansions;
        rec.wall_time = result.stats.elapsed;
        rec.proof_length = result.stats.proof_length;
        if (result.proof) rec.proof = *result.proof;
        rec.abort_reason = result.abort_reason;
        const AuditReport audit =
            audit_trace(result.trace, config.audit ? &env : nullptr, theorem, budget.step_timeout);
        rec.audit_violations = audit.violations.size();
        for (const auto& v : audit.violations)
            rec.audit_messages.push_back("event " + std::to_string(v.event) + " " + v.rule + ": " + v.detail);
        if (config.keep_traces) rec.trace_jsonl = result.trace.to_jsonl();
    } catch (const Error& e) {
        rec.outcome = Outcome::Failed;
        rec.abort_reason = e.what();
    }
    return rec;
}

GroundTruthStats ground_truth_stats(SyntheticEnvironment& env, const std::vector<std::string>& theorems) {
    GroundTruthStats s;
    double flat_sum = 0.0;
    double sketch_sum = 0.0;
    for (const auto& id : theorems) {
        const ProofScript truth = env.world(id)->ground_truth();
        const SketchSet sketches = extract_sketches(truth);
        size_t longest = 0;
        for (const auto& sk : sketches.sketches) longest = std::max(longest, sk.steps.size());
        ++s.theorems;
        flat_sum += static_cast<double>(truth.lines.size());
        sketch_sum += static_cast<double>(longest);
        s.max_flat_length = std::max(s.max_flat_length, truth.lines.size());
        s.max_sketch_length = std::max(s.max_sketch_length, longest);
    }
    if (s.theorems > 0) {
        s.mean_flat_length = flat_sum / static_cast<double>(s.theorems);
        s.mean_max_sketch_length = sketch_sum / static_cast<double>(s.theorems);
    }
    return s;
}

void summarize(SuiteReport& report, const std::vector<EngineKind>& engines) {
    for (auto engine : engines) {
        EngineSummary s;
        s.engine = engine;
        for (const auto& a : report.attempts) {
            if (a.engine != engine) continue;
            ++s.attempts;
            switch (a.outcome) {
                case Outcome::Proved: ++s.proved; break;
                case Outcome::Failed: ++s.failed; break;
                case Outcome::Timeout: ++s.timeout; break;
            }
        }
        if (s.attempts > 0) s.pass_at_1 = static_cast<double>(s.proved) / static_cast<double>(s.attempts);
        report.engines.push_back(s);
    }
    report.audit_violations = 0;
    for (const auto& a : report.attempts) report.audit_violations += a.audit_violations;
}

}  // namespace

SuiteReport run_manifest(const SuiteManifest& manifest, const SuiteConfig& config) {
    validate(manifest.budget);
    SyntheticEnvironment env(config.costs);
    for (const auto& id : manifest.theorems) env.world(id);

    struct Task {
        size_t index;
        EngineKind engine;
    };
    std::vector<Task> tasks;
    for (size_t i = 0; i < manifest.theorems.size(); ++i)
        for (auto engine : config.engines) tasks.push_back({i, engine});

    SuiteReport report;
    report.attempts.resize(tasks.size());
    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr failure;
    const auto worker = [&] {
        while (true) {
            const size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            try {
                report.attempts[t] = run_attempt(env, manifest.theorems[tasks[t].index], tasks[t].index,
                                                 tasks[t].engine, manifest.budget, config);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const size_t threads = std::min<size_t>(static_cast<size_t>(std::max(1, config.parallelism)), tasks.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    report.ground_truth = ground_truth_stats(env, manifest.theorems);
    summarize(report, config.engines);
    return report;
}

SuiteReport run_suite(const SuiteConfig& config) { return run_manifest(generate_manifest(config), config); }

// ---------------------------------------------------------------------------
// Reporting

const EngineSummary* SuiteReport::summary(EngineKind engine) const {
    for (const auto& s : engines)
        if (s.engine == engine) return &s;
    return nullptr;
}

std::string SuiteReport::to_csv() const {
    std::string out = "id,engine,outcome,expansions,wall_time,proof_length\n";
    for (const auto& a : attempts) {
        out += '"' + a.theorem + "\"," + std::string(to_string(a.engine)) + ',' + std::string(to_string(a.outcome)) +
               ',' + std::to_string(a.expansions) + ',' + fmt(a.wall_time) + ',' + std::to_string(a.proof_length) +
               '\n';
    }
    return out;
}

namespace {

ordered_json histogram_json(const std::map<size_t, size_t>& h) {
    ordered_json j = ordered_json::object();
    for (const auto& [len, n] : h) j[std::to_string(len)] = n;
    return j;
}

ordered_json ground_truth_json(const GroundTruthStats& g) {
    return ordered_json{{"theorems", g.theorems},
                        {"mean_flat_length", g.mean_flat_length},
                        {"max_flat_length", g.max_flat_length},
                        {"mean_max_sketch_length", g.mean_max_sketch_length},
                        {"max_sketch_length", g.max_sketch_length}};
}

}  // namespace

ordered_json SuiteReport::to_json() const {
    ordered_json j;
    j["attempts"] = attempts.size();
    if (engines.empty()) {
        j["pass_at_1"] = nullptr;
    } else {
        ordered_json p = ordered_json::object();
        for (const auto& s : engines) p[std::string(to_string(s.engine))] = s.pass_at_1 ? ordered_json(*s.pass_at_1) : ordered_json();
        j["pass_at_1"] = p;
    }
    ordered_json es = ordered_json::array();
    for (const auto& s : engines) {
        es.push_back({{"engine", to_string(s.engine)},
                      {"attempts", s.attempts},
                      {"proved", s.proved},
                      {"failed", s.failed},
                      {"timeout", s.timeout},
                      {"pass_at_1", s.pass_at_1 ? ordered_json(*s.pass_at_1) : ordered_json()}});
    }
    j["engines"] = es;
    try {
        j["length_stats"] = length_stats_to_json(length_stats(*this));
    } catch (const Error&) {
        j["length_stats"] = nullptr;
    }
    j["ground_truth"] = ground_truth_json(ground_truth);
    j["audit_violations"] = audit_violations;
    ordered_json rows = ordered_json::array();
    for (const auto& a : attempts) {
        ordered_json r{{"index", a.index},
                       {"id", a.theorem},
                       {"engine", to_string(a.engine)},
                       {"outcome", to_string(a.outcome)},
                       {"expansions", a.expansions},
                       {"wall_time", a.wall_time},
                       {"proof_length", a.proof_length},
                       {"proof", a.proof}};
        if (!a.abort_reason.empty()) r["abort_reason"] = a.abort_reason;
        if (a.audit_violations) r["audit"] = a.audit_messages;
        rows.push_back(std::move(r));
    }
    j["results"] = rows;
    return j;
}

LengthStats length_stats(const SuiteReport& report) {
    LengthStats stats;
    stats.ground_truth = report.ground_truth;
    size_t total = 0;
    for (const auto& s : report.engines) {
        EngineLengthStats e;
        e.engine = s.engine;
        double sum = 0.0;
        for (const auto& a : report.attempts) {
            if (a.engine != s.engine || a.outcome != Outcome::Proved) continue;
            ++e.proved;
            ++e.histogram[a.proof_length];
            sum += static_cast<double>(a.proof_length);
            e.max = std::max(e.max, a.proof_length);
        }
        if (e.proved) e.mean = sum / static_cast<double>(e.proved);
        total += e.proved;
        stats.engines.push_back(std::move(e));
    }
    if (total == 0) throw Error(ErrorKind::NoProofs, "no engine proved any theorem");
    return stats;
}

ordered_json length_stats_to_json(const LengthStats& stats) {
    ordered_json j;
    ordered_json es = ordered_json::array();
    for (const auto& e : stats.engines) {
        es.push_back({{"engine", to_string(e.engine)},
                      {"proved", e.proved},
                      {"mean", e.mean},
                      {"max", e.max},
                      {"histogram", histogram_json(e.histogram)}});
    }
    j["engines"] = es;
    j["ground_truth"] = ground_truth_json(stats.ground_truth);
    return j;
}

SuiteReport report_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        SuiteReport r;
        std::vector<EngineKind> engines;
        for (const auto& e : j.at("engines")) engines.push_back(parse_engine(e.at("engine").get<std::string>()));
        for (const auto& row : j.at("results")) {
            AttemptRecord a;
            a.index = row.at("index").get<size_t>();
            a.theorem = row.at("id").get<std::string>();
            a.engine = parse_engine(row.at("engine").get<std::string>());
            const std::string outcome = row.at("outcome").get<std::string>();
            a.outcome = outcome == "PROVED" ? Outcome::Proved : outcome == "TIMEOUT" ? Outcome::Timeout : Outcome::Failed;
            a.expansions = row.at("expansions").get<int>();
            a.wall_time = row.at("wall_time").get<double>();
            a.proof_length = row.at("proof_length").get<size_t>();
            a.proof = row.value("proof", std::vector<std::string>{});
            a.abort_reason = row.value("abort_reason", std::string());
            if (row.contains("audit")) {
                a.audit_messages = row.at("audit").get<std::vector<std::string>>();
                a.audit_violations = a.audit_messages.size();
            }
            r.attempts.push_back(std::move(a));
        }
        const auto& g = j.at("ground_truth");
        r.ground_truth.theorems = g.at("theorems").get<size_t>();
        r.ground_truth.mean_flat_length = g.at("mean_flat_length").get<double>();
        r.ground_truth.max_flat_length = g.at("max_flat_length").get<size_t>();
        r.ground_truth.mean_max_sketch_length = g.at("mean_max_sketch_length").get<double>();
        r.ground_truth.max_sketch_length = g.at("max_sketch_length").get<size_t>();
        summarize(r, engines);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("report: ") + e.what());
    }
}

}  // namespace sketchsearch
