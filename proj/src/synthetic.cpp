#include "sketchsearch/synthetic.hpp"

#include <charconv>
#include <cstdio>

#include "sketchsearch/error.hpp"
#include "sketchsearch/random.hpp"
#include "sketchsearch/sketch.hpp"

namespace sketchsearch {

namespace {

std::string hex8(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    if (s.empty()) return out;
    size_t pos = 0;
    while (true) {
        size_t next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            out.push_back(s.substr(pos));
            return out;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
}

}  // namespace

void validate(const SyntheticTheoremSpec& spec) {
    const auto fail = [](const std::string& what) { throw Error(ErrorKind::SpecOutOfRange, what); };
    if (spec.depth < 1 || spec.depth > kMaxSyntheticDepth) fail("L must be in [1, 8]");
    if (spec.branching < 2 || spec.branching > kMaxSyntheticBranching) fail("b must be in [2, 16]");
    if (spec.sketch_len < 1 || spec.sketch_len > kMaxSketchLen) fail("len must be in [1, 16]");
    if (spec.depth > 1 && spec.sketch_len < 2) fail("multi-level theorems need len >= 2");
    if (!(spec.false_conjecture_rate >= 0.0 && spec.false_conjecture_rate <= 1.0)) fail("fcr must be in [0, 1]");
    if (spec.distractor_depth < 0 || spec.distractor_depth > kMaxDistractorDepth) fail("dd must be in [0, 8]");
}

std::string format_theorem_id(const SyntheticTheoremSpec& spec) {
    return "syn:seed=" + std::to_string(spec.seed) + ",L=" + std::to_string(spec.depth) +
           ",b=" + std::to_string(spec.branching) + ",len=" + std::to_string(spec.sketch_len) +
           ",fcr=" + format_double(spec.false_conjecture_rate) + ",dd=" + std::to_string(spec.distractor_depth);
}

SyntheticTheoremSpec parse_theorem_id(std::string_view id) {
    constexpr std::string_view prefix = "syn:";
    const auto bad = [&](const std::string& why) {
        throw Error(ErrorKind::UnknownTheorem, "'" + std::string(id) + "': " + why);
    };
    if (!id.starts_with(prefix)) bad("not a synthetic theorem id");
    SyntheticTheoremSpec spec;
    for (auto field : split(id.substr(prefix.size()), ',')) {
        const size_t eq = field.find('=');
        if (eq == std::string_view::npos) bad("field without '='");
        const auto key = field.substr(0, eq);
        const auto value = field.substr(eq + 1);
        bool ok = false;
        if (key == "seed") ok = parse_number(value, spec.seed);
        else if (key == "L") ok = parse_number(value, spec.depth);
        else if (key == "b") ok = parse_number(value, spec.branching);
        else if (key == "len") ok = parse_number(value, spec.sketch_len);
        else if (key == "fcr") ok = parse_number(value, spec.false_conjecture_rate);
        else if (key == "dd") ok = parse_number(value, spec.distractor_depth);
        else bad("unknown field '" + std::string(key) + "'");
        if (!ok) bad("bad value for '" + std::string(key) + "'");
    }
    try {
        validate(spec);
    } catch (const Error& e) {
        bad(e.what());
    }
    return spec;
}

SyntheticWorld::SyntheticWorld(SyntheticTheoremSpec spec, StepCostModel costs) : spec_(spec), costs_(costs) {
    validate(spec_);
    Rng rng(hash_combine(spec_.seed, 0x5eed));
    const int len = spec_.sketch_len;
    for (int g = 0; g < spec_.depth; ++g) {
        const bool has_conjecture = g + 1 < spec_.depth;
        const int pos = has_conjecture ? static_cast<int>(rng.between(0, len - 2)) : -1;
        conjecture_pos_.push_back(pos);
        std::vector<std::string> steps;
        for (int k = 0; k < len; ++k) {
            if (k == pos) steps.push_back("have \"" + goal_name(g + 1) + "\"");
            else if (k == len - 1) steps.push_back("done");
            else steps.push_back("apply (r_" + hex8(hash_combine(hash_combine(spec_.seed, 0x7a), g * 1000 + k)) + ")");
        }
        steps_.push_back(std::move(steps));
    }
}

std::string SyntheticWorld::goal_name(int goal) const {
    const std::string tag = goal == 0 ? "thm_" : "cj_";
    return tag + hex8(hash_combine(hash_combine(spec_.seed, 0x90a1), static_cast<uint64_t>(goal)));
}

std::string SyntheticWorld::false_goal_name(int goal, int progress) const {
    return "fcj_" + hex8(hash_combine(hash_combine(spec_.seed, 0xfa15e), static_cast<uint64_t>(goal * 1000 + progress)));
}

bool SyntheticWorld::offers_false_conjecture(int goal, int progress) const {
    if (progress > spec_.sketch_len - 2) return false;
    const uint64_t h = hash_combine(hash_combine(spec_.seed, 0xfc), static_cast<uint64_t>(goal * 1000 + progress));
    return unit_interval(h) < spec_.false_conjecture_rate;
}

ProofScript SyntheticWorld::ground_truth() const {
    ProofScript script;
    script.theorem = statement();
    // Goals form a chain, so the flat proof is each sketch with the next
    // goal's sketch inlined after its conjecture step.
    auto emit = [&](auto&& self, int goal, int level) -> void {
        for (int k = 0; k < spec_.sketch_len; ++k) {
            script.lines.push_back({steps_[goal][k], level});
            if (k == conjecture_pos_[goal]) self(self, goal + 1, level + 1);
        }
    };
    emit(emit, 0, 1);
    return script;
}

SyntheticWorld::Key SyntheticWorld::decode(std::string_view text) {
    const auto parts = split(text, '|');
    if (parts.size() != 3) throw Error(ErrorKind::DeadSession, "malformed state key '" + std::string(text) + "'");
    Key key;
    if (!parse_number(parts[0], key.base)) throw Error(ErrorKind::DeadSession, "malformed state key");
    for (auto f : split(parts[1], ',')) {
        Frame frame;
        if (f.size() < 4 || (f[0] != 'T' && f[0] != 'F')) throw Error(ErrorKind::DeadSession, "malformed frame");
        frame.false_goal = f[0] == 'F';
        const size_t dot = f.find('.');
        if (dot == std::string_view::npos || !parse_number(f.substr(1, dot - 1), frame.goal) ||
            !parse_number(f.substr(dot + 1), frame.progress))
            throw Error(ErrorKind::DeadSession, "malformed frame");
        key.frames.push_back(frame);
    }
    for (auto j : split(parts[2], '.')) {
        int choice = 0;
        if (!parse_number(j, choice)) throw Error(ErrorKind::DeadSession, "malformed junk path");
        key.junk.push_back(choice);
    }
    return key;
}

std::string SyntheticWorld::encode(const Key& key) {
    std::string out = std::to_string(key.base) + "|";
    for (size_t i = 0; i < key.frames.size(); ++i) {
        if (i) out.push_back(',');
        out.push_back(key.frames[i].false_goal ? 'F' : 'T');
        out += std::to_string(key.frames[i].goal) + "." + std::to_string(key.frames[i].progress);
    }
    out.push_back('|');
    for (size_t i = 0; i < key.junk.size(); ++i) {
        if (i) out.push_back('.');
        out += std::to_string(key.junk[i]);
    }
    return out;
}

std::string SyntheticWorld::root_key() const { return encode(Key{1, {Frame{false, 0, 0}}, {}}); }

int SyntheticWorld::level(std::string_view key) const {
    const Key k = decode(key);
    return k.frames.empty() ? k.base : k.base + static_cast<int>(k.frames.size()) - 1;
}

bool SyntheticWorld::is_done(std::string_view key) const { return decode(key).frames.empty(); }

std::string SyntheticWorld::distractor_step(std::string_view key, int choice) const {
    return "apply (x_" + hex8(hash_combine(hash_combine(spec_.seed, hash_string(key)), static_cast<uint64_t>(choice))) +
           ")";
}

std::vector<std::string> SyntheticWorld::distractor_steps(std::string_view key) const {
    const Key k = decode(key);
    std::vector<std::string> out;
    if (k.frames.empty() || static_cast<int>(k.junk.size()) >= spec_.distractor_depth) return out;
    for (int j = 0; j < spec_.branching; ++j) out.push_back(distractor_step(key, j));
    return out;
}

std::optional<std::string> SyntheticWorld::false_conjecture(std::string_view key) const {
    const Key k = decode(key);
    if (k.frames.empty() || !k.junk.empty()) return std::nullopt;
    const Frame& top = k.frames.back();
    if (top.false_goal || !offers_false_conjecture(top.goal, top.progress)) return std::nullopt;
    return "have \"" + false_goal_name(top.goal, top.progress) + "\"";
}

std::vector<std::string> SyntheticWorld::available_steps(std::string_view key) const {
    const Key k = decode(key);
    std::vector<std::string> out;
    if (k.frames.empty()) return out;
    if (k.junk.empty() && !k.frames.back().false_goal) {
        const Frame& top = k.frames.back();
        const std::string& truth = steps_[top.goal][top.progress];
        out.push_back(truth);
        if (top.progress == conjecture_pos_[top.goal]) out.push_back(with_sorry(truth));
    }
    if (auto fc = false_conjecture(key)) {
        out.push_back(*fc);
        out.push_back(with_sorry(*fc));
    }
    for (auto& d : distractor_steps(key)) out.push_back(std::move(d));
    return out;
}

std::optional<SyntheticWorld::Transition> SyntheticWorld::apply(std::string_view key_text,
                                                                std::string_view step) const {
    Key key = decode(key_text);
    if (key.frames.empty()) return std::nullopt;

    if (static_cast<int>(key.junk.size()) < spec_.distractor_depth) {
        for (int j = 0; j < spec_.branching; ++j) {
            if (step == distractor_step(key_text, j)) {
                Key next = key;
                next.junk.push_back(j);
                return Transition{encode(next), std::nullopt};
            }
        }
    }
    if (!key.junk.empty() || key.frames.back().false_goal) return std::nullopt;

    const Frame top = key.frames.back();
    const int level_now = key.base + static_cast<int>(key.frames.size()) - 1;
    const std::string& truth = steps_[top.goal][top.progress];
    const bool truth_is_conjecture = top.progress == conjecture_pos_[top.goal];

    if (step == truth) {
        Key next = key;
        if (truth_is_conjecture) {
            next.frames.back().progress += 1;
            next.frames.push_back(Frame{false, top.goal + 1, 0});
        } else if (top.progress == spec_.sketch_len - 1) {
            next.frames.pop_back();
        } else {
            next.frames.back().progress += 1;
        }
        return Transition{encode(next), std::nullopt};
    }
    if (truth_is_conjecture && has_sorry_suffix(step) && strip_sorry(step) == truth) {
        Key next = key;
        next.frames.back().progress += 1;
        Key skipped{level_now + 1, {Frame{false, top.goal + 1, 0}}, {}};
        return Transition{encode(next), encode(skipped)};
    }
    if (offers_false_conjecture(top.goal, top.progress)) {
        const std::string fc = "have \"" + false_goal_name(top.goal, top.progress) + "\"";
        const Frame false_frame{true, top.goal, top.progress};
        if (step == fc) {
            Key next = key;
            next.frames.back().progress += 1;
            next.frames.push_back(false_frame);
            return Transition{encode(next), std::nullopt};
        }
        if (has_sorry_suffix(step) && strip_sorry(step) == fc) {
            Key next = key;
            next.frames.back().progress += 1;
            Key skipped{level_now + 1, {false_frame}, {}};
            return Transition{encode(next), encode(skipped)};
        }
    }
    return std::nullopt;
}

std::string SyntheticWorld::render(std::string_view key_text) const {
    const Key key = decode(key_text);
    std::string out = "[" + std::string(key_text) + "] ";
    if (key.frames.empty()) return out + "no goals";
    const Frame& top = key.frames.back();
    if (top.false_goal) {
        out += "goal " + false_goal_name(top.goal, top.progress);
    } else {
        out += "goal " + goal_name(top.goal) + " (" + std::to_string(top.progress) + "/" +
               std::to_string(spec_.sketch_len) + ")";
    }
    for (size_t i = key.frames.size() - 1; i-- > 0;) {
        const Frame& f = key.frames[i];
        out += " ; then " + (f.false_goal ? false_goal_name(f.goal, f.progress) : goal_name(f.goal));
    }
    if (!key.junk.empty()) out += " ; junk " + std::to_string(key.junk.size());
    return out;
}

std::optional<std::string> SyntheticWorld::key_of(std::string_view proof_state) {
    if (!proof_state.starts_with('[')) return std::nullopt;
    const size_t close = proof_state.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    return std::string(proof_state.substr(1, close - 1));
}

double SyntheticWorld::step_cost(std::string_view key, std::string_view step) const {
    const double u = unit_interval(hash_combine(hash_combine(spec_.seed, hash_string(key)), hash_string(step)));
    return costs_.min_seconds + (costs_.max_seconds - costs_.min_seconds) * u;
}

namespace {

class SyntheticSession final : public ProverSession {
public:
    explicit SyntheticSession(std::shared_ptr<const SyntheticWorld> world) : world_(std::move(world)) {
        root_ = report(world_->root_key());
    }

    const StateReport& root() const override { return root_; }

    StepResult apply_step(StateId state, std::string_view step, double timeout) override {
        if (state >= keys_.size()) throw Error(ErrorKind::DeadSession, "unknown state id " + std::to_string(state));
        const std::string key = keys_[state];
        const double cost = world_->step_cost(key, step);
        if (cost >= timeout) return StepError{StepError::Kind::Timeout, "step timed out", timeout};
        auto transition = world_->apply(key, step);
        if (!transition)
            return StepError{StepError::Kind::Rejected, "Failed to apply proof step: " + std::string(step), cost};
        StepSuccess ok;
        ok.state = report(transition->next);
        if (transition->skipped) ok.skipped_goal = report(*transition->skipped);
        ok.cost = cost;
        return ok;
    }

private:
    StateReport report(const std::string& key) {
        auto [it, inserted] = ids_.try_emplace(key, keys_.size());
        if (inserted) keys_.push_back(key);
        return StateReport{it->second, world_->render(key), world_->level(key), world_->is_done(key)};
    }

    std::shared_ptr<const SyntheticWorld> world_;
    std::map<std::string, StateId> ids_;
    std::vector<std::string> keys_;
    StateReport root_;
};

}  // namespace

SyntheticEnvironment::SyntheticEnvironment(StepCostModel costs, size_t max_sessions)
    : costs_(costs), max_sessions_(max_sessions) {}

std::shared_ptr<const SyntheticWorld> SyntheticEnvironment::world(std::string_view statement) {
    const SyntheticTheoremSpec spec = parse_theorem_id(statement);
    const std::string canonical = format_theorem_id(spec);
    std::lock_guard lock(mutex_);
    auto it = worlds_.find(canonical);
    if (it == worlds_.end()) it = worlds_.emplace(canonical, std::make_shared<const SyntheticWorld>(spec, costs_)).first;
    return it->second;
}

std::unique_ptr<ProverSession> SyntheticEnvironment::init_theorem(std::string_view statement) {
    auto w = world(statement);
    {
        std::lock_guard lock(mutex_);
        if (sessions_opened_ >= max_sessions_)
            throw Error(ErrorKind::SessionLimit, std::to_string(max_sessions_) + " sessions already opened");
        ++sessions_opened_;
    }
    return std::make_unique<SyntheticSession>(std::move(w));
}

GeneratedTheorem generate_synthetic_theorem(const SyntheticTheoremSpec& spec, StepCostModel costs) {
    auto world = std::make_shared<const SyntheticWorld>(spec, costs);
    return GeneratedTheorem{world->statement(), world->ground_truth(), world};
}

}  // namespace sketchsearch
