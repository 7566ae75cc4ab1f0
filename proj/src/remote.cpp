#include "sketchsearch/remote.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "sketchsearch/error.hpp"

namespace sketchsearch {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Transports

void LoopbackTransport::send(std::string_view line) {
    if (auto reply = handler_(line)) pending_.push_back(std::move(*reply));
}

std::string LoopbackTransport::receive(double) {
    if (pending_.empty()) throw TransportError("loopback peer sent nothing");
    std::string line = std::move(pending_.front());
    pending_.erase(pending_.begin());
    return line;
}

ProcessTransport::ProcessTransport(const std::vector<std::string>& argv) {
    if (argv.empty()) throw TransportError("empty command");
    int fds[2];
    if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
        throw TransportError(std::string("socketpair: ") + std::strerror(errno));
    const pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        throw TransportError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        setpgid(0, 0);
        dup2(fds[1], STDIN_FILENO);
        dup2(fds[1], STDOUT_FILENO);
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(fds[1]);
    pid_ = pid;
    to_child_ = fds[0];
    from_child_ = fds[0];
}

ProcessTransport::~ProcessTransport() {
    if (to_child_ >= 0) {
        shutdown(to_child_, SHUT_WR);
        close(to_child_);
    }
    if (pid_ > 0) {
        // Give the child a moment to exit on EOF before forcing it.
        bool exited = false;
        for (int i = 0; i < 50 && !exited; ++i) {
            exited = waitpid(pid_, nullptr, WNOHANG) == pid_;
            if (!exited) usleep(2000);
        }
        // Anything the child left behind goes too.
        kill(-pid_, SIGKILL);
        if (exited) return;
        kill(pid_, SIGKILL);
        waitpid(pid_, nullptr, 0);
    }
}

void ProcessTransport::send(std::string_view line) {
    std::string data(line);
    data.push_back('\n');
    size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(to_child_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("write: ") + std::strerror(errno));
        }
        off += static_cast<size_t>(n);
    }
}

std::string ProcessTransport::receive(double timeout_seconds) {
    using Clock = std::chrono::steady_clock;
    const auto deadline = Clock::now() + std::chrono::duration<double>(timeout_seconds);
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        int wait_ms = -1;
        if (timeout_seconds > 0) {
            const auto left = std::chrono::duration<double, std::milli>(deadline - Clock::now()).count();
            if (left <= 0) throw TransportError("timed out waiting for reply");
            wait_ms = static_cast<int>(std::ceil(left));
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = poll(&pfd, 1, wait_ms);
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("poll: ") + std::strerror(errno));
        }
        if (ready == 0) continue;
        char chunk[4096];
        const ssize_t n = read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("read: ") + std::strerror(errno));
        }
        if (n == 0) throw TransportError("peer closed the connection");
        buffer_.append(chunk, static_cast<size_t>(n));
    }
}

// ---------------------------------------------------------------------------
// Environment protocol

json state_to_json(const StateReport& s) {
    return json{{"id", s.id}, {"proof_state", s.proof_state}, {"proof_level", s.proof_level}, {"is_done", s.is_done}};
}

StateReport state_from_json(const json& j) {
    return StateReport{j.at("id").get<StateId>(), j.at("proof_state").get<std::string>(),
                       j.at("proof_level").get<int>(), j.at("is_done").get<bool>()};
}

namespace {

class RemoteSession final : public ProverSession {
public:
    RemoteSession(RemoteEnvironment& env, uint64_t id, StateReport root) : env_(env), id_(id), root_(std::move(root)) {}

    ~RemoteSession() override {
        try {
            env_.call(json{{"op", "close"}, {"session", id_}});
        } catch (...) {
        }
    }

    const StateReport& root() const override { return root_; }

    StepResult apply_step(StateId state, std::string_view step, double timeout) override {
        const json reply =
            env_.call(json{{"op", "apply"}, {"session", id_}, {"state", state}, {"step", step}, {"timeout", timeout}});
        try {
            if (reply.at("ok").get<bool>()) {
                StepSuccess ok;
                ok.state = state_from_json(reply.at("state"));
                if (reply.contains("skipped_goal") && !reply.at("skipped_goal").is_null())
                    ok.skipped_goal = state_from_json(reply.at("skipped_goal"));
                ok.cost = reply.value("cost", 0.0);
                return ok;
            }
            const std::string kind = reply.at("error").get<std::string>();
            const std::string message = reply.value("message", std::string());
            const double cost = reply.value("cost", 0.0);
            if (kind == "StepRejected") return StepError{StepError::Kind::Rejected, message, cost};
            if (kind == "Timeout") return StepError{StepError::Kind::Timeout, message, cost};
            if (kind == "DeadSession") throw Error(ErrorKind::DeadSession, message);
            throw Error(ErrorKind::ProtocolError, "unexpected error kind " + kind + ": " + message);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ProtocolError, std::string("malformed apply reply: ") + e.what());
        }
    }

private:
    RemoteEnvironment& env_;
    uint64_t id_;
    StateReport root_;
};

}  // namespace

RemoteEnvironment::RemoteEnvironment(std::shared_ptr<LineTransport> transport, double timeout_seconds)
    : transport_(std::move(transport)), timeout_(timeout_seconds) {
    const json reply = call(json{{"op", "hello"}, {"version", kProtocolVersion}});
    if (!reply.value("ok", false) || reply.value("version", 0) != kProtocolVersion)
        throw Error(ErrorKind::ProtocolError, "handshake refused: " + reply.dump());
}

json RemoteEnvironment::call(const json& request) {
    std::string line;
    try {
        transport_->send(request.dump());
        line = transport_->receive(timeout_);
    } catch (const TransportError& e) {
        throw Error(ErrorKind::EnvironmentDown, e.what());
    }
    try {
        json reply = json::parse(line);
        if (!reply.is_object() || !reply.contains("ok")) throw Error(ErrorKind::ProtocolError, "reply without ok: " + line);
        return reply;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProtocolError, std::string("unparsable reply: ") + e.what());
    }
}

std::unique_ptr<ProverSession> RemoteEnvironment::init_theorem(std::string_view statement) {
    const json reply = call(json{{"op", "init"}, {"theorem", statement}});
    if (!reply.at("ok").get<bool>()) {
        const std::string kind = reply.value("error", std::string());
        const std::string message = reply.value("message", std::string());
        if (kind == "UnknownTheorem") throw Error(ErrorKind::UnknownTheorem, message);
        if (kind == "SessionLimit") throw Error(ErrorKind::SessionLimit, message);
        throw Error(ErrorKind::ProtocolError, "init failed: " + kind + ": " + message);
    }
    try {
        return std::make_unique<RemoteSession>(*this, reply.at("session").get<uint64_t>(),
                                               state_from_json(reply.at("state")));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProtocolError, std::string("malformed init reply: ") + e.what());
    }
}

namespace {

json error_reply(std::string_view kind, std::string_view message, double cost = 0.0) {
    json j{{"ok", false}, {"error", kind}, {"message", message}};
    if (cost > 0) j["cost"] = cost;
    return j;
}

}  // namespace

std::optional<std::string> EnvironmentService::handle(std::string_view line) {
    json request;
    try {
        request = json::parse(line);
    } catch (const json::exception& e) {
        return error_reply("ProtocolError", e.what()).dump();
    }
    try {
        const std::string op = request.at("op").get<std::string>();
        if (op == "hello") {
            if (request.value("version", 0) != kProtocolVersion)
                return error_reply("ProtocolError", "unsupported version").dump();
            return json{{"ok", true}, {"version", kProtocolVersion}}.dump();
        }
        if (op == "init") {
            auto session = env_.init_theorem(request.at("theorem").get<std::string>());
            const uint64_t id = next_session_++;
            json reply{{"ok", true}, {"session", id}, {"state", state_to_json(session->root())}};
            sessions_[id] = std::move(session);
            return reply.dump();
        }
        if (op == "apply") {
            auto it = sessions_.find(request.at("session").get<uint64_t>());
            if (it == sessions_.end()) return error_reply("DeadSession", "unknown session").dump();
            const StepResult result =
                it->second->apply_step(request.at("state").get<StateId>(), request.at("step").get<std::string>(),
                                       request.value("timeout", 10.0));
            if (const auto* ok = std::get_if<StepSuccess>(&result)) {
                json reply{{"ok", true}, {"state", state_to_json(ok->state)}, {"skipped_goal", nullptr}, {"cost", ok->cost}};
                if (ok->skipped_goal) reply["skipped_goal"] = state_to_json(*ok->skipped_goal);
                return reply.dump();
            }
            const auto& err = std::get<StepError>(result);
            return error_reply(err.kind == StepError::Kind::Timeout ? "Timeout" : "StepRejected", err.message, err.cost)
                .dump();
        }
        if (op == "close") {
            if (!request.contains("session")) return std::nullopt;
            sessions_.erase(request.at("session").get<uint64_t>());
            return json{{"ok", true}}.dump();
        }
        return error_reply("ProtocolError", "unknown op " + op).dump();
    } catch (const Error& e) {
        std::string kind(to_string(e.kind()));
        return error_reply(kind, e.detail()).dump();
    } catch (const json::exception& e) {
        return error_reply("ProtocolError", e.what()).dump();
    }
}

void serve_environment(ProverEnvironment& env, std::istream& in, std::ostream& out) {
    EnvironmentService service(env);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto reply = service.handle(line);
        if (!reply) break;
        out << *reply << '\n' << std::flush;
    }
}

// ---------------------------------------------------------------------------
// Policy protocol

std::vector<ScoredStep> RemotePolicy::propose_steps(std::string_view context, std::string_view proof_state, int e) {
    if (e < 1) throw Error(ErrorKind::PolicyError, "e must be >= 1");
    const json request{{"context", context}, {"goal", proof_state}, {"n", e}, {"prompt", render_prompt(context, proof_state)}};
    std::string line;
    try {
        transport_->send(request.dump());
        line = transport_->receive(timeout_);
    } catch (const TransportError& err) {
        throw Error(ErrorKind::PolicyError, err.what());
    }
    std::vector<ScoredStep> steps;
    try {
        const json reply = json::parse(line);
        if (reply.contains("error")) throw Error(ErrorKind::PolicyError, "server error: " + reply.at("error").dump());
        for (const auto& s : reply.at("steps")) {
            const auto& lp = s.at("log_prob");
            if (!lp.is_number()) throw Error(ErrorKind::PolicyError, "log_prob is not a number");
            steps.push_back({s.at("text").get<std::string>(), lp.get<double>()});
        }
    } catch (const json::exception& err) {
        throw Error(ErrorKind::PolicyError, std::string("malformed reply: ") + err.what());
    }
    return normalize_proposals(std::move(steps), e);
}

std::string PolicyService::handle(std::string_view line) {
    try {
        const json request = json::parse(line);
        const int n = request.at("n").get<int>();
        const auto steps = policy_.propose_steps(request.value("context", std::string()),
                                                 request.at("goal").get<std::string>(), n);
        json out = json::array();
        for (const auto& s : steps) out.push_back({{"text", s.step}, {"log_prob", s.log_prob}});
        return json{{"steps", out}}.dump();
    } catch (const std::exception& e) {
        return json{{"error", e.what()}}.dump();
    }
}

void serve_policy(Policy& policy, std::istream& in, std::ostream& out) {
    PolicyService service(policy);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out << service.handle(line) << '\n' << std::flush;
    }
}

}  // namespace sketchsearch
