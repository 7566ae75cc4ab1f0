#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchsearch/environment.hpp"
#include "sketchsearch/policy.hpp"

namespace sketchsearch {

inline constexpr int kProtocolVersion = 1;

/// Raised by transports when the peer is gone, times out, or sends
/// something that is not a line.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newline-delimited message channel. One request in flight at a time.
class LineTransport {
public:
    virtual ~LineTransport() = default;
    virtual void send(std::string_view line) = 0;
    /// Next line without its newline. Throws TransportError on EOF or when
    /// `timeout_seconds` (if > 0) passes first.
    virtual std::string receive(double timeout_seconds) = 0;
};

/// Answers each line by calling a function; for in-process servers and tests.
class LoopbackTransport final : public LineTransport {
public:
    using Handler = std::function<std::optional<std::string>(std::string_view)>;
    explicit LoopbackTransport(Handler handler) : handler_(std::move(handler)) {}
    void send(std::string_view line) override;
    std::string receive(double timeout_seconds) override;

private:
    Handler handler_;
    std::vector<std::string> pending_;
};

/// Talks to a child process over its stdin and stdout.
class ProcessTransport final : public LineTransport {
public:
    explicit ProcessTransport(const std::vector<std::string>& argv);
    ~ProcessTransport() override;
    ProcessTransport(const ProcessTransport&) = delete;
    ProcessTransport& operator=(const ProcessTransport&) = delete;

    void send(std::string_view line) override;
    std::string receive(double timeout_seconds) override;

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// Environment client. Transport failures surface as
/// Error(EnvironmentDown), malformed replies as Error(ProtocolError).
class RemoteEnvironment final : public ProverEnvironment {
public:
    explicit RemoteEnvironment(std::shared_ptr<LineTransport> transport, double timeout_seconds = 60.0);
    std::unique_ptr<ProverSession> init_theorem(std::string_view statement) override;

    nlohmann::json call(const nlohmann::json& request);

private:
    std::shared_ptr<LineTransport> transport_;
    double timeout_;
};

/// Server side of the environment protocol over any ProverEnvironment.
class EnvironmentService {
public:
    explicit EnvironmentService(ProverEnvironment& env) : env_(env) {}
    /// Response line, or nullopt once the peer closed the connection.
    std::optional<std::string> handle(std::string_view line);

private:
    ProverEnvironment& env_;
    std::map<uint64_t, std::unique_ptr<ProverSession>> sessions_;
    uint64_t next_session_ = 1;
};

void serve_environment(ProverEnvironment& env, std::istream& in, std::ostream& out);

/// Policy client: sends `{"context","goal","n","prompt"}` and reads
/// `{"steps":[{"text","log_prob"}]}`. Every failure is Error(PolicyError).
class RemotePolicy final : public Policy {
public:
    explicit RemotePolicy(std::shared_ptr<LineTransport> transport, double timeout_seconds = 60.0)
        : transport_(std::move(transport)), timeout_(timeout_seconds) {}
    std::vector<ScoredStep> propose_steps(std::string_view context, std::string_view proof_state, int e) override;

private:
    std::shared_ptr<LineTransport> transport_;
    double timeout_;
};

class PolicyService {
public:
    explicit PolicyService(Policy& policy) : policy_(policy) {}
    std::string handle(std::string_view line);

private:
    Policy& policy_;
};

void serve_policy(Policy& policy, std::istream& in, std::ostream& out);

nlohmann::json state_to_json(const StateReport& state);
StateReport state_from_json(const nlohmann::json& j);

}  // namespace sketchsearch
