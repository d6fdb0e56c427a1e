#pragma once

#include "tacsearch/core.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tacsearch {

using SessionId = std::uint64_t;

struct ProverSession {
    SessionId id = 0;
    Theorem theorem;
    TacticState initial_state;
};

/// Backend contract. Implementations provide the do_* hooks; the public
/// entry points enforce the shared rules (canonical states, self-loop
/// rewritten to no-progress, closed-session checks).
class Prover {
public:
    virtual ~Prover() = default;

    ProverSession open_session(const Theorem& theorem);
    ApplyOutcome apply_tactic(const ProverSession& session, const TacticState& state,
                              const Tactic& tactic);
    /// Idempotent.
    void close_session(const ProverSession& session);

    bool is_open(const ProverSession& session) const;
    std::size_t live_sessions() const;

protected:
    virtual TacticState do_open(SessionId id, const Theorem& theorem) = 0;
    virtual ApplyOutcome do_apply(SessionId id, const TacticState& state,
                                  const Tactic& tactic) = 0;
    virtual void do_close(SessionId id) = 0;

private:
    mutable std::mutex mutex_;
    std::unordered_set<SessionId> open_;
    std::atomic<SessionId> next_id_{1};
};

/// Closes the session when it goes out of scope.
class SessionGuard {
public:
    SessionGuard(Prover& prover, ProverSession session)
        : prover_(prover), session_(std::move(session)) {}
    ~SessionGuard() { prover_.close_session(session_); }

    SessionGuard(const SessionGuard&) = delete;
    SessionGuard& operator=(const SessionGuard&) = delete;

    const ProverSession& session() const { return session_; }

private:
    Prover& prover_;
    ProverSession session_;
};

// -- scenario prover ---------------------------------------------------------

struct ScenarioOutcome {
    enum class Kind { proved, error, state };
    Kind kind = Kind::error;
    std::string text;  // error message or (canonical) next state
};

struct ScenarioTheorem {
    std::string initial_state;
    /// (canonical state, tactic) -> outcome
    std::map<std::pair<std::string, std::string>, ScenarioOutcome> transitions;
    std::map<std::pair<std::string, std::string>, int> delay_ms;
};

struct Scenario {
    std::map<std::string, ScenarioTheorem> theorems;
    /// Non-fatal notes from loading, e.g. states that had to be canonicalized.
    std::vector<std::string> warnings;

    std::size_t size() const { return theorems.size(); }
    std::size_t transition_count() const;
};

/// Parses a scenario document (JSON). Errors: parse_error (with line and
/// column), duplicate_name.
Scenario parse_scenario(std::string_view document);
Scenario load_scenario(const std::filesystem::path& path);

/// Deterministic table-driven prover. Safe for concurrent sessions.
class ScenarioProver : public Prover {
public:
    explicit ScenarioProver(Scenario scenario,
                            std::chrono::milliseconds call_timeout = std::chrono::seconds(60));

    const Scenario& scenario() const { return scenario_; }

protected:
    TacticState do_open(SessionId id, const Theorem& theorem) override;
    ApplyOutcome do_apply(SessionId id, const TacticState& state, const Tactic& tactic) override;
    void do_close(SessionId id) override;

private:
    Scenario scenario_;
    std::chrono::milliseconds call_timeout_;
    mutable std::mutex mutex_;
    std::unordered_map<SessionId, const ScenarioTheorem*> sessions_;
};

// -- live prover over a line-delimited wire protocol -------------------------

/// A child process with piped stdin/stdout. Killed and reaped on destruction.
class ChildProcess {
public:
    explicit ChildProcess(const std::vector<std::string>& argv);
    ~ChildProcess();

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    /// Writes one line (a trailing newline is appended). False on a broken pipe.
    bool write_line(const std::string& line);
    /// Blocks for the next line; false at end of stream.
    bool read_line(std::string& line);
    void close_stdin();
    void terminate();
    int pid() const { return pid_; }

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
    std::mutex write_mutex_;
};

/// JSON-lines request/response channel. Requests carry an id; a reader
/// thread routes responses back to waiters by id, so responses may arrive
/// in any order.
class ProtocolChannel {
public:
    explicit ProtocolChannel(const std::vector<std::string>& argv);
    ~ProtocolChannel();

    /// Sends `request` (an object without "id"; one is assigned) and waits up
    /// to `timeout` for the matching response. Throws Error(backend_timeout)
    /// or Error(backend_unavailable).
    nlohmann::json call(nlohmann::json request, std::chrono::milliseconds timeout);

    bool alive() const { return !dead_; }

private:
    void reader_loop();

    std::unique_ptr<ChildProcess> process_;
    std::thread reader_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::uint64_t, nlohmann::json> responses_;
    std::uint64_t next_id_ = 1;
    std::atomic<bool> dead_{false};
};

struct LiveProverOptions {
    std::vector<std::string> command;
    std::size_t pool_size = 1;
    std::chrono::milliseconds call_timeout = std::chrono::seconds(60);
};

/// Adapter for a live interactive prover speaking the wire protocol:
///   request  {id, op: "init"|"apply"|"close", theorem?, session?, state_id?, tactic?}
///   response {id, status: "open"|"proved"|"error", session?, state?, state_id?, message?}
/// Sessions are distributed round-robin across `pool_size` subprocesses.
class LiveProver : public Prover {
public:
    explicit LiveProver(LiveProverOptions options);
    ~LiveProver() override;

protected:
    TacticState do_open(SessionId id, const Theorem& theorem) override;
    ApplyOutcome do_apply(SessionId id, const TacticState& state, const Tactic& tactic) override;
    void do_close(SessionId id) override;

private:
    struct RemoteSession {
        ProtocolChannel* channel = nullptr;
        std::string remote_id;
        std::map<std::string, std::string> state_ids;  // canonical text -> server state id
    };

    LiveProverOptions options_;
    std::vector<std::unique_ptr<ProtocolChannel>> channels_;
    std::atomic<std::size_t> round_robin_{0};
    std::mutex mutex_;
    std::unordered_map<SessionId, RemoteSession> sessions_;
};

}  // namespace tacsearch
