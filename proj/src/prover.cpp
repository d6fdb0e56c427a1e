#include "tacsearch/prover.hpp"

#include "detail.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace tacsearch {

using nlohmann::json;

// -- Prover ------------------------------------------------------------------

ProverSession Prover::open_session(const Theorem& theorem) {
    const SessionId id = next_id_.fetch_add(1);
    TacticState initial = do_open(id, theorem);
    {
        std::lock_guard lock(mutex_);
        open_.insert(id);
    }
    return ProverSession{id, theorem, std::move(initial)};
}

ApplyOutcome Prover::apply_tactic(const ProverSession& session, const TacticState& state,
                                  const Tactic& tactic) {
    if (!is_open(session))
        throw Error(ErrorCode::session_closed,
                    "session " + std::to_string(session.id) + " is closed");
    ApplyOutcome outcome = do_apply(session.id, state, tactic);
    if (outcome.kind == ApplyOutcome::Kind::new_state) {
        // Backends may hand back raw text; re-canonicalizing is a no-op otherwise.
        outcome.state = TacticState(outcome.state.text());
        if (outcome.state == state)
            return ApplyOutcome::failed(FailureKind::no_progress, "tactic did not change the state");
    }
    return outcome;
}

void Prover::close_session(const ProverSession& session) {
    {
        std::lock_guard lock(mutex_);
        if (open_.erase(session.id) == 0)
            return;
    }
    do_close(session.id);
}

bool Prover::is_open(const ProverSession& session) const {
    std::lock_guard lock(mutex_);
    return open_.count(session.id) > 0;
}

std::size_t Prover::live_sessions() const {
    std::lock_guard lock(mutex_);
    return open_.size();
}

// -- scenario loading --------------------------------------------------------

std::size_t Scenario::transition_count() const {
    std::size_t total = 0;
    for (const auto& [name, thm] : theorems)
        total += thm.transitions.size();
    return total;
}

namespace {

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < text.size() && i < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

}  // namespace

namespace detail {

nlohmann::json parse_json_document(std::string_view document, const std::string& what) {
    try {
        return json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        auto [line, column] = line_and_column(document, e.byte > 0 ? e.byte - 1 : 0);
        std::ostringstream os;
        os << what << ": parse error at line " << line << ", column " << column << ": "
           << e.what();
        throw Error(ErrorCode::parse_error, os.str());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace detail

namespace {

std::string require_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw Error(ErrorCode::parse_error, where + ": missing string field '" + key + "'");
    return it->get<std::string>();
}

std::string canonical_with_warning(const std::string& raw, const std::string& where,
                                   std::vector<std::string>& warnings) {
    std::string canonical = canonicalize_state(raw);
    if (canonical != raw)
        warnings.push_back(where + ": non-canonical state text was normalized");
    return canonical;
}

ScenarioOutcome parse_outcome(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    if (t == "proved")
        return {ScenarioOutcome::Kind::proved, {}};
    auto after_prefix = [&](std::string_view prefix) -> std::optional<std::string> {
        if (text.rfind(prefix, 0) == 0) {
            std::string rest = text.substr(prefix.size());
            if (!rest.empty() && rest.front() == ' ')
                rest.erase(0, 1);
            return rest;
        }
        return std::nullopt;
    };
    if (auto msg = after_prefix("error:"))
        return {ScenarioOutcome::Kind::error, trim(*msg)};
    if (auto state = after_prefix("state:"))
        return {ScenarioOutcome::Kind::state, *state};
    throw Error(ErrorCode::parse_error,
                where + ": outcome must be 'proved', 'error: <msg>' or 'state: <text>'");
}

}  // namespace

Scenario parse_scenario(std::string_view document) {
    const json doc = detail::parse_json_document(document, "scenario");
    const json* list = &doc;
    if (doc.is_object()) {
        auto it = doc.find("theorems");
        if (it == doc.end())
            throw Error(ErrorCode::parse_error, "scenario: missing 'theorems' list");
        list = &*it;
    }
    if (!list->is_array())
        throw Error(ErrorCode::parse_error, "scenario: 'theorems' must be a list");

    Scenario scenario;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const json& entry = (*list)[i];
        const std::string where = "scenario theorem #" + std::to_string(i);
        if (!entry.is_object())
            throw Error(ErrorCode::parse_error, where + ": expected an object");
        const std::string name = require_string(entry, "name", where);
        if (name.empty())
            throw Error(ErrorCode::parse_error, where + ": empty name");
        if (scenario.theorems.count(name))
            throw Error(ErrorCode::duplicate_name, "scenario: duplicate theorem '" + name + "'");

        ScenarioTheorem thm;
        thm.initial_state = canonical_with_warning(require_string(entry, "initial_state", where),
                                                   name + " initial_state", scenario.warnings);
        if (auto tr = entry.find("transitions"); tr != entry.end()) {
            if (!tr->is_array())
                throw Error(ErrorCode::parse_error, where + ": 'transitions' must be a list");
            for (std::size_t j = 0; j < tr->size(); ++j) {
                const json& t = (*tr)[j];
                const std::string twhere = name + " transition #" + std::to_string(j);
                std::string state =
                    canonical_with_warning(require_string(t, "state", twhere), twhere,
                                           scenario.warnings);
                std::string tactic = trim(require_string(t, "tactic", twhere));
                ScenarioOutcome outcome = parse_outcome(require_string(t, "outcome", twhere), twhere);
                if (outcome.kind == ScenarioOutcome::Kind::state)
                    outcome.text = canonical_with_warning(outcome.text, twhere + " target",
                                                          scenario.warnings);
                auto key = std::make_pair(state, tactic);
                if (auto d = t.find("delay_ms"); d != t.end()) {
                    if (!d->is_number_integer() || d->get<int>() < 0)
                        throw Error(ErrorCode::parse_error,
                                    twhere + ": delay_ms must be a non-negative integer");
                    thm.delay_ms[key] = d->get<int>();
                }
                thm.transitions[key] = std::move(outcome);
            }
        }
        scenario.theorems.emplace(name, std::move(thm));
    }
    return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(detail::read_file(path));
}

// -- ScenarioProver ----------------------------------------------------------

ScenarioProver::ScenarioProver(Scenario scenario, std::chrono::milliseconds call_timeout)
    : scenario_(std::move(scenario)), call_timeout_(call_timeout) {}

TacticState ScenarioProver::do_open(SessionId id, const Theorem& theorem) {
    const std::string& key = theorem.env.empty() ? theorem.name : theorem.env;
    auto it = scenario_.theorems.find(key);
    if (it == scenario_.theorems.end())
        throw Error(ErrorCode::theorem_not_found, "scenario has no theorem '" + key + "'");
    std::lock_guard lock(mutex_);
    sessions_[id] = &it->second;
    return TacticState(it->second.initial_state);
}

ApplyOutcome ScenarioProver::do_apply(SessionId id, const TacticState& state,
                                      const Tactic& tactic) {
    const ScenarioTheorem* thm = nullptr;
    {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw Error(ErrorCode::session_closed, "unknown session");
        thm = it->second;
    }
    const auto key = std::make_pair(state.text(), trim(tactic.text));
    if (auto d = thm->delay_ms.find(key); d != thm->delay_ms.end()) {
        const auto delay = std::chrono::milliseconds(d->second);
        if (delay > call_timeout_) {
            std::this_thread::sleep_for(call_timeout_);
            return ApplyOutcome::failed(FailureKind::backend_timeout, "per-call limit exceeded");
        }
        std::this_thread::sleep_for(delay);
    }
    auto it = thm->transitions.find(key);
    if (it == thm->transitions.end())
        return ApplyOutcome::failed(FailureKind::prover_error, "unknown tactic");
    switch (it->second.kind) {
    case ScenarioOutcome::Kind::proved: return ApplyOutcome::proved();
    case ScenarioOutcome::Kind::error:
        return ApplyOutcome::failed(FailureKind::prover_error, it->second.text);
    case ScenarioOutcome::Kind::state: return ApplyOutcome::new_state(TacticState(it->second.text));
    }
    return ApplyOutcome::failed(FailureKind::prover_error, "unknown tactic");
}

void ScenarioProver::do_close(SessionId id) {
    std::lock_guard lock(mutex_);
    sessions_.erase(id);
}

// -- ChildProcess ------------------------------------------------------------

ChildProcess::ChildProcess(const std::vector<std::string>& argv) {
    if (argv.empty())
        throw Error(ErrorCode::backend_unavailable, "empty prover command");

    // Socket pairs instead of pipes so writes can use MSG_NOSIGNAL.
    int in_pair[2], out_pair[2];
    if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_pair) != 0)
        throw Error(ErrorCode::backend_unavailable, std::strerror(errno));
    if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, out_pair) != 0) {
        ::close(in_pair[0]);
        ::close(in_pair[1]);
        throw Error(ErrorCode::backend_unavailable, std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pair[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pair[1], STDOUT_FILENO);

    std::vector<char*> args;
    for (const auto& a : argv)
        args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    pid_t pid = -1;
    const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pair[1]);
    ::close(out_pair[1]);
    if (rc != 0) {
        ::close(in_pair[0]);
        ::close(out_pair[0]);
        throw Error(ErrorCode::backend_unavailable,
                    "cannot start '" + argv[0] + "': " + std::strerror(rc));
    }
    pid_ = pid;
    to_child_ = in_pair[0];
    from_child_ = out_pair[0];
}

ChildProcess::~ChildProcess() {
    terminate();
    if (to_child_ >= 0)
        ::close(to_child_);
    if (from_child_ >= 0)
        ::close(from_child_);
}

bool ChildProcess::write_line(const std::string& line) {
    std::lock_guard lock(write_mutex_);
    if (to_child_ < 0)
        return false;
    std::string data = line + "\n";
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(to_child_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

bool ChildProcess::read_line(std::string& line) {
    for (;;) {
        auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return true;
        }
        char chunk[4096];
        ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            return false;
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void ChildProcess::close_stdin() {
    std::lock_guard lock(write_mutex_);
    if (to_child_ >= 0)
        ::shutdown(to_child_, SHUT_WR);
}

void ChildProcess::terminate() {
    if (pid_ <= 0)
        return;
    ::kill(pid_, SIGTERM);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
    if (from_child_ >= 0)
        ::shutdown(from_child_, SHUT_RDWR);
}

// -- ProtocolChannel ---------------------------------------------------------

ProtocolChannel::ProtocolChannel(const std::vector<std::string>& argv)
    : process_(std::make_unique<ChildProcess>(argv)) {
    reader_ = std::thread([this] { reader_loop(); });
}

ProtocolChannel::~ProtocolChannel() {
    process_->close_stdin();
    process_->terminate();
    if (reader_.joinable())
        reader_.join();
}

void ProtocolChannel::reader_loop() {
    std::string line;
    while (process_->read_line(line)) {
        if (trim(line).empty())
            continue;
        json response;
        try {
            response = json::parse(line);
        } catch (const json::parse_error&) {
            continue;  // stray diagnostics on stdout
        }
        auto id = response.find("id");
        if (id == response.end() || !id->is_number_unsigned())
            continue;
        const auto key = id->get<std::uint64_t>();
        std::lock_guard lock(mutex_);
        responses_[key] = std::move(response);
        cv_.notify_all();
    }
    dead_ = true;
    std::lock_guard lock(mutex_);
    cv_.notify_all();
}

json ProtocolChannel::call(json request, std::chrono::milliseconds timeout) {
    std::uint64_t id;
    {
        std::lock_guard lock(mutex_);
        id = next_id_++;
    }
    request["id"] = id;
    if (dead_ || !process_->write_line(request.dump()))
        throw Error(ErrorCode::backend_unavailable, "prover process is not running");

    std::unique_lock lock(mutex_);
    const bool ready = cv_.wait_for(lock, timeout, [&] { return responses_.count(id) || dead_; });
    if (auto it = responses_.find(id); it != responses_.end()) {
        json response = std::move(it->second);
        responses_.erase(it);
        return response;
    }
    if (!ready)
        throw Error(ErrorCode::backend_timeout, "prover call exceeded per-call limit");
    throw Error(ErrorCode::backend_unavailable, "prover process exited");
}

// -- LiveProver --------------------------------------------------------------

LiveProver::LiveProver(LiveProverOptions options) : options_(std::move(options)) {
    const std::size_t pool = std::max<std::size_t>(1, options_.pool_size);
    for (std::size_t i = 0; i < pool; ++i)
        channels_.push_back(std::make_unique<ProtocolChannel>(options_.command));
}

LiveProver::~LiveProver() = default;

namespace {

// Server-side ids are opaque JSON values; keep their serialized form so they
// go back to the server exactly as received.
std::string id_to_string(const json& value) { return value.dump(); }

json id_from_string(const std::string& s) { return json::parse(s); }

}  // namespace

TacticState LiveProver::do_open(SessionId id, const Theorem& theorem) {
    ProtocolChannel* channel = channels_[round_robin_.fetch_add(1) % channels_.size()].get();
    json request = {{"op", "init"}, {"theorem", theorem.name}};
    if (!theorem.env.empty())
        request["env"] = theorem.env;
    json response;
    try {
        response = channel->call(request, options_.call_timeout);
    } catch (const Error& e) {
        throw Error(ErrorCode::backend_unavailable, std::string("init failed: ") + e.what());
    }
    if (response.value("status", "") != "open") {
        throw Error(ErrorCode::theorem_not_found,
                    "prover could not open '" + theorem.name + "': " +
                        response.value("message", std::string("no message")));
    }
    RemoteSession remote;
    remote.channel = channel;
    if (auto s = response.find("session"); s != response.end())
        remote.remote_id = id_to_string(*s);
    TacticState initial(response.value("state", std::string()));
    if (auto sid = response.find("state_id"); sid != response.end())
        remote.state_ids[initial.text()] = id_to_string(*sid);
    std::lock_guard lock(mutex_);
    sessions_[id] = std::move(remote);
    return initial;
}

ApplyOutcome LiveProver::do_apply(SessionId id, const TacticState& state, const Tactic& tactic) {
    ProtocolChannel* channel = nullptr;
    json request = {{"op", "apply"}, {"tactic", tactic.text}};
    {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw Error(ErrorCode::session_closed, "unknown session");
        channel = it->second.channel;
        if (!it->second.remote_id.empty())
            request["session"] = id_from_string(it->second.remote_id);
        auto sid = it->second.state_ids.find(state.text());
        if (sid != it->second.state_ids.end())
            request["state_id"] = id_from_string(sid->second);
        else
            request["state"] = state.text();
    }

    json response;
    try {
        response = channel->call(request, options_.call_timeout);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::backend_timeout)
            return ApplyOutcome::failed(FailureKind::backend_timeout, e.what());
        throw;
    }

    const std::string status = response.value("status", "");
    if (status == "proved")
        return ApplyOutcome::proved();
    if (status == "open") {
        TacticState next(response.value("state", std::string()));
        if (auto sid = response.find("state_id"); sid != response.end()) {
            std::lock_guard lock(mutex_);
            auto it = sessions_.find(id);
            if (it != sessions_.end())
                it->second.state_ids.emplace(next.text(), id_to_string(*sid));
        }
        return ApplyOutcome::new_state(std::move(next));
    }
    return ApplyOutcome::failed(FailureKind::prover_error,
                                response.value("message", std::string("prover error")));
}

void LiveProver::do_close(SessionId id) {
    RemoteSession remote;
    {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            return;
        remote = std::move(it->second);
        sessions_.erase(it);
    }
    json request = {{"op", "close"}};
    if (!remote.remote_id.empty())
        request["session"] = id_from_string(remote.remote_id);
    try {
        remote.channel->call(request, options_.call_timeout);
    } catch (const Error&) {
        // Closing is best effort; the subprocess is torn down with the prover.
    }
}

}  // namespace tacsearch
