#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tacsearch {

enum class ErrorCode {
    invalid_argument,
    config_invalid,
    parse_error,
    duplicate_name,
    theorem_not_found,
    backend_unavailable,
    backend_timeout,
    session_closed,
    rate_limited,
    script_exhausted,
    empty_run,
    mismatched_theorem_sets,
    io_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Normalizes prover output so that textual identity can stand in for state
/// identity: CRLF/CR become LF, trailing whitespace is stripped per line,
/// leading and trailing blank lines are dropped and interior runs of blank
/// lines collapse to a single blank line.
std::string canonicalize_state(std::string_view raw);

std::string trim(std::string_view s);

/// First non-empty line of a sample, trimmed. Empty if there is none.
std::string first_line(std::string_view s);

struct Theorem {
    std::string name;
    std::string statement;
    std::string source;
    std::optional<std::string> topic;
    /// Backend locator. Scenario provers treat it as the scenario key and
    /// fall back to `name` when empty.
    std::string env;
};

class TacticState {
public:
    TacticState() = default;
    explicit TacticState(std::string_view raw);

    const std::string& text() const noexcept { return text_; }
    std::uint64_t id() const noexcept { return id_; }

    friend bool operator==(const TacticState& a, const TacticState& b) {
        return a.text_ == b.text_;
    }
    friend auto operator<=>(const TacticState& a, const TacticState& b) {
        return a.text_ <=> b.text_;
    }

private:
    std::string text_;
    std::uint64_t id_ = 0;
};

/// 64-bit FNV-1a, used for state ids.
std::uint64_t stable_hash(std::string_view text);

struct TacticStateHash {
    std::size_t operator()(const TacticState& s) const noexcept {
        return static_cast<std::size_t>(s.id());
    }
};

struct Tactic {
    std::string text;
    std::size_t call_index = 0;
};

/// True when `sorry` appears as a standalone identifier in the tactic.
bool is_giveup(std::string_view tactic_text);
inline bool is_giveup(const Tactic& tactic) { return is_giveup(tactic.text); }

enum class FailureKind { prover_error, no_progress, give_up, backend_timeout };

const char* to_string(FailureKind kind);

struct ApplyOutcome {
    enum class Kind { proved, new_state, failed };

    Kind kind = Kind::failed;
    TacticState state;  // meaningful for new_state only
    FailureKind failure = FailureKind::prover_error;
    std::string message;

    static ApplyOutcome proved() { return {Kind::proved, {}, {}, {}}; }
    static ApplyOutcome new_state(TacticState s) {
        return {Kind::new_state, std::move(s), {}, {}};
    }
    static ApplyOutcome failed(FailureKind why, std::string message = {}) {
        return {Kind::failed, {}, why, std::move(message)};
    }

    bool is_proved() const noexcept { return kind == Kind::proved; }
    bool is_failed() const noexcept { return kind == Kind::failed; }

    /// Compact one-line rendering used in traces and logs.
    std::string describe() const;
};

enum class Strategy { b, d, d_plus, combined };

const char* to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

struct FewShotExample {
    std::string state;
    std::string tactic;
};

struct SearchConfig {
    using seconds = std::chrono::duration<double>;

    Strategy strategy = Strategy::b;
    int n = 64;
    int k = 50;
    double temperature = 1.4;
    seconds timeout{600.0};
    int max_steps_per_attempt = 50;
    std::optional<int> max_depth;
    std::vector<FewShotExample> few_shot;
    int jobs = 1;

    /// Throws Error(config_invalid) on any violated constraint.
    void validate() const;

    /// "strategy=b n=64 k=1 T=1.4 timeout=600s"
    std::string summary() const;

    /// The b leg and d+ leg of a combined run: (k=1, n) and (k, n=1).
    SearchConfig b_leg() const;
    SearchConfig d_plus_leg() const;
};

/// Per-theorem memory of tactics that failed at a given canonical state.
class BadSet {
public:
    void record(const TacticState& state, std::string_view tactic);
    bool contains(const TacticState& state, std::string_view tactic) const;
    std::vector<std::string> tactics_at(const TacticState& state) const;

    std::size_t size() const noexcept;
    bool empty() const noexcept { return entries_.empty(); }

    const std::map<std::string, std::set<std::string>>& entries() const noexcept {
        return entries_;
    }

private:
    std::map<std::string, std::set<std::string>> entries_;
};

enum class ProofStatus { proved, exhausted, gave_up, timed_out, error };

const char* to_string(ProofStatus s);
ProofStatus parse_status(std::string_view text);

struct ProofResult {
    std::string theorem;
    std::optional<std::string> topic;
    ProofStatus status = ProofStatus::exhausted;
    std::vector<std::string> proof;
    int attempts_used = 0;
    std::size_t generator_calls = 0;
    std::size_t prover_interactions = 0;
    double wall_time = 0.0;
    Strategy strategy = Strategy::b;
    int k = 1;
    int n = 1;
    double temperature = 1.0;
    std::string message;

    bool proved() const noexcept { return status == ProofStatus::proved; }
};

}  // namespace tacsearch
