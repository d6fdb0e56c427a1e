#include "tacsearch/core.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace tacsearch {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::config_invalid: return "config-invalid";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::duplicate_name: return "duplicate-name";
    case ErrorCode::theorem_not_found: return "theorem-not-found";
    case ErrorCode::backend_unavailable: return "backend-unavailable";
    case ErrorCode::backend_timeout: return "backend-timeout";
    case ErrorCode::session_closed: return "session-closed";
    case ErrorCode::rate_limited: return "rate-limited";
    case ErrorCode::script_exhausted: return "script-exhausted";
    case ErrorCode::empty_run: return "empty-run";
    case ErrorCode::mismatched_theorem_sets: return "mismatched-theorem-sets";
    case ErrorCode::io_error: return "io-error";
    }
    return "unknown";
}

namespace {

bool is_blank(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string rstrip(std::string_view s) {
    std::size_t end = s.size();
    while (end > 0 && is_blank(s[end - 1]))
        --end;
    return std::string(s.substr(0, end));
}

// Identifier characters for give-up detection. Bytes of multi-byte UTF-8
// sequences count as identifier characters so that e.g. `sorryα` or `h₀`
// stay single tokens.
bool is_ident_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '\'' || c >= 0x80;
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    while (begin < s.size() && is_blank(s[begin]))
        ++begin;
    return rstrip(s.substr(begin));
}

std::string first_line(std::string_view s) {
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t nl = s.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = s.size();
        std::string line = trim(s.substr(pos, nl - pos));
        if (!line.empty())
            return line;
        pos = nl + 1;
    }
    return {};
}

std::string canonicalize_state(std::string_view raw) {
    std::vector<std::string> lines;
    std::string current;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\r') {
            if (i + 1 < raw.size() && raw[i + 1] == '\n')
                ++i;
            lines.push_back(rstrip(current));
            current.clear();
        } else if (c == '\n') {
            lines.push_back(rstrip(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    lines.push_back(rstrip(current));

    std::size_t first = 0;
    while (first < lines.size() && lines[first].empty())
        ++first;
    std::size_t last = lines.size();
    while (last > first && lines[last - 1].empty())
        --last;

    std::string out;
    bool previous_blank = false;
    for (std::size_t i = first; i < last; ++i) {
        const bool blank = lines[i].empty();
        if (blank && previous_blank)
            continue;
        if (i != first)
            out.push_back('\n');
        out += lines[i];
        previous_blank = blank;
    }
    return out;
}

std::uint64_t stable_hash(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

TacticState::TacticState(std::string_view raw)
    : text_(canonicalize_state(raw)), id_(stable_hash(text_)) {}

bool is_giveup(std::string_view tactic_text) {
    const std::string text = trim(tactic_text);
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_ident_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_ident_char(static_cast<unsigned char>(text[j])))
            ++j;
        if (std::string_view(text).substr(i, j - i) == "sorry")
            return true;
        i = j;
    }
    return false;
}

const char* to_string(FailureKind kind) {
    switch (kind) {
    case FailureKind::prover_error: return "prover-error";
    case FailureKind::no_progress: return "no-progress";
    case FailureKind::give_up: return "give-up";
    case FailureKind::backend_timeout: return "backend-timeout";
    }
    return "unknown";
}

std::string ApplyOutcome::describe() const {
    switch (kind) {
    case Kind::proved: return "proved";
    case Kind::new_state: return "state";
    case Kind::failed:
        if (message.empty())
            return std::string("failed(") + to_string(failure) + ")";
        return std::string("failed(") + to_string(failure) + ": " + message + ")";
    }
    return "unknown";
}

const char* to_string(Strategy s) {
    switch (s) {
    case Strategy::b: return "b";
    case Strategy::d: return "d";
    case Strategy::d_plus: return "d+";
    case Strategy::combined: return "combined";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view text) {
    if (text == "b")
        return Strategy::b;
    if (text == "d")
        return Strategy::d;
    if (text == "d+" || text == "d-plus" || text == "dplus")
        return Strategy::d_plus;
    if (text == "combined")
        return Strategy::combined;
    throw Error(ErrorCode::config_invalid, "unknown strategy '" + std::string(text) + "'");
}

void SearchConfig::validate() const {
    auto reject = [](const std::string& what) {
        throw Error(ErrorCode::config_invalid, what);
    };
    if (n < 1)
        reject("n must be >= 1");
    if (k < 1)
        reject("k must be >= 1");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        reject("temperature must be > 0");
    if (!(timeout.count() > 0.0))
        reject("timeout must be > 0");
    if (max_steps_per_attempt < 1)
        reject("max_steps_per_attempt must be >= 1");
    if (max_depth && *max_depth < 1)
        reject("max_depth must be >= 1 when set");
    if (jobs < 1)
        reject("jobs must be >= 1");
    if ((strategy == Strategy::d || strategy == Strategy::d_plus) && n != 1)
        reject("d-search strategies sample exactly one tactic per step (n must be 1)");
}

std::string SearchConfig::summary() const {
    std::ostringstream os;
    os << "strategy=" << to_string(strategy) << " n=" << n << " k=" << k << " T=" << temperature
       << " timeout=" << timeout.count() << "s";
    return os.str();
}

SearchConfig SearchConfig::b_leg() const {
    SearchConfig c = *this;
    c.strategy = Strategy::b;
    c.k = 1;
    return c;
}

SearchConfig SearchConfig::d_plus_leg() const {
    SearchConfig c = *this;
    c.strategy = Strategy::d_plus;
    c.n = 1;
    return c;
}

void BadSet::record(const TacticState& state, std::string_view tactic) {
    entries_[state.text()].insert(std::string(tactic));
}

bool BadSet::contains(const TacticState& state, std::string_view tactic) const {
    auto it = entries_.find(state.text());
    return it != entries_.end() && it->second.count(std::string(tactic)) > 0;
}

std::vector<std::string> BadSet::tactics_at(const TacticState& state) const {
    auto it = entries_.find(state.text());
    if (it == entries_.end())
        return {};
    return {it->second.begin(), it->second.end()};
}

std::size_t BadSet::size() const noexcept {
    std::size_t total = 0;
    for (const auto& [state, tactics] : entries_)
        total += tactics.size();
    return total;
}

const char* to_string(ProofStatus s) {
    switch (s) {
    case ProofStatus::proved: return "proved";
    case ProofStatus::exhausted: return "exhausted";
    case ProofStatus::gave_up: return "gave-up";
    case ProofStatus::timed_out: return "timed-out";
    case ProofStatus::error: return "error";
    }
    return "unknown";
}

ProofStatus parse_status(std::string_view text) {
    if (text == "proved")
        return ProofStatus::proved;
    if (text == "exhausted")
        return ProofStatus::exhausted;
    if (text == "gave-up")
        return ProofStatus::gave_up;
    if (text == "timed-out")
        return ProofStatus::timed_out;
    if (text == "error")
        return ProofStatus::error;
    throw Error(ErrorCode::parse_error, "unknown status '" + std::string(text) + "'");
}

}  // namespace tacsearch
