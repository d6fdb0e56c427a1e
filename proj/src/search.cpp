#include "tacsearch/search.hpp"

#include <chrono>
#include <deque>
#include <map>
#include <set>
#include <unordered_set>

namespace tacsearch {

namespace {

using Clock = std::chrono::steady_clock;

/// Shared bookkeeping for one search over one theorem: the deadline, call
/// counters, per-state generator call indices and the result being built.
class SearchRun {
public:
    SearchRun(const Theorem& theorem, const SearchConfig& config, Prover& prover,
              Generator& generator)
        : theorem_(theorem), config_(config), prover_(prover), generator_(generator),
          start_(Clock::now()),
          deadline_(start_ + std::chrono::duration_cast<Clock::duration>(config.timeout)) {
        result_.theorem = theorem.name;
        result_.topic = theorem.topic;
        result_.strategy = config.strategy;
        result_.k = config.strategy == Strategy::b ? 1 : config.k;
        result_.n = config.n;
        result_.temperature = config.temperature;
    }

    bool out_of_time() const { return Clock::now() >= deadline_; }

    /// Asks the generator for `n` samples at `state`; returns the first line
    /// of each sample, deduplicated. A missing script entry counts as an
    /// empty answer.
    std::vector<Tactic> request(const TacticState& state, const std::vector<std::string>& avoid,
                                int n) {
        GeneratorRequest req;
        req.prompt = build_prompt(theorem_, state, config_.few_shot, avoid);
        req.n = n;
        req.temperature = config_.temperature;
        req.avoid = avoid;
        req.context = {theorem_.name, state, call_index_[state.text()]++};

        GeneratorResponse response;
        try {
            response = generator_.generate(req);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::script_exhausted)
                throw;
            response.call_count = 0;
        }
        result_.generator_calls += response.call_count;
        const std::size_t ordinal = ++call_ordinal_;

        std::vector<std::string> lines;
        lines.reserve(response.tactics.size());
        for (const auto& sample : response.tactics)
            lines.push_back(first_line(sample));
        std::vector<Tactic> out;
        for (auto& t : dedup_tactics(lines))
            out.push_back(Tactic{std::move(t), ordinal});
        return out;
    }

    ApplyOutcome apply(const ProverSession& session, const TacticState& state,
                       const Tactic& tactic) {
        ++result_.prover_interactions;
        return prover_.apply_tactic(session, state, tactic);
    }

    void note_giveup() { ++giveups_; }

    SearchResult& result() { return result_; }

    SearchResult finish(ProofStatus status) {
        result_.status = status;
        if (status == ProofStatus::exhausted && result_.prover_interactions == 0 && giveups_ > 0)
            result_.status = ProofStatus::gave_up;
        if (result_.status != ProofStatus::proved)
            result_.proof.clear();
        result_.wall_time = std::chrono::duration<double>(Clock::now() - start_).count();
        return std::move(result_);
    }

    SearchResult fail(const std::string& message) {
        result_.message = message;
        return finish(ProofStatus::error);
    }

    Prover& prover() { return prover_; }
    const Theorem& theorem() const { return theorem_; }
    const SearchConfig& config() const { return config_; }

private:
    const Theorem& theorem_;
    const SearchConfig& config_;
    Prover& prover_;
    Generator& generator_;
    Clock::time_point start_;
    Clock::time_point deadline_;
    std::map<std::string, std::size_t> call_index_;
    std::size_t call_ordinal_ = 0;
    std::size_t giveups_ = 0;
    SearchResult result_;
};

void require_strategy(const SearchConfig& config, std::initializer_list<Strategy> allowed,
                      const char* who) {
    for (Strategy s : allowed)
        if (config.strategy == s)
            return;
    throw Error(ErrorCode::invalid_argument,
                std::string(who) + " called with strategy " + to_string(config.strategy));
}

}  // namespace

void record_failure(BadSet& bad, const TacticState& state, const Tactic& tactic) {
    bad.record(state, trim(tactic.text));
}

bool is_blocked(const BadSet& bad, const TacticState& state, const Tactic& tactic) {
    return bad.contains(state, trim(tactic.text));
}

SearchResult b_search(const Theorem& theorem, const SearchConfig& config, Prover& prover,
                      Generator& generator) {
    require_strategy(config, {Strategy::b}, "b_search");
    config.validate();

    SearchRun run(theorem, config, prover, generator);
    run.result().attempts_used = 1;
    run.result().traces.emplace_back();
    AttemptTrace& trace = run.result().traces.back();

    try {
        SessionGuard guard(prover, prover.open_session(theorem));
        const ProverSession& session = guard.session();

        std::deque<SearchNode> frontier;
        std::unordered_set<std::string> visited;
        std::map<std::string, std::set<std::string>> tried;
        frontier.push_back({session.initial_state, {}, 0});
        visited.insert(session.initial_state.text());

        while (!frontier.empty()) {
            if (run.out_of_time())
                return run.finish(ProofStatus::timed_out);
            SearchNode node = std::move(frontier.front());
            frontier.pop_front();
            if (config.max_depth && node.depth >= *config.max_depth)
                continue;

            const auto tactics = run.request(node.state, {}, config.n);
            auto& tried_here = tried[node.state.text()];
            for (const Tactic& tactic : tactics) {
                if (is_giveup(tactic)) {
                    run.note_giveup();
                    trace.push_back({node.state.text(), tactic.text, "failed(give-up)"});
                    continue;
                }
                if (!tried_here.insert(tactic.text).second)
                    continue;
                if (run.out_of_time())
                    return run.finish(ProofStatus::timed_out);

                const ApplyOutcome outcome = run.apply(session, node.state, tactic);
                trace.push_back({node.state.text(), tactic.text, outcome.describe()});
                if (outcome.is_proved()) {
                    run.result().proof = node.path;
                    run.result().proof.push_back(tactic.text);
                    return run.finish(ProofStatus::proved);
                }
                if (outcome.kind == ApplyOutcome::Kind::new_state &&
                    visited.insert(outcome.state.text()).second) {
                    SearchNode child{outcome.state, node.path, node.depth + 1};
                    child.path.push_back(tactic.text);
                    frontier.push_back(std::move(child));
                }
            }
        }
        return run.finish(ProofStatus::exhausted);
    } catch (const std::exception& e) {
        return run.fail(e.what());
    }
}

SearchResult d_search(const Theorem& theorem, const SearchConfig& config, Prover& prover,
                      Generator& generator, bool feedback) {
    require_strategy(config, {Strategy::d, Strategy::d_plus}, "d_search");
    if (feedback != (config.strategy == Strategy::d_plus))
        throw Error(ErrorCode::invalid_argument,
                    "d_search: feedback must be enabled exactly for strategy d+");
    config.validate();

    SearchRun run(theorem, config, prover, generator);
    BadSet bad;
    auto finish = [&](ProofStatus status) {
        if (feedback)
            run.result().bad_set = bad;
        return run.finish(status);
    };

    try {
        SessionGuard guard(prover, prover.open_session(theorem));
        const ProverSession& session = guard.session();

        for (int attempt = 1; attempt <= config.k; ++attempt) {
            if (run.out_of_time())
                return finish(ProofStatus::timed_out);
            run.result().attempts_used = attempt;
            run.result().traces.emplace_back();
            AttemptTrace& trace = run.result().traces.back();

            TacticState state = session.initial_state;
            std::vector<std::string> path;
            for (int step = 0; step < config.max_steps_per_attempt; ++step) {
                if (run.out_of_time())
                    return finish(ProofStatus::timed_out);

                const auto avoid = feedback ? bad.tactics_at(state) : std::vector<std::string>{};
                const auto tactics = run.request(state, avoid, 1);
                if (tactics.empty()) {
                    trace.push_back({state.text(), "", "failed(no tactic generated)"});
                    break;
                }
                const Tactic& tactic = tactics.front();
                if (is_giveup(tactic)) {
                    run.note_giveup();
                    trace.push_back({state.text(), tactic.text, "failed(give-up)"});
                    if (feedback)
                        record_failure(bad, state, tactic);
                    break;
                }
                if (feedback && is_blocked(bad, state, tactic)) {
                    trace.push_back({state.text(), tactic.text, "failed(blocked)"});
                    break;
                }
                if (run.out_of_time())
                    return finish(ProofStatus::timed_out);

                const ApplyOutcome outcome = run.apply(session, state, tactic);
                trace.push_back({state.text(), tactic.text, outcome.describe()});
                if (outcome.is_proved()) {
                    path.push_back(tactic.text);
                    run.result().proof = std::move(path);
                    return finish(ProofStatus::proved);
                }
                if (outcome.is_failed()) {
                    if (feedback)
                        record_failure(bad, state, tactic);
                    break;
                }
                path.push_back(tactic.text);
                state = outcome.state;
            }
        }
        return finish(ProofStatus::exhausted);
    } catch (const std::exception& e) {
        if (feedback)
            run.result().bad_set = bad;
        return run.fail(e.what());
    }
}

SearchResult combined_search(const Theorem& theorem, const SearchConfig& config_b,
                             const SearchConfig& config_dplus, Prover& prover,
                             Generator& generator) {
    SearchResult b = b_search(theorem, config_b, prover, generator);
    if (b.proved() || b.status == ProofStatus::error) {
        b.strategy = Strategy::combined;
        b.k = config_dplus.k;
        return b;
    }

    SearchResult d = d_search(theorem, config_dplus, prover, generator, true);
    SearchResult out = std::move(d);
    out.strategy = Strategy::combined;
    out.n = config_b.n;
    out.k = config_dplus.k;
    out.attempts_used += b.attempts_used;
    out.generator_calls += b.generator_calls;
    out.prover_interactions += b.prover_interactions;
    out.wall_time += b.wall_time;
    out.traces.insert(out.traces.begin(), b.traces.begin(), b.traces.end());
    return out;
}

SearchResult run_search(const Theorem& theorem, const SearchConfig& config, Prover& prover,
                        Generator& generator) {
    switch (config.strategy) {
    case Strategy::b: return b_search(theorem, config, prover, generator);
    case Strategy::d: return d_search(theorem, config, prover, generator, false);
    case Strategy::d_plus: return d_search(theorem, config, prover, generator, true);
    case Strategy::combined:
        return combined_search(theorem, config.b_leg(), config.d_plus_leg(), prover, generator);
    }
    throw Error(ErrorCode::invalid_argument, "unknown strategy");
}

bool replay_proof(const Theorem& theorem, const std::vector<std::string>& proof, Prover& prover,
                  std::string* diagnostic) {
    auto diag = [&](const std::string& what) {
        if (diagnostic)
            *diagnostic = what;
        return false;
    };
    if (proof.empty())
        return diag("empty proof");
    try {
        SessionGuard guard(prover, prover.open_session(theorem));
        TacticState state = guard.session().initial_state;
        for (std::size_t i = 0; i < proof.size(); ++i) {
            const ApplyOutcome outcome =
                prover.apply_tactic(guard.session(), state, Tactic{proof[i], 0});
            if (outcome.is_failed())
                return diag("step " + std::to_string(i + 1) + " '" + proof[i] +
                            "' failed: " + outcome.describe());
            if (outcome.is_proved()) {
                if (i + 1 != proof.size())
                    return diag("goals closed before step " + std::to_string(i + 2));
                return true;
            }
            state = outcome.state;
        }
        return diag("goals remain after the last step");
    } catch (const std::exception& e) {
        return diag(e.what());
    }
}

}  // namespace tacsearch
