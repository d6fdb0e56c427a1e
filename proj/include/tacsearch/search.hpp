#pragma once

#include "tacsearch/core.hpp"
#include "tacsearch/generator.hpp"
#include "tacsearch/prover.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tacsearch {

struct SearchNode {
    TacticState state;
    std::vector<std::string> path;
    int depth = 0;
};

/// One tactic application (or a step that failed before reaching the
/// prover, e.g. a give-up or a blocked tactic).
struct TraceStep {
    std::string state;
    std::string tactic;
    std::string outcome;
};

using AttemptTrace = std::vector<TraceStep>;

struct SearchResult : ProofResult {
    /// One trace per d-search attempt; a single trace for b-search.
    std::vector<AttemptTrace> traces;
    /// Bad(O) memory at the end of a d+ run.
    std::optional<BadSet> bad_set;
};

/// Breadth-first expansion: each frontier node (FIFO) asks the generator for
/// `n` samples, keeps the first line of each, deduplicates, drops give-ups
/// and tactics already tried at that state, and applies the survivors.
/// Canonical states are enqueued at most once.
SearchResult b_search(const Theorem& theorem, const SearchConfig& config, Prover& prover,
                      Generator& generator);

/// Greedy restart search. Each of up to `k` attempts walks from the initial
/// state asking for one tactic per step; any failure ends the attempt and the
/// next attempt starts over. With `feedback`, failures are remembered per
/// (state, tactic), offered to the generator as an avoid list, and a
/// generated tactic that is already blocked fails the attempt without a
/// prover call.
SearchResult d_search(const Theorem& theorem, const SearchConfig& config, Prover& prover,
                      Generator& generator, bool feedback);

/// b-search first; if it does not prove the theorem, d-search with feedback
/// on a fresh session. Counters, attempts and wall time of both legs are
/// summed and their traces concatenated.
SearchResult combined_search(const Theorem& theorem, const SearchConfig& config_b,
                             const SearchConfig& config_dplus, Prover& prover,
                             Generator& generator);

/// Dispatches on `config.strategy`.
SearchResult run_search(const Theorem& theorem, const SearchConfig& config, Prover& prover,
                        Generator& generator);

void record_failure(BadSet& bad, const TacticState& state, const Tactic& tactic);
bool is_blocked(const BadSet& bad, const TacticState& state, const Tactic& tactic);

/// True iff applying `proof` in order from the initial state ends in Proved
/// at the last tactic with no failed step. Backend errors yield false and a
/// diagnostic.
bool replay_proof(const Theorem& theorem, const std::vector<std::string>& proof, Prover& prover,
                  std::string* diagnostic = nullptr);

}  // namespace tacsearch
