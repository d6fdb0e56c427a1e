#pragma once

#include "tacsearch/core.hpp"
#include "tacsearch/generator.hpp"
#include "tacsearch/prover.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace tacsearch::testing {

std::filesystem::path fixture(const std::string& name);

/// A fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

Theorem theorem_named(const std::string& name);

/// Random scenario graph: states 0..N-1, state 0 initial. Each state has up
/// to `max_branch` tactics; an edge either proves, errors, or leads to some
/// state (possibly itself, which the prover reports as no-progress).
struct RandomGraph {
    struct Edge {
        std::string tactic;
        ScenarioOutcome::Kind kind = ScenarioOutcome::Kind::error;
        int target = -1;
    };
    std::string name;
    std::vector<std::string> states;
    std::vector<std::vector<Edge>> edges;
};

RandomGraph random_graph(std::mt19937_64& rng, const std::string& name, int max_states = 50,
                         int max_branch = 4);

ScenarioTheorem to_scenario_theorem(const RandomGraph& graph);
Scenario to_scenario(const std::vector<RandomGraph>& graphs);

/// Exhaustive breadth-first reachability over the graph: provable iff some
/// reachable state has a proving edge.
bool bfs_provable(const RandomGraph& graph);

/// One script entry per state at call index 0 listing every tactic.
std::vector<ScriptedGenerator::Entry> full_pool_script(const RandomGraph& graph);

/// Uniform weights over each state's tactics.
TacticPool uniform_pool(const std::vector<RandomGraph>& graphs);

/// Forwards to another prover and records every (state, tactic, outcome).
class RecordingProver : public Prover {
public:
    struct Call {
        std::string state;
        std::string tactic;
        ApplyOutcome outcome;
    };
    explicit RecordingProver(Prover& inner) : inner_(inner) {}
    std::vector<Call> calls() const;

protected:
    TacticState do_open(SessionId id, const Theorem& theorem) override;
    ApplyOutcome do_apply(SessionId id, const TacticState& state, const Tactic& tactic) override;
    void do_close(SessionId id) override;

private:
    Prover& inner_;
    mutable std::mutex mutex_;
    std::map<SessionId, ProverSession> sessions_;
    std::vector<Call> calls_;
};

/// Per-state tactic lists consumed cyclically by call index. With
/// `skip_avoid`, tactics on the request's avoid list are skipped (the next
/// one in cyclic order is returned instead, if any).
class CyclicGenerator : public Generator {
public:
    CyclicGenerator(std::map<std::string, std::vector<std::string>> by_state, bool skip_avoid)
        : by_state_(std::move(by_state)), skip_avoid_(skip_avoid) {}
    GeneratorResponse generate(const GeneratorRequest& request) override;

private:
    std::map<std::string, std::vector<std::string>> by_state_;
    bool skip_avoid_;
};

/// Picks one tactic per request from the state's list by hashing
/// (seed, state, call index); ignores the avoid list. Occasionally answers
/// with a give-up.
class HashedChoiceGenerator : public Generator {
public:
    HashedChoiceGenerator(std::map<std::string, std::vector<std::string>> by_state,
                          std::uint64_t seed)
        : by_state_(std::move(by_state)), seed_(seed) {}
    GeneratorResponse generate(const GeneratorRequest& request) override;

private:
    std::map<std::string, std::vector<std::string>> by_state_;
    std::uint64_t seed_;
};

std::map<std::string, std::vector<std::string>> tactics_by_state(const RandomGraph& graph);

}  // namespace tacsearch::testing
