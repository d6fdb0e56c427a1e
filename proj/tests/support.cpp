#include "support.hpp"

#include <deque>
#include <set>

#ifndef TACSEARCH_FIXTURE_DIR
#error "TACSEARCH_FIXTURE_DIR must be defined"
#endif

namespace tacsearch::testing {

std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(TACSEARCH_FIXTURE_DIR) / name;
}

std::filesystem::path temp_dir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    auto dir = std::filesystem::temp_directory_path() /
               ("tacsearch-" + tag + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Theorem theorem_named(const std::string& name) {
    Theorem t;
    t.name = name;
    t.statement = "theorem " + name + " : P";
    return t;
}

RandomGraph random_graph(std::mt19937_64& rng, const std::string& name, int max_states,
                         int max_branch) {
    RandomGraph g;
    g.name = name;
    const int n = std::uniform_int_distribution<int>(1, max_states)(rng);
    for (int i = 0; i < n; ++i)
        g.states.push_back("h : " + name + "\n⊢ goal_" + std::to_string(i));
    g.edges.resize(n);
    std::uniform_int_distribution<int> branch(0, max_branch);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // A low proving probability keeps a mix of provable and unprovable graphs.
    const double p_proved = 0.02 + 0.06 * u(rng);
    for (int i = 0; i < n; ++i) {
        const int b = branch(rng);
        for (int j = 0; j < b; ++j) {
            RandomGraph::Edge e;
            e.tactic = "tac_" + std::to_string(j) + (j % 2 ? " [h]" : "");
            const double r = u(rng);
            if (r < p_proved) {
                e.kind = ScenarioOutcome::Kind::proved;
            } else if (r < 0.35) {
                e.kind = ScenarioOutcome::Kind::error;
            } else {
                e.kind = ScenarioOutcome::Kind::state;
                e.target = pick(rng);
            }
            g.edges[i].push_back(e);
        }
    }
    return g;
}

ScenarioTheorem to_scenario_theorem(const RandomGraph& g) {
    ScenarioTheorem t;
    t.initial_state = g.states.at(0);
    for (std::size_t i = 0; i < g.states.size(); ++i) {
        for (const auto& e : g.edges[i]) {
            ScenarioOutcome out;
            out.kind = e.kind;
            if (e.kind == ScenarioOutcome::Kind::state)
                out.text = g.states.at(e.target);
            else if (e.kind == ScenarioOutcome::Kind::error)
                out.text = "tactic failed";
            t.transitions[{g.states[i], e.tactic}] = out;
        }
    }
    return t;
}

Scenario to_scenario(const std::vector<RandomGraph>& graphs) {
    Scenario s;
    for (const auto& g : graphs)
        s.theorems[g.name] = to_scenario_theorem(g);
    return s;
}

bool bfs_provable(const RandomGraph& g) {
    std::vector<bool> seen(g.states.size(), false);
    std::deque<int> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        for (const auto& e : g.edges[s]) {
            if (e.kind == ScenarioOutcome::Kind::proved)
                return true;
            if (e.kind == ScenarioOutcome::Kind::state && !seen[e.target]) {
                seen[e.target] = true;
                queue.push_back(e.target);
            }
        }
    }
    return false;
}

std::vector<ScriptedGenerator::Entry> full_pool_script(const RandomGraph& g) {
    std::vector<ScriptedGenerator::Entry> entries;
    for (std::size_t i = 0; i < g.states.size(); ++i) {
        ScriptedGenerator::Entry e;
        e.theorem = g.name;
        e.state = g.states[i];
        e.call_index = 0;
        for (const auto& edge : g.edges[i])
            e.tactics.push_back(edge.tactic);
        entries.push_back(std::move(e));
    }
    return entries;
}

TacticPool uniform_pool(const std::vector<RandomGraph>& graphs) {
    TacticPool pool;
    for (const auto& g : graphs)
        for (std::size_t i = 0; i < g.states.size(); ++i) {
            auto& list = pool.by_state[g.states[i]];
            for (const auto& e : g.edges[i])
                list.push_back({e.tactic, 1.0});
        }
    return pool;
}

std::map<std::string, std::vector<std::string>> tactics_by_state(const RandomGraph& g) {
    std::map<std::string, std::vector<std::string>> out;
    for (std::size_t i = 0; i < g.states.size(); ++i)
        for (const auto& e : g.edges[i])
            out[g.states[i]].push_back(e.tactic);
    return out;
}

std::vector<RecordingProver::Call> RecordingProver::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

TacticState RecordingProver::do_open(SessionId id, const Theorem& theorem) {
    ProverSession inner = inner_.open_session(theorem);
    TacticState initial = inner.initial_state;
    std::lock_guard lock(mutex_);
    sessions_[id] = std::move(inner);
    return initial;
}

ApplyOutcome RecordingProver::do_apply(SessionId id, const TacticState& state,
                                       const Tactic& tactic) {
    ProverSession inner;
    {
        std::lock_guard lock(mutex_);
        inner = sessions_.at(id);
    }
    ApplyOutcome outcome = inner_.apply_tactic(inner, state, tactic);
    std::lock_guard lock(mutex_);
    calls_.push_back({state.text(), tactic.text, outcome});
    return outcome;
}

void RecordingProver::do_close(SessionId id) {
    ProverSession inner;
    {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            return;
        inner = it->second;
        sessions_.erase(it);
    }
    inner_.close_session(inner);
}

GeneratorResponse CyclicGenerator::generate(const GeneratorRequest& request) {
    GeneratorResponse response;
    auto it = by_state_.find(request.context.state.text());
    if (it == by_state_.end() || it->second.empty())
        return response;
    const auto& list = it->second;
    const std::set<std::string> avoid(request.avoid.begin(), request.avoid.end());
    for (std::size_t off = 0; off < list.size(); ++off) {
        const std::string& t = list[(request.context.call_index + off) % list.size()];
        if (!skip_avoid_ || !avoid.count(t)) {
            response.tactics.push_back(t);
            break;
        }
    }
    return response;
}

GeneratorResponse HashedChoiceGenerator::generate(const GeneratorRequest& request) {
    GeneratorResponse response;
    auto it = by_state_.find(request.context.state.text());
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(request.context.state.id()),
                      static_cast<std::uint32_t>(request.context.call_index)};
    std::mt19937_64 rng(seq);
    if (rng() % 10 == 0) {
        response.tactics.push_back("sorry");
        return response;
    }
    if (it == by_state_.end() || it->second.empty())
        return response;
    response.tactics.push_back(it->second[rng() % it->second.size()]);
    return response;
}

}  // namespace tacsearch::testing
