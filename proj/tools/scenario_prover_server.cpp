// Serves a scenario file over the line-delimited prover protocol on
// stdin/stdout. Each request is handled on its own thread, so transitions
// with a delay answer out of order. Used to exercise the live adapter
// without a real prover installation.
//
//   scenario_prover_server <scenario.json>

#include "tacsearch/prover.hpp"

#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

using nlohmann::json;
using namespace tacsearch;

namespace {

class Server {
public:
    explicit Server(Scenario scenario) : prover_(std::move(scenario)) {}

    json handle(const json& request) {
        json response = {{"id", request.value("id", json())}};
        const std::string op = request.value("op", "");
        try {
            if (op == "init")
                return init(request, response);
            if (op == "apply")
                return apply(request, response);
            if (op == "close")
                return close(request, response);
            response["status"] = "error";
            response["message"] = "unknown op '" + op + "'";
        } catch (const std::exception& e) {
            response["status"] = "error";
            response["message"] = e.what();
        }
        return response;
    }

private:
    json init(const json& request, json& response) {
        Theorem theorem;
        theorem.name = request.value("theorem", "");
        theorem.env = request.value("env", "");
        ProverSession session = prover_.open_session(theorem);
        const std::string id = std::to_string(session.id);
        std::lock_guard lock(mutex_);
        response["status"] = "open";
        response["session"] = id;
        response["state"] = session.initial_state.text();
        response["state_id"] = remember(session.initial_state);
        sessions_.emplace(id, std::move(session));
        return response;
    }

    json apply(const json& request, json& response) {
        ProverSession session;
        TacticState state;
        {
            std::lock_guard lock(mutex_);
            auto it = sessions_.find(request.value("session", ""));
            if (it == sessions_.end())
                throw std::runtime_error("unknown session");
            session = it->second;
            if (auto sid = request.find("state_id"); sid != request.end()) {
                auto st = states_.find(sid->get<std::uint64_t>());
                if (st == states_.end())
                    throw std::runtime_error("unknown state id");
                state = st->second;
            } else {
                state = TacticState(request.value("state", ""));
            }
        }
        const ApplyOutcome outcome =
            prover_.apply_tactic(session, state, Tactic{request.value("tactic", ""), 0});
        if (outcome.is_proved()) {
            response["status"] = "proved";
        } else if (outcome.is_failed()) {
            response["status"] = "error";
            response["message"] = outcome.message;
        } else {
            std::lock_guard lock(mutex_);
            response["status"] = "open";
            response["state"] = outcome.state.text();
            response["state_id"] = remember(outcome.state);
        }
        return response;
    }

    json close(const json& request, json& response) {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(request.value("session", ""));
        if (it != sessions_.end()) {
            prover_.close_session(it->second);
            sessions_.erase(it);
        }
        response["status"] = "open";
        return response;
    }

    std::uint64_t remember(const TacticState& state) {
        const std::uint64_t id = next_state_++;
        states_.emplace(id, state);
        return id;
    }

    ScenarioProver prover_;
    std::mutex mutex_;
    std::map<std::string, ProverSession> sessions_;
    std::map<std::uint64_t, TacticState> states_;
    std::uint64_t next_state_ = 1;
};

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: scenario_prover_server <scenario.json>\n";
        return 2;
    }
    std::unique_ptr<Server> server;
    try {
        server = std::make_unique<Server>(load_scenario(argv[1]));
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    std::mutex out_mutex;
    std::vector<std::thread> workers;
    std::string line;
    while (std::getline(std::cin, line)) {
        json request = json::parse(line, nullptr, false);
        if (request.is_discarded())
            continue;
        workers.emplace_back([&, request = std::move(request)] {
            const json response = server->handle(request);
            std::lock_guard lock(out_mutex);
            std::cout << response.dump() << std::endl;
        });
    }
    for (auto& w : workers)
        w.join();
    return 0;
}
