// tacsearch: run proof-search experiments and report on their results.
//
//   tacsearch run --config run.json [--strategy b|d|d+|combined] [--n N] [--k K]
//                 [--temperature T] [--timeout-secs S] [--jobs J] [--seed S]
//                 [--out results.jsonl] [--force]
//   tacsearch report --mode summary|compare|topics|attempts [--format text|csv] <results...>
//   tacsearch replay --results results.jsonl --config run.json
//
// Exit status: 0 when the experiment ran (whatever was proved), 2 for an
// invalid configuration, 3 when a backend is unavailable, 4 for unreadable
// or mismatched inputs, 130 when interrupted.

#include "tacsearch/eval.hpp"
#include "tacsearch/runner.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) {
    g_stop = true;
    std::signal(SIGINT, SIG_DFL);  // a second Ctrl-C terminates immediately
}

int exit_code_for(const tacsearch::Error& e) {
    using tacsearch::ErrorCode;
    switch (e.code()) {
    case ErrorCode::config_invalid:
    case ErrorCode::empty_run:
    case ErrorCode::invalid_argument: return 2;
    case ErrorCode::backend_unavailable:
    case ErrorCode::theorem_not_found:
    case ErrorCode::backend_timeout: return 3;
    default: return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace tacsearch;

    CLI::App app{"Tactic-level proof search orchestration and evaluation"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a search experiment over a dataset");
    std::string config_path;
    std::string strategy;
    std::optional<int> n, k, jobs;
    std::optional<double> temperature, timeout_secs;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool force = false;
    run->add_option("--config", config_path, "Run configuration (JSON)")->required();
    run->add_option("--strategy", strategy, "b | d | d+ | combined")
        ->check(CLI::IsMember({"b", "d", "d+", "combined"}));
    run->add_option("--n", n, "Tactic samples per step");
    run->add_option("--k", k, "Attempts per theorem (d-search)");
    run->add_option("--temperature", temperature, "Sampling temperature");
    run->add_option("--timeout-secs", timeout_secs, "Per-theorem time limit in seconds");
    run->add_option("--jobs", jobs, "Worker count");
    run->add_option("--seed", seed, "Seed for the seeded generator");
    run->add_option("--out", out, "Results file (JSON lines)");
    run->add_flag("--force", force, "Overwrite an existing results file");

    // report
    auto* report = app.add_subcommand("report", "Render tables from results files");
    std::string mode = "summary";
    std::string format = "text";
    std::vector<std::string> inputs;
    report->add_option("--mode", mode, "summary | compare | topics | attempts")
        ->check(CLI::IsMember({"summary", "compare", "topics", "attempts"}));
    report->add_option("--format", format, "text | csv")->check(CLI::IsMember({"text", "csv"}));
    report->add_option("inputs", inputs, "Results files")->required();

    // replay
    auto* replay = app.add_subcommand("replay", "Re-check recorded proofs against the prover");
    std::string results_path, replay_config;
    replay->add_option("--results", results_path, "Results file")->required();
    replay->add_option("--config", replay_config, "Run configuration (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            RunConfigFile config = load_run_config(config_path);
            RunOverrides overrides;
            if (!strategy.empty())
                overrides.strategy = parse_strategy(strategy);
            overrides.n = n;
            overrides.k = k;
            overrides.jobs = jobs;
            overrides.temperature = temperature;
            overrides.timeout_secs = timeout_secs;
            overrides.seed = seed;
            if (!out.empty())
                overrides.out = out;
            apply_overrides(config, overrides);

            std::signal(SIGINT, on_sigint);
            RunHooks hooks;
            hooks.stop = &g_stop;
            hooks.on_result = [](const ProofResult& r) {
                std::cerr << r.theorem << ": " << to_string(r.status);
                if (r.proved())
                    std::cerr << " (" << r.proof.size() << " steps, " << r.attempts_used
                              << " attempts)";
                if (!r.message.empty())
                    std::cerr << " [" << r.message << "]";
                std::cerr << '\n';
            };
            const RunReport rep = run_experiment(config, force, hooks);
            std::cout << "theorems " << rep.theorems << ", written " << rep.written << ", proved "
                      << rep.proved << " (" << format_percent(rep.proved, rep.theorems) << ")\n"
                      << "results: " << config.output.string() << '\n';
            if (rep.interrupted) {
                std::cerr << "interrupted; " << rep.written << " records flushed\n";
                return 130;
            }
            return 0;
        }

        if (*report) {
            const ReportFormat fmt = format == "csv" ? ReportFormat::csv : ReportFormat::text;
            std::vector<RunSummary> runs;
            for (const auto& path : inputs)
                runs.push_back(read_results(path));
            if (mode == "summary") {
                std::cout << render_summary(runs, fmt);
            } else if (mode == "compare") {
                if (runs.size() != 2) {
                    std::cerr << "compare needs exactly 2 results files\n";
                    return 4;
                }
                std::cout << render_comparison(runs[0], runs[1], fmt);
            } else if (mode == "topics") {
                for (const auto& r : runs)
                    std::cout << render_topics(r, fmt);
            } else {
                std::cout << render_attempts(runs, fmt);
            }
            return 0;
        }

        if (*replay) {
            const RunConfigFile config = load_run_config(replay_config);
            const RunSummary results = read_results(results_path);
            bool all_ok = true;
            for (const auto& line : replay_results(results, config)) {
                std::cout << line.theorem << (line.ok ? " ok" : " FAIL: " + line.diagnostic)
                          << '\n';
                all_ok = all_ok && line.ok;
            }
            return all_ok ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
