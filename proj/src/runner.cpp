#include "tacsearch/runner.hpp"

#include "detail.hpp"
#include "tacsearch/search.hpp"

#include <iostream>
#include <mutex>
#include <set>
#include <thread>

namespace tacsearch {

using nlohmann::json;

Dataset parse_dataset(std::string_view document, const std::string& name) {
    Dataset dataset;
    dataset.name = name;
    std::set<std::string> seen;
    std::size_t pos = 0, line_no = 0;
    while (pos < document.size()) {
        std::size_t nl = document.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = document.size();
        const std::string line = trim(document.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty())
            continue;
        const std::string where = name + ":" + std::to_string(line_no);
        const json record = detail::parse_json_document(line, where);
        if (!record.is_object())
            throw Error(ErrorCode::parse_error, where + ": expected an object");

        Theorem thm;
        try {
            thm.name = record.at("name").get<std::string>();
            thm.statement = record.at("statement").get<std::string>();
            if (auto t = record.find("topic"); t != record.end() && t->is_string())
                thm.topic = t->get<std::string>();
            thm.source = record.value("split", name);
            thm.env = record.value("env", std::string());
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse_error, where + ": " + e.what());
        }
        if (thm.name.empty())
            throw Error(ErrorCode::parse_error, where + ": empty theorem name");
        if (trim(thm.statement).empty())
            throw Error(ErrorCode::parse_error, where + ": empty statement for " + thm.name);
        if (!seen.insert(thm.name).second)
            throw Error(ErrorCode::duplicate_name, where + ": duplicate theorem " + thm.name);
        dataset.theorems.push_back(std::move(thm));
    }
    return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
    return parse_dataset(detail::read_file(path), path.stem().string());
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorCode::config_invalid, what);
}

}  // namespace

RunConfigFile parse_run_config(std::string_view document, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = detail::parse_json_document(document, "run config");
    } catch (const Error& e) {
        invalid(e.what());
    }
    if (!doc.is_object())
        invalid("run config must be an object");

    RunConfigFile cfg;
    try {
        cfg.dataset = resolve(base_dir, doc.at("dataset").get<std::string>());
        if (auto out = doc.find("output"); out != doc.end())
            cfg.output = resolve(base_dir, out->get<std::string>());
        cfg.verify_proofs = doc.value("verify_proofs", true);

        const json& prover = doc.at("prover");
        const std::string pkind = prover.at("kind").get<std::string>();
        if (pkind == "scenario") {
            cfg.prover.kind = ProverSpec::Kind::scenario;
            cfg.prover.scenario = resolve(base_dir, prover.at("path").get<std::string>());
        } else if (pkind == "live") {
            cfg.prover.kind = ProverSpec::Kind::live;
            cfg.prover.command = prover.at("command").get<std::vector<std::string>>();
            if (cfg.prover.command.empty())
                invalid("live prover needs a non-empty command");
        } else {
            invalid("unknown prover kind '" + pkind + "'");
        }
        cfg.prover.call_timeout_secs = prover.value("call_timeout_secs", 60.0);

        const json& gen = doc.at("generator");
        const std::string gkind = gen.at("kind").get<std::string>();
        if (gkind == "remote") {
            cfg.generator.kind = GeneratorSpec::Kind::remote;
            cfg.generator.url = gen.at("url").get<std::string>();
            cfg.generator.model = gen.value("model", std::string());
            cfg.generator.batch_n = gen.value("batch_n", true);
        } else if (gkind == "scripted") {
            cfg.generator.kind = GeneratorSpec::Kind::scripted;
            cfg.generator.script = resolve(base_dir, gen.at("path").get<std::string>());
        } else if (gkind == "seeded") {
            cfg.generator.kind = GeneratorSpec::Kind::seeded;
            cfg.generator.pool = resolve(base_dir, gen.at("pool").get<std::string>());
            cfg.generator.seed = gen.value("seed", std::uint64_t{0});
        } else {
            invalid("unknown generator kind '" + gkind + "'");
        }

        const json search = doc.value("search", json::object());
        SearchConfig& s = cfg.search;
        s.strategy = parse_strategy(search.value("strategy", std::string("b")));
        if (search.contains("n")) {
            s.n = search.at("n").get<int>();
            cfg.n_explicit = true;
        }
        s.k = search.value("k", s.k);
        s.temperature = search.value("temperature", s.temperature);
        s.timeout = SearchConfig::seconds(search.value("timeout_secs", s.timeout.count()));
        s.max_steps_per_attempt = search.value("max_steps_per_attempt", s.max_steps_per_attempt);
        if (auto d = search.find("max_depth"); d != search.end() && !d->is_null())
            s.max_depth = d->get<int>();
        const unsigned hw = std::thread::hardware_concurrency();
        s.jobs = search.value("jobs", hw ? static_cast<int>(hw) : 1);
        if (auto fs = search.find("few_shot"); fs != search.end() && !fs->is_null()) {
            const auto path = resolve(base_dir, fs->get<std::string>());
            if (!std::filesystem::exists(path))
                invalid("few-shot file not found: " + path.string());
            s.few_shot = load_few_shot(path);
        }
    } catch (const json::exception& e) {
        invalid(std::string("run config: ") + e.what());
    }
    return cfg;
}

RunConfigFile load_run_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = detail::read_file(path);
    } catch (const Error& e) {
        invalid(e.what());
    }
    return parse_run_config(text, path.parent_path());
}

void apply_overrides(RunConfigFile& config, const RunOverrides& o) {
    SearchConfig& s = config.search;
    if (o.strategy)
        s.strategy = *o.strategy;
    if (o.k)
        s.k = *o.k;
    if (o.temperature)
        s.temperature = *o.temperature;
    if (o.timeout_secs)
        s.timeout = SearchConfig::seconds(*o.timeout_secs);
    if (o.jobs)
        s.jobs = *o.jobs;
    if (o.seed)
        config.generator.seed = *o.seed;
    if (o.out)
        config.output = *o.out;
    if (o.n) {
        s.n = *o.n;
        config.n_explicit = true;
    } else if (!config.n_explicit &&
               (s.strategy == Strategy::d || s.strategy == Strategy::d_plus)) {
        s.n = 1;
    }
}

void validate_run_config(const RunConfigFile& config) {
    config.search.validate();
    auto must_exist = [](const std::filesystem::path& p, const char* what) {
        if (!std::filesystem::exists(p))
            invalid(std::string(what) + " not found: " + p.string());
    };
    must_exist(config.dataset, "dataset");
    if (config.prover.kind == ProverSpec::Kind::scenario)
        must_exist(config.prover.scenario, "scenario file");
    if (config.generator.kind == GeneratorSpec::Kind::scripted)
        must_exist(config.generator.script, "script file");
    if (config.generator.kind == GeneratorSpec::Kind::seeded)
        must_exist(config.generator.pool, "tactic pool file");
    if (config.output.empty())
        invalid("no output path (set \"output\" or pass --out)");
    if (!(config.prover.call_timeout_secs > 0))
        invalid("call_timeout_secs must be > 0");
}

std::unique_ptr<Prover> make_prover(const RunConfigFile& config) {
    const auto call_timeout = std::chrono::milliseconds(
        static_cast<long long>(config.prover.call_timeout_secs * 1000.0));
    if (config.prover.kind == ProverSpec::Kind::scenario)
        return std::make_unique<ScenarioProver>(load_scenario(config.prover.scenario),
                                                call_timeout);
    LiveProverOptions options;
    options.command = config.prover.command;
    options.pool_size = static_cast<std::size_t>(std::max(1, config.search.jobs));
    options.call_timeout = call_timeout;
    return std::make_unique<LiveProver>(std::move(options));
}

std::unique_ptr<Generator> make_generator(const RunConfigFile& config) {
    const GeneratorSpec& g = config.generator;
    switch (g.kind) {
    case GeneratorSpec::Kind::scripted:
        return std::make_unique<ScriptedGenerator>(ScriptedGenerator::load(g.script));
    case GeneratorSpec::Kind::seeded:
        return std::make_unique<SeededGenerator>(TacticPool::load(g.pool), g.seed);
    case GeneratorSpec::Kind::remote: {
        RemoteGeneratorOptions options;
        options.url = g.url;
        options.model = g.model;
        options.api_key = RemoteChatGenerator::api_key_from_env();
        options.batch_n = g.batch_n;
        return std::make_unique<RemoteChatGenerator>(std::move(options));
    }
    }
    invalid("unknown generator kind");
}

RunReport run_experiment(const Dataset& dataset, const SearchConfig& search, Prover& prover,
                         Generator& generator, ResultsWriter& writer, bool verify_proofs,
                         const RunHooks& hooks) {
    search.validate();
    if (dataset.theorems.empty())
        throw Error(ErrorCode::empty_run, "dataset '" + dataset.name + "' has no theorems");

    RunReport report;
    report.theorems = dataset.theorems.size();
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> proved{0};
    std::atomic<bool> interrupted{false};
    std::mutex hook_mutex;

    auto worker = [&] {
        for (;;) {
            if (hooks.stop && hooks.stop->load()) {
                interrupted = true;
                return;
            }
            const std::size_t i = next.fetch_add(1);
            if (i >= dataset.theorems.size())
                return;
            const Theorem& theorem = dataset.theorems[i];
            SearchResult result = run_search(theorem, search, prover, generator);
            if (result.proved() && verify_proofs) {
                std::string diagnostic;
                if (!replay_proof(theorem, result.proof, prover, &diagnostic)) {
                    result.status = ProofStatus::error;
                    result.message = "proof failed replay: " + diagnostic;
                    result.proof.clear();
                }
            }
            if (result.proved())
                ++proved;
            writer.write(result);
            if (hooks.on_result) {
                std::lock_guard lock(hook_mutex);
                hooks.on_result(result);
            }
        }
    };

    const int jobs = std::max(1, std::min<int>(search.jobs, static_cast<int>(report.theorems)));
    {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
    }
    report.written = writer.written();
    report.proved = proved;
    report.interrupted = interrupted;
    return report;
}

RunReport run_experiment(const RunConfigFile& config, bool overwrite, const RunHooks& hooks) {
    validate_run_config(config);
    const Dataset dataset = load_dataset(config.dataset);
    if (dataset.theorems.empty())
        throw Error(ErrorCode::empty_run, "dataset '" + dataset.name + "' has no theorems");
    auto prover = make_prover(config);
    auto generator = make_generator(config);
    ResultsWriter writer(config.output, overwrite);
    return run_experiment(dataset, config.search, *prover, *generator, writer,
                          config.verify_proofs, hooks);
}

std::vector<ReplayLine> replay_results(const RunSummary& results, const RunConfigFile& config) {
    const Dataset dataset = load_dataset(config.dataset);
    std::map<std::string, const Theorem*> by_name;
    for (const auto& t : dataset.theorems)
        by_name[t.name] = &t;
    auto prover = make_prover(config);

    std::vector<ReplayLine> lines;
    for (const auto& r : results.results) {
        if (!r.proved())
            continue;
        ReplayLine line{r.theorem, false, {}};
        auto it = by_name.find(r.theorem);
        if (it == by_name.end())
            line.diagnostic = "theorem not in dataset";
        else
            line.ok = replay_proof(*it->second, r.proof, *prover, &line.diagnostic);
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace tacsearch
