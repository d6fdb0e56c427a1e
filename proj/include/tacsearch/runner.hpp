#pragma once

#include "tacsearch/core.hpp"
#include "tacsearch/eval.hpp"
#include "tacsearch/generator.hpp"
#include "tacsearch/prover.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tacsearch {

struct Dataset {
    std::string name;
    std::vector<Theorem> theorems;
};

/// One JSON record per line: {name, statement, topic?, split?, env?}.
/// Errors carry the offending line number.
Dataset parse_dataset(std::string_view document, const std::string& name);
Dataset load_dataset(const std::filesystem::path& path);

struct ProverSpec {
    enum class Kind { scenario, live };
    Kind kind = Kind::scenario;
    std::filesystem::path scenario;
    std::vector<std::string> command;
    double call_timeout_secs = 60.0;
};

struct GeneratorSpec {
    enum class Kind { remote, scripted, seeded };
    Kind kind = Kind::scripted;
    std::string url;
    std::string model;
    std::filesystem::path script;
    std::filesystem::path pool;
    std::uint64_t seed = 0;
    bool batch_n = true;
};

struct RunConfigFile {
    std::filesystem::path dataset;
    ProverSpec prover;
    GeneratorSpec generator;
    SearchConfig search;
    bool n_explicit = false;  // n given in the file
    std::filesystem::path output;
    bool verify_proofs = true;
};

/// Parses the JSON run configuration. Relative paths resolve against
/// `base_dir`. Throws Error(config_invalid).
RunConfigFile parse_run_config(std::string_view document, const std::filesystem::path& base_dir);
RunConfigFile load_run_config(const std::filesystem::path& path);

/// Command-line overrides applied on top of a config file.
struct RunOverrides {
    std::optional<Strategy> strategy;
    std::optional<int> n, k, jobs;
    std::optional<double> temperature;
    std::optional<double> timeout_secs;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

/// Applies overrides and fills strategy-dependent defaults (d-strategies
/// sample one tactic per step unless n was given explicitly), then checks
/// that every referenced path exists.
void apply_overrides(RunConfigFile& config, const RunOverrides& overrides);
void validate_run_config(const RunConfigFile& config);

std::unique_ptr<Prover> make_prover(const RunConfigFile& config);
std::unique_ptr<Generator> make_generator(const RunConfigFile& config);

struct RunReport {
    std::size_t theorems = 0;
    std::size_t written = 0;
    std::size_t proved = 0;
    bool interrupted = false;
};

struct RunHooks {
    /// Checked before each theorem is started; in-flight theorems finish.
    const std::atomic<bool>* stop = nullptr;
    std::function<void(const ProofResult&)> on_result;
};

/// Searches every theorem with a pool of `search.jobs` workers and appends
/// one record per theorem to `output`. Throws Error for infrastructure
/// failures only.
RunReport run_experiment(const RunConfigFile& config, bool overwrite, const RunHooks& hooks = {});

/// Same, against caller-supplied backends.
RunReport run_experiment(const Dataset& dataset, const SearchConfig& search, Prover& prover,
                         Generator& generator, ResultsWriter& writer, bool verify_proofs,
                         const RunHooks& hooks = {});

struct ReplayLine {
    std::string theorem;
    bool ok = false;
    std::string diagnostic;
};

/// Re-checks every proved record of `results` against the configured prover.
std::vector<ReplayLine> replay_results(const RunSummary& results, const RunConfigFile& config);

}  // namespace tacsearch
