#pragma once

#include "tacsearch/core.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

namespace tacsearch {

enum class Role { system, user, assistant };

const char* to_string(Role role);

struct Message {
    Role role;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct Prompt {
    std::vector<Message> messages;
};

/// Which theorem run and state a request is for. Scripted and seeded
/// backends key on it; `call_index` counts earlier requests at the same
/// canonical state within the current search run.
struct GenerationContext {
    std::string theorem;
    TacticState state;
    std::size_t call_index = 0;
};

struct GeneratorRequest {
    Prompt prompt;
    int n = 1;
    double temperature = 1.0;
    std::vector<std::string> avoid;
    GenerationContext context;
};

struct GeneratorResponse {
    std::vector<std::string> tactics;
    std::size_t call_count = 1;
};

/// Tactic generator backend. Implementations must be safe to call from
/// several workers at once.
class Generator {
public:
    virtual ~Generator() = default;
    virtual GeneratorResponse generate(const GeneratorRequest& request) = 0;
};

extern const char* const kPromptHeader;
extern const char* const kGuidelineSingleLine;
extern const char* const kGuidelineNoSorry;

/// System guidelines, then exemplars as user(state)/assistant(tactic) pairs,
/// then the live query carrying the theorem statement, the current state and
/// (when non-empty) the tactics that already failed at this state.
Prompt build_prompt(const Theorem& theorem, const TacticState& state,
                    const std::vector<FewShotExample>& few_shot,
                    const std::vector<std::string>& avoid);

/// Keeps the first occurrence of each distinct trimmed string, drops empties.
std::vector<std::string> dedup_tactics(const std::vector<std::string>& tactics);

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path);

// -- scripted ---------------------------------------------------------------

/// Replays fixed outputs keyed by (theorem, canonical state, call index).
/// Throws Error(script_exhausted) when no entry exists.
class ScriptedGenerator : public Generator {
public:
    struct Entry {
        std::string theorem;
        std::string state;
        std::size_t call_index = 0;
        std::vector<std::string> tactics;
    };

    explicit ScriptedGenerator(std::vector<Entry> entries);

    GeneratorResponse generate(const GeneratorRequest& request) override;

    static std::vector<Entry> parse(std::string_view document);
    static ScriptedGenerator load(const std::filesystem::path& path);

private:
    std::map<std::tuple<std::string, std::string, std::size_t>, std::vector<std::string>> script_;
};

// -- seeded stochastic mock -------------------------------------------------

struct WeightedTactic {
    std::string tactic;
    double weight = 1.0;
};

/// Per-state weighted pools. States not in the map draw from `fallback`.
struct TacticPool {
    std::map<std::string, std::vector<WeightedTactic>> by_state;
    std::vector<WeightedTactic> fallback;

    static TacticPool parse(std::string_view document);
    static TacticPool load(const std::filesystem::path& path);
};

/// Selection probabilities after temperature scaling: w_i^(1/T), renormalized.
std::vector<double> tempered_probabilities(const std::vector<WeightedTactic>& pool,
                                           double temperature);

/// Draws `n` iid samples from the state's pool under the tempered
/// distribution. Output is a pure function of (seed, theorem, state,
/// call_index, n, temperature).
class SeededGenerator : public Generator {
public:
    SeededGenerator(TacticPool pool, std::uint64_t seed);

    GeneratorResponse generate(const GeneratorRequest& request) override;

private:
    TacticPool pool_;
    std::uint64_t seed_;
};

// -- remote chat endpoint ---------------------------------------------------

struct RemoteGeneratorOptions {
    std::string url;  // full endpoint URL, e.g. https://host/v1/chat/completions
    std::string model;
    std::string api_key;  // sent as a bearer token when non-empty
    int max_tries = 5;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::milliseconds request_timeout{120000};
    /// Send `n` in one request; if the endpoint answers with fewer choices,
    /// the remainder is fetched one request at a time.
    bool batch_n = true;
};

/// Client for chat-completion style endpoints:
///   request  {model, messages: [{role, content}], n, temperature}
///   response {choices: [{message: {content}}]}
class RemoteChatGenerator : public Generator {
public:
    explicit RemoteChatGenerator(RemoteGeneratorOptions options);

    GeneratorResponse generate(const GeneratorRequest& request) override;

    /// Reads the credential from TACSEARCH_API_KEY.
    static std::string api_key_from_env();

private:
    struct Endpoint {
        std::string scheme_host_port;
        std::string path;
    };

    std::vector<std::string> post(const GeneratorRequest& request, int n);

    RemoteGeneratorOptions options_;
    Endpoint endpoint_;
};

}  // namespace tacsearch
