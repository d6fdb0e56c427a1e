#include "tacsearch/generator.hpp"

#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace tacsearch {

using nlohmann::json;

const char* to_string(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

const char* const kPromptHeader =
    "Make a proof statement in Lean3 to prove theorem using the following guidelines:";
const char* const kGuidelineSingleLine =
    "- Generate only the single line of proof that immediately follows.";
const char* const kGuidelineNoSorry = "- Do not use 'sorry'.";

Prompt build_prompt(const Theorem& theorem, const TacticState& state,
                    const std::vector<FewShotExample>& few_shot,
                    const std::vector<std::string>& avoid) {
    Prompt prompt;
    prompt.messages.push_back({Role::system, std::string(kPromptHeader) + "\n" +
                                                 kGuidelineSingleLine + "\n" + kGuidelineNoSorry});
    for (const auto& example : few_shot) {
        prompt.messages.push_back({Role::user, example.state});
        prompt.messages.push_back({Role::assistant, example.tactic});
    }

    std::string query = "Theorem:\n" + theorem.statement + "\n\nTactic state:\n" + state.text();
    if (!avoid.empty()) {
        query += "\n\nThese tactics previously failed at this tactic state; do not repeat them:";
        for (const auto& t : avoid)
            query += "\n- " + t;
    }
    prompt.messages.push_back({Role::user, std::move(query)});
    return prompt;
}

std::vector<std::string> dedup_tactics(const std::vector<std::string>& tactics) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& raw : tactics) {
        std::string t = trim(raw);
        if (t.empty())
            continue;
        if (seen.insert(t).second)
            out.push_back(std::move(t));
    }
    return out;
}

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path) {
    const json doc = detail::parse_json_document(detail::read_file(path), path.string());
    if (!doc.is_array())
        throw Error(ErrorCode::parse_error, path.string() + ": expected a list of exemplars");
    std::vector<FewShotExample> out;
    for (const auto& e : doc) {
        if (!e.is_object() || !e.contains("state") || !e.contains("tactic"))
            throw Error(ErrorCode::parse_error,
                        path.string() + ": each exemplar needs 'state' and 'tactic'");
        out.push_back({canonicalize_state(e.at("state").get<std::string>()),
                       e.at("tactic").get<std::string>()});
    }
    return out;
}

namespace {

std::vector<std::string> drop_blank(std::vector<std::string> tactics) {
    std::erase_if(tactics, [](const std::string& t) { return trim(t).empty(); });
    return tactics;
}

}  // namespace

// -- ScriptedGenerator -------------------------------------------------------

ScriptedGenerator::ScriptedGenerator(std::vector<Entry> entries) {
    for (auto& e : entries)
        script_[{e.theorem, canonicalize_state(e.state), e.call_index}] = drop_blank(e.tactics);
}

GeneratorResponse ScriptedGenerator::generate(const GeneratorRequest& request) {
    const auto& ctx = request.context;
    auto it = script_.find({ctx.theorem, ctx.state.text(), ctx.call_index});
    if (it == script_.end())
        throw Error(ErrorCode::script_exhausted,
                    "no scripted output for " + ctx.theorem + " call " +
                        std::to_string(ctx.call_index));
    GeneratorResponse response;
    response.tactics = it->second;
    if (response.tactics.size() > static_cast<std::size_t>(request.n))
        response.tactics.resize(static_cast<std::size_t>(request.n));
    return response;
}

std::vector<ScriptedGenerator::Entry> ScriptedGenerator::parse(std::string_view document) {
    const json doc = detail::parse_json_document(document, "script");
    const json& list = doc.is_object() && doc.contains("entries") ? doc.at("entries") : doc;
    if (!list.is_array())
        throw Error(ErrorCode::parse_error, "script: expected a list of entries");
    std::vector<Entry> entries;
    for (const auto& e : list) {
        try {
            Entry entry;
            entry.theorem = e.at("theorem").get<std::string>();
            entry.state = e.at("state").get<std::string>();
            entry.call_index = e.value("call_index", std::size_t{0});
            entry.tactics = e.at("tactics").get<std::vector<std::string>>();
            entries.push_back(std::move(entry));
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::parse_error,
                        "script entry #" + std::to_string(entries.size()) + ": " + ex.what());
        }
    }
    return entries;
}

ScriptedGenerator ScriptedGenerator::load(const std::filesystem::path& path) {
    return ScriptedGenerator(parse(detail::read_file(path)));
}

// -- SeededGenerator ---------------------------------------------------------

namespace {

std::vector<WeightedTactic> parse_weighted(const json& list, const std::string& where) {
    if (!list.is_array())
        throw Error(ErrorCode::parse_error, where + ": expected a list");
    std::vector<WeightedTactic> out;
    for (const auto& item : list) {
        WeightedTactic wt;
        if (item.is_string()) {
            wt.tactic = item.get<std::string>();
        } else if (item.is_object()) {
            wt.tactic = item.at("tactic").get<std::string>();
            wt.weight = item.value("weight", 1.0);
        } else {
            throw Error(ErrorCode::parse_error, where + ": bad pool item");
        }
        if (!(wt.weight > 0.0))
            throw Error(ErrorCode::parse_error, where + ": weights must be positive");
        out.push_back(std::move(wt));
    }
    return out;
}

}  // namespace

TacticPool TacticPool::parse(std::string_view document) {
    const json doc = detail::parse_json_document(document, "pool");
    if (!doc.is_object())
        throw Error(ErrorCode::parse_error, "pool: expected an object");
    TacticPool pool;
    try {
        if (auto states = doc.find("states"); states != doc.end()) {
            for (const auto& entry : *states) {
                std::string state = canonicalize_state(entry.at("state").get<std::string>());
                pool.by_state[state] = parse_weighted(entry.at("tactics"), "pool state");
            }
        }
        if (auto fb = doc.find("fallback"); fb != doc.end())
            pool.fallback = parse_weighted(*fb, "pool fallback");
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::parse_error, std::string("pool: ") + ex.what());
    }
    return pool;
}

TacticPool TacticPool::load(const std::filesystem::path& path) {
    return parse(detail::read_file(path));
}

std::vector<double> tempered_probabilities(const std::vector<WeightedTactic>& pool,
                                           double temperature) {
    if (pool.empty())
        return {};
    // Work in log space: w^(1/T) overflows for small T.
    std::vector<double> logits;
    logits.reserve(pool.size());
    for (const auto& wt : pool)
        logits.push_back(std::log(wt.weight) / temperature);
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs;
    double total = 0.0;
    for (double l : logits) {
        probs.push_back(std::exp(l - top));
        total += probs.back();
    }
    for (double& p : probs)
        p /= total;
    return probs;
}

SeededGenerator::SeededGenerator(TacticPool pool, std::uint64_t seed)
    : pool_(std::move(pool)), seed_(seed) {}

GeneratorResponse SeededGenerator::generate(const GeneratorRequest& request) {
    const auto& ctx = request.context;
    const std::vector<WeightedTactic>* pool = &pool_.fallback;
    if (auto it = pool_.by_state.find(ctx.state.text()); it != pool_.by_state.end())
        pool = &it->second;

    GeneratorResponse response;
    if (pool->empty())
        return response;

    std::uint64_t temperature_bits = 0;
    std::memcpy(&temperature_bits, &request.temperature, sizeof temperature_bits);
    const std::uint64_t parts[] = {seed_, stable_hash(ctx.theorem), ctx.state.id(),
                                   static_cast<std::uint64_t>(ctx.call_index),
                                   static_cast<std::uint64_t>(request.n), temperature_bits};
    std::vector<std::uint32_t> words;
    for (std::uint64_t p : parts) {
        words.push_back(static_cast<std::uint32_t>(p));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    std::mt19937_64 rng(seq);

    const std::vector<double> probs = tempered_probabilities(*pool, request.temperature);
    std::vector<double> cumulative(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cumulative.begin());

    response.tactics.reserve(static_cast<std::size_t>(request.n));
    for (int i = 0; i < request.n; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        auto pos = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        std::size_t idx = static_cast<std::size_t>(pos - cumulative.begin());
        if (idx >= pool->size())
            idx = pool->size() - 1;
        response.tactics.push_back((*pool)[idx].tactic);
    }
    return response;
}

// -- RemoteChatGenerator -----------------------------------------------------

RemoteChatGenerator::RemoteChatGenerator(RemoteGeneratorOptions options)
    : options_(std::move(options)) {
    const auto scheme_end = options_.url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::config_invalid, "generator url needs a scheme: " + options_.url);
    const auto path_begin = options_.url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) {
        endpoint_ = {options_.url, "/"};
    } else {
        endpoint_ = {options_.url.substr(0, path_begin), options_.url.substr(path_begin)};
    }
    if (options_.max_tries < 1)
        options_.max_tries = 1;
}

std::string RemoteChatGenerator::api_key_from_env() {
    const char* key = std::getenv("TACSEARCH_API_KEY");
    return key ? std::string(key) : std::string();
}

std::vector<std::string> RemoteChatGenerator::post(const GeneratorRequest& request, int n) {
    json body;
    body["model"] = options_.model;
    body["n"] = n;
    body["temperature"] = request.temperature;
    body["messages"] = json::array();
    for (const auto& m : request.prompt.messages)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!options_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + options_.api_key);

    auto backoff = options_.initial_backoff;
    std::string last_error;
    bool rate_limited = false;
    for (int attempt = 0; attempt < options_.max_tries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(endpoint_.scheme_host_port);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.request_timeout);
        client.set_read_timeout(secs.count(), 0);
        client.set_write_timeout(secs.count(), 0);
        client.set_connection_timeout(10, 0);
        auto res = client.Post(endpoint_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            rate_limited = false;
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            rate_limited = res->status == 429;
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorCode::backend_unavailable,
                        "generator endpoint returned HTTP " + std::to_string(res->status) + ": " +
                            res->body.substr(0, 200));
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array())
            throw Error(ErrorCode::backend_unavailable, "malformed generator response");
        std::vector<std::string> out;
        for (const auto& choice : reply["choices"]) {
            const json* content = nullptr;
            if (auto msg = choice.find("message"); msg != choice.end() && msg->is_object()) {
                if (auto c = msg->find("content"); c != msg->end() && c->is_string())
                    content = &*c;
            } else if (auto t = choice.find("text"); t != choice.end() && t->is_string()) {
                content = &*t;
            }
            if (content)
                out.push_back(content->get<std::string>());
        }
        return out;
    }
    throw Error(rate_limited ? ErrorCode::rate_limited : ErrorCode::backend_unavailable,
                "generator endpoint failed after " + std::to_string(options_.max_tries) +
                    " tries: " + last_error);
}

GeneratorResponse RemoteChatGenerator::generate(const GeneratorRequest& request) {
    GeneratorResponse response;
    response.call_count = 0;
    std::vector<std::string> samples;
    if (options_.batch_n) {
        samples = post(request, request.n);
        ++response.call_count;
    }
    while (samples.size() < static_cast<std::size_t>(request.n)) {
        auto more = post(request, 1);
        ++response.call_count;
        if (more.empty())
            break;
        samples.push_back(std::move(more.front()));
    }
    if (samples.size() > static_cast<std::size_t>(request.n))
        samples.resize(static_cast<std::size_t>(request.n));
    response.tactics = drop_blank(std::move(samples));
    return response;
}

}  // namespace tacsearch
