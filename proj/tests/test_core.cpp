#include "tacsearch/core.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <regex>

using namespace tacsearch;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const std::vector<std::string> alphabet = {"a", "b", " ", "\t", "\r", "\n",
                                                      "\r\n", "⊢", "x", "\n\n"};
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string out;
    for (std::size_t i = len(rng); i > 0; --i)
        out += alphabet[pick(rng)];
    return out;
}

// Independent oracle: split on anything that is not an ASCII identifier
// character and look for an exact "sorry" token.
bool giveup_oracle(const std::string& text) {
    static const std::regex token(R"([A-Za-z0-9_']+)");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), token);
         it != std::sregex_iterator(); ++it)
        if (it->str() == "sorry")
            return true;
    return false;
}

}  // namespace

TEST_CASE("canonicalize_state examples") {
    CHECK(canonicalize_state("⊢ 1 + 1 = 2\r\n") == "⊢ 1 + 1 = 2");
    CHECK(canonicalize_state("") == "");
    CHECK(canonicalize_state("a\n\n\n\nb") == "a\n\nb");
    CHECK(canonicalize_state("\n\n  h : P  \n⊢ Q\t\n\n") == "  h : P\n⊢ Q");
    CHECK(canonicalize_state("a\rb") == "a\nb");
}

TEST_CASE("canonicalize_state is idempotent and yields canonical text") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 5000; ++i) {
        const std::string raw = random_text(rng, 40);
        const std::string once = canonicalize_state(raw);
        CHECK(canonicalize_state(once) == once);
        CHECK(once.find('\r') == std::string::npos);
        CHECK(once.find("\n\n\n") == std::string::npos);
        CHECK(once.find(" \n") == std::string::npos);
        CHECK(once.find("\t\n") == std::string::npos);
        if (!once.empty()) {
            CHECK(once.front() != '\n');
            CHECK(once.back() != '\n');
            CHECK(once.back() != ' ');
            CHECK(once.back() != '\t');
        }
    }
}

TEST_CASE("trim and first_line") {
    CHECK(trim("  a b \n") == "a b");
    CHECK(trim("") == "");
    CHECK(first_line("\n\n  norm_num  \nlinarith") == "norm_num");
    CHECK(first_line("   \n \n") == "");
}

TEST_CASE("is_giveup examples") {
    CHECK(is_giveup("sorry"));
    CHECK_FALSE(is_giveup("norm_num"));
    CHECK_FALSE(is_giveup("exact my_sorry_lemma"));
    CHECK(is_giveup("  sorry  "));
    CHECK(is_giveup("{ simp, sorry }"));
    CHECK_FALSE(is_giveup("sorry'"));
    CHECK_FALSE(is_giveup("sorryₐ"));
    CHECK(is_giveup(Tactic{"exact sorry", 0}));
}

TEST_CASE("is_giveup agrees with a token-split oracle") {
    std::mt19937_64 rng(11);
    static const std::vector<std::string> parts = {"sorry", "s", "orry", "_", "'", " ", ",",
                                                   "[", "]", "exact", ".", "x", "1", "(", ")"};
    std::uniform_int_distribution<std::size_t> pick(0, parts.size() - 1);
    std::uniform_int_distribution<int> len(0, 8);
    for (int i = 0; i < 5000; ++i) {
        std::string s;
        for (int j = len(rng); j > 0; --j)
            s += parts[pick(rng)];
        CHECK_MESSAGE(is_giveup(s) == giveup_oracle(s), s);
    }
}

TEST_CASE("TacticState identity is its canonical text") {
    const TacticState a("⊢ P\r\n");
    const TacticState b("⊢ P");
    const TacticState c("⊢ Q");
    CHECK(a == b);
    CHECK(a.id() == b.id());
    CHECK(a.text() == "⊢ P");
    CHECK_FALSE(a == c);
    CHECK(a.id() == stable_hash("⊢ P"));
    CHECK(TacticStateHash{}(a) == TacticStateHash{}(b));
    // FNV-1a reference values.
    CHECK(stable_hash("") == 0xcbf29ce484222325ULL);
    CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("ApplyOutcome constructors") {
    CHECK(ApplyOutcome::proved().is_proved());
    const auto s = ApplyOutcome::new_state(TacticState("⊢ Q"));
    CHECK(s.kind == ApplyOutcome::Kind::new_state);
    CHECK(s.state.text() == "⊢ Q");
    const auto f = ApplyOutcome::failed(FailureKind::no_progress, "same state");
    CHECK(f.is_failed());
    CHECK(f.describe().find("no-progress") != std::string::npos);
}

TEST_CASE("strategies parse and print") {
    CHECK(parse_strategy("b") == Strategy::b);
    CHECK(parse_strategy("d") == Strategy::d);
    CHECK(parse_strategy("d+") == Strategy::d_plus);
    CHECK(parse_strategy("combined") == Strategy::combined);
    CHECK(std::string(to_string(Strategy::d_plus)) == "d+");
    CHECK_THROWS_AS(parse_strategy("dfs"), Error);
}

TEST_CASE("SearchConfig validation") {
    SearchConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.n == 64);
    CHECK(c.k == 50);
    CHECK(c.temperature == doctest::Approx(1.4));
    CHECK(c.timeout.count() == doctest::Approx(600.0));

    auto rejects = [](SearchConfig bad) {
        try {
            bad.validate();
        } catch (const Error& e) {
            return e.code() == ErrorCode::config_invalid;
        }
        return false;
    };
    SearchConfig x = c;
    x.n = 0;
    CHECK(rejects(x));
    x = c;
    x.k = 0;
    CHECK(rejects(x));
    x = c;
    x.temperature = 0.0;
    CHECK(rejects(x));
    x = c;
    x.timeout = SearchConfig::seconds(0.0);
    CHECK(rejects(x));
    x = c;
    x.strategy = Strategy::d;
    CHECK(rejects(x));  // n must be 1
    x.n = 1;
    CHECK_NOTHROW(x.validate());
    x.strategy = Strategy::d_plus;
    CHECK_NOTHROW(x.validate());

    SearchConfig comb = c;
    comb.strategy = Strategy::combined;
    CHECK(comb.b_leg().k == 1);
    CHECK(comb.b_leg().n == 64);
    CHECK(comb.b_leg().strategy == Strategy::b);
    CHECK(comb.d_plus_leg().n == 1);
    CHECK(comb.d_plus_leg().k == 50);
    CHECK(comb.d_plus_leg().strategy == Strategy::d_plus);
}

TEST_CASE("BadSet set semantics") {
    BadSet bad;
    const TacticState s("⊢ P"), s2("⊢ Q");
    CHECK(bad.empty());
    CHECK_FALSE(bad.contains(s, "simp"));
    bad.record(s, "simp");
    bad.record(s, "simp");
    CHECK(bad.contains(s, "simp"));
    CHECK_FALSE(bad.contains(s2, "simp"));
    CHECK(bad.size() == 1);
    bad.record(s, "ring");
    CHECK(bad.tactics_at(s) == std::vector<std::string>{"ring", "simp"});
    CHECK(bad.tactics_at(s2).empty());
    CHECK(bad.size() == 2);
}

TEST_CASE("BadSet lookup matches a recorded-pairs oracle") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, 5);
    for (int round = 0; round < 200; ++round) {
        BadSet bad;
        std::set<std::pair<int, int>> oracle;
        for (int i = 0; i < 20; ++i) {
            const int s = pick(rng), t = pick(rng);
            bad.record(TacticState("⊢ s" + std::to_string(s)), "t" + std::to_string(t));
            oracle.insert({s, t});
        }
        for (int s = 0; s <= 5; ++s)
            for (int t = 0; t <= 5; ++t)
                CHECK(bad.contains(TacticState("⊢ s" + std::to_string(s)), "t" + std::to_string(t)) ==
                      (oracle.count({s, t}) == 1));
        CHECK(bad.size() == oracle.size());
    }
}

TEST_CASE("status names round-trip") {
    for (auto s : {ProofStatus::proved, ProofStatus::exhausted, ProofStatus::gave_up,
                   ProofStatus::timed_out, ProofStatus::error})
        CHECK(parse_status(to_string(s)) == s);
    CHECK(std::string(to_string(ProofStatus::timed_out)) == "timed-out");
    CHECK_THROWS_AS(parse_status("maybe"), Error);
}
