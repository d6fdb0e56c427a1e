#include "support.hpp"

#include "tacsearch/eval.hpp"

#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

using namespace tacsearch;
using namespace tacsearch::testing;

namespace {

struct Outcome {
    int status = -1;
    std::string out;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Outcome cli(const std::string& args) {
    const std::string cmd = quote(TACSEARCH_CLI_BIN) + " " + args + " 2>/dev/null";
    Outcome o;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
        o.out.append(buf.data(), got);
    const int raw = pclose(pipe);
    o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return o;
}

ProofResult record(const std::string& name, bool proved, int attempts = 1) {
    ProofResult r;
    r.theorem = name;
    r.status = proved ? ProofStatus::proved : ProofStatus::exhausted;
    if (proved)
        r.proof = {"norm_num"};
    r.attempts_used = attempts;
    r.generator_calls = 1;
    r.n = 64;
    return r;
}

void write_run(const std::filesystem::path& path, const std::vector<bool>& proved) {
    ResultsWriter w(path, true);
    for (std::size_t i = 0; i < proved.size(); ++i)
        w.write(record("thm_" + std::to_string(i), proved[i]));
}

}  // namespace

TEST_CASE("cli run, overwrite refusal and replay") {
    const auto dir = temp_dir("cli");
    const std::string cfg = quote(fixture("smoke/run.json").string());
    const std::string out = quote((dir / "smoke.jsonl").string());

    const Outcome first = cli("run --config " + cfg + " --out " + out);
    CHECK(first.status == 0);
    CHECK(first.out.find("theorems 3, written 3, proved 2") != std::string::npos);
    CHECK(read_results(dir / "smoke.jsonl").results.size() == 3);

    CHECK(cli("run --config " + cfg + " --out " + out).status == 4);
    CHECK(cli("run --config " + cfg + " --out " + out + " --force --jobs 1").status == 0);

    const Outcome replay = cli("replay --results " + out + " --config " + cfg);
    CHECK(replay.status == 0);
    CHECK(replay.out.find("smoke_intro ok") != std::string::npos);

    CHECK(cli("run --config " + cfg + " --out " + quote((dir / "x.jsonl").string()) +
              " --strategy d+ --n 4")
              .status == 2);
    CHECK(cli("run --config " + quote((dir / "nope.json").string())).status == 2);
    CHECK(cli("run --config " + cfg + " --strategy sideways").status != 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli refuses an empty dataset") {
    const auto dir = temp_dir("cliempty");
    std::ofstream(dir / "empty.jsonl").close();
    std::ofstream(dir / "run.json")
        << R"({"dataset": "empty.jsonl", "output": "out.jsonl",
               "prover": {"kind": "scenario", "path": ")"
        << fixture("smoke/scenario.json").string() << R"("},
               "generator": {"kind": "scripted", "path": ")"
        << fixture("smoke/script.json").string() << R"("}})";
    CHECK(cli("run --config " + quote((dir / "run.json").string())).status == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli reproduces the mathd_algebra_171 attempt count") {
    const auto dir = temp_dir("cli171");
    const std::string out = quote((dir / "dplus.jsonl").string());
    REQUIRE(cli("run --config " + quote(fixture("algebra171_run.json").string()) + " --out " + out).status == 0);
    const Outcome rep = cli("report --mode attempts " + out);
    CHECK(rep.status == 0);
    CHECK(rep.out.find("mathd_algebra_171 21") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli reports") {
    const auto dir = temp_dir("clireport");
    std::vector<bool> combined(244, false), b(244, false), d(244, false);
    for (int i = 0; i < 76; ++i)
        combined[i] = true;
    for (int i = 0; i < 56; ++i)
        b[i] = d[i] = true;
    for (int i = 56; i < 71; ++i)
        b[i] = true;
    for (int i = 71; i < 76; ++i)
        d[i] = true;
    write_run(dir / "combined.jsonl", combined);
    write_run(dir / "b.jsonl", b);
    write_run(dir / "dplus.jsonl", d);

    const Outcome summary = cli("report --mode summary " + quote((dir / "combined.jsonl").string()));
    CHECK(summary.status == 0);
    CHECK(summary.out.find("31.15%") != std::string::npos);

    const Outcome cmp = cli("report --mode compare " + quote((dir / "b.jsonl").string()) + " " +
                            quote((dir / "dplus.jsonl").string()));
    CHECK(cmp.status == 0);
    CHECK(cmp.out.find("both 56 / only-a 15 / only-b 5") != std::string::npos);

    const Outcome csv = cli("report --mode compare --format csv " + quote((dir / "b.jsonl").string()) +
                            " " + quote((dir / "dplus.jsonl").string()));
    CHECK(csv.out.find("b,dplus,56,15,5,244,29.10%,25.00%,31.15%") != std::string::npos);

    const Outcome topics = cli("report --mode topics " + quote((dir / "b.jsonl").string()));
    CHECK(topics.out.find("Total") != std::string::npos);
    CHECK(topics.out.find("29.10%") != std::string::npos);

    write_run(dir / "short.jsonl", {true});
    CHECK(cli("report --mode compare " + quote((dir / "b.jsonl").string()) + " " +
              quote((dir / "short.jsonl").string()))
              .status == 4);
    CHECK(cli("report --mode compare " + quote((dir / "b.jsonl").string())).status == 4);
    CHECK(cli("report " + quote((dir / "missing.jsonl").string())).status == 4);
    std::filesystem::remove_all(dir);
}
