#include "tacsearch/eval.hpp"

#include "detail.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace tacsearch {

using nlohmann::json;

std::string format_ratio(std::uint64_t numerator, std::uint64_t denominator, int decimals) {
    if (denominator == 0)
        throw Error(ErrorCode::invalid_argument, "ratio with zero denominator");
    std::uint64_t scale = 1;
    for (int i = 0; i < decimals; ++i)
        scale *= 10;
    // round(num * scale / den) with ties going up
    const std::uint64_t scaled = (2 * numerator * scale + denominator) / (2 * denominator);
    std::ostringstream os;
    os << scaled / scale;
    if (decimals > 0) {
        std::string frac = std::to_string(scaled % scale);
        os << '.' << std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') << frac;
    }
    return os.str();
}

std::string format_percent(std::uint64_t count, std::uint64_t total) {
    return format_ratio(count * 100, total, 2) + "%";
}

void RunSummary::check_unique() const {
    std::set<std::string> seen;
    for (const auto& r : results)
        if (!seen.insert(r.theorem).second)
            throw Error(ErrorCode::duplicate_name,
                        "run '" + run_id + "' lists theorem '" + r.theorem + "' twice");
}

Rate pass_at_k(const RunSummary& run) {
    if (run.results.empty())
        throw Error(ErrorCode::empty_run, "run '" + run.run_id + "' has no results");
    Rate rate;
    rate.total = run.results.size();
    for (const auto& r : run.results)
        rate.proved += r.proved() ? 1 : 0;
    return rate;
}

RunComparison compare_runs(const RunSummary& a, const RunSummary& b) {
    std::map<std::string, bool> proved_a, proved_b;
    for (const auto& r : a.results)
        proved_a[r.theorem] = proved_a[r.theorem] || r.proved();
    for (const auto& r : b.results)
        proved_b[r.theorem] = proved_b[r.theorem] || r.proved();

    if (proved_a.size() != proved_b.size() ||
        !std::equal(proved_a.begin(), proved_a.end(), proved_b.begin(),
                    [](const auto& x, const auto& y) { return x.first == y.first; }))
        throw Error(ErrorCode::mismatched_theorem_sets,
                    "runs '" + a.run_id + "' and '" + b.run_id + "' cover different theorems");

    RunComparison cmp;
    cmp.total = proved_a.size();
    for (const auto& [name, pa] : proved_a) {
        const bool pb = proved_b.at(name);
        if (pa && pb) {
            ++cmp.both;
            cmp.both_names.push_back(name);
        } else if (pa) {
            ++cmp.only_a;
            cmp.only_a_names.push_back(name);
        } else if (pb) {
            ++cmp.only_b;
            cmp.only_b_names.push_back(name);
        }
    }
    return cmp;
}

RunSummary union_runs(const RunSummary& a, const RunSummary& b) {
    compare_runs(a, b);
    std::map<std::string, const ProofResult*> from_b;
    for (const auto& r : b.results)
        from_b[r.theorem] = &r;
    RunSummary out;
    out.run_id = a.run_id + "+" + b.run_id;
    for (const auto& r : a.results) {
        const ProofResult& other = *from_b.at(r.theorem);
        out.results.push_back(r.proved() || !other.proved() ? r : other);
    }
    return out;
}

namespace {

std::string budget_term(int k, int n) {
    return std::to_string(k) + " × " + std::to_string(n) + " × –";
}

}  // namespace

BudgetRecord sample_budget(const RunSummary& run) {
    if (run.results.empty())
        throw Error(ErrorCode::empty_run, "run '" + run.run_id + "' has no results");
    const ProofResult& first = run.results.front();
    std::uint64_t calls = 0;
    for (const auto& r : run.results)
        calls += r.generator_calls;

    BudgetRecord budget;
    budget.e_avg = static_cast<double>(calls) / static_cast<double>(run.results.size());
    budget.e_avg_text = format_ratio(calls, run.results.size(), 3);
    if (first.strategy == Strategy::combined) {
        budget.k = first.k;
        budget.n = first.n;
        budget.form = "(" + budget_term(1, first.n) + ") + (" + budget_term(first.k, 1) + ")";
    } else if (first.strategy == Strategy::b) {
        budget.k = 1;
        budget.n = first.n;
        budget.form = budget_term(1, first.n);
    } else {
        budget.k = first.k;
        budget.n = 1;
        budget.form = budget_term(first.k, 1);
    }
    return budget;
}

std::vector<TopicRow> aggregate_by_topic(const RunSummary& run) {
    std::vector<TopicRow> rows;
    std::map<std::string, std::size_t> index;
    TopicRow total{"Total", 0, 0};
    for (const auto& r : run.results) {
        const std::string topic = r.topic && !r.topic->empty() ? *r.topic : "untagged";
        auto [it, inserted] = index.emplace(topic, rows.size());
        if (inserted)
            rows.push_back({topic, 0, 0});
        TopicRow& row = rows[it->second];
        ++row.theorems;
        ++total.theorems;
        if (r.proved()) {
            ++row.proved;
            ++total.proved;
        }
    }
    rows.push_back(total);
    return rows;
}

std::vector<AttemptRow> attempt_report(const RunSummary& run) {
    std::vector<AttemptRow> rows;
    for (const auto& r : run.results)
        if (r.proved())
            rows.push_back({r.theorem, r.attempts_used});
    std::sort(rows.begin(), rows.end(),
              [](const AttemptRow& a, const AttemptRow& b) { return a.theorem < b.theorem; });
    return rows;
}

// -- results file ------------------------------------------------------------

json to_json(const ProofResult& r) {
    json j;
    j["theorem"] = r.theorem;
    j["topic"] = r.topic ? json(*r.topic) : json(nullptr);
    j["status"] = to_string(r.status);
    j["proof"] = r.proof;
    j["attempts_used"] = r.attempts_used;
    j["generator_calls"] = r.generator_calls;
    j["prover_interactions"] = r.prover_interactions;
    j["wall_time_s"] = r.wall_time;
    j["strategy"] = to_string(r.strategy);
    j["k"] = r.k;
    j["n"] = r.n;
    j["temperature"] = r.temperature;
    if (!r.message.empty())
        j["message"] = r.message;
    return j;
}

ProofResult proof_result_from_json(const json& j) {
    ProofResult r;
    r.theorem = j.at("theorem").get<std::string>();
    if (auto t = j.find("topic"); t != j.end() && t->is_string())
        r.topic = t->get<std::string>();
    r.status = parse_status(j.at("status").get<std::string>());
    r.proof = j.value("proof", std::vector<std::string>{});
    r.attempts_used = j.value("attempts_used", 0);
    r.generator_calls = j.value("generator_calls", std::size_t{0});
    r.prover_interactions = j.value("prover_interactions", std::size_t{0});
    r.wall_time = j.value("wall_time_s", 0.0);
    r.strategy = parse_strategy(j.value("strategy", std::string("b")));
    r.k = j.value("k", 1);
    r.n = j.value("n", 1);
    r.temperature = j.value("temperature", 1.0);
    r.message = j.value("message", std::string());
    return r;
}

RunSummary read_results(const std::filesystem::path& path) {
    const std::string content = detail::read_file(path);
    RunSummary run;
    run.run_id = path.stem().string();
    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        const bool terminated = nl != std::string::npos;
        if (!terminated)
            nl = content.size();
        const std::string line = trim(std::string_view(content).substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty())
            continue;
        try {
            run.results.push_back(proof_result_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            if (!terminated)
                break;  // interrupted mid-write
            throw Error(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) +
                                                    ": " + e.what());
        }
    }
    run.check_unique();
    return run;
}

ResultsWriter::ResultsWriter(const std::filesystem::path& path, bool overwrite) {
    if (!overwrite && std::filesystem::exists(path))
        throw Error(ErrorCode::io_error,
                    path.string() + " already exists (pass --force to overwrite)");
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_)
        throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

void ResultsWriter::write(const ProofResult& result) {
    const std::string line = to_json(result).dump() + "\n";
    std::lock_guard lock(mutex_);
    out_ << line;
    out_.flush();
    ++written_;
}

std::size_t ResultsWriter::written() const {
    std::lock_guard lock(mutex_);
    return written_;
}

// -- reports -----------------------------------------------------------------

namespace {

std::size_t display_width(const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s)
        w += (c & 0xC0) != 0x80 ? 1 : 0;
    return w;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows, ReportFormat format) {
    std::ostringstream os;
    if (format == ReportFormat::csv) {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                os << (i ? "," : "") << csv_field(cells[i]);
            os << '\n';
        };
        line(header);
        for (const auto& r : rows)
            line(r);
        return os.str();
    }
    std::vector<std::size_t> widths(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size() && i < widths.size(); ++i)
            widths[i] = std::max(widths[i], display_width(cells[i]));
    };
    measure(header);
    for (const auto& r : rows)
        measure(r);
    auto line = [&](const std::vector<std::string>& cells) {
        std::string text;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            text += cells[i];
            if (i + 1 < cells.size())
                text += std::string(widths[i] - display_width(cells[i]) + 1, ' ');
        }
        os << text << '\n';
    };
    line(header);
    for (const auto& r : rows)
        line(r);
    return os.str();
}

std::string format_temperature(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

}  // namespace

std::string render_summary(const std::vector<RunSummary>& runs, ReportFormat format) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& run : runs) {
        const Rate rate = pass_at_k(run);
        const BudgetRecord budget = sample_budget(run);
        const ProofResult& first = run.results.front();
        rows.push_back({run.run_id, to_string(first.strategy), std::to_string(budget.k),
                        std::to_string(budget.n), format_temperature(first.temperature),
                        budget.form, budget.e_avg_text, std::to_string(rate.proved),
                        std::to_string(rate.total), rate.percent()});
    }
    return render_table({"run", "strategy", "k", "n", "T", "sample_budget", "e_avg", "proved",
                         "theorems", "pass@k"},
                        rows, format);
}

std::string render_comparison(const RunSummary& a, const RunSummary& b, ReportFormat format) {
    const RunComparison cmp = compare_runs(a, b);
    if (format == ReportFormat::csv) {
        return render_table({"run_a", "run_b", "both", "only_a", "only_b", "theorems", "rate_a",
                             "rate_b", "union_rate"},
                            {{a.run_id, b.run_id, std::to_string(cmp.both),
                              std::to_string(cmp.only_a), std::to_string(cmp.only_b),
                              std::to_string(cmp.total), cmp.a_rate().percent(),
                              cmp.b_rate().percent(), cmp.union_rate().percent()}},
                            format);
    }
    std::ostringstream os;
    os << "a = " << a.run_id << ", b = " << b.run_id << ", theorems " << cmp.total << '\n';
    os << "both " << cmp.both << " / only-a " << cmp.only_a << " / only-b " << cmp.only_b << '\n';
    os << "pass@k a " << cmp.a_rate().percent() << " / b " << cmp.b_rate().percent()
       << " / union " << cmp.union_rate().percent() << '\n';
    return os.str();
}

std::string render_topics(const RunSummary& run, ReportFormat format) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : aggregate_by_topic(run))
        rows.push_back({row.topic, std::to_string(row.theorems), std::to_string(row.proved),
                        row.theorems ? row.rate() : "-"});
    return render_table({"topic", "theorems", "proved", "pass_rate"}, rows, format);
}

std::string render_attempts(const std::vector<RunSummary>& runs, ReportFormat format) {
    std::map<std::string, std::vector<std::string>> table;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (const auto& row : attempt_report(runs[i])) {
            auto& cells = table[row.theorem];
            cells.resize(runs.size(), "-");
            cells[i] = std::to_string(row.attempts_used);
        }
    }
    std::vector<std::string> header{"theorem"};
    for (const auto& run : runs)
        header.push_back(run.run_id);
    std::vector<std::vector<std::string>> rows;
    for (auto& [name, cells] : table) {
        std::vector<std::string> row{name};
        row.insert(row.end(), cells.begin(), cells.end());
        rows.push_back(std::move(row));
    }
    return render_table(header, rows, format);
}

}  // namespace tacsearch
