#pragma once

#include "tacsearch/core.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tacsearch {

/// count/total as a percentage rounded half-up to two decimals, e.g.
/// format_percent(76, 244) == "31.15%". Exact integer arithmetic.
std::string format_percent(std::uint64_t count, std::uint64_t total);

/// numerator/denominator rounded half-up to `decimals` places.
std::string format_ratio(std::uint64_t numerator, std::uint64_t denominator, int decimals);

struct Rate {
    std::size_t proved = 0;
    std::size_t total = 0;

    double fraction() const { return total ? static_cast<double>(proved) / total : 0.0; }
    std::string percent() const { return format_percent(proved, total); }
};

struct RunSummary {
    std::string run_id;
    std::vector<ProofResult> results;

    /// Throws Error(duplicate_name) if a theorem appears twice.
    void check_unique() const;
};

Rate pass_at_k(const RunSummary& run);

struct RunComparison {
    std::size_t both = 0;
    std::size_t only_a = 0;
    std::size_t only_b = 0;
    std::size_t total = 0;
    std::vector<std::string> both_names, only_a_names, only_b_names;

    Rate a_rate() const { return {both + only_a, total}; }
    Rate b_rate() const { return {both + only_b, total}; }
    Rate union_rate() const { return {both + only_a + only_b, total}; }
};

/// Throws Error(mismatched_theorem_sets) unless both runs cover the same
/// theorem names.
RunComparison compare_runs(const RunSummary& a, const RunSummary& b);

/// A theorem counts as proved if either run proved it.
RunSummary union_runs(const RunSummary& a, const RunSummary& b);

struct BudgetRecord {
    int k = 0;
    int n = 0;
    double e_avg = 0.0;
    std::string e_avg_text;  // three decimals, e.g. "1.664"
    std::string form;        // e.g. "1 × 64 × –"
};

BudgetRecord sample_budget(const RunSummary& run);

struct TopicRow {
    std::string topic;
    std::size_t theorems = 0;
    std::size_t proved = 0;

    std::string rate() const { return format_percent(proved, theorems); }
};

/// One row per topic in first-appearance order, then a "Total" row.
/// Results without a topic are grouped under "untagged".
std::vector<TopicRow> aggregate_by_topic(const RunSummary& run);

struct AttemptRow {
    std::string theorem;
    int attempts_used = 0;
};

/// Proved theorems only, sorted by name.
std::vector<AttemptRow> attempt_report(const RunSummary& run);

// -- results file -----------------------------------------------------------

nlohmann::json to_json(const ProofResult& result);
ProofResult proof_result_from_json(const nlohmann::json& record);

/// Reads a results file (one JSON record per line). A truncated final line,
/// as left by an interrupted run, is skipped.
RunSummary read_results(const std::filesystem::path& path);

/// Append-only writer; each record is written and flushed under a lock so
/// concurrent workers can submit results.
class ResultsWriter {
public:
    /// Throws Error(io_error) if the file exists and `overwrite` is false.
    ResultsWriter(const std::filesystem::path& path, bool overwrite);

    void write(const ProofResult& result);
    std::size_t written() const;

private:
    mutable std::mutex mutex_;
    std::ofstream out_;
    std::size_t written_ = 0;
};

// -- reports ----------------------------------------------------------------

enum class ReportFormat { text, csv };

std::string render_summary(const std::vector<RunSummary>& runs, ReportFormat format);
std::string render_comparison(const RunSummary& a, const RunSummary& b, ReportFormat format);
std::string render_topics(const RunSummary& run, ReportFormat format);
std::string render_attempts(const std::vector<RunSummary>& runs, ReportFormat format);

}  // namespace tacsearch
