#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ragfuse/corpus.hpp"
#include "ragfuse/metrics.hpp"
#include "ragfuse/strategies.hpp"

namespace ragfuse {

struct EvalRecord {
    std::string question_id;
    std::string strategy;   // Strategy id, e.g. "concat_pf"
    std::string placement;  // PlacementMode id the question was run under
    int em = 0;
    double f1 = 0.0;
    bool is_unknown = false;
    std::optional<bool> pool_contains_gold;  // set only for vote-finalized traces
    std::optional<bool> nm_event;
    std::optional<std::string> final_answer;
    int rounds_used = 1;
    bool off_pool = false;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    bool operator==(const EvalRecord&) const = default;
};

/// Pure function of (trace, question).
EvalRecord score_trace(const StrategyTrace& trace, const Question& question);

struct FilterResult {
    std::vector<Question> kept;
    std::vector<Question> removed;
};

/// Drops questions the model answers exactly without any passages.
FilterResult filter_dataset(const std::vector<Question>& questions, StrategyContext& ctx);

enum class NmDenominator {
    PoolWithGold,  // questions whose vote pool holds a gold-matching answer
    AllQuestions,
};

NmDenominator parse_nm_denominator(std::string_view name);
std::string_view to_string(NmDenominator d);

struct ReportRow {
    std::string placement;
    std::string strategy;
    std::size_t n_questions = 0;
    double em = 0.0;  // percent
    double f1 = 0.0;  // percent
    double unk_rate = 0.0;
    double nm_rate = 0.0;
    std::size_t nm_events = 0;
    std::size_t nm_pools = 0;
    double mean_prompt_tokens = 0.0;
    double mean_completion_tokens = 0.0;
    std::int64_t total_prompt_tokens = 0;
    std::int64_t total_completion_tokens = 0;

    bool operator==(const ReportRow&) const = default;
};

struct EvalReport {
    std::vector<ReportRow> rows;  // one per (placement, strategy), in first-seen record order

    const ReportRow* find(std::string_view placement, std::string_view strategy) const;
};

EvalReport aggregate(const std::vector<EvalRecord>& records,
                     NmDenominator nm_denominator = NmDenominator::PoolWithGold);

void write_records(const std::filesystem::path& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records(const std::filesystem::path& path);

void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
void write_report_json(const std::filesystem::path& path, const EvalReport& report);
void write_token_usage_csv(const std::filesystem::path& path, const EvalReport& report);

/// Fixed-width table with EM, F1, %Unk, %NM and mean token columns.
std::string format_report_table(const EvalReport& report);

}  // namespace ragfuse
