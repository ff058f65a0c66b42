#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragfuse/answer.hpp"
#include "ragfuse/corpus.hpp"
#include "ragfuse/llm_client.hpp"
#include "ragfuse/prompts.hpp"

namespace ragfuse {

enum class Strategy { Concat, PostFusion, Pruning, Summary, ConcatPF, PFConcat };

inline constexpr Strategy kAllStrategies[] = {Strategy::Concat,  Strategy::PostFusion,
                                              Strategy::Pruning, Strategy::Summary,
                                              Strategy::ConcatPF, Strategy::PFConcat};

std::string_view to_string(Strategy s);
/// Human-readable row label used in printed reports.
std::string_view display_name(Strategy s);
Strategy parse_strategy(std::string_view id);

struct Exchange {
    PromptKind kind;
    CompletionRequest request;
    CompletionResponse response;
};

struct StrategyTrace {
    Strategy strategy = Strategy::Concat;
    std::string question_id;
    std::vector<std::string> passage_ids;  // the ranked list the strategy was given
    std::vector<Exchange> exchanges;
    std::optional<std::vector<Answer>> per_passage_answers;  // index-aligned with passage_ids
    std::optional<std::vector<std::string>> candidate_pool;  // distill candidates (PFConcat only)
    Answer final_answer = Answer::unknown();
    int rounds_used = 1;
    bool off_pool = false;  // distiller answered outside the candidate pool
    std::int64_t prompt_tokens_total = 0;
    std::int64_t completion_tokens_total = 0;
};

/// True when the trace's final answer came from a majority vote.
bool finalizes_by_vote(const StrategyTrace& trace);

struct StrategyContext {
    CompletionClient& client;
    UnknownPolicy policy;
    int max_response_tokens = 256;
};

/// Votes over normalized non-Unknown answers. The winner is the most
/// supported form, then the one with the lowest supporting rank, then the
/// lexicographically smallest normalized form; the reported text is the raw
/// answer at that lowest rank.
Answer majority_vote(std::span<const Answer> answers, std::span<const int> ranks);

StrategyTrace run_concatenation(std::span<const Passage> passages, const Question& question,
                                StrategyContext& ctx);
StrategyTrace run_post_fusion(std::span<const Passage> passages, const Question& question,
                              StrategyContext& ctx);
StrategyTrace run_pruning(std::span<const Passage> passages, const Question& question,
                          StrategyContext& ctx);
StrategyTrace run_summary(std::span<const Passage> passages, const Question& question,
                          StrategyContext& ctx);
StrategyTrace run_concat_pf(std::span<const Passage> passages, const Question& question,
                            StrategyContext& ctx);
StrategyTrace run_pf_concat(std::span<const Passage> passages, const Question& question,
                            StrategyContext& ctx);

StrategyTrace run_strategy(Strategy strategy, std::span<const Passage> passages,
                           const Question& question, StrategyContext& ctx);

/// Exchange key used for the per-passage call at 0-based rank `index`.
std::string post_fusion_key(std::size_t index);

}  // namespace ragfuse
