#include "ragfuse/strategies.hpp"

#include <map>
#include <unordered_set>

#include "ragfuse/errors.hpp"
#include "ragfuse/metrics.hpp"

namespace ragfuse {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::Concat: return "concat";
    case Strategy::PostFusion: return "post_fusion";
    case Strategy::Pruning: return "pruning";
    case Strategy::Summary: return "summary";
    case Strategy::ConcatPF: return "concat_pf";
    case Strategy::PFConcat: return "pf_concat";
    }
    return "?";
}

std::string_view display_name(Strategy s) {
    switch (s) {
    case Strategy::Concat: return "Concatenation";
    case Strategy::PostFusion: return "Post-Fusion";
    case Strategy::Pruning: return "Pruning Prompt";
    case Strategy::Summary: return "Summary Prompt";
    case Strategy::ConcatPF: return "Concat + PF";
    case Strategy::PFConcat: return "PF + Concat";
    }
    return "?";
}

Strategy parse_strategy(std::string_view id) {
    for (auto s : kAllStrategies) {
        if (to_string(s) == id) return s;
    }
    throw ConfigError("unknown strategy '" + std::string(id) + "'");
}

std::string post_fusion_key(std::size_t index) {
    return "pf:" + std::to_string(index);
}

bool finalizes_by_vote(const StrategyTrace& trace) {
    return trace.strategy == Strategy::PostFusion ||
           (trace.strategy == Strategy::ConcatPF && trace.rounds_used == 2);
}

Answer majority_vote(std::span<const Answer> answers, std::span<const int> ranks) {
    if (answers.size() != ranks.size()) {
        throw ValidationError("majority_vote: " + std::to_string(answers.size()) + " answers but " +
                              std::to_string(ranks.size()) + " ranks");
    }
    struct Tally {
        int count = 0;
        int best_rank = 0;
        const std::string* raw = nullptr;
    };
    std::map<std::string, Tally> tallies;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (answers[i].is_unknown()) continue;
        Tally& t = tallies[normalize_answer(answers[i].value())];
        if (t.count == 0 || ranks[i] < t.best_rank) {
            t.best_rank = ranks[i];
            t.raw = &answers[i].value();
        }
        ++t.count;
    }
    const Tally* winner = nullptr;
    // std::map iterates in ascending normalized order, so strict comparisons
    // leave the lexicographically smallest form in place on a full tie.
    for (const auto& [norm, t] : tallies) {
        if (!winner || t.count > winner->count ||
            (t.count == winner->count && t.best_rank < winner->best_rank)) {
            winner = &t;
        }
    }
    return winner ? Answer::text(*winner->raw) : Answer::unknown();
}

namespace {

std::vector<std::string> texts_of(std::span<const Passage> passages) {
    std::vector<std::string> out;
    out.reserve(passages.size());
    for (const auto& p : passages) out.push_back(p.text);
    return out;
}

StrategyTrace start_trace(Strategy s, std::span<const Passage> passages, const Question& q) {
    if (passages.empty()) {
        throw ValidationError("strategy " + std::string(to_string(s)) + " needs at least one passage");
    }
    StrategyTrace t;
    t.strategy = s;
    t.question_id = q.question_id;
    for (const auto& p : passages) t.passage_ids.push_back(p.passage_id);
    return t;
}

// Issues one request and appends it to the trace, tagging client errors with the question id.
const CompletionResponse& exchange(StrategyTrace& trace, StrategyContext& ctx, PromptKind kind,
                                   std::string prompt, ExchangeTag tag) {
    CompletionRequest req;
    req.prompt_text = std::move(prompt);
    req.max_response_tokens = ctx.max_response_tokens;
    req.temperature = 0.0;
    req.tag = std::move(tag);
    const std::string where = "question '" + trace.question_id + "', " + req.tag.exchange_key + ": ";
    CompletionResponse resp;
    try {
        resp = ctx.client.complete(req);
    } catch (const BudgetError& e) {
        throw BudgetError(where + e.what());
    } catch (const TransportError& e) {
        throw TransportError(where + e.what());
    } catch (const ScriptError& e) {
        throw ScriptError(where + e.what());
    }
    trace.prompt_tokens_total += resp.prompt_tokens;
    trace.completion_tokens_total += resp.completion_tokens;
    trace.exchanges.push_back({kind, std::move(req), std::move(resp)});
    return trace.exchanges.back().response;
}

Answer concat_round(StrategyTrace& trace, std::span<const Passage> passages, const Question& q,
                    StrategyContext& ctx) {
    const auto& r = exchange(trace, ctx, PromptKind::Concatenation,
                             prompts::render_concatenation(passages, q, ctx.policy.sentinel),
                             {q.question_id, "concat", texts_of(passages)});
    return classify_response(r.text, ctx.policy);
}

std::vector<Answer> per_passage_round(StrategyTrace& trace, std::span<const Passage> passages,
                                      const Question& q, StrategyContext& ctx) {
    std::vector<Answer> answers;
    answers.reserve(passages.size());
    for (std::size_t i = 0; i < passages.size(); ++i) {
        const auto& r = exchange(trace, ctx, PromptKind::PostFusionSingle,
                                 prompts::render_post_fusion_single(passages[i], q, ctx.policy.sentinel),
                                 {q.question_id, post_fusion_key(i), {passages[i].text}});
        answers.push_back(classify_response(r.text, ctx.policy));
    }
    return answers;
}

Answer vote_in_rank_order(const std::vector<Answer>& answers) {
    std::vector<int> ranks(answers.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) ranks[i] = static_cast<int>(i);
    return majority_vote(answers, ranks);
}

}  // namespace

StrategyTrace run_concatenation(std::span<const Passage> passages, const Question& question,
                                StrategyContext& ctx) {
    StrategyTrace t = start_trace(Strategy::Concat, passages, question);
    t.final_answer = concat_round(t, passages, question, ctx);
    return t;
}

StrategyTrace run_post_fusion(std::span<const Passage> passages, const Question& question,
                              StrategyContext& ctx) {
    StrategyTrace t = start_trace(Strategy::PostFusion, passages, question);
    auto answers = per_passage_round(t, passages, question, ctx);
    t.final_answer = vote_in_rank_order(answers);
    t.per_passage_answers = std::move(answers);
    return t;
}

StrategyTrace run_pruning(std::span<const Passage> passages, const Question& question,
                          StrategyContext& ctx) {
    StrategyTrace t = start_trace(Strategy::Pruning, passages, question);
    const auto& r = exchange(t, ctx, PromptKind::Pruning,
                             prompts::render_pruning(passages, question, ctx.policy.sentinel),
                             {question.question_id, "pruning", texts_of(passages)});
    t.final_answer = classify_response(r.text, ctx.policy);
    return t;
}

StrategyTrace run_summary(std::span<const Passage> passages, const Question& question,
                          StrategyContext& ctx) {
    StrategyTrace t = start_trace(Strategy::Summary, passages, question);
    const auto& r = exchange(t, ctx, PromptKind::Summary,
                             prompts::render_summary(passages, question, ctx.policy.sentinel),
                             {question.question_id, "summary", texts_of(passages)});
    t.final_answer = classify_response(r.text, ctx.policy);
    return t;
}

StrategyTrace run_concat_pf(std::span<const Passage> passages, const Question& question,
                            StrategyContext& ctx) {
    StrategyTrace t = start_trace(Strategy::ConcatPF, passages, question);
    Answer first = concat_round(t, passages, question, ctx);
    if (!first.is_unknown()) {
        t.final_answer = std::move(first);
        return t;
    }
    t.rounds_used = 2;
    auto answers = per_passage_round(t, passages, question, ctx);
    t.final_answer = vote_in_rank_order(answers);
    t.per_passage_answers = std::move(answers);
    return t;
}

StrategyTrace run_pf_concat(std::span<const Passage> passages, const Question& question,
                            StrategyContext& ctx) {
    StrategyTrace t = start_trace(Strategy::PFConcat, passages, question);
    auto answers = per_passage_round(t, passages, question, ctx);

    std::vector<Passage> survivors;
    std::vector<std::string> candidates;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (answers[i].is_unknown()) continue;
        survivors.push_back(passages[i]);
        candidates.push_back(answers[i].value());
    }
    t.per_passage_answers = std::move(answers);
    if (candidates.empty()) {
        t.candidate_pool = std::vector<std::string>{};
        t.final_answer = Answer::unknown();
        return t;
    }

    t.rounds_used = 2;
    t.candidate_pool = prompts::dedup_candidates(candidates);
    const auto& r = exchange(t, ctx, PromptKind::Distill,
                             prompts::render_distill(survivors, question, candidates),
                             {question.question_id, "distill", texts_of(survivors)});
    t.final_answer = classify_response(r.text, ctx.policy);
    if (!t.final_answer.is_unknown()) {
        const std::string norm = normalize_answer(t.final_answer.value());
        bool in_pool = false;
        for (const auto& c : *t.candidate_pool) in_pool = in_pool || normalize_answer(c) == norm;
        t.off_pool = !in_pool;
    }
    return t;
}

StrategyTrace run_strategy(Strategy strategy, std::span<const Passage> passages,
                           const Question& question, StrategyContext& ctx) {
    switch (strategy) {
    case Strategy::Concat: return run_concatenation(passages, question, ctx);
    case Strategy::PostFusion: return run_post_fusion(passages, question, ctx);
    case Strategy::Pruning: return run_pruning(passages, question, ctx);
    case Strategy::Summary: return run_summary(passages, question, ctx);
    case Strategy::ConcatPF: return run_concat_pf(passages, question, ctx);
    case Strategy::PFConcat: return run_pf_concat(passages, question, ctx);
    }
    throw ValidationError("unknown strategy");
}

}  // namespace ragfuse
