#include <catch_amalgamated.hpp>

#include "ragfuse/errors.hpp"
#include "ragfuse/strategies.hpp"
#include "test_support.hpp"

using namespace ragfuse;
using namespace ragfuse::testing;

namespace {

std::vector<Passage> passages(std::size_t k) {
    std::vector<Passage> out;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(make_passage("d#" + std::to_string(i), "passage body " + std::to_string(i) + " words"));
    }
    return out;
}

const Question kQ = make_question("q", "What is it?", {"a"});

Script pf_script(const std::vector<std::string>& answers) {
    Script s;
    for (std::size_t i = 0; i < answers.size(); ++i) s[{"q", post_fusion_key(i)}] = answers[i];
    return s;
}

Answer A(const std::string& s) { return Answer::text(s); }
const Answer U = Answer::unknown();

std::int64_t exchange_sum(const StrategyTrace& t, bool prompt) {
    std::int64_t s = 0;
    for (const auto& e : t.exchanges) s += prompt ? e.response.prompt_tokens : e.response.completion_tokens;
    return s;
}

}  // namespace

TEST_CASE("majority vote examples", "[strategies]") {
    std::vector<Answer> nile{A("The Nile"), A("nile"), A("Amazon")};
    std::vector<int> r3{0, 1, 2};
    CHECK(majority_vote(nile, r3) == A("The Nile"));

    CHECK(majority_vote({}, {}).is_unknown());

    std::vector<Answer> ab{A("a"), A("b")};
    std::vector<int> r10{1, 0};
    CHECK(majority_vote(ab, r10) == A("b"));
    std::vector<int> r01{0, 1};
    CHECK(majority_vote(ab, r01) == A("a"));

    std::vector<Answer> mixed{A("a"), A("b"), A("a"), U, A("a")};
    std::vector<int> r5{0, 1, 2, 3, 4};
    CHECK(majority_vote(mixed, r5) == A("a"));

    std::vector<Answer> unknowns{U, U};
    std::vector<int> r2{0, 1};
    CHECK(majority_vote(unknowns, r2).is_unknown());

    // equal count and equal best rank: lexicographically smallest normalized form
    std::vector<Answer> same_rank{A("zeta"), A("Alpha")};
    std::vector<int> r00{0, 0};
    CHECK(majority_vote(same_rank, r00) == A("Alpha"));

    // reported text comes from the lowest-rank supporter, not the first listed
    std::vector<Answer> surface{A("the Nile"), A("Nile!")};
    std::vector<int> r_rev{3, 1};
    CHECK(majority_vote(surface, r_rev) == A("Nile!"));

    std::vector<int> short_ranks{0};
    CHECK_THROWS_AS(majority_vote(ab, short_ranks), ValidationError);
}

TEST_CASE("concatenation issues one exchange", "[strategies]") {
    auto ps = passages(3);
    ps[1].text = "the capital is Paris";
    MockRuleClient rule({make_question("q", "Capital?", {"paris"})}, 10000);
    StrategyContext ctx{rule, {}, 64};
    auto t = run_concatenation(ps, kQ, ctx);
    CHECK(t.final_answer == A("paris"));
    REQUIRE(t.exchanges.size() == 1);
    CHECK(t.exchanges[0].kind == PromptKind::Concatenation);
    CHECK(t.exchanges[0].request.temperature == 0.0);
    CHECK(t.exchanges[0].request.max_response_tokens == 64);
    CHECK(t.rounds_used == 1);
    CHECK_FALSE(t.per_passage_answers.has_value());

    MockRuleClient none({make_question("q", "Capital?", {"rome"})}, 10000);
    StrategyContext ctx2{none, {}, 64};
    CHECK(run_concatenation(ps, kQ, ctx2).final_answer.is_unknown());

    MockScriptClient script(Script{{{"q", "concat"}, "unknown"}}, 10000);
    StrategyContext ctx3{script, {}, 64};
    CHECK(run_concatenation(ps, kQ, ctx3).final_answer.is_unknown());
}

TEST_CASE("post-fusion votes over per-passage answers", "[strategies]") {
    auto ps = passages(5);
    MockScriptClient client(pf_script({"a", "b", "a", "unknown", "a"}), 10000);
    StrategyContext ctx{client, {}, 64};
    auto t = run_post_fusion(ps, kQ, ctx);
    CHECK(t.final_answer == A("a"));
    CHECK(t.exchanges.size() == 5);
    REQUIRE(t.per_passage_answers);
    CHECK(*t.per_passage_answers == std::vector<Answer>{A("a"), A("b"), A("a"), U, A("a")});
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(t.exchanges[i].kind == PromptKind::PostFusionSingle);
        CHECK(t.exchanges[i].request.tag.exchange_key == post_fusion_key(i));
        CHECK(t.exchanges[i].request.tag.passage_texts == std::vector<std::string>{ps[i].text});
    }

    MockScriptClient tie(pf_script({"a", "b"}), 10000);
    StrategyContext ctx_tie{tie, {}, 64};
    CHECK(run_post_fusion(passages(2), kQ, ctx_tie).final_answer == A("a"));

    MockScriptClient all_u(pf_script({"unknown", "Unknown.", "unknown"}), 10000);
    StrategyContext ctx_u{all_u, {}, 64};
    CHECK(run_post_fusion(passages(3), kQ, ctx_u).final_answer.is_unknown());
}

TEST_CASE("pruning and summary extract the final line", "[strategies]") {
    auto ps = passages(3);
    MockScriptClient client(Script{{{"q", "pruning"}, "Passages 1,3 irrelevant.\nAnswer: x"},
                                   {{"q", "summary"}, "unknown"}},
                            10000);
    StrategyContext ctx{client, {}, 64};
    auto p = run_pruning(ps, kQ, ctx);
    CHECK(p.final_answer == A("x"));
    REQUIRE(p.exchanges.size() == 1);
    CHECK(p.exchanges[0].kind == PromptKind::Pruning);

    auto s = run_summary(ps, kQ, ctx);
    CHECK(s.final_answer.is_unknown());
    REQUIRE(s.exchanges.size() == 1);
    CHECK(s.exchanges[0].kind == PromptKind::Summary);
}

TEST_CASE("concat+pf falls back only on unknown", "[strategies]") {
    auto ps = passages(3);
    Script answered{{{"q", "concat"}, "paris"}};
    MockScriptClient c1(answered, 10000);
    StrategyContext ctx1{c1, {}, 64};
    auto t1 = run_concat_pf(ps, kQ, ctx1);
    CHECK(t1.final_answer == A("paris"));
    CHECK(t1.rounds_used == 1);
    CHECK(t1.exchanges.size() == 1);
    CHECK_FALSE(finalizes_by_vote(t1));

    Script fallback = pf_script({"x", "x", "y"});
    fallback[{"q", "concat"}] = "unknown";
    MockScriptClient c2(fallback, 10000);
    StrategyContext ctx2{c2, {}, 64};
    auto t2 = run_concat_pf(ps, kQ, ctx2);
    CHECK(t2.final_answer == A("x"));
    CHECK(t2.rounds_used == 2);
    CHECK(t2.exchanges.size() == 4);
    CHECK(finalizes_by_vote(t2));

    Script all_u = pf_script({"unknown", "unknown", "unknown"});
    all_u[{"q", "concat"}] = "unknown";
    MockScriptClient c3(all_u, 10000);
    StrategyContext ctx3{c3, {}, 64};
    CHECK(run_concat_pf(ps, kQ, ctx3).final_answer.is_unknown());
}

TEST_CASE("pf+concat distills over surviving passages", "[strategies]") {
    auto ps = passages(3);
    Script s = pf_script({"unknown", "a", "b"});
    s[{"q", "distill"}] = "a";
    MockScriptClient client(s, 10000);
    StrategyContext ctx{client, {}, 64};
    auto t = run_pf_concat(ps, kQ, ctx);
    CHECK(t.final_answer == A("a"));
    CHECK(t.rounds_used == 2);
    REQUIRE(t.exchanges.size() == 4);
    const auto& distill = t.exchanges.back();
    CHECK(distill.kind == PromptKind::Distill);
    CHECK(distill.request.prompt_text.find(ps[0].text) == std::string::npos);
    CHECK(distill.request.prompt_text.find(ps[1].text) != std::string::npos);
    CHECK(distill.request.prompt_text.find(ps[2].text) != std::string::npos);
    CHECK(distill.request.tag.passage_texts == std::vector<std::string>{ps[1].text, ps[2].text});
    CHECK(*t.candidate_pool == std::vector<std::string>{"a", "b"});
    CHECK_FALSE(t.off_pool);
    CHECK_FALSE(finalizes_by_vote(t));
}

TEST_CASE("pf+concat short-circuits an empty pool", "[strategies]") {
    MockScriptClient client(pf_script({"unknown", "unknown"}), 10000);
    StrategyContext ctx{client, {}, 64};
    auto t = run_pf_concat(passages(2), kQ, ctx);
    CHECK(t.final_answer.is_unknown());
    CHECK(t.rounds_used == 1);
    CHECK(t.exchanges.size() == 2);
    REQUIRE(t.candidate_pool);
    CHECK(t.candidate_pool->empty());
}

TEST_CASE("pf+concat with duplicate candidates and off-pool answers", "[strategies]") {
    Script s = pf_script({"a", "A."});
    s[{"q", "distill"}] = "a";
    MockScriptClient client(s, 10000);
    StrategyContext ctx{client, {}, 64};
    auto t = run_pf_concat(passages(2), kQ, ctx);
    CHECK(t.final_answer == A("a"));
    CHECK(*t.candidate_pool == std::vector<std::string>{"a"});
    const auto& prompt = t.exchanges.back().request.prompt_text;
    CHECK(prompt.find("- a\n") != std::string::npos);
    CHECK(prompt.find("- A.\n") == std::string::npos);

    s[{"q", "distill"}] = "something else";
    MockScriptClient client2(s, 10000);
    StrategyContext ctx2{client2, {}, 64};
    auto t2 = run_pf_concat(passages(2), kQ, ctx2);
    CHECK(t2.final_answer == A("something else"));
    CHECK(t2.off_pool);
}

TEST_CASE("trace token totals equal exchange sums and the ledger delta", "[strategies]") {
    auto ps = passages(4);
    ps[2].text = "the answer is a indeed";
    MockRuleClient client({kQ}, 10000);
    StrategyContext ctx{client, {}, 64};
    for (auto s : kAllStrategies) {
        Usage before = client.usage();
        auto t = run_strategy(s, ps, kQ, ctx);
        Usage after = client.usage();
        CHECK(t.prompt_tokens_total == exchange_sum(t, true));
        CHECK(t.completion_tokens_total == exchange_sum(t, false));
        CHECK(after.prompt_tokens - before.prompt_tokens == t.prompt_tokens_total);
        CHECK(after.completion_tokens - before.completion_tokens == t.completion_tokens_total);
        CHECK(after.calls - before.calls == static_cast<std::int64_t>(t.exchanges.size()));
        CHECK(t.passage_ids.size() == 4);
    }
}

TEST_CASE("exchange counts and prompt kinds per strategy", "[strategies]") {
    std::mt19937 rng(21);
    const std::vector<std::string> outs = {"unknown", "a", "b", "A", "Unknown."};
    std::uniform_int_distribution<int> pick(0, static_cast<int>(outs.size()) - 1);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 1 + trial % 5;
        Script s;
        for (const char* key : {"concat", "pruning", "summary", "distill"}) s[{"q", key}] = outs[pick(rng)];
        for (std::size_t i = 0; i < k; ++i) s[{"q", post_fusion_key(i)}] = outs[pick(rng)];
        MockScriptClient client(s, 10000);
        StrategyContext ctx{client, {}, 64};
        auto ps = passages(k);
        for (auto strat : kAllStrategies) {
            auto t = run_strategy(strat, ps, kQ, ctx);
            const auto n = t.exchanges.size();
            switch (strat) {
            case Strategy::Concat:
            case Strategy::Pruning:
            case Strategy::Summary:
                CHECK(n == 1);
                CHECK_FALSE(t.per_passage_answers);
                break;
            case Strategy::PostFusion:
                CHECK(n == k);
                CHECK(t.per_passage_answers);
                break;
            case Strategy::ConcatPF:
                CHECK((n == 1 || n == 1 + k));
                CHECK(t.per_passage_answers.has_value() == (n == 1 + k));
                break;
            case Strategy::PFConcat:
                CHECK((n == k || n == k + 1));
                CHECK(t.per_passage_answers);
                break;
            }
            if (t.rounds_used == 2) CHECK((strat == Strategy::ConcatPF || strat == Strategy::PFConcat));
            auto again = run_strategy(strat, ps, kQ, ctx);
            CHECK(again.final_answer == t.final_answer);
            CHECK(again.exchanges.size() == t.exchanges.size());
        }
    }
}

TEST_CASE("client errors propagate with the question id", "[strategies]") {
    MockScriptClient client(Script{}, 10000);
    StrategyContext ctx{client, {}, 64};
    try {
        run_concatenation(passages(1), kQ, ctx);
        FAIL("expected ScriptError");
    } catch (const ScriptError& e) {
        CHECK(std::string(e.what()).find("question 'q'") != std::string::npos);
    }
    MockScriptClient tiny(Script{{{"q", "concat"}, "x"}}, 3);
    StrategyContext ctx2{tiny, {}, 64};
    CHECK_THROWS_AS(run_concatenation(passages(1), kQ, ctx2), BudgetError);
    CHECK_THROWS_AS(run_post_fusion({}, kQ, ctx), ValidationError);
}

TEST_CASE("strategy names", "[strategies]") {
    for (auto s : kAllStrategies) CHECK(parse_strategy(to_string(s)) == s);
    CHECK(display_name(Strategy::ConcatPF) == "Concat + PF");
    CHECK_THROWS_AS(parse_strategy("vote"), ConfigError);
}
