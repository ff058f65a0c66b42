#include "ragfuse/cli.hpp"

#include <CLI11.hpp>

#include "ragfuse/errors.hpp"

namespace ragfuse {

namespace {

struct RawOptions {
    std::string corpus, questions, rankings, index, script, records, cache, out = "out";
    std::size_t k = 5, max_passage_words = 100, model_input_budget = 16000;
    double bm25_k1 = 1.2, bm25_b = 0.75;
    std::string placement = "no_gold";
    bool sweep = false;
    std::uint64_t seed = 0;
    std::string backend = "rule";
    std::string endpoint = LiveConfig{}.endpoint;
    std::string model = LiveConfig{}.model;
    std::string api_key_env = "OPENAI_API_KEY";
    int max_in_flight = 4;
    double timeout = 60.0;
    int max_response_tokens = 256;
    std::vector<std::string> strategies;
    std::string unknown_sentinel = "unknown";
    std::vector<std::string> unknown_patterns;
    std::string nm_denominator = "pool_with_gold";
    int workers = 1;
};

void add_options(CLI::App& app, RawOptions& o) {
    app.set_config("--config", "", "Key-value experiment manifest; flags override its fields");
    app.add_option("--corpus", o.corpus, "Corpus JSON-lines file {id, title, text}");
    app.add_option("--questions", o.questions, "Questions JSON-lines file {id, question, answers}");
    app.add_option("--rankings", o.rankings, "Precomputed rankings {question_id, ranked_passage_ids}");
    app.add_option("--index", o.index, "BM25 index snapshot path");
    app.add_option("--script", o.script, "Mock script {question_id, exchange_key, response}");
    app.add_option("--records", o.records, "Records file for the report command");
    app.add_option("--cache", o.cache, "Live response cache file");
    app.add_option("--out", o.out, "Output directory")->capture_default_str();
    app.add_option("--k", o.k, "Passages per question")->capture_default_str();
    app.add_option("--max-passage-words", o.max_passage_words, "Passage length L in words")
        ->capture_default_str();
    app.add_option("--model-input-budget", o.model_input_budget, "Model input budget M in words")
        ->capture_default_str();
    app.add_option("--bm25-k1", o.bm25_k1)->capture_default_str();
    app.add_option("--bm25-b", o.bm25_b)->capture_default_str();
    app.add_option("--placement", o.placement,
                   "no_gold | retrieval_order | gold_top | gold_bottom | gold_random")
        ->capture_default_str();
    app.add_flag("--sweep", o.sweep, "Run gold_top, gold_bottom and retrieval_order");
    app.add_option("--seed", o.seed, "Seed for gold placement")->capture_default_str();
    app.add_option("--backend", o.backend, "rule | script | live")->capture_default_str();
    app.add_option("--endpoint", o.endpoint, "Chat-completion URL")->capture_default_str();
    app.add_option("--model", o.model)->capture_default_str();
    app.add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key")
        ->capture_default_str();
    app.add_option("--max-in-flight", o.max_in_flight)->capture_default_str();
    app.add_option("--timeout", o.timeout, "Request timeout in seconds")->capture_default_str();
    app.add_option("--max-response-tokens", o.max_response_tokens)->capture_default_str();
    app.add_option("--strategies", o.strategies,
                   "Comma-separated: concat,post_fusion,pruning,summary,concat_pf,pf_concat")
        ->delimiter(',');
    app.add_option("--unknown-sentinel", o.unknown_sentinel)->capture_default_str();
    app.add_option("--unknown-patterns", o.unknown_patterns, "Extra phrases that mean unknown")
        ->delimiter(',');
    app.add_option("--nm-denominator", o.nm_denominator, "pool_with_gold | all_questions")
        ->capture_default_str();
    app.add_option("--workers", o.workers, "Questions processed concurrently")->capture_default_str();
}

RunConfig to_config(const RawOptions& o) {
    RunConfig c;
    c.corpus = o.corpus;
    c.questions = o.questions;
    c.rankings = o.rankings;
    c.index_snapshot = o.index;
    c.script = o.script;
    c.records = o.records;
    c.cache = o.cache;
    c.out_dir = o.out;
    c.retrieval.k = o.k;
    c.retrieval.max_passage_words = o.max_passage_words;
    c.retrieval.model_input_budget = o.model_input_budget;
    c.retrieval.bm25 = {o.bm25_k1, o.bm25_b};
    c.retrieval.placement = parse_placement(o.placement);
    c.retrieval.rng_seed = o.seed;
    c.placement_sweep = o.sweep;
    c.backend = parse_backend(o.backend);
    c.live.endpoint = o.endpoint;
    c.live.model = o.model;
    c.live.max_in_flight = o.max_in_flight;
    c.live.timeout_seconds = o.timeout;
    c.api_key_env = o.api_key_env;
    c.max_response_tokens = o.max_response_tokens;
    if (!o.strategies.empty()) {
        c.strategies.clear();
        for (const auto& s : o.strategies) c.strategies.push_back(parse_strategy(s));
    }
    c.unknown.sentinel = o.unknown_sentinel;
    c.unknown.extra_patterns = o.unknown_patterns;
    c.nm_denominator = parse_nm_denominator(o.nm_denominator);
    c.workers = o.workers;
    return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retrieval-augmented QA harness comparing passage integration strategies", "ragfuse"};
    RawOptions raw;
    add_options(app, raw);
    app.require_subcommand(1);
    auto* index = app.add_subcommand("index", "Chunk the corpus and persist a BM25 index")->fallthrough();
    auto* filter = app.add_subcommand("filter", "Drop questions answered correctly without context")->fallthrough();
    auto* run = app.add_subcommand("run", "Retrieve, run strategies, score and report")->fallthrough();
    auto* report = app.add_subcommand("report", "Rebuild report tables from stored records")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        RunConfig config = to_config(raw);
        if (index->parsed()) {
            cmd_index(config, out);
        } else if (filter->parsed()) {
            cmd_filter(config, out);
        } else if (run->parsed()) {
            cmd_run(config, out);
        } else if (report->parsed()) {
            cmd_report(config, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace ragfuse
