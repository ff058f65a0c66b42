#include "ragfuse/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "ragfuse/errors.hpp"

namespace ragfuse {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BackendKind b) {
    switch (b) {
    case BackendKind::Rule: return "rule";
    case BackendKind::Script: return "script";
    case BackendKind::Live: return "live";
    }
    return "?";
}

BackendKind parse_backend(std::string_view name) {
    for (auto b : {BackendKind::Rule, BackendKind::Script, BackendKind::Live}) {
        if (to_string(b) == name) return b;
    }
    throw ConfigError("unknown backend '" + std::string(name) + "'");
}

namespace {

void require_file(const fs::path& p, std::string_view what) {
    if (p.empty()) throw ConfigError(std::string(what) + " path is required");
    if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " file not found: " + p.string());
}

void optional_file(const fs::path& p, std::string_view what) {
    if (!p.empty() && !fs::is_regular_file(p)) {
        throw ConfigError(std::string(what) + " file not found: " + p.string());
    }
}

}  // namespace

fs::path RunConfig::records_path() const {
    return records.empty() ? out_dir / "records.jsonl" : records;
}

void RunConfig::validate(Command command) const {
    retrieval.validate();
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (max_response_tokens < 1) throw ConfigError("max_response_tokens must be >= 1");
    if (unknown.sentinel.empty()) throw ConfigError("unknown sentinel must be non-empty");
    if (out_dir.empty()) throw ConfigError("output directory is required");
    switch (command) {
    case Command::Index:
        require_file(corpus, "corpus");
        return;
    case Command::Report:
        require_file(records_path(), "records");
        return;
    case Command::Filter:
        require_file(questions, "questions");
        break;
    case Command::Run:
        require_file(corpus, "corpus");
        require_file(questions, "questions");
        optional_file(rankings, "rankings");
        optional_file(index_snapshot, "index snapshot");
        if (strategies.empty()) throw ConfigError("strategy list is empty");
        break;
    }
    if (backend == BackendKind::Script) require_file(script, "mock script");
    if (backend == BackendKind::Live) {
        if (live.endpoint.empty()) throw ConfigError("live backend needs an endpoint");
        if (live.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    }
}

std::unique_ptr<CompletionClient> make_client(const RunConfig& config,
                                              const std::vector<Question>& questions) {
    const std::size_t budget = config.retrieval.model_input_budget;
    switch (config.backend) {
    case BackendKind::Rule:
        return std::make_unique<MockRuleClient>(questions, budget, config.unknown.sentinel);
    case BackendKind::Script:
        return std::make_unique<MockScriptClient>(MockScriptClient::load_script(config.script), budget);
    case BackendKind::Live: {
        LiveConfig live = config.live;
        if (live.api_key.empty() && !config.api_key_env.empty()) {
            if (const char* key = std::getenv(config.api_key_env.c_str())) live.api_key = key;
        }
        auto inner = std::make_unique<LiveClient>(std::move(live), budget);
        fs::path cache = config.cache.empty() ? config.out_dir / "llm_cache.jsonl" : config.cache;
        if (cache.has_parent_path()) fs::create_directories(cache.parent_path());
        return std::make_unique<CachingClient>(std::move(inner), cache);
    }
    }
    throw ConfigError("unknown backend");
}

std::vector<PlacementMode> placement_modes(const RunConfig& config) {
    if (config.placement_sweep) {
        return {PlacementMode::GoldTop, PlacementMode::GoldBottom, PlacementMode::RetrievalOrder};
    }
    return {config.retrieval.placement};
}

CorpusStats cmd_index(const RunConfig& config, std::ostream& log) {
    config.validate(Command::Index);
    auto docs = load_corpus(config.corpus);
    auto passages = chunk_corpus(docs, config.retrieval.max_passage_words);
    if (passages.empty()) throw ValidationError("corpus " + config.corpus.string() + " has no passages");
    auto index = Bm25Index::build(passages, config.retrieval.bm25);
    fs::create_directories(config.out_dir);
    const fs::path target = config.index_snapshot.empty() ? config.out_dir / "index.json" : config.index_snapshot;
    index.save(target);
    CorpusStats stats{docs.size(), passages.size(), 0};
    log << "docs " << stats.num_documents << ", passages " << stats.num_passages << "\n";
    log << "index written to " << target.string() << "\n";
    return stats;
}

FilterResult cmd_filter(const RunConfig& config, std::ostream& log, CompletionClient* client) {
    config.validate(Command::Filter);
    auto questions = load_questions(config.questions);
    std::unique_ptr<CompletionClient> owned;
    if (!client) {
        owned = make_client(config, questions);
        client = owned.get();
    }
    StrategyContext ctx{*client, config.unknown, config.max_response_tokens};
    FilterResult result = filter_dataset(questions, ctx);
    fs::create_directories(config.out_dir);
    write_questions(config.out_dir / "kept_questions.jsonl", result.kept);
    write_questions(config.out_dir / "removed_questions.jsonl", result.removed);
    log << "kept " << result.kept.size() << " removed " << result.removed.size() << "\n";
    return result;
}

namespace {

json answer_json(const Answer& a) {
    return a.is_unknown() ? json(nullptr) : json(a.value());
}

struct QuestionOutcome {
    std::vector<StrategyTrace> traces;
    std::vector<EvalRecord> records;
    bool done = false;
};

void write_manifest(const RunConfig& config, const std::vector<PlacementMode>& modes,
                    std::size_t n_questions, std::size_t completed, const std::string& error) {
    json strategies = json::array();
    for (auto s : config.strategies) strategies.push_back(std::string(to_string(s)));
    json placements = json::array();
    for (auto m : modes) placements.push_back(std::string(to_string(m)));
    json manifest = {{"status", error.empty() ? "complete" : "failed"},
                     {"error", error.empty() ? json(nullptr) : json(error)},
                     {"seed", config.retrieval.rng_seed},
                     {"k", config.retrieval.k},
                     {"max_passage_words", config.retrieval.max_passage_words},
                     {"model_input_budget", config.retrieval.model_input_budget},
                     {"bm25_k1", config.retrieval.bm25.k1},
                     {"bm25_b", config.retrieval.bm25.b},
                     {"placements", placements},
                     {"strategies", strategies},
                     {"backend", std::string(to_string(config.backend))},
                     {"prompt_template_version", std::string(kPromptTemplateVersion)},
                     {"nm_denominator", std::string(to_string(config.nm_denominator))},
                     {"questions", n_questions},
                     {"completed_units", completed}};
    std::ofstream out(config.out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
}

}  // namespace

std::string trace_to_json_line(const StrategyTrace& trace, std::string_view placement) {
    json exchanges = json::array();
    for (const auto& ex : trace.exchanges) {
        exchanges.push_back({{"kind", std::string(to_string(ex.kind))},
                             {"exchange_key", ex.request.tag.exchange_key},
                             {"prompt", ex.request.prompt_text},
                             {"max_response_tokens", ex.request.max_response_tokens},
                             {"temperature", ex.request.temperature},
                             {"response", ex.response.text},
                             {"prompt_tokens", ex.response.prompt_tokens},
                             {"completion_tokens", ex.response.completion_tokens},
                             {"backend", std::string(to_string(ex.response.backend))}});
    }
    json per_passage = nullptr;
    if (trace.per_passage_answers) {
        per_passage = json::array();
        for (const auto& a : *trace.per_passage_answers) per_passage.push_back(answer_json(a));
    }
    json j = {{"question_id", trace.question_id},
              {"placement", std::string(placement)},
              {"strategy", std::string(to_string(trace.strategy))},
              {"passage_ids", trace.passage_ids},
              {"exchanges", exchanges},
              {"per_passage_answers", per_passage},
              {"candidate_pool", trace.candidate_pool ? json(*trace.candidate_pool) : json(nullptr)},
              {"final", answer_json(trace.final_answer)},
              {"rounds_used", trace.rounds_used},
              {"off_pool", trace.off_pool},
              {"prompt_tokens_total", trace.prompt_tokens_total},
              {"completion_tokens_total", trace.completion_tokens_total}};
    return j.dump();
}

RunResult cmd_run(const RunConfig& config, std::ostream& log, CompletionClient* client) {
    config.validate(Command::Run);

    auto docs = load_corpus(config.corpus);
    PassageStore store(chunk_corpus(docs, config.retrieval.max_passage_words));
    if (store.size() == 0) throw ValidationError("corpus " + config.corpus.string() + " has no passages");
    auto questions = load_questions(config.questions);

    const auto modes = placement_modes(config);
    for (auto mode : modes) {
        if (mode == PlacementMode::NoGold) continue;
        for (const auto& q : questions) {
            if (!q.gold_passage_id) {
                throw ValidationError("question '" + q.question_id + "' has no gold_passage_id (placement " +
                                      std::string(to_string(mode)) + ")");
            }
            store.at(*q.gold_passage_id);
        }
    }

    std::optional<Bm25Index> index;
    std::unique_ptr<Retriever> retriever;
    if (!config.rankings.empty()) {
        retriever = std::make_unique<PrecomputedRetriever>(PrecomputedRetriever::load(config.rankings));
    } else {
        if (!config.index_snapshot.empty()) {
            index = Bm25Index::load(config.index_snapshot);
            if (index->num_passages() != store.size()) {
                throw ValidationError("index snapshot does not match the corpus");
            }
            for (std::size_t i = 0; i < index->num_passages(); ++i) {
                if (index->passage_id(i) != store.passages()[i].passage_id) {
                    throw ValidationError("index snapshot does not match the corpus");
                }
            }
        } else {
            index = Bm25Index::build(store.passages(), config.retrieval.bm25);
        }
        retriever = std::make_unique<Bm25Retriever>(*index);
    }

    std::unique_ptr<CompletionClient> owned;
    if (!client) {
        owned = make_client(config, questions);
        client = owned.get();
    }
    fs::create_directories(config.out_dir);

    // One unit per (placement mode, question); outcomes land in fixed slots so
    // output order does not depend on scheduling.
    const std::size_t n_units = modes.size() * questions.size();
    std::vector<QuestionOutcome> outcomes(n_units);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mu;
    std::string first_error;
    std::exception_ptr first_exception;

    auto work = [&] {
        StrategyContext ctx{*client, config.unknown, config.max_response_tokens};
        while (!failed.load()) {
            const std::size_t unit = next.fetch_add(1);
            if (unit >= n_units) return;
            const PlacementMode mode = modes[unit / questions.size()];
            const Question& q = questions[unit % questions.size()];
            try {
                RetrievalConfig rc = config.retrieval;
                rc.placement = mode;
                RankedList ranked = retriever->retrieve(q, rc.k);
                std::optional<double> gold_score;
                if (mode != PlacementMode::NoGold) gold_score = retriever->score_of(q, *q.gold_passage_id);
                ranked = apply_gold_placement(std::move(ranked), q, rc, gold_score);
                std::vector<Passage> passages;
                for (const auto& e : ranked.entries) passages.push_back(store.at(e.passage_id));

                QuestionOutcome& out = outcomes[unit];
                for (auto s : config.strategies) {
                    StrategyTrace t = run_strategy(s, passages, q, ctx);
                    EvalRecord r = score_trace(t, q);
                    r.placement = std::string(to_string(mode));
                    out.traces.push_back(std::move(t));
                    out.records.push_back(std::move(r));
                }
                out.done = true;
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mu);
                if (!failed.exchange(true)) {
                    first_error = e.what();
                    first_exception = std::current_exception();
                }
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(std::max<std::size_t>(n_units, 1))));
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
    }

    RunResult result;
    std::size_t completed = 0;
    {
        std::ofstream traces(config.out_dir / "traces.jsonl", std::ios::binary | std::ios::trunc);
        for (std::size_t unit = 0; unit < n_units; ++unit) {
            auto& o = outcomes[unit];
            if (!o.done) continue;
            ++completed;
            const std::string placement(to_string(modes[unit / questions.size()]));
            for (std::size_t i = 0; i < o.traces.size(); ++i) {
                traces << trace_to_json_line(o.traces[i], placement) << '\n';
                result.trace_placements.push_back(placement);
                result.traces.push_back(std::move(o.traces[i]));
                result.records.push_back(std::move(o.records[i]));
            }
        }
    }
    write_records(config.out_dir / "records.jsonl", result.records);
    write_manifest(config, modes, questions.size(), completed, first_error);
    if (first_exception) {
        log << "run failed after " << completed << "/" << n_units << " units: " << first_error << "\n";
        std::rethrow_exception(first_exception);
    }

    result.report = aggregate(result.records, config.nm_denominator);
    write_report_csv(config.out_dir / "report.csv", result.report);
    write_report_json(config.out_dir / "report.json", result.report);
    write_token_usage_csv(config.out_dir / "token_usage.csv", result.report);
    log << format_report_table(result.report);
    return result;
}

EvalReport cmd_report(const RunConfig& config, std::ostream& log) {
    config.validate(Command::Report);
    auto records = read_records(config.records_path());
    EvalReport report = aggregate(records, config.nm_denominator);
    fs::create_directories(config.out_dir);
    write_report_csv(config.out_dir / "report.csv", report);
    write_report_json(config.out_dir / "report.json", report);
    write_token_usage_csv(config.out_dir / "token_usage.csv", report);
    log << format_report_table(report);
    return report;
}

}  // namespace ragfuse
