#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "ragfuse/corpus.hpp"
#include "ragfuse/eval.hpp"
#include "ragfuse/llm_client.hpp"
#include "ragfuse/prompts.hpp"
#include "ragfuse/retriever.hpp"
#include "ragfuse/strategies.hpp"

namespace ragfuse {

enum class BackendKind { Rule, Script, Live };

std::string_view to_string(BackendKind b);
BackendKind parse_backend(std::string_view name);

enum class Command { Index, Filter, Run, Report };

struct RunConfig {
    std::filesystem::path corpus;
    std::filesystem::path questions;
    std::filesystem::path rankings;        // optional precomputed rankings
    std::filesystem::path index_snapshot;  // optional; built from the corpus when empty
    std::filesystem::path script;          // MockScript fixture
    std::filesystem::path records;         // input for `report`; defaults to <out>/records.jsonl
    std::filesystem::path cache;           // live response cache; defaults to <out>/llm_cache.jsonl
    std::filesystem::path out_dir = "out";

    RetrievalConfig retrieval;
    bool placement_sweep = false;

    BackendKind backend = BackendKind::Rule;
    LiveConfig live;
    std::string api_key_env = "OPENAI_API_KEY";
    int max_response_tokens = 256;

    std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
    UnknownPolicy unknown;
    NmDenominator nm_denominator = NmDenominator::PoolWithGold;
    int workers = 1;

    /// Checks everything `command` needs before any work starts; throws ConfigError.
    void validate(Command command) const;

    std::filesystem::path records_path() const;
};

/// Builds the configured backend. Live backends are wrapped in a response cache.
std::unique_ptr<CompletionClient> make_client(const RunConfig& config,
                                              const std::vector<Question>& questions);

/// Placement modes a run covers: the configured one, or the sweep set.
std::vector<PlacementMode> placement_modes(const RunConfig& config);

struct RunResult {
    std::vector<StrategyTrace> traces;
    std::vector<std::string> trace_placements;  // index-aligned with traces
    std::vector<EvalRecord> records;
    EvalReport report;
};

CorpusStats cmd_index(const RunConfig& config, std::ostream& log);

/// `client` overrides the configured backend when non-null.
FilterResult cmd_filter(const RunConfig& config, std::ostream& log, CompletionClient* client = nullptr);
RunResult cmd_run(const RunConfig& config, std::ostream& log, CompletionClient* client = nullptr);
EvalReport cmd_report(const RunConfig& config, std::ostream& log);

/// One JSON object per (question, strategy), with every exchange.
std::string trace_to_json_line(const StrategyTrace& trace, std::string_view placement);

}  // namespace ragfuse
