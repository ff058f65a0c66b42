#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ragfuse/corpus.hpp"

namespace ragfuse {

enum class Backend { Live, MockRule, MockScript };

std::string_view to_string(Backend backend);

/// Out-of-band description of an exchange. Mock backends answer from this;
/// the live backend only sees `prompt_text`.
struct ExchangeTag {
    std::string question_id;
    std::string exchange_key;  // "concat", "pf:<i>", "pruning", "summary", "distill", "closed_book"
    std::vector<std::string> passage_texts;
};

struct CompletionRequest {
    std::string prompt_text;
    int max_response_tokens = 256;
    double temperature = 0.0;
    ExchangeTag tag;
};

struct CompletionResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    Backend backend = Backend::MockRule;
};

struct Usage {
    std::int64_t calls = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    std::int64_t total() const noexcept { return prompt_tokens + completion_tokens; }
};

/// Whitespace-token count used by the mock backends and pre-flight budget checks.
std::size_t count_tokens(std::string_view text);

/// Cumulative per-run token accounting; safe to update from many threads.
class UsageLedger {
public:
    void record(const CompletionResponse& r) noexcept;
    Usage snapshot() const noexcept;

private:
    std::atomic<std::int64_t> calls_{0};
    std::atomic<std::int64_t> prompt_tokens_{0};
    std::atomic<std::int64_t> completion_tokens_{0};
};

/// Uniform completion interface. Implementations must tolerate concurrent calls.
class CompletionClient {
public:
    /// `input_budget` is the largest admissible prompt, in count_tokens units.
    explicit CompletionClient(std::size_t input_budget) : input_budget_(input_budget) {}
    virtual ~CompletionClient() = default;
    CompletionClient(const CompletionClient&) = delete;
    CompletionClient& operator=(const CompletionClient&) = delete;

    CompletionResponse complete(const CompletionRequest& request);

    Usage usage() const noexcept { return ledger_.snapshot(); }
    std::size_t input_budget() const noexcept { return input_budget_; }

protected:
    virtual CompletionResponse do_complete(const CompletionRequest& request) = 0;

private:
    std::size_t input_budget_;
    UsageLedger ledger_;
};

/// Answers with the first gold alias (in alias order) found case-insensitively
/// in any passage of the exchange, otherwise with the unknown sentinel.
class MockRuleClient final : public CompletionClient {
public:
    MockRuleClient(const std::vector<Question>& questions, std::size_t input_budget,
                   std::string sentinel = "unknown");

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;

private:
    // question id -> (raw alias, lowercased alias), in alias order
    std::unordered_map<std::string, std::vector<std::pair<std::string, std::string>>> aliases_;
    std::string sentinel_;
};

/// Table lookup on (question_id, exchange_key). A missing key is a ScriptError.
class MockScriptClient final : public CompletionClient {
public:
    using Key = std::pair<std::string, std::string>;

    MockScriptClient(std::map<Key, std::string> script, std::size_t input_budget);

    /// One {question_id, exchange_key, response} record per line.
    static std::map<Key, std::string> load_script(const std::filesystem::path& path);

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;

private:
    std::map<Key, std::string> script_;
};

struct LiveConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo-16k";
    std::string api_key;
    int max_in_flight = 4;
    double timeout_seconds = 60.0;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    std::chrono::milliseconds max_backoff{4000};
};

/// OpenAI-compatible chat-completion backend.
class LiveClient final : public CompletionClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    LiveClient(LiveConfig config, std::size_t input_budget, Sleeper sleeper = {});

    const LiveConfig& config() const noexcept { return config_; }

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;

private:
    LiveConfig config_;
    std::string base_url_;
    std::string path_;
    Sleeper sleep_;
    std::counting_semaphore<> in_flight_;
};

/// Persists every (prompt -> response) pair so an interrupted run resumes
/// without repeating upstream calls. The cache file is JSON-lines, append-only.
class CachingClient final : public CompletionClient {
public:
    CachingClient(std::unique_ptr<CompletionClient> inner, std::filesystem::path cache_path);

    std::size_t cached_entries() const;
    const CompletionClient& inner() const noexcept { return *inner_; }

protected:
    CompletionResponse do_complete(const CompletionRequest& request) override;

private:
    std::unique_ptr<CompletionClient> inner_;
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, CompletionResponse> entries_;

    static std::string key_of(const CompletionRequest& request);
};

}  // namespace ragfuse
