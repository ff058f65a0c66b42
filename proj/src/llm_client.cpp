#include "ragfuse/llm_client.hpp"

#include <fstream>

#include <json.hpp>

#include "ragfuse/errors.hpp"
#include "ragfuse/text.hpp"

namespace ragfuse {

using nlohmann::json;

std::string_view to_string(Backend backend) {
    switch (backend) {
    case Backend::Live: return "live";
    case Backend::MockRule: return "mock_rule";
    case Backend::MockScript: return "mock_script";
    }
    return "?";
}

std::size_t count_tokens(std::string_view text) {
    return text::count_words(text);
}

void UsageLedger::record(const CompletionResponse& r) noexcept {
    calls_.fetch_add(1, std::memory_order_relaxed);
    prompt_tokens_.fetch_add(r.prompt_tokens, std::memory_order_relaxed);
    completion_tokens_.fetch_add(r.completion_tokens, std::memory_order_relaxed);
}

Usage UsageLedger::snapshot() const noexcept {
    return {calls_.load(), prompt_tokens_.load(), completion_tokens_.load()};
}

CompletionResponse CompletionClient::complete(const CompletionRequest& request) {
    if (request.prompt_text.empty()) throw ValidationError("empty prompt");
    const std::size_t tokens = count_tokens(request.prompt_text);
    if (tokens > input_budget_) {
        throw BudgetError("prompt of " + std::to_string(tokens) + " tokens exceeds budget of " +
                          std::to_string(input_budget_));
    }
    CompletionResponse r = do_complete(request);
    ledger_.record(r);
    return r;
}

MockRuleClient::MockRuleClient(const std::vector<Question>& questions, std::size_t input_budget,
                               std::string sentinel)
    : CompletionClient(input_budget), sentinel_(std::move(sentinel)) {
    for (const auto& q : questions) {
        auto& list = aliases_[q.question_id];
        for (const auto& a : q.gold_answers) {
            if (!a.empty()) list.emplace_back(a, text::lowercase(a));
        }
    }
}

CompletionResponse MockRuleClient::do_complete(const CompletionRequest& request) {
    auto it = aliases_.find(request.tag.question_id);
    if (it == aliases_.end()) {
        throw ScriptError("rule oracle has no gold answers for question '" + request.tag.question_id + "'");
    }
    std::vector<std::string> haystacks;
    haystacks.reserve(request.tag.passage_texts.size());
    for (const auto& p : request.tag.passage_texts) haystacks.push_back(text::lowercase(p));

    std::string answer = sentinel_;
    for (const auto& [raw, lowered] : it->second) {
        bool found = false;
        for (const auto& h : haystacks) {
            if (h.find(lowered) != std::string::npos) {
                found = true;
                break;
            }
        }
        if (found) {
            answer = raw;
            break;
        }
    }
    CompletionResponse r;
    r.prompt_tokens = static_cast<std::int64_t>(count_tokens(request.prompt_text));
    r.completion_tokens = static_cast<std::int64_t>(count_tokens(answer));
    r.text = std::move(answer);
    r.backend = Backend::MockRule;
    return r;
}

MockScriptClient::MockScriptClient(std::map<Key, std::string> script, std::size_t input_budget)
    : CompletionClient(input_budget), script_(std::move(script)) {}

std::map<MockScriptClient::Key, std::string> MockScriptClient::load_script(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::map<Key, std::string> script;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        Key key;
        std::string response;
        try {
            json rec = json::parse(line);
            key = {rec.at("question_id").get<std::string>(), rec.at("exchange_key").get<std::string>()};
            response = rec.at("response").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
        if (!script.emplace(key, std::move(response)).second) {
            throw ParseError(path.string(), line_no,
                             "duplicate script entry (" + key.first + ", " + key.second + ")");
        }
    }
    return script;
}

CompletionResponse MockScriptClient::do_complete(const CompletionRequest& request) {
    auto it = script_.find({request.tag.question_id, request.tag.exchange_key});
    if (it == script_.end()) {
        throw ScriptError("no scripted response for (" + request.tag.question_id + ", " +
                          request.tag.exchange_key + ")");
    }
    CompletionResponse r;
    r.text = it->second;
    r.prompt_tokens = static_cast<std::int64_t>(count_tokens(request.prompt_text));
    r.completion_tokens = static_cast<std::int64_t>(count_tokens(r.text));
    r.backend = Backend::MockScript;
    return r;
}

CachingClient::CachingClient(std::unique_ptr<CompletionClient> inner, std::filesystem::path cache_path)
    : CompletionClient(inner->input_budget()), inner_(std::move(inner)), path_(std::move(cache_path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            json rec = json::parse(line);
            CompletionResponse r;
            r.text = rec.at("response").get<std::string>();
            r.prompt_tokens = rec.at("prompt_tokens").get<std::int64_t>();
            r.completion_tokens = rec.at("completion_tokens").get<std::int64_t>();
            r.backend = Backend::Live;
            for (auto b : {Backend::Live, Backend::MockRule, Backend::MockScript}) {
                if (rec.value("backend", "live") == to_string(b)) r.backend = b;
            }
            entries_[rec.at("key").get<std::string>()] = std::move(r);
        } catch (const json::exception&) {
            // A torn final line from an interrupted run is dropped; anything else is fatal.
            if (in.peek() != std::char_traits<char>::eof()) {
                throw ParseError(path_.string(), line_no, "corrupt cache entry");
            }
        }
    }
}

std::string CachingClient::key_of(const CompletionRequest& request) {
    return std::to_string(request.max_response_tokens) + "\x1f" + request.prompt_text;
}

std::size_t CachingClient::cached_entries() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

CompletionResponse CachingClient::do_complete(const CompletionRequest& request) {
    const std::string key = key_of(request);
    {
        std::lock_guard lock(mu_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    CompletionResponse r = inner_->complete(request);
    std::lock_guard lock(mu_);
    auto [it, inserted] = entries_.emplace(key, r);
    if (inserted) {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) throw Error("cannot append to cache " + path_.string());
        json rec = {{"key", key},
                    {"response", r.text},
                    {"prompt_tokens", r.prompt_tokens},
                    {"completion_tokens", r.completion_tokens},
                    {"backend", std::string(to_string(r.backend))}};
        out << rec.dump() << '\n';
    }
    return it->second;
}

}  // namespace ragfuse
