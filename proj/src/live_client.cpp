#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ragfuse/errors.hpp"
#include "ragfuse/llm_client.hpp"

namespace ragfuse {

using nlohmann::json;

namespace {

bool is_retryable(int status) {
    return status == 429 || status >= 500;
}

// Splits "scheme://host[:port]/path" into the base URL and the request path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

struct SemaphoreGuard {
    std::counting_semaphore<>& sem;
    explicit SemaphoreGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
};

}  // namespace

LiveClient::LiveClient(LiveConfig config, std::size_t input_budget, Sleeper sleeper)
    : CompletionClient(input_budget),
      config_(std::move(config)),
      sleep_(sleeper ? std::move(sleeper)
                     : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      in_flight_(std::max(1, config_.max_in_flight)) {
    if (config_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    std::tie(base_url_, path_) = split_endpoint(config_.endpoint);
}

CompletionResponse LiveClient::do_complete(const CompletionRequest& request) {
    json body = {{"model", config_.model},
                 {"messages", json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_response_tokens}};
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        httplib::Result res;
        {
            SemaphoreGuard guard(in_flight_);
            httplib::Client cli(base_url_);
            auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
                std::chrono::duration<double>(config_.timeout_seconds));
            cli.set_connection_timeout(timeout);
            cli.set_read_timeout(timeout);
            cli.set_write_timeout(timeout);
            res = cli.Post(path_, headers, payload, "application/json");
        }

        bool retry = false;
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            retry = true;
        } else if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512);
            retry = is_retryable(res->status);
        } else {
            try {
                json reply = json::parse(res->body);
                CompletionResponse r;
                const auto& content = reply.at("choices").at(0).at("message").at("content");
                r.text = content.is_null() ? std::string() : content.get<std::string>();
                r.backend = Backend::Live;
                if (auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
                    r.prompt_tokens = u->value("prompt_tokens", std::int64_t{0});
                    r.completion_tokens = u->value("completion_tokens", std::int64_t{0});
                } else {
                    r.prompt_tokens = static_cast<std::int64_t>(count_tokens(request.prompt_text));
                    r.completion_tokens = static_cast<std::int64_t>(count_tokens(r.text));
                }
                return r;
            } catch (const json::exception& e) {
                throw TransportError(std::string("malformed completion response: ") + e.what());
            }
        }
        if (!retry) break;
        if (attempt < config_.max_attempts) {
            sleep_(backoff);
            backoff = std::min(backoff * 2, config_.max_backoff);
        }
    }
    throw TransportError("completion failed: " + last_error);
}

}  // namespace ragfuse
