#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kindred/domain.hpp"
#include "kindred/errors.hpp"

namespace kindred {

// Which pipeline stage issued a completion call.
enum class StageTag {
    detector,
    reflection,
    schedule_init,
    importance,
    strategy_select,
    passive_reply,
    proactive_msg,
};

std::string_view to_string(StageTag t);
StageTag stage_tag_from_string(std::string_view s);

// Structured-output stages run at 0.0, free generation at 0.7.
double default_temperature(StageTag t);

struct ChatTurn {
    std::string role;  // "user" | "assistant"
    std::string content;

    bool operator==(const ChatTurn&) const = default;
};

struct ChatRequest {
    std::string system_prompt;
    std::vector<ChatTurn> messages;
    double temperature = 0.0;
    int max_output_tokens = 512;
    StageTag tag = StageTag::detector;

    // system prompt followed by every turn's content, newline separated
    std::string full_prompt() const;
};

ChatRequest make_request(StageTag tag, std::string system_prompt, std::vector<ChatTurn> messages,
                         int max_output_tokens = 512);

using EmbeddingVector = std::vector<double>;

double l2_norm(std::span<const double> v);
// Scales v to unit length. Throws EmbeddingFailed on a zero vector.
void normalize(EmbeddingVector& v);
// Dot product over normalized inputs; both spans must share a dimension.
double cosine(std::span<const double> a, std::span<const double> b);

// Chat completion plus text embedding. complete() and embed() may be called
// concurrently; implementations keep per-call retry state on the stack.
class Provider {
public:
    virtual ~Provider() = default;

    virtual std::string complete(const ChatRequest& req) = 0;
    virtual EmbeddingVector embed(std::string_view text) = 0;
    virtual std::size_t embedding_dim() const = 0;
};

// ---------------------------------------------------------------------------
// Offline mock

struct MockRule {
    std::optional<StageTag> tag;       // any stage when unset
    std::optional<std::string> contains;  // substring of full_prompt()
    std::string response;
    bool once = false;
    // "timeout" | "rate_limited" | "status:<code>" - raise instead of answering
    std::optional<std::string> error;
};

// Scripted provider. complete() answers with the first live rule that matches;
// once-rules are consumed. embed() is a seed-free hash of the text expanded to
// a unit vector, so results are stable across runs and machines.
class MockProvider final : public Provider {
public:
    static constexpr std::size_t kDefaultDim = 256;

    explicit MockProvider(std::vector<MockRule> rules = {}, std::size_t dim = kDefaultDim);

    // {"embedding_dim": 256, "embed_failures": ["..."], "rules": [{"tag": "detector",
    //  "contains": "...", "response": "...", "once": false, "error": null}]}
    static std::unique_ptr<MockProvider> from_json(const Json& j);
    static std::unique_ptr<MockProvider> from_file(const std::string& path);

    void add_rule(MockRule rule);
    // embed() fails with EmbeddingFailed for texts containing this substring.
    void fail_embeddings_containing(std::string needle);

    std::string complete(const ChatRequest& req) override;
    EmbeddingVector embed(std::string_view text) override;
    std::size_t embedding_dim() const override { return dim_; }

    std::vector<ChatRequest> calls() const;
    std::size_t call_count(StageTag tag) const;
    std::size_t total_calls() const;
    std::size_t embed_count() const;

private:
    mutable std::mutex mu_;
    std::vector<MockRule> rules_;
    std::vector<bool> consumed_;
    std::vector<std::string> embed_failures_;
    std::vector<ChatRequest> calls_;
    std::size_t embeds_ = 0;
    std::size_t dim_;
};

// The deterministic embedding used by MockProvider, exposed for oracles.
EmbeddingVector hash_embedding(std::string_view text, std::size_t dim);

// ---------------------------------------------------------------------------
// HTTP provider

struct ProviderConfig {
    std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
    std::string embedding_url = "https://api.openai.com/v1/embeddings";
    std::string api_key_env_name = "OPENAI_API_KEY";
    std::string model_name = "gpt-4";
    std::string embedding_model = "text-embedding-ada-002";
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 2;
    std::chrono::milliseconds backoff_base{500};
    std::size_t embedding_dim = 1536;
};

const ProviderConfig& validate_provider_config(const ProviderConfig& c);
void to_json(Json& j, const ProviderConfig& c);
void from_json(const Json& j, ProviderConfig& c);

struct HttpResponse {
    int status = 0;
    std::string body;
};

// One POST of a JSON body with bearer auth. Throws TimeoutError when the
// deadline passes and ProviderError for connection-level failures.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& url, const std::string& bearer_token,
                                   const std::string& body, std::chrono::milliseconds timeout) = 0;
};

std::shared_ptr<HttpTransport> make_default_transport();

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Runs attempt() up to 1 + max_retries times. Timeouts, 429s, and 5xx
// failures are retried after backoff_base * 2^attempt; anything else
// propagates at once. Exhaustion raises ExhaustedRetriesError.
template <typename F>
auto with_retries(int max_retries, std::chrono::milliseconds backoff_base, const Sleeper& sleep,
                  F&& attempt) -> decltype(attempt());

bool is_retryable(const ProviderError& e);

class HttpProvider final : public Provider {
public:
    HttpProvider(ProviderConfig config, std::string api_key,
                 std::shared_ptr<HttpTransport> transport, Sleeper sleeper = {});

    std::string complete(const ChatRequest& req) override;
    EmbeddingVector embed(std::string_view text) override;
    std::size_t embedding_dim() const override { return config_.embedding_dim; }

    // Wire body for a chat completion request.
    Json chat_body(const ChatRequest& req) const;

private:
    HttpResponse post_checked(const std::string& url, const std::string& body);

    ProviderConfig config_;
    std::string api_key_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
};

// ---------------------------------------------------------------------------

template <typename F>
auto with_retries(int max_retries, std::chrono::milliseconds backoff_base, const Sleeper& sleep,
                  F&& attempt) -> decltype(attempt()) {
    std::string last;
    for (int i = 0; i <= max_retries; ++i) {
        try {
            return attempt();
        } catch (const ProviderError& e) {
            if (!is_retryable(e)) throw;
            last = e.what();
            if (i < max_retries && sleep) sleep(backoff_base * (1LL << i));
        }
    }
    throw ExhaustedRetriesError("gave up after " + std::to_string(max_retries + 1) +
                                    " attempts: " + last,
                                max_retries + 1);
}

}  // namespace kindred
