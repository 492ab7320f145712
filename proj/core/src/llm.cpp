#include "kindred/llm.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <thread>

#include "kindred/errors.hpp"

namespace kindred {

namespace {

constexpr std::array<std::pair<StageTag, std::string_view>, 7> kTags{{
    {StageTag::detector, "detector"},
    {StageTag::reflection, "reflection"},
    {StageTag::schedule_init, "schedule_init"},
    {StageTag::importance, "importance"},
    {StageTag::strategy_select, "strategy_select"},
    {StageTag::passive_reply, "passive_reply"},
    {StageTag::proactive_msg, "proactive_msg"},
}};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void raise_scripted(const std::string& error) {
    if (error == "timeout") throw TimeoutError("mock: scripted timeout");
    if (error == "rate_limited") throw RateLimitedError("mock: scripted 429");
    if (error.rfind("status:", 0) == 0) {
        const int status = std::stoi(error.substr(7));
        throw ProviderError("mock: scripted status " + std::to_string(status), status);
    }
    throw ProviderError("mock: scripted failure '" + error + "'");
}

}  // namespace

std::string_view to_string(StageTag t) {
    for (const auto& [tag, name] : kTags) {
        if (tag == t) return name;
    }
    return "?";
}

StageTag stage_tag_from_string(std::string_view s) {
    for (const auto& [tag, name] : kTags) {
        if (name == s) return tag;
    }
    throw ParseError("unknown stage tag '" + std::string(s) + "'");
}

double default_temperature(StageTag t) {
    switch (t) {
        case StageTag::strategy_select:
        case StageTag::passive_reply:
        case StageTag::proactive_msg:
            return 0.7;
        default:
            return 0.0;
    }
}

std::string ChatRequest::full_prompt() const {
    std::string out = system_prompt;
    for (const auto& m : messages) {
        out += '\n';
        out += m.content;
    }
    return out;
}

ChatRequest make_request(StageTag tag, std::string system_prompt, std::vector<ChatTurn> messages,
                         int max_output_tokens) {
    ChatRequest r;
    r.system_prompt = std::move(system_prompt);
    r.messages = std::move(messages);
    r.temperature = default_temperature(tag);
    r.max_output_tokens = max_output_tokens;
    r.tag = tag;
    return r;
}

double l2_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

void normalize(EmbeddingVector& v) {
    const double n = l2_norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) throw EmbeddingFailed("cannot normalize a zero vector");
    for (double& x : v) x /= n;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw EmbeddingFailed("embedding dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

EmbeddingVector hash_embedding(std::string_view text, std::size_t dim) {
    const std::uint64_t seed = fnv1a(text);
    EmbeddingVector v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const std::uint64_t bits = splitmix64(seed + 0x632be59bd9b4e019ULL * (i + 1));
        v[i] = static_cast<double>(bits >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
    normalize(v);
    return v;
}

// ---------------------------------------------------------------------------
// MockProvider

MockProvider::MockProvider(std::vector<MockRule> rules, std::size_t dim)
    : rules_(std::move(rules)), consumed_(rules_.size(), false), dim_(dim) {
    if (dim_ == 0) throw ValidationError("embedding_dim", "must be positive");
}

std::unique_ptr<MockProvider> MockProvider::from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("mock script must be a JSON object");
    const std::size_t dim = j.value("embedding_dim", kDefaultDim);
    std::vector<MockRule> rules;
    for (const auto& r : j.value("rules", Json::array())) {
        MockRule rule;
        if (r.contains("tag") && !r["tag"].is_null()) {
            rule.tag = stage_tag_from_string(r["tag"].get<std::string>());
        }
        if (r.contains("contains") && !r["contains"].is_null()) {
            rule.contains = r["contains"].get<std::string>();
        }
        rule.response = r.value("response", std::string{});
        rule.once = r.value("once", false);
        if (r.contains("error") && !r["error"].is_null()) rule.error = r["error"].get<std::string>();
        rules.push_back(std::move(rule));
    }
    auto mock = std::make_unique<MockProvider>(std::move(rules), dim);
    for (const auto& f : j.value("embed_failures", Json::array())) {
        mock->fail_embeddings_containing(f.get<std::string>());
    }
    return mock;
}

std::unique_ptr<MockProvider> MockProvider::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock script '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw ParseError("mock script '" + path + "': " + e.what());
    }
    return from_json(j);
}

void MockProvider::add_rule(MockRule rule) {
    std::lock_guard lock(mu_);
    rules_.push_back(std::move(rule));
    consumed_.push_back(false);
}

void MockProvider::fail_embeddings_containing(std::string needle) {
    std::lock_guard lock(mu_);
    embed_failures_.push_back(std::move(needle));
}

std::string MockProvider::complete(const ChatRequest& req) {
    std::lock_guard lock(mu_);
    calls_.push_back(req);
    const std::string prompt = req.full_prompt();
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (consumed_[i]) continue;
        const MockRule& r = rules_[i];
        if (r.tag && *r.tag != req.tag) continue;
        if (r.contains && prompt.find(*r.contains) == std::string::npos) continue;
        if (r.once) consumed_[i] = true;
        if (r.error) raise_scripted(*r.error);
        return r.response;
    }
    throw MockExhaustedError("mock: no script rule for stage '" + std::string(to_string(req.tag)) +
                             "'");
}

EmbeddingVector MockProvider::embed(std::string_view text) {
    {
        std::lock_guard lock(mu_);
        ++embeds_;
        for (const auto& f : embed_failures_) {
            if (text.find(f) != std::string_view::npos) {
                throw EmbeddingFailed("mock: scripted embedding failure");
            }
        }
    }
    if (text.empty()) throw EmbeddingFailed("cannot embed empty text");
    return hash_embedding(text, dim_);
}

std::vector<ChatRequest> MockProvider::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t MockProvider::call_count(StageTag tag) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& c : calls_) n += c.tag == tag;
    return n;
}

std::size_t MockProvider::total_calls() const {
    std::lock_guard lock(mu_);
    return calls_.size();
}

std::size_t MockProvider::embed_count() const {
    std::lock_guard lock(mu_);
    return embeds_;
}

// ---------------------------------------------------------------------------
// HTTP provider

const ProviderConfig& validate_provider_config(const ProviderConfig& c) {
    if (c.max_retries < 0 || c.max_retries > 5) {
        throw ValidationError("max_retries", "must lie in [0,5]");
    }
    if (c.endpoint_url.empty()) throw ValidationError("endpoint_url", "must be non-empty");
    if (c.api_key_env_name.empty()) throw ValidationError("api_key_env_name", "must be non-empty");
    if (c.model_name.empty()) throw ValidationError("model_name", "must be non-empty");
    if (c.request_timeout.count() <= 0) {
        throw ValidationError("request_timeout", "must be positive");
    }
    if (c.embedding_dim == 0) throw ValidationError("embedding_dim", "must be positive");
    return c;
}

void to_json(Json& j, const ProviderConfig& c) {
    j = Json{{"endpoint_url", c.endpoint_url},
             {"embedding_url", c.embedding_url},
             {"api_key_env_name", c.api_key_env_name},
             {"model_name", c.model_name},
             {"embedding_model", c.embedding_model},
             {"request_timeout_ms", c.request_timeout.count()},
             {"max_retries", c.max_retries},
             {"backoff_base_ms", c.backoff_base.count()},
             {"embedding_dim", c.embedding_dim}};
}

void from_json(const Json& j, ProviderConfig& c) {
    ProviderConfig d;
    c.endpoint_url = j.value("endpoint_url", d.endpoint_url);
    c.embedding_url = j.value("embedding_url", d.embedding_url);
    c.api_key_env_name = j.value("api_key_env_name", d.api_key_env_name);
    c.model_name = j.value("model_name", d.model_name);
    c.embedding_model = j.value("embedding_model", d.embedding_model);
    c.request_timeout =
        std::chrono::milliseconds(j.value("request_timeout_ms", d.request_timeout.count()));
    c.max_retries = j.value("max_retries", d.max_retries);
    c.backoff_base = std::chrono::milliseconds(j.value("backoff_base_ms", d.backoff_base.count()));
    c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
}

bool is_retryable(const ProviderError& e) {
    if (dynamic_cast<const ExhaustedRetriesError*>(&e) != nullptr) return false;
    if (dynamic_cast<const MockExhaustedError*>(&e) != nullptr) return false;
    if (dynamic_cast<const TimeoutError*>(&e) != nullptr) return true;
    const int s = e.status();
    return s == 0 || s == 429 || s >= 500;
}

HttpProvider::HttpProvider(ProviderConfig config, std::string api_key,
                           std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      api_key_(std::move(api_key)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)) {
    validate_provider_config(config_);
    if (!transport_) throw ValidationError("transport", "must be set");
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Json HttpProvider::chat_body(const ChatRequest& req) const {
    Json messages = Json::array();
    if (!req.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    }
    for (const auto& m : req.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    return Json{{"model", config_.model_name},
                {"messages", std::move(messages)},
                {"temperature", req.temperature},
                {"max_tokens", req.max_output_tokens}};
}

HttpResponse HttpProvider::post_checked(const std::string& url, const std::string& body) {
    HttpResponse res = transport_->post_json(url, api_key_, body, config_.request_timeout);
    if (res.status == 429) throw RateLimitedError("provider rate limited the request");
    if (res.status < 200 || res.status >= 300) {
        throw ProviderError("provider returned HTTP " + std::to_string(res.status), res.status);
    }
    return res;
}

std::string HttpProvider::complete(const ChatRequest& req) {
    if (req.tag == StageTag::passive_reply && req.messages.empty()) {
        throw PreconditionViolation("passive_reply requests need at least one message");
    }
    const std::string body = chat_body(req).dump();
    const HttpResponse res = with_retries(config_.max_retries, config_.backoff_base, sleeper_,
                                          [&] { return post_checked(config_.endpoint_url, body); });
    try {
        const Json j = Json::parse(res.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
        throw ProviderError(std::string("malformed completion response: ") + e.what(), res.status);
    }
}

EmbeddingVector HttpProvider::embed(std::string_view text) {
    if (text.empty()) throw EmbeddingFailed("cannot embed empty text");
    const std::string body =
        Json{{"model", config_.embedding_model}, {"input", std::string(text)}}.dump();
    const HttpResponse res = with_retries(config_.max_retries, config_.backoff_base, sleeper_,
                                          [&] { return post_checked(config_.embedding_url, body); });
    EmbeddingVector v;
    try {
        v = Json::parse(res.body).at("data").at(0).at("embedding").get<EmbeddingVector>();
    } catch (const Json::exception& e) {
        throw ProviderError(std::string("malformed embedding response: ") + e.what(), res.status);
    }
    if (v.size() != config_.embedding_dim) {
        throw ProviderError("embedding dimension " + std::to_string(v.size()) + " != configured " +
                            std::to_string(config_.embedding_dim));
    }
    normalize(v);
    return v;
}

}  // namespace kindred
