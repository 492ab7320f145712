#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kindred/llm.hpp"
#include "kindred/runtime.hpp"
#include "kindred/store.hpp"

namespace kindred {

struct GatewayConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = "agents";
    int utc_offset_minutes = 0;
    double clock_speedup = 1.0;
    // How often the ticker looks at the clock; 0 disables the ticker.
    std::chrono::seconds tick_poll{30};
    std::chrono::seconds keepalive{25};
    // Shared bearer token; requests must carry it when set.
    std::optional<std::string> bearer_token;
    // Offline provider script; when set the HTTP provider is not used.
    std::optional<std::filesystem::path> mock_script;
    ProviderConfig provider;
    AgentConfig agent_defaults;
};

const GatewayConfig& validate_gateway_config(const GatewayConfig& c);
// Unknown keys are rejected with ValidationError naming the key.
GatewayConfig gateway_config_from_json(const Json& j);
Json gateway_config_to_json(const GatewayConfig& c);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// KINDRED_PORT, KINDRED_HOST, KINDRED_DATA_DIR, KINDRED_DAILY_CAP,
// KINDRED_UTC_OFFSET_MINUTES, KINDRED_PROVIDER_KEY_ENV, KINDRED_BEARER_TOKEN.
void apply_env_overrides(GatewayConfig& c, const EnvLookup& env);

// One running agent. All state access goes through a single worker thread;
// readers of the message feed see a copy published after each task.
class AgentHost {
public:
    AgentHost(std::string id, AgentHandle handle);
    ~AgentHost();
    AgentHost(const AgentHost&) = delete;
    AgentHost& operator=(const AgentHost&) = delete;

    const std::string& id() const { return id_; }

    // Runs fn on the worker thread; exceptions come back through the future.
    std::future<Json> submit(std::function<Json(Agent&)> fn);

    // Queues one tick per whole minute after the last tick, up to now.
    void catch_up(Timestamp now);

    struct FeedItem {
        std::uint64_t seq;
        Message message;
    };
    // Messages journaled after `seq`, oldest first.
    std::vector<FeedItem> messages_after(std::uint64_t seq, bool agent_only) const;
    // Blocks until a message newer than `seq` exists, the timeout passes or
    // the host stops. Returns false once stopped.
    bool wait_for_messages(std::uint64_t seq, std::chrono::milliseconds timeout,
                           bool agent_only) const;

    void stop();
    bool stopped() const { return stopping_; }

private:
    void worker();
    void publish(const Agent& agent);

    std::string id_;
    AgentHandle handle_;

    std::mutex queue_mu_;
    std::condition_variable queue_cv_;
    std::deque<std::packaged_task<Json()>> tasks_;
    std::atomic<bool> stopping_{false};
    std::mutex tick_mu_;
    std::optional<Timestamp> last_queued_tick_;

    mutable std::mutex feed_mu_;
    mutable std::condition_variable feed_cv_;
    std::vector<FeedItem> feed_;
    std::uint64_t published_seq_ = 0;

    std::thread thread_;
};

// The HTTP service. Routes:
//   POST /agents                              create from persona JSON -> 201 {"id"}
//   POST /agents/{id}/messages                {"text"} -> reply (503 when degraded)
//   GET  /agents/{id}/stream                  server-sent agent messages
//   GET  /agents/{id}/messages?after_seq=N    polling fallback
//   POST /agents/{id}/messages/{mid}/rating   {"score": 1..7} -> 204
//   GET  /agents/{id}/admin                   state snapshot
class Gateway {
public:
    Gateway(GatewayConfig config, Provider& provider, Clock& clock);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    // Opens every agent directory under data_dir.
    void load_existing();

    // Binds the configured port (0 picks a free one) and returns it.
    int bind();
    // Serves until stop(); call bind() first.
    void serve();
    void stop();

    // Queues catch-up ticks on every agent (what the ticker thread does).
    void tick_all();

    std::shared_ptr<AgentHost> find(const std::string& id) const;
    std::vector<std::string> agent_ids() const;
    const GatewayConfig& config() const { return config_; }

private:
    struct Impl;
    GatewayConfig config_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace kindred
