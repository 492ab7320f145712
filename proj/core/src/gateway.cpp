#include "kindred/gateway.hpp"

#include <cstdlib>
#include <random>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "kindred/errors.hpp"

namespace kindred {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

const GatewayConfig& validate_gateway_config(const GatewayConfig& c) {
    if (c.host.empty()) throw ValidationError("host", "must not be empty");
    if (c.port < 0 || c.port > 65535) throw ValidationError("port", "must lie in 0..65535");
    if (c.data_dir.empty()) throw ValidationError("data_dir", "must not be empty");
    if (std::abs(c.utc_offset_minutes) > 14 * 60) {
        throw ValidationError("utc_offset_minutes", "must lie within +-840");
    }
    if (!(c.clock_speedup >= 1.0)) throw ValidationError("clock_speedup", "must be >= 1");
    if (c.tick_poll.count() < 0) throw ValidationError("tick_poll_seconds", "must be >= 0");
    if (c.keepalive.count() <= 0) throw ValidationError("keepalive_seconds", "must be > 0");
    if (c.bearer_token && c.bearer_token->empty()) {
        throw ValidationError("bearer_token", "must not be empty when set");
    }
    if (!c.mock_script) validate_provider_config(c.provider);
    validate_agent_config(c.agent_defaults);
    return c;
}

GatewayConfig gateway_config_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("config", "must be a JSON object");
    GatewayConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const Json& v = it.value();
        try {
            if (k == "host") c.host = v.get<std::string>();
            else if (k == "port") c.port = v.get<int>();
            else if (k == "data_dir") c.data_dir = v.get<std::string>();
            else if (k == "utc_offset_minutes") c.utc_offset_minutes = v.get<int>();
            else if (k == "clock_speedup") c.clock_speedup = v.get<double>();
            else if (k == "tick_poll_seconds") c.tick_poll = std::chrono::seconds(v.get<int>());
            else if (k == "keepalive_seconds") c.keepalive = std::chrono::seconds(v.get<int>());
            else if (k == "bearer_token") {
                if (!v.is_null()) c.bearer_token = v.get<std::string>();
            } else if (k == "mock_script") {
                if (!v.is_null()) c.mock_script = v.get<std::string>();
            } else if (k == "provider") c.provider = v.get<ProviderConfig>();
            else if (k == "agent_defaults") c.agent_defaults = v.get<AgentConfig>();
            else throw ValidationError(k, "unknown config field");
        } catch (const Json::exception& e) {
            throw ValidationError(k, e.what());
        }
    }
    return c;
}

Json gateway_config_to_json(const GatewayConfig& c) {
    return Json{{"host", c.host},
                {"port", c.port},
                {"data_dir", c.data_dir.string()},
                {"utc_offset_minutes", c.utc_offset_minutes},
                {"clock_speedup", c.clock_speedup},
                {"tick_poll_seconds", c.tick_poll.count()},
                {"keepalive_seconds", c.keepalive.count()},
                {"bearer_token", c.bearer_token ? Json(*c.bearer_token) : Json(nullptr)},
                {"mock_script", c.mock_script ? Json(c.mock_script->string()) : Json(nullptr)},
                {"provider", c.provider},
                {"agent_defaults", c.agent_defaults}};
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (v == nullptr) return std::nullopt;
        return std::string(v);
    };
}

void apply_env_overrides(GatewayConfig& c, const EnvLookup& env) {
    auto as_int = [&](const std::string& name, const char* field) {
        const std::string v = *env(name);
        try {
            std::size_t used = 0;
            const int n = std::stoi(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return n;
        } catch (const std::exception&) {
            throw ValidationError(field, name + "='" + v + "' is not an integer");
        }
    };
    if (env("KINDRED_HOST")) c.host = *env("KINDRED_HOST");
    if (env("KINDRED_PORT")) c.port = as_int("KINDRED_PORT", "port");
    if (env("KINDRED_DATA_DIR")) c.data_dir = *env("KINDRED_DATA_DIR");
    if (env("KINDRED_DAILY_CAP")) c.agent_defaults.daily_cap = as_int("KINDRED_DAILY_CAP", "daily_cap");
    if (env("KINDRED_UTC_OFFSET_MINUTES")) {
        c.utc_offset_minutes = as_int("KINDRED_UTC_OFFSET_MINUTES", "utc_offset_minutes");
    }
    if (env("KINDRED_PROVIDER_KEY_ENV")) c.provider.api_key_env_name = *env("KINDRED_PROVIDER_KEY_ENV");
    if (env("KINDRED_BEARER_TOKEN")) c.bearer_token = *env("KINDRED_BEARER_TOKEN");
}

// ---------------------------------------------------------------------------
// AgentHost

AgentHost::AgentHost(std::string id, AgentHandle handle)
    : id_(std::move(id)), handle_(std::move(handle)) {
    publish(*handle_.agent);
    thread_ = std::thread([this] { worker(); });
}

AgentHost::~AgentHost() { stop(); }

void AgentHost::stop() {
    {
        std::lock_guard lock(queue_mu_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    feed_cv_.notify_all();
    if (thread_.joinable()) thread_.join();
}

std::future<Json> AgentHost::submit(std::function<Json(Agent&)> fn) {
    std::packaged_task<Json()> task([this, fn = std::move(fn)] { return fn(*handle_.agent); });
    auto fut = task.get_future();
    {
        std::lock_guard lock(queue_mu_);
        if (stopping_) throw PreconditionViolation("agent " + id_ + " is shutting down");
        tasks_.push_back(std::move(task));
    }
    queue_cv_.notify_one();
    return fut;
}

void AgentHost::catch_up(Timestamp now) {
    const Timestamp minute{now.seconds - (((now.seconds % 60) + 60) % 60)};
    std::lock_guard lock(tick_mu_);
    Timestamp t = last_queued_tick_ ? last_queued_tick_->plus_minutes(1) : minute;
    for (; t <= minute; t = t.plus_minutes(1)) {
        submit([t](Agent& a) {
            a.tick(t);
            return Json(nullptr);
        });
        last_queued_tick_ = t;
    }
}

void AgentHost::worker() {
    for (;;) {
        std::packaged_task<Json()> task;
        {
            std::unique_lock lock(queue_mu_);
            queue_cv_.wait(lock, [this] { return stopping_ || !tasks_.empty(); });
            if (tasks_.empty()) return;  // stopping with nothing left
            task = std::move(tasks_.front());
            tasks_.pop_front();
        }
        task();
        publish(*handle_.agent);
    }
}

void AgentHost::publish(const Agent& agent) {
    const auto& records = agent.journal().records();
    std::vector<FeedItem> fresh;
    for (std::size_t i = published_seq_; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.kind == RecordKind::user_msg || r.kind == RecordKind::agent_msg) {
            fresh.push_back({r.seq, r.payload.at("message").get<Message>()});
        }
    }
    {
        std::lock_guard lock(feed_mu_);
        published_seq_ = records.size();
        for (auto& f : fresh) feed_.push_back(std::move(f));
    }
    if (!fresh.empty()) feed_cv_.notify_all();
}

std::vector<AgentHost::FeedItem> AgentHost::messages_after(std::uint64_t seq,
                                                           bool agent_only) const {
    std::lock_guard lock(feed_mu_);
    std::vector<FeedItem> out;
    for (const auto& f : feed_) {
        if (f.seq > seq && (!agent_only || f.message.role == Role::agent)) out.push_back(f);
    }
    return out;
}

bool AgentHost::wait_for_messages(std::uint64_t seq, std::chrono::milliseconds timeout,
                                  bool agent_only) const {
    std::unique_lock lock(feed_mu_);
    feed_cv_.wait_for(lock, timeout, [&] {
        if (stopping_) return true;
        for (auto it = feed_.rbegin(); it != feed_.rend() && it->seq > seq; ++it) {
            if (!agent_only || it->message.role == Role::agent) return true;
        }
        return false;
    });
    return !stopping_;
}

// ---------------------------------------------------------------------------
// Gateway

namespace {

Json message_json(std::uint64_t seq, const Message& m) {
    Json j = m;
    j["seq"] = seq;
    return j;
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& msg,
                const std::optional<std::string>& field = std::nullopt) {
    Json body{{"error", code}, {"message", msg}};
    if (field) body["field"] = *field;
    send_json(res, status, body);
}

std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
        return Json::parse(req.body);
    } catch (const Json::exception& e) {
        send_error(res, 400, "bad_json", e.what());
        return std::nullopt;
    }
}

std::string fresh_agent_id(const fs::path& data_dir) {
    static std::mutex mu;
    static std::mt19937_64 gen{std::random_device{}()};
    std::lock_guard lock(mu);
    for (;;) {
        std::ostringstream id;
        id << "a" << std::hex << (gen() & 0xffffffffffffULL);
        if (!fs::exists(data_dir / id.str())) return id.str();
    }
}

}  // namespace

struct Gateway::Impl {
    Impl(const GatewayConfig& c, Provider& p, Clock& k) : config(c), provider(p), clock(k) {}

    const GatewayConfig& config;
    Provider& provider;
    Clock& clock;
    httplib::Server server;

    mutable std::mutex hosts_mu;
    std::map<std::string, std::shared_ptr<AgentHost>> hosts;

    std::mutex ticker_mu;
    std::condition_variable ticker_cv;
    bool ticker_stop = false;
    std::thread ticker;

    std::shared_ptr<AgentHost> host(const std::string& id) const {
        std::lock_guard lock(hosts_mu);
        auto it = hosts.find(id);
        return it == hosts.end() ? nullptr : it->second;
    }

    std::shared_ptr<AgentHost> open(const std::string& id, const std::optional<Persona>& persona) {
        auto handle = open_agent(config.data_dir / id, provider, persona, config.agent_defaults);
        auto h = std::make_shared<AgentHost>(id, std::move(handle));
        std::lock_guard lock(hosts_mu);
        hosts[id] = h;
        return h;
    }

    void routes();
};

void Gateway::Impl::routes() {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (!config.bearer_token) return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + *config.bearer_token) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        send_error(res, 401, "unauthorized", "missing or wrong bearer token");
        return httplib::Server::HandlerResponse::Handled;
    });

    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const ValidationError& e) {
                send_error(res, 400, "validation", e.what(), e.field());
            } catch (const NotFoundError& e) {
                send_error(res, 404, "not_found", e.what());
            } catch (const std::exception& e) {
                spdlog::error("request failed: {}", e.what());
                send_error(res, 500, "internal", e.what());
            }
        });

    server.Post("/agents", [this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req, res);
        if (!body) return;
        const Json& pj = body->is_object() && body->contains("persona") ? body->at("persona") : *body;
        const auto persona = pj.get<Persona>();
        validate_persona(persona);
        const std::string id = fresh_agent_id(config.data_dir);
        auto h = open(id, persona);
        h->catch_up(clock.now());
        spdlog::info("created agent {}", id);
        send_json(res, 201, Json{{"id", id}});
    });

    server.Post(R"(/agents/([^/]+)/messages)",
                [this](const httplib::Request& req, httplib::Response& res) {
        auto h = host(req.matches[1]);
        if (!h) return send_error(res, 404, "not_found", "unknown agent");
        auto body = parse_body(req, res);
        if (!body) return;
        std::string text;
        if (body->is_object() && body->contains("text") && body->at("text").is_string()) {
            text = body->at("text").get<std::string>();
        }
        if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
            return send_error(res, 400, "validation", "text must not be empty",
                              std::string("text"));
        }
        const Timestamp now = clock.now();
        h->catch_up(now);
        const Json out = h->submit([text, now](Agent& a) {
                              const ReplyResult r = a.handle_user_message(text, now);
                              const std::uint64_t seq = a.journal().last_seq();
                              return Json{{"message", message_json(seq, r.reply)},
                                          {"user_message", r.user_message},
                                          {"degraded", r.degraded}};
                          }).get();
        send_json(res, out.at("degraded").get<bool>() ? 503 : 200, out);
    });

    server.Get(R"(/agents/([^/]+)/messages)",
               [this](const httplib::Request& req, httplib::Response& res) {
        auto h = host(req.matches[1]);
        if (!h) return send_error(res, 404, "not_found", "unknown agent");
        std::uint64_t after = 0;
        if (req.has_param("after_seq")) {
            try {
                after = std::stoull(req.get_param_value("after_seq"));
            } catch (const std::exception&) {
                return send_error(res, 400, "validation", "after_seq must be an integer",
                                  std::string("after_seq"));
            }
        }
        Json msgs = Json::array();
        for (const auto& f : h->messages_after(after, false)) msgs.push_back(message_json(f.seq, f.message));
        send_json(res, 200, Json{{"messages", std::move(msgs)}});
    });

    server.Get(R"(/agents/([^/]+)/stream)", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
        auto h = host(req.matches[1]);
        if (!h) return send_error(res, 404, "not_found", "unknown agent");
        std::uint64_t start = 0;
        try {
            if (req.has_header("Last-Event-ID")) {
                start = std::stoull(req.get_header_value("Last-Event-ID"));
            } else if (req.has_param("after_seq")) {
                start = std::stoull(req.get_param_value("after_seq"));
            }
        } catch (const std::exception&) {
            return send_error(res, 400, "validation", "resume position must be an integer");
        }
        const auto keepalive = std::chrono::duration_cast<std::chrono::milliseconds>(config.keepalive);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [h, seq = start, keepalive](std::size_t, httplib::DataSink& sink) mutable {
                auto items = h->messages_after(seq, true);
                if (items.empty()) {
                    if (!h->wait_for_messages(seq, keepalive, true)) {
                        sink.done();
                        return true;
                    }
                    items = h->messages_after(seq, true);
                }
                if (items.empty()) {
                    static constexpr std::string_view kBeat = ": keepalive\n\n";
                    return sink.write(kBeat.data(), kBeat.size());
                }
                for (const auto& f : items) {
                    const std::string ev = "id: " + std::to_string(f.seq) + "\nevent: message\ndata: " +
                                           message_json(f.seq, f.message).dump() + "\n\n";
                    if (!sink.write(ev.data(), ev.size())) return false;
                    seq = f.seq;
                }
                return true;
            });
    });

    server.Post(R"(/agents/([^/]+)/messages/(\d+)/rating)",
                [this](const httplib::Request& req, httplib::Response& res) {
        auto h = host(req.matches[1]);
        if (!h) return send_error(res, 404, "not_found", "unknown agent");
        auto body = parse_body(req, res);
        if (!body) return;
        if (!body->is_object() || !body->contains("score") || !body->at("score").is_number_integer()) {
            return send_error(res, 400, "validation", "score must be an integer 1-7",
                              std::string("score"));
        }
        const MessageId mid = std::stoull(req.matches[2]);
        const int score = body->at("score").get<int>();
        const Timestamp now = clock.now();
        h->submit([mid, score, now](Agent& a) {
             a.rate(mid, score, now);
             return Json(nullptr);
         }).get();
        res.status = 204;
    });

    server.Get(R"(/agents/([^/]+)/admin)", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
        auto h = host(req.matches[1]);
        if (!h) return send_error(res, 404, "not_found", "unknown agent");
        Json snap = h->submit([](Agent& a) { return a.admin_json(); }).get();
        snap["id"] = h->id();
        send_json(res, 200, snap);
    });
}

Gateway::Gateway(GatewayConfig config, Provider& provider, Clock& clock)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(config_, provider, clock)) {
    validate_gateway_config(config_);
    std::error_code ec;
    fs::create_directories(config_.data_dir, ec);
    if (ec) throw IoError("cannot create " + config_.data_dir.string() + ": " + ec.message());
    impl_->routes();
}

Gateway::~Gateway() { stop(); }

void Gateway::load_existing() {
    for (const auto& entry : fs::directory_iterator(config_.data_dir)) {
        if (!entry.is_directory() || !fs::exists(entry.path() / kPersonaFile)) continue;
        const std::string id = entry.path().filename().string();
        if (impl_->host(id)) continue;
        impl_->open(id, std::nullopt);
        spdlog::info("loaded agent {}", id);
    }
}

int Gateway::bind() {
    int port = config_.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(config_.host);
    } else if (!impl_->server.bind_to_port(config_.host, port)) {
        port = -1;
    }
    if (port < 0) throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    config_.port = port;
    return port;
}

void Gateway::serve() {
    if (config_.tick_poll.count() > 0 && !impl_->ticker.joinable()) {
        impl_->ticker = std::thread([this] {
            std::unique_lock lock(impl_->ticker_mu);
            while (!impl_->ticker_stop) {
                lock.unlock();
                tick_all();
                lock.lock();
                impl_->ticker_cv.wait_for(lock, config_.tick_poll, [this] { return impl_->ticker_stop; });
            }
        });
    }
    spdlog::info("listening on {}:{}", config_.host, config_.port);
    impl_->server.listen_after_bind();
}

void Gateway::stop() {
    if (!impl_) return;
    {
        std::lock_guard lock(impl_->ticker_mu);
        impl_->ticker_stop = true;
    }
    impl_->ticker_cv.notify_all();
    if (impl_->ticker.joinable()) impl_->ticker.join();
    std::vector<std::shared_ptr<AgentHost>> hosts;
    {
        std::lock_guard lock(impl_->hosts_mu);
        for (auto& [_, h] : impl_->hosts) hosts.push_back(h);
    }
    for (auto& h : hosts) h->stop();  // wakes streams and drains inboxes
    impl_->server.stop();
}

void Gateway::tick_all() {
    const Timestamp now = impl_->clock.now();
    std::vector<std::shared_ptr<AgentHost>> hosts;
    {
        std::lock_guard lock(impl_->hosts_mu);
        for (auto& [_, h] : impl_->hosts) hosts.push_back(h);
    }
    for (auto& h : hosts) {
        try {
            h->catch_up(now);
        } catch (const PreconditionViolation&) {
            // host is shutting down
        }
    }
}

std::shared_ptr<AgentHost> Gateway::find(const std::string& id) const { return impl_->host(id); }

std::vector<std::string> Gateway::agent_ids() const {
    std::lock_guard lock(impl_->hosts_mu);
    std::vector<std::string> out;
    for (const auto& [id, _] : impl_->hosts) out.push_back(id);
    return out;
}

}  // namespace kindred
