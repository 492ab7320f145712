#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kindred/errors.hpp"
#include "kindred/gateway.hpp"
#include "kindred/journal.hpp"
#include "kindred/store.hpp"

namespace kindred::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

void use_stderr_logging() {
    static bool done = false;
    if (done) return;
    done = true;
    auto logger = spdlog::stderr_color_mt("kindred");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
}

}  // namespace

Persona sample_persona() {
    Persona p;
    p.name = "Mia";
    p.age = 22;
    p.gender = "female";
    p.personality = "warm, curious, a little goofy";
    p.occupation_or_major = "third-year psychology student";
    p.background = "grew up in a small coastal town and moved to the city for university";
    p.hobbies = "bouldering, baking bread, indie films";
    p.language_style = "casual and upbeat, short sentences, the odd emoji";
    p.relationship_with_user = "close friend from the same dorm";
    p.example_dialogues = {
        {"I finally finished my essay!", "Yesss, that's huge! How does it feel to hit submit?"},
        {"I can't sleep again.", "Ugh, that's rough. Is something on your mind, or just wired?"},
        {"Want to grab lunch?", "Always. Noodles or the sandwich place?"},
        {"My mom called today.", "Oh nice, how's she doing? Did you two talk for long?"},
    };
    return p;
}

SimulationScript parse_simulation_script(const std::string& text, const fs::path& base_dir) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError("line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError("script", "line 1: expected a JSON object");
    static const std::set<std::string> kKnown = {"seed",          "start",   "end",    "mock_script",
                                                 "user_messages", "persona", "config", "world"};
    for (const auto& [k, _] : j.items()) {
        if (!kKnown.count(k)) throw ValidationError(k, "unknown script field");
    }
    for (const char* k : {"seed", "start", "end", "mock_script"}) {
        if (!j.contains(k)) throw ValidationError(k, "missing");
    }
    SimulationScript s;
    try {
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const Json::exception&) {
        throw ValidationError("seed", "must be a non-negative integer");
    }
    auto timestamp = [&](const Json& v, const std::string& where) {
        if (!v.is_string()) throw ValidationError(where, "must be a timestamp string");
        try {
            return parse_timestamp(v.get<std::string>());
        } catch (const ParseError& e) {
            throw ValidationError(where, e.what());
        }
    };
    s.start = timestamp(j.at("start"), "start");
    s.end = timestamp(j.at("end"), "end");
    if (s.end <= s.start) throw ValidationError("end", "must be after start");
    if (!j.at("mock_script").is_string()) throw ValidationError("mock_script", "must be a path");
    s.mock_script = j.at("mock_script").get<std::string>();
    if (s.mock_script.is_relative()) s.mock_script = base_dir / s.mock_script;

    if (j.contains("user_messages")) {
        const Json& msgs = j.at("user_messages");
        if (!msgs.is_array()) throw ValidationError("user_messages", "must be an array");
        for (std::size_t i = 0; i < msgs.size(); ++i) {
            const std::string where = "user_messages[" + std::to_string(i) + "]";
            const Json& m = msgs[i];
            if (!m.is_object() || !m.contains("at") || !m.contains("text") || !m.at("text").is_string()) {
                throw ValidationError(where, "needs \"at\" and \"text\"");
            }
            ScriptedMessage sm{timestamp(m.at("at"), where + ".at"), m.at("text").get<std::string>()};
            if (sm.at < s.start || sm.at >= s.end) {
                throw ValidationError(where + ".at", "outside [start, end)");
            }
            if (!s.user_messages.empty() && sm.at < s.user_messages.back().at) {
                throw ValidationError(where + ".at", "messages must be sorted by time");
            }
            if (sm.text.find_first_not_of(" \t\r\n") == std::string::npos) {
                throw ValidationError(where + ".text", "must not be empty");
            }
            s.user_messages.push_back(std::move(sm));
        }
    }
    if (j.contains("persona")) s.persona = validate_persona(j.at("persona").get<Persona>());
    if (j.contains("config")) s.config = j.at("config").get<AgentConfig>();
    if (j.contains("world")) {
        if (!j.at("world").is_array()) throw ValidationError("world", "must be an array");
        for (const auto& w : j.at("world")) s.world.push_back(validate_world_info(w.get<WorldInfo>()));
    }
    return s;
}

JournalSummary summarize(const std::vector<JournalRecord>& records) {
    JournalSummary s;
    s.records = records.size();
    for (const auto& r : records) {
        switch (r.kind) {
            case RecordKind::round_closed: ++s.rounds; break;
            case RecordKind::event_detected: ++s.events; break;
            case RecordKind::entry_dispatched: ++s.dispatches; break;
            case RecordKind::entry_skipped: ++s.skips; break;
            case RecordKind::entry_expired: ++s.expired; break;
            case RecordKind::reflection_done: ++s.reflections; break;
            case RecordKind::schedule_initialized: ++s.schedule_inits; break;
            case RecordKind::user_msg:
            case RecordKind::agent_msg: ++s.messages; break;
            default: break;
        }
    }
    return s;
}

namespace {

void print_summary(std::ostream& out, const JournalSummary& s, std::uint64_t memories) {
    out << "rounds: " << s.rounds << '\n'
        << "events: " << s.events << '\n'
        << "dispatches: " << s.dispatches << '\n'
        << "skips: " << s.skips << '\n'
        << "expired: " << s.expired << '\n'
        << "reflections: " << s.reflections << '\n'
        << "schedule inits: " << s.schedule_inits << '\n'
        << "messages: " << s.messages << '\n'
        << s.records << " entries, " << memories << " memories\n";
}

}  // namespace

int cmd_simulate(const fs::path& script_path, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err) {
    SimulationScript script;
    try {
        script = parse_simulation_script(read_file(script_path), script_path.parent_path());
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const Error& e) {
        err << "error: " << script_path.string() << ": " << e.what() << '\n';
        return kInputError;
    }
    if (!fs::exists(script.mock_script)) {
        err << "error: mock script not found: " << script.mock_script.string() << '\n';
        return kInputError;
    }
    std::unique_ptr<MockProvider> mock;
    try {
        mock = MockProvider::from_file(script.mock_script.string());
    } catch (const Error& e) {
        err << "error: " << script.mock_script.string() << ": " << e.what() << '\n';
        return kInputError;
    }
    if (fs::exists(out_dir / kJournalFile) && fs::file_size(out_dir / kJournalFile) > 0) {
        err << "error: " << out_dir.string() << " already holds a journal\n";
        return kInputError;
    }

    AgentConfig config = script.config.value_or(AgentConfig{});
    config.seed = script.seed;
    try {
        AgentHandle h = open_agent(out_dir, *mock, script.persona.value_or(sample_persona()), config,
                                   script.world);
        const auto transcript = run_until(*h.agent, script.start, script.end, script.user_messages);
        {
            std::ofstream t(out_dir / "transcript.jsonl", std::ios::binary | std::ios::trunc);
            for (const auto& m : transcript) t << Json(m).dump() << '\n';
            if (!t) throw IoError("cannot write transcript.jsonl");
        }
        out << "simulated " << format_timestamp(script.start) << " to "
            << format_timestamp(script.end) << " (seed " << script.seed << ")\n";
        print_summary(out, summarize(h.agent->journal().records()), h.agent->memory().pairs_recorded());
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kOk;
}

int cmd_inspect(const fs::path& dir, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(dir)) {
        err << "error: no such agent directory: " << dir.string() << '\n';
        return kInputError;
    }
    try {
        auto loaded = load_journal(dir / kJournalFile);
        if (loaded.records.empty()) {
            out << "0 entries, 0 memories\n";
            return kOk;
        }
        const auto persona = read_json_file(dir / kPersonaFile).get<Persona>();
        const auto config = fs::exists(dir / kConfigFile)
                                ? read_json_file(dir / kConfigFile).get<AgentConfig>()
                                : AgentConfig{};
        MockProvider idle;
        FixedWorldInfo world(config.weather, config.temp_low, config.temp_high);
        const std::size_t n = loaded.records.size();
        auto journal = std::make_unique<MemoryJournal>(std::move(loaded.records));
        auto agent = Agent::replay(persona, config, idle, world, std::move(journal),
                                   load_long_term(dir / kLongTermFile, false));
        out << n << " entries, " << agent->memory().pairs_recorded() << " memories\n";
        print_summary(out, summarize(agent->journal().records()), agent->memory().pairs_recorded());
        out << agent->admin_json().dump(2) << '\n';
    } catch (const CorruptJournal& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kOk;
}

int cmd_serve(const fs::path& config_path, std::ostream& out, std::ostream& err) {
    GatewayConfig config;
    std::unique_ptr<Provider> provider;
    try {
        config = gateway_config_from_json(read_json_file(config_path));
        apply_env_overrides(config, process_env());
        if (config.mock_script && config.mock_script->is_relative()) {
            config.mock_script = config_path.parent_path() / *config.mock_script;
        }
        validate_gateway_config(config);
        if (config.mock_script) {
            provider = MockProvider::from_file(config.mock_script->string());
        } else {
            const auto key = process_env()(config.provider.api_key_env_name);
            if (!key || key->empty()) {
                err << "error: provider API key missing: environment variable "
                    << config.provider.api_key_env_name << " is not set\n";
                return kConfigError;
            }
            provider = std::make_unique<HttpProvider>(config.provider, *key, make_default_transport());
        }
    } catch (const Error& e) {
        err << "error: " << config_path.string() << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const Json::exception& e) {
        err << "error: " << config_path.string() << ": " << e.what() << '\n';
        return kConfigError;
    }

    SystemClock clock(config.utc_offset_minutes, config.clock_speedup);
    Gateway gateway(config, *provider, clock);
    try {
        gateway.load_existing();
        gateway.bind();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    out << "listening on " << gateway.config().host << ":" << gateway.config().port << std::endl;

    g_interrupted = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::atomic<bool> done{false};
    std::thread watcher([&] {
        while (!done && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (g_interrupted) gateway.stop();
    });
    gateway.serve();
    done = true;
    watcher.join();
    gateway.stop();
    std::signal(SIGINT, SIG_DFL);
    std::signal(SIGTERM, SIG_DFL);
    out << "stopped; journals flushed" << std::endl;
    return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    use_stderr_logging();
    CLI::App app{"kindred: proactive peer-support agent runtime"};
    app.require_subcommand(1);

    std::string config_path;
    auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
    serve->add_option("--config", config_path, "Gateway config JSON")->required();

    std::string script_path;
    std::string out_dir;
    auto* sim = app.add_subcommand("simulate", "Run a deterministic offline simulation");
    sim->add_option("--script", script_path, "Simulation script JSON")->required();
    sim->add_option("--out", out_dir, "Output agent directory")->required();

    std::string inspect_dir;
    auto* inspect = app.add_subcommand("inspect", "Print an agent directory's state");
    inspect->add_option("dir", inspect_dir, "Agent directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    if (serve->parsed()) return cmd_serve(config_path, out, err);
    if (sim->parsed()) return cmd_simulate(script_path, out_dir, out, err);
    return cmd_inspect(inspect_dir, out, err);
}

}  // namespace kindred::cli
