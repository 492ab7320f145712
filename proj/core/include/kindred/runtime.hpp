#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kindred/detector.hpp"
#include "kindred/dialogue.hpp"
#include "kindred/domain.hpp"
#include "kindred/journal.hpp"
#include "kindred/llm.hpp"
#include "kindred/memory.hpp"
#include "kindred/scheduler.hpp"

namespace kindred {

// ---------------------------------------------------------------------------
// Clocks

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() = 0;
};

// Manually stepped. Never moves backwards.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(Timestamp start) : now_(start) {}

    Timestamp now() override { return now_; }
    void set(Timestamp t);
    void advance(std::chrono::seconds d) { set(now_.plus_seconds(d.count())); }

private:
    Timestamp now_;
};

// Wall clock shifted to local time by a fixed offset. A speedup above 1 runs
// agent time faster than real time from the moment of construction.
class SystemClock final : public Clock {
public:
    explicit SystemClock(int utc_offset_minutes = 0, double speedup = 1.0);

    Timestamp now() override;

private:
    int offset_minutes_;
    double speedup_;
    std::chrono::system_clock::time_point origin_;
    std::mutex mu_;
    Timestamp last_{};
};

// ---------------------------------------------------------------------------
// Agent

struct AgentConfig {
    std::uint64_t seed = 0;
    int daily_cap = kDefaultDailyCap;
    std::chrono::minutes suppression_window = kSuppressionWindow;
    std::chrono::seconds round_idle = kRoundIdle;
    std::size_t short_term_capacity = Memory::kDefaultCapacity;
    std::size_t retrieval_k = 3;
    std::string weather = "sunny";
    int temp_low = 12;
    int temp_high = 22;

    bool operator==(const AgentConfig&) const = default;
};

const AgentConfig& validate_agent_config(const AgentConfig& c);
void to_json(Json& j, const AgentConfig& c);
void from_json(const Json& j, AgentConfig& c);

struct RatingRecord {
    MessageId message_id = 0;
    int score = 0;
    Timestamp rated_at;

    bool operator==(const RatingRecord&) const = default;
};

void to_json(Json& j, const RatingRecord& r);
void from_json(const Json& j, RatingRecord& r);

struct ReplyResult {
    Message user_message;
    Message reply;
    // The model could not produce a reply and a fallback was sent instead.
    bool degraded = false;
};

inline constexpr std::string_view kFallbackReply =
    "I'm here and I'm listening. Tell me a bit more when you feel like it.";

// Receives long-term memory objects as soon as they are archived.
using LongTermSink = std::function<void(const MemoryObject&)>;

// One agent instance: persona, two-tier memory, the day's schedule and the
// open conversation round. Every state change is written to the journal
// first, and replaying the journal rebuilds the same state. Not thread-safe;
// callers serialize access.
class Agent {
public:
    Agent(Persona persona, AgentConfig config, Provider& provider, WorldInfoSource& world,
          std::unique_ptr<Journal> journal = nullptr, LongTermSink sink = {});

    // Rebuilds an agent from its journal and archived long-term objects
    // without calling the provider.
    static std::unique_ptr<Agent> replay(Persona persona, AgentConfig config, Provider& provider,
                                         WorldInfoSource& world, std::unique_ptr<Journal> journal,
                                         std::vector<MemoryObject> long_term,
                                         LongTermSink sink = {});

    // Runs the day boundary and round timer for `now`, then answers the user.
    ReplyResult handle_user_message(std::string text, Timestamp now);

    // One clock tick: day boundary, round close with event detection, then
    // the dispatch gate. Returns proactive messages emitted.
    std::vector<Message> tick(Timestamp now);

    // Stores a satisfaction score for a proactive message (overwrites).
    void rate(MessageId id, int score, Timestamp now);

    const Persona& persona() const { return persona_; }
    const AgentConfig& config() const { return config_; }
    const Journal& journal() const { return *journal_; }
    const Memory& memory() const { return memory_; }
    const ScheduleQueue& schedule() const { return queue_; }
    const std::vector<Message>& transcript() const { return transcript_; }
    const std::optional<Reflection>& last_reflection() const { return last_reflection_; }
    const std::map<MessageId, RatingRecord>& ratings() const { return ratings_; }
    std::optional<CalendarDate> current_day() const { return current_day_; }
    std::uint64_t rng_draws() const { return rng_.draws(); }
    bool write_halted() const { return write_halted_; }
    const Message* find_message(MessageId id) const;

    // Full state for replay comparison.
    Json state_json() const;
    // The operator snapshot: schedule, suppression, counters, memory sizes.
    Json admin_json() const;

private:
    struct OpenRound {
        std::vector<Message> messages;
        Timestamp opened_at;
        std::optional<Timestamp> last_user_msg_at;
    };

    void emit(Timestamp at, RecordKind kind, Json payload);
    void flush();
    void apply(const JournalRecord& r, std::vector<MemoryObject>* pairs);

    void advance_day(Timestamp now);
    void maybe_close_round(Timestamp now);
    void run_gate(Timestamp now, std::vector<Message>& out);
    void add_to_round(const Message& m);
    void remember(const Message& m);
    void archive(const RecordResult& r);
    MessageId next_message_id() { return next_message_id_++; }

    Persona persona_;
    AgentConfig config_;
    Provider& provider_;
    WorldInfoSource& world_;
    std::unique_ptr<Journal> journal_;
    LongTermSink sink_;
    Embedder embed_;

    Memory memory_;
    ScheduleQueue queue_;
    SeededUniform rng_;
    std::optional<OpenRound> round_;
    std::optional<CalendarDate> current_day_;
    std::vector<Message> day_log_;
    std::optional<Reflection> last_reflection_;
    std::map<MessageId, RatingRecord> ratings_;
    std::vector<Message> transcript_;
    std::map<MessageId, std::size_t> by_id_;
    MessageId next_message_id_ = 1;
    bool write_halted_ = false;
};

// ---------------------------------------------------------------------------
// Simulation harness

struct ScriptedMessage {
    Timestamp at;
    std::string text;
};

// Ticks every minute in [start, end). After each tick, scripted messages with
// at in [t, t + 1 min) are delivered in order. Returns the agent's transcript.
std::vector<Message> run_until(Agent& agent, Timestamp start, Timestamp end,
                               const std::vector<ScriptedMessage>& script = {});

}  // namespace kindred
