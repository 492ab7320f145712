#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kindred/domain.hpp"
#include "kindred/llm.hpp"

namespace kindred {

inline constexpr int kDefaultDailyCap = 5;
inline constexpr std::chrono::minutes kSuppressionWindow{3 * 60};
inline constexpr TimeOfDay kPlanStart{7 * 60};
inline constexpr double kFallbackImportance = 0.5;

// Uniform draws in [0, 1).
class UniformSource {
public:
    virtual ~UniformSource() = default;
    virtual double next() = 0;
};

// mt19937_64 with the top 53 bits mapped onto [0,1). The mapping is spelled
// out here because std::uniform_real_distribution is not portable across
// standard libraries, and replay must be bit-exact.
class SeededUniform final : public UniformSource {
public:
    explicit SeededUniform(std::uint64_t seed) : engine_(seed) {}

    double next() override {
        ++draws_;
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    void skip(std::uint64_t n) {
        engine_.discard(n);
        draws_ += n;
    }
    std::uint64_t draws() const { return draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
};

enum class GateOutcome {
    dispatched,
    skipped_gate,       // importance <= draw
    skipped_cap,        // daily cap reached, no draw
    skipped_failed,     // passed the gate but generation failed
};

std::string_view to_string(GateOutcome o);
GateOutcome gate_outcome_from_string(std::string_view s);

struct GateDecision {
    EntryId entry = 0;
    GateOutcome outcome = GateOutcome::skipped_gate;
    std::optional<double> draw;
};

// The day's proactive plan. Pending entries pop in (timing, insertion) order;
// a due entry is dispatched iff importance > u with u ~ U[0,1). While a
// proactive message sits unanswered inside the suppression window, due
// entries stay pending and no draws are made.
class ScheduleQueue {
public:
    explicit ScheduleQueue(int daily_cap = kDefaultDailyCap,
                           std::chrono::minutes suppression = kSuppressionWindow);

    const ScheduleEntry& enqueue(TimeOfDay timing, std::string content, double importance,
                                 EntrySource source);
    // Re-inserts an entry with its recorded id (journal replay).
    void restore_entry(const ScheduleEntry& e);

    // Decides what the tick at `now` does without mutating the queue; consumes
    // a draw only when a due entry meets an open gate with cap headroom.
    std::optional<GateDecision> evaluate(Timestamp now, UniformSource& rng) const;
    void apply(const GateDecision& d);
    // evaluate + apply; returns the entry when it was dispatched.
    std::optional<ScheduleEntry> on_tick(Timestamp now, UniformSource& rng);

    void on_proactive_sent(Timestamp now);
    void set_suppression_until(Timestamp until);
    // Returns true when an active suppression was cleared.
    bool on_user_reply(Timestamp now);
    bool suppressed_at(Timestamp now) const;

    // Day boundary: pending entries expire, counters and suppression reset and
    // the finished day's entries are dropped. Returns the expired entries.
    std::vector<ScheduleEntry> rollover();

    const ScheduleEntry* find(EntryId id) const;
    // All of today's entries in insertion order.
    std::vector<ScheduleEntry> entries() const;
    std::vector<ScheduleEntry> pending_in_order() const;
    std::size_t pending_count() const { return pending_.size(); }
    std::optional<Timestamp> suppression_until() const { return suppression_until_; }
    int dispatched_today() const { return dispatched_today_; }
    int daily_cap() const { return daily_cap_; }
    std::chrono::minutes suppression_window() const { return suppression_; }
    EntryId next_id() const { return next_id_; }

    Json to_json() const;

private:
    void settle(EntryId id, EntryState state);

    int daily_cap_;
    std::chrono::minutes suppression_;
    std::map<EntryId, ScheduleEntry> entries_;
    std::set<std::pair<TimeOfDay, EntryId>> pending_;
    std::optional<Timestamp> suppression_until_;
    int dispatched_today_ = 0;
    EntryId next_id_ = 1;
};

// ---------------------------------------------------------------------------
// Model-backed planning

struct PlannedItem {
    TimeOfDay timing;
    std::string content;

    bool operator==(const PlannedItem&) const = default;
};

// Reads a JSON array of {"Timing","Content"} objects. Items with an
// unreadable time are dropped; an answer with no array is a ParseError.
std::vector<PlannedItem> parse_schedule(std::string_view answer);

// Reads the first number in the answer and clamps it to [0,1].
double parse_importance(std::string_view answer);

// Asks the model for an importance score; falls back to 0.5 after two
// unreadable answers or a provider failure.
double score_importance(TimeOfDay timing, std::string_view content, Provider& provider);

// Asks for the day plan and keeps items inside [max(07:00, not_before), 23:59].
// Returns an empty plan after two unreadable answers or a provider failure.
std::vector<PlannedItem> plan_day(const Reflection& r, const WorldInfo& w, const Persona& p,
                                  Provider& provider, TimeOfDay not_before = kPlanStart);

// plan_day + score_importance + enqueue as daily_init.
std::vector<ScheduleEntry> initialize_day(ScheduleQueue& queue, const Reflection& r,
                                          const WorldInfo& w, const Persona& p,
                                          Provider& provider, TimeOfDay not_before = kPlanStart);

// Scores a detected event and enqueues it as event_detector.
ScheduleEntry insert(ScheduleQueue& queue, const DetectedEvent& ev, Provider& provider);

// ---------------------------------------------------------------------------
// Real-world information for the day plan

class WorldInfoSource {
public:
    virtual ~WorldInfoSource() = default;
    virtual WorldInfo for_day(CalendarDate day) = 0;
};

// Same weather every day unless a date has an override.
class FixedWorldInfo final : public WorldInfoSource {
public:
    FixedWorldInfo(std::string weather = "sunny", int temp_low = 12, int temp_high = 22);

    void set_override(const WorldInfo& w);
    WorldInfo for_day(CalendarDate day) override;

private:
    std::string weather_;
    int low_;
    int high_;
    std::map<CalendarDate, WorldInfo> overrides_;
};

}  // namespace kindred
