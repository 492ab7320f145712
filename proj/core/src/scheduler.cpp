#include "kindred/scheduler.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <spdlog/spdlog.h>

#include "kindred/errors.hpp"
#include "kindred/prompts.hpp"
#include "structured.hpp"

namespace kindred {

namespace {

constexpr std::array<std::pair<GateOutcome, std::string_view>, 4> kOutcomes{{
    {GateOutcome::dispatched, "dispatched"},
    {GateOutcome::skipped_gate, "skipped_gate"},
    {GateOutcome::skipped_cap, "skipped_cap"},
    {GateOutcome::skipped_failed, "skipped_failed"},
}};

const Json* find_key_ci(const Json& obj, std::string_view key) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        std::string k = it.key();
        std::transform(k.begin(), k.end(), k.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (k == key) return &*it;
    }
    return nullptr;
}

}  // namespace

std::string_view to_string(GateOutcome o) {
    for (const auto& [v, name] : kOutcomes) {
        if (v == o) return name;
    }
    return "?";
}

GateOutcome gate_outcome_from_string(std::string_view s) {
    for (const auto& [v, name] : kOutcomes) {
        if (name == s) return v;
    }
    throw ParseError("unknown gate outcome '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// ScheduleQueue

ScheduleQueue::ScheduleQueue(int daily_cap, std::chrono::minutes suppression)
    : daily_cap_(daily_cap), suppression_(suppression) {
    if (daily_cap_ < 0) throw ValidationError("daily_cap", "must be >= 0");
    if (suppression_.count() < 0) throw ValidationError("suppression_window", "must be >= 0");
}

const ScheduleEntry& ScheduleQueue::enqueue(TimeOfDay timing, std::string content,
                                            double importance, EntrySource source) {
    if (!(importance >= 0.0 && importance <= 1.0)) {
        throw ValidationError("importance", "must lie in [0,1]");
    }
    ScheduleEntry e{next_id_++, timing, std::move(content), importance, source,
                    EntryState::pending};
    pending_.insert({e.timing, e.id});
    return entries_.emplace(e.id, std::move(e)).first->second;
}

void ScheduleQueue::restore_entry(const ScheduleEntry& e) {
    if (entries_.count(e.id)) throw SequenceError("duplicate entry id " + std::to_string(e.id));
    entries_.emplace(e.id, e);
    if (e.state == EntryState::pending) pending_.insert({e.timing, e.id});
    next_id_ = std::max(next_id_, e.id + 1);
}

bool ScheduleQueue::suppressed_at(Timestamp now) const {
    return suppression_until_ && now < *suppression_until_;
}

std::optional<GateDecision> ScheduleQueue::evaluate(Timestamp now, UniformSource& rng) const {
    if (suppressed_at(now) || pending_.empty()) return std::nullopt;
    const auto [timing, id] = *pending_.begin();
    if (timing > time_of_day(now)) return std::nullopt;

    GateDecision d;
    d.entry = id;
    if (dispatched_today_ >= daily_cap_) {
        d.outcome = GateOutcome::skipped_cap;
        return d;
    }
    const double u = rng.next();
    d.draw = u;
    d.outcome = entries_.at(id).importance > u ? GateOutcome::dispatched : GateOutcome::skipped_gate;
    return d;
}

void ScheduleQueue::settle(EntryId id, EntryState state) {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw SequenceError("unknown entry " + std::to_string(id));
    if (it->second.state != EntryState::pending) {
        throw SequenceError("entry " + std::to_string(id) + " is already " +
                            std::string(to_string(it->second.state)));
    }
    pending_.erase({it->second.timing, id});
    it->second.state = state;
}

void ScheduleQueue::apply(const GateDecision& d) {
    if (d.outcome == GateOutcome::dispatched) {
        if (dispatched_today_ >= daily_cap_) throw SequenceError("daily cap exceeded");
        settle(d.entry, EntryState::dispatched);
        ++dispatched_today_;
    } else {
        settle(d.entry, EntryState::skipped);
    }
}

std::optional<ScheduleEntry> ScheduleQueue::on_tick(Timestamp now, UniformSource& rng) {
    const auto d = evaluate(now, rng);
    if (!d) return std::nullopt;
    apply(*d);
    if (d->outcome != GateOutcome::dispatched) return std::nullopt;
    return entries_.at(d->entry);
}

void ScheduleQueue::on_proactive_sent(Timestamp now) {
    suppression_until_ = now.plus_minutes(suppression_.count());
}

void ScheduleQueue::set_suppression_until(Timestamp until) { suppression_until_ = until; }

bool ScheduleQueue::on_user_reply(Timestamp /*now*/) {
    const bool was_set = suppression_until_.has_value();
    suppression_until_.reset();
    return was_set;
}

std::vector<ScheduleEntry> ScheduleQueue::rollover() {
    std::vector<ScheduleEntry> expired;
    for (const auto& [timing, id] : pending_) {
        ScheduleEntry& e = entries_.at(id);
        e.state = EntryState::expired;
        expired.push_back(e);
    }
    pending_.clear();
    entries_.clear();
    dispatched_today_ = 0;
    suppression_until_.reset();
    return expired;
}

const ScheduleEntry* ScheduleQueue::find(EntryId id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<ScheduleEntry> ScheduleQueue::entries() const {
    std::vector<ScheduleEntry> out;
    out.reserve(entries_.size());
    for (const auto& [_, e] : entries_) out.push_back(e);
    return out;
}

std::vector<ScheduleEntry> ScheduleQueue::pending_in_order() const {
    std::vector<ScheduleEntry> out;
    for (const auto& [_, id] : pending_) out.push_back(entries_.at(id));
    return out;
}

Json ScheduleQueue::to_json() const {
    Json entries = Json::array();
    for (const auto& [_, e] : entries_) entries.push_back(e);
    return Json{{"daily_cap", daily_cap_},
                {"suppression_window_minutes", suppression_.count()},
                {"entries", std::move(entries)},
                {"suppression_until", suppression_until_
                                          ? Json(format_timestamp(*suppression_until_))
                                          : Json(nullptr)},
                {"dispatched_today", dispatched_today_},
                {"next_id", next_id_}};
}

// ---------------------------------------------------------------------------
// Planning

std::vector<PlannedItem> parse_schedule(std::string_view answer) {
    const std::string_view text = detail::strip_code_fence(answer);
    const auto open = text.find('[');
    const auto close = text.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw ParseError("schedule answer has no JSON array");
    }
    Json j;
    try {
        j = Json::parse(text.substr(open, close - open + 1));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("schedule answer is not JSON: ") + e.what());
    }
    if (!j.is_array()) throw ParseError("schedule answer is not an array");

    std::vector<PlannedItem> out;
    for (const auto& item : j) {
        if (!item.is_object()) continue;
        const Json* timing = find_key_ci(item, "timing");
        const Json* content = find_key_ci(item, "content");
        if (timing == nullptr || content == nullptr || !timing->is_string() ||
            !content->is_string()) {
            spdlog::debug("schedule: dropping malformed item {}", item.dump());
            continue;
        }
        const std::string c(detail::trim(content->get<std::string>()));
        if (c.empty()) continue;
        try {
            out.push_back({parse_time_of_day(detail::trim(timing->get<std::string>())), c});
        } catch (const ParseError&) {
            spdlog::debug("schedule: dropping item with bad timing {}", item.dump());
        }
    }
    return out;
}

double parse_importance(std::string_view answer) {
    static const std::regex kNumber(R"([-+]?(?:\d+(?:\.\d*)?|\.\d+))");
    const std::string s(answer);
    std::smatch m;
    if (!std::regex_search(s, m, kNumber)) throw ParseError("importance answer has no number");
    const double v = std::stod(m.str());
    return std::clamp(v, 0.0, 1.0);
}

double score_importance(TimeOfDay timing, std::string_view content, Provider& provider) {
    const std::string prompt =
        prompts::render(prompts::kImportance, {{"entry", prompts::entry_json(timing, content)}});
    auto v = detail::ask_structured(provider,
                                    make_request(StageTag::importance, "", {{"user", prompt}}),
                                    prompts::kImportanceRepair, parse_importance);
    if (!v) {
        spdlog::warn("importance: using default {} for '{}'", kFallbackImportance, content);
        return kFallbackImportance;
    }
    return *v;
}

std::vector<PlannedItem> plan_day(const Reflection& r, const WorldInfo& w, const Persona& p,
                                  Provider& provider, TimeOfDay not_before) {
    const std::string prompt = prompts::render(prompts::kScheduleInit,
                                               {{"persona", prompts::persona_block(p)},
                                                {"world_info", prompts::world_info_line(w)},
                                                {"reflection", prompts::reflection_block(r)}});
    auto items = detail::ask_structured(
        provider, make_request(StageTag::schedule_init, "", {{"user", prompt}}, 1024),
        prompts::kScheduleRepair, parse_schedule);
    if (!items) {
        spdlog::warn("schedule: starting {} with an empty plan", format_date(w.date));
        return {};
    }
    const TimeOfDay start = std::max(kPlanStart, not_before);
    std::vector<PlannedItem> kept;
    for (auto& it : *items) {
        if (it.timing >= start && it.timing <= kEndOfDay) kept.push_back(std::move(it));
    }
    return kept;
}

std::vector<ScheduleEntry> initialize_day(ScheduleQueue& queue, const Reflection& r,
                                          const WorldInfo& w, const Persona& p,
                                          Provider& provider, TimeOfDay not_before) {
    std::vector<ScheduleEntry> out;
    for (auto& item : plan_day(r, w, p, provider, not_before)) {
        const double importance = score_importance(item.timing, item.content, provider);
        out.push_back(
            queue.enqueue(item.timing, std::move(item.content), importance, EntrySource::daily_init));
    }
    return out;
}

ScheduleEntry insert(ScheduleQueue& queue, const DetectedEvent& ev, Provider& provider) {
    const double importance = score_importance(ev.timing, ev.content, provider);
    return queue.enqueue(ev.timing, ev.content, importance, EntrySource::event_detector);
}

// ---------------------------------------------------------------------------

FixedWorldInfo::FixedWorldInfo(std::string weather, int temp_low, int temp_high)
    : weather_(std::move(weather)), low_(temp_low), high_(temp_high) {
    if (low_ > high_) throw ValidationError("temp_low", "must be <= temp_high");
}

void FixedWorldInfo::set_override(const WorldInfo& w) { overrides_[w.date] = validate_world_info(w); }

WorldInfo FixedWorldInfo::for_day(CalendarDate day) {
    if (auto it = overrides_.find(day); it != overrides_.end()) return it->second;
    return WorldInfo{day, weekday_name(day), weather_, low_, high_};
}

}  // namespace kindred
