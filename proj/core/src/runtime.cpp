#include "kindred/runtime.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "kindred/errors.hpp"
#include "kindred/reflection.hpp"
#include "structured.hpp"

namespace kindred {

// ---------------------------------------------------------------------------
// Clocks

void VirtualClock::set(Timestamp t) {
    if (t < now_) throw PreconditionViolation("virtual clock cannot move backwards");
    now_ = t;
}

SystemClock::SystemClock(int utc_offset_minutes, double speedup)
    : offset_minutes_(utc_offset_minutes),
      speedup_(speedup),
      origin_(std::chrono::system_clock::now()) {
    if (!(speedup_ >= 1.0)) throw ValidationError("speedup", "must be >= 1");
    if (std::abs(offset_minutes_) > 14 * 60) {
        throw ValidationError("utc_offset_minutes", "must lie within +-14h");
    }
}

Timestamp SystemClock::now() {
    using namespace std::chrono;
    const auto real = system_clock::now();
    const double elapsed = duration<double>(real - origin_).count() * speedup_;
    const auto origin_s = duration_cast<seconds>(origin_.time_since_epoch()).count();
    const Timestamp t{origin_s + static_cast<std::int64_t>(elapsed) + offset_minutes_ * 60LL};
    std::lock_guard lock(mu_);
    last_ = std::max(last_, t);
    return last_;
}

// ---------------------------------------------------------------------------
// Config and ratings

const AgentConfig& validate_agent_config(const AgentConfig& c) {
    if (c.daily_cap < 0) throw ValidationError("daily_cap", "must be >= 0");
    if (c.suppression_window.count() < 0) {
        throw ValidationError("suppression_window_minutes", "must be >= 0");
    }
    if (c.round_idle.count() <= 0) throw ValidationError("round_idle_seconds", "must be > 0");
    if (c.short_term_capacity < 2) throw ValidationError("short_term_capacity", "must be >= 2");
    if (c.retrieval_k < 1) throw ValidationError("retrieval_k", "must be >= 1");
    if (c.weather.empty()) throw ValidationError("weather", "must not be empty");
    if (c.temp_low > c.temp_high) throw ValidationError("temp_low", "must be <= temp_high");
    return c;
}

void to_json(Json& j, const AgentConfig& c) {
    j = Json{{"seed", c.seed},
             {"daily_cap", c.daily_cap},
             {"suppression_window_minutes", c.suppression_window.count()},
             {"round_idle_seconds", c.round_idle.count()},
             {"short_term_capacity", c.short_term_capacity},
             {"retrieval_k", c.retrieval_k},
             {"weather", c.weather},
             {"temp_low", c.temp_low},
             {"temp_high", c.temp_high}};
}

void from_json(const Json& j, AgentConfig& c) {
    if (!j.is_object()) throw ValidationError("config", "must be an object");
    c = AgentConfig{};
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const Json& v = it.value();
        try {
            if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "daily_cap") c.daily_cap = v.get<int>();
            else if (k == "suppression_window_minutes") c.suppression_window = std::chrono::minutes(v.get<int>());
            else if (k == "round_idle_seconds") c.round_idle = std::chrono::seconds(v.get<int>());
            else if (k == "short_term_capacity") c.short_term_capacity = v.get<std::size_t>();
            else if (k == "retrieval_k") c.retrieval_k = v.get<std::size_t>();
            else if (k == "weather") c.weather = v.get<std::string>();
            else if (k == "temp_low") c.temp_low = v.get<int>();
            else if (k == "temp_high") c.temp_high = v.get<int>();
            else throw ValidationError(k, "unknown config field");
        } catch (const Json::exception& e) {
            throw ValidationError(k, e.what());
        }
    }
    validate_agent_config(c);
}

void to_json(Json& j, const RatingRecord& r) {
    j = Json{{"message_id", r.message_id}, {"score", r.score},
             {"rated_at", format_timestamp(r.rated_at)}};
}

void from_json(const Json& j, RatingRecord& r) {
    r.message_id = j.at("message_id").get<MessageId>();
    r.score = j.at("score").get<int>();
    r.rated_at = parse_timestamp(j.at("rated_at").get<std::string>());
}

// ---------------------------------------------------------------------------
// Agent

namespace {

Json strategies_json(const StrategySelection& sel) {
    Json a = Json::array();
    for (Strategy s : sel.strategies) a.push_back(to_string(s));
    return a;
}

Json optional_ts(const std::optional<Timestamp>& t) {
    return t ? Json(format_timestamp(*t)) : Json(nullptr);
}

}  // namespace

Agent::Agent(Persona persona, AgentConfig config, Provider& provider, WorldInfoSource& world,
             std::unique_ptr<Journal> journal, LongTermSink sink)
    : persona_(std::move(persona)),
      config_(std::move(config)),
      provider_(provider),
      world_(world),
      journal_(journal ? std::move(journal) : std::make_unique<MemoryJournal>()),
      sink_(std::move(sink)),
      embed_(embedder_for(provider)),
      memory_(config_.short_term_capacity),
      queue_(config_.daily_cap, config_.suppression_window),
      rng_(config_.seed) {
    validate_persona(persona_);
    validate_agent_config(config_);
}

std::unique_ptr<Agent> Agent::replay(Persona persona, AgentConfig config, Provider& provider,
                                     WorldInfoSource& world, std::unique_ptr<Journal> journal,
                                     std::vector<MemoryObject> long_term, LongTermSink sink) {
    if (!journal) throw PreconditionViolation("replay needs a journal");
    auto agent = std::make_unique<Agent>(std::move(persona), std::move(config), provider, world,
                                         std::move(journal), std::move(sink));
    std::vector<MemoryObject> pairs;
    std::uint64_t draws = 0;
    for (const auto& r : agent->journal_->records()) {
        try {
            agent->apply(r, &pairs);
        } catch (const std::exception& e) {
            throw CorruptJournal(r.seq, std::string(to_string(r.kind)) + ": " + e.what());
        }
        if ((r.kind == RecordKind::entry_dispatched || r.kind == RecordKind::entry_skipped) &&
            r.payload.contains("draw") && !r.payload.at("draw").is_null()) {
            ++draws;
        }
    }
    agent->memory_.restore(pairs, std::move(long_term));
    agent->rng_.skip(draws);
    return agent;
}

const Message* Agent::find_message(MessageId id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &transcript_[it->second];
}

void Agent::emit(Timestamp at, RecordKind kind, Json payload) {
    JournalRecord r{journal_->last_seq() + 1, at, kind, std::move(payload)};
    if (!write_halted_) {
        try {
            journal_->append(r);
        } catch (const IoError& e) {
            spdlog::error("journal write failed, halting writes: {}", e.what());
            write_halted_ = true;
        }
    }
    apply(r, nullptr);
}

void Agent::flush() {
    if (write_halted_) return;
    try {
        journal_->flush();
    } catch (const IoError& e) {
        spdlog::error("journal flush failed, halting writes: {}", e.what());
        write_halted_ = true;
    }
}

// The only place state changes. `pairs` is set during replay, where memory is
// rebuilt in one go afterwards instead of re-embedding every pair.
void Agent::apply(const JournalRecord& r, std::vector<MemoryObject>* pairs) {
    const Json& p = r.payload;
    switch (r.kind) {
        case RecordKind::user_msg: {
            const auto m = p.at("message").get<Message>();
            remember(m);
            add_to_round(m);
            round_->last_user_msg_at = m.sent_at;
            break;
        }
        case RecordKind::agent_msg: {
            const auto m = p.at("message").get<Message>();
            if (pairs != nullptr) {
                MemoryObject pair;
                pair.pair_id = "p" + std::to_string(pairs->size() + 1);
                if (p.contains("reply_to") && !p.at("reply_to").is_null()) {
                    const Message* u = find_message(p.at("reply_to").get<MessageId>());
                    if (u == nullptr) throw SequenceError("reply to unknown message");
                    pair.user_message = *u;
                }
                pair.agent_message = m;
                pair.created_at = m.sent_at;
                pairs->push_back(std::move(pair));
            }
            remember(m);
            add_to_round(m);
            break;
        }
        case RecordKind::round_closed:
            round_.reset();
            break;
        case RecordKind::entry_enqueued:
            queue_.restore_entry(p.at("entry").get<ScheduleEntry>());
            break;
        case RecordKind::entry_dispatched:
        case RecordKind::entry_skipped: {
            GateDecision d;
            d.entry = p.at("entry_id").get<EntryId>();
            d.outcome = r.kind == RecordKind::entry_dispatched
                            ? GateOutcome::dispatched
                            : gate_outcome_from_string(p.at("outcome").get<std::string>());
            queue_.apply(d);
            break;
        }
        case RecordKind::suppression_set:
            queue_.set_suppression_until(parse_timestamp(p.at("until").get<std::string>()));
            break;
        case RecordKind::suppression_cleared:
            queue_.on_user_reply(r.at);
            break;
        case RecordKind::reflection_done:
            if (p.at("reflection").is_null()) {
                last_reflection_.reset();
            } else {
                last_reflection_ = p.at("reflection").get<Reflection>();
            }
            break;
        case RecordKind::day_rolled_over:
            queue_.rollover();
            current_day_ = parse_date(p.at("to").get<std::string>());
            day_log_.clear();
            break;
        case RecordKind::message_rated: {
            const RatingRecord rating{p.at("message_id").get<MessageId>(), p.at("score").get<int>(),
                                      r.at};
            ratings_[rating.message_id] = rating;
            break;
        }
        case RecordKind::event_detected:
        case RecordKind::entry_expired:
        case RecordKind::schedule_initialized:
            break;
    }
}

void Agent::remember(const Message& m) {
    if (by_id_.count(m.id)) throw SequenceError("duplicate message id " + std::to_string(m.id));
    by_id_[m.id] = transcript_.size();
    transcript_.push_back(m);
    day_log_.push_back(m);
    next_message_id_ = std::max(next_message_id_, m.id + 1);
}

void Agent::add_to_round(const Message& m) {
    if (!round_) round_ = OpenRound{{}, m.sent_at, std::nullopt};
    round_->messages.push_back(m);
}

void Agent::archive(const RecordResult& r) {
    if (!sink_) return;
    for (const auto& o : r.archived) {
        try {
            sink_(o);
        } catch (const std::exception& e) {
            spdlog::error("long-term write of {} failed: {}", o.pair_id, e.what());
            write_halted_ = true;
        }
    }
}

void Agent::advance_day(Timestamp now) {
    const CalendarDate today = date_of(now);
    if (current_day_ && today <= *current_day_) return;

    Reflection reflection = empty_reflection(today);
    std::vector<MessageId> consumed;
    if (current_day_) {
        for (const auto& e : queue_.pending_in_order()) {
            emit(now, RecordKind::entry_expired, {{"entry_id", e.id}});
        }
        if (queue_.suppression_until()) emit(now, RecordKind::suppression_cleared, Json::object());
        try {
            reflection = reflect(day_log_, today, provider_);
        } catch (const std::exception& e) {
            spdlog::warn("reflection for {} failed: {}", format_date(today), e.what());
        }
        for (const auto& m : day_log_) {
            if (date_of(m.sent_at) == today.prev()) consumed.push_back(m.id);
        }
    }
    // The first day has nothing behind it; it plans from an empty reflection
    // but records none.
    emit(now, RecordKind::reflection_done,
         {{"reflection", current_day_ ? Json(reflection) : Json(nullptr)}, {"consumed", consumed}});
    emit(now, RecordKind::day_rolled_over,
         {{"from", current_day_ ? Json(format_date(*current_day_)) : Json(nullptr)},
          {"to", format_date(today)}});

    std::vector<PlannedItem> plan;
    try {
        plan = plan_day(reflection, world_.for_day(today), persona_, provider_,
                        time_of_day(now));
    } catch (const std::exception& e) {
        spdlog::warn("day plan for {} failed: {}", format_date(today), e.what());
    }
    for (auto& item : plan) {
        const double importance = score_importance(item.timing, item.content, provider_);
        const ScheduleEntry entry{queue_.next_id(), item.timing, std::move(item.content),
                                  importance, EntrySource::daily_init, EntryState::pending};
        emit(now, RecordKind::entry_enqueued, {{"entry", entry}});
    }
    emit(now, RecordKind::schedule_initialized,
         {{"day", format_date(today)}, {"entries", plan.size()}});
}

void Agent::maybe_close_round(Timestamp now) {
    if (!round_) return;
    const Timestamp since = round_->last_user_msg_at.value_or(round_->opened_at);
    if (!round_boundary(since, now, config_.round_idle)) return;

    ConversationRound closed{round_->messages, round_->opened_at, now};
    Json ids = Json::array();
    for (const auto& m : closed.messages) ids.push_back(m.id);
    emit(now, RecordKind::round_closed,
         {{"opened_at", format_timestamp(closed.opened_at)},
          {"message_ids", std::move(ids)},
          {"has_user_message", closed.has_user_message()}});
    if (!closed.has_user_message()) return;

    std::optional<DetectedEvent> ev;
    try {
        ev = detect(closed, now, provider_);
    } catch (const std::exception& e) {
        spdlog::warn("event detection failed: {}", e.what());
    }
    if (!ev) return;
    emit(now, RecordKind::event_detected, {{"event", *ev}});
    const double importance = score_importance(ev->timing, ev->content, provider_);
    const ScheduleEntry entry{queue_.next_id(), ev->timing, ev->content, importance,
                              EntrySource::event_detector, EntryState::pending};
    emit(now, RecordKind::entry_enqueued, {{"entry", entry}});
}

void Agent::run_gate(Timestamp now, std::vector<Message>& out) {
    while (auto d = queue_.evaluate(now, rng_)) {
        const Json draw = d->draw ? Json(*d->draw) : Json(nullptr);
        if (d->outcome != GateOutcome::dispatched) {
            emit(now, RecordKind::entry_skipped,
                 {{"entry_id", d->entry}, {"outcome", to_string(d->outcome)}, {"draw", draw}});
            continue;
        }
        const ScheduleEntry entry = *queue_.find(d->entry);
        const StrategySelection sel = select_strategies(entry, provider_);
        std::optional<Message> msg;
        try {
            msg = generate_proactive(entry, sel, persona_, provider_, now);
        } catch (const ProviderError& e) {
            spdlog::warn("proactive message for entry {} failed: {}", entry.id, e.what());
        }
        if (!msg) {
            emit(now, RecordKind::entry_skipped,
                 {{"entry_id", entry.id},
                  {"outcome", to_string(GateOutcome::skipped_failed)},
                  {"draw", draw}});
            break;
        }
        msg->id = next_message_id();
        emit(now, RecordKind::entry_dispatched,
             {{"entry_id", entry.id}, {"draw", draw}, {"strategies", strategies_json(sel)}});
        emit(now, RecordKind::agent_msg,
             {{"message", *msg}, {"entry_id", entry.id}, {"strategies", strategies_json(sel)}});
        archive(memory_.record_agent_only(*msg, embed_));
        emit(now, RecordKind::suppression_set,
             {{"until", format_timestamp(now.plus_minutes(config_.suppression_window.count()))},
              {"entry_id", entry.id}});
        out.push_back(*msg);
        break;  // at most one dispatch per tick
    }
}

std::vector<Message> Agent::tick(Timestamp now) {
    std::vector<Message> out;
    advance_day(now);
    maybe_close_round(now);
    try {
        run_gate(now, out);
    } catch (const std::exception& e) {
        spdlog::error("dispatch gate failed at {}: {}", format_timestamp(now), e.what());
    }
    flush();
    return out;
}

ReplyResult Agent::handle_user_message(std::string text, Timestamp now) {
    if (detail::trim(text).empty()) throw ValidationError("content", "must not be empty");
    advance_day(now);
    maybe_close_round(now);

    const Message user{next_message_id(), Role::user, std::move(text), now, Origin::user_initiated};
    emit(now, RecordKind::user_msg, {{"message", user}});
    if (queue_.suppression_until()) emit(now, RecordKind::suppression_cleared, Json::object());

    std::vector<Message> context = memory_.context();
    context.push_back(user);
    const StrategySelection sel = select_strategies(context, provider_);
    const auto related = memory_.retrieve(user.content, config_.retrieval_k, embed_);

    ReplyResult result{user, {}, false};
    std::optional<Message> reply;
    for (int attempt = 0; attempt < 2 && !reply; ++attempt) {
        try {
            reply = generate_reply(context, sel, persona_, related.objects, provider_, now);
        } catch (const ProviderError& e) {
            spdlog::warn("reply attempt {} failed: {}", attempt + 1, e.what());
        }
    }
    if (!reply) {
        reply = Message{0, Role::agent, std::string(kFallbackReply), now, Origin::passive_reply};
        result.degraded = true;
    }
    reply->id = next_message_id();
    emit(now, RecordKind::agent_msg,
         {{"message", *reply},
          {"reply_to", user.id},
          {"strategies", strategies_json(sel)},
          {"degraded", result.degraded}});
    archive(memory_.record_pair(user, *reply, embed_));
    flush();
    result.reply = *reply;
    return result;
}

void Agent::rate(MessageId id, int score, Timestamp now) {
    const Message* m = find_message(id);
    if (m == nullptr) throw NotFoundError("no message " + std::to_string(id));
    if (m->origin != Origin::proactive) {
        throw ValidationError("message_id", "only proactive messages can be rated");
    }
    if (score < 1 || score > 7) throw ValidationError("score", "must be between 1 and 7");
    emit(now, RecordKind::message_rated, {{"message_id", id}, {"score", score}});
    flush();
}

Json Agent::state_json() const {
    Json round = nullptr;
    if (round_) {
        Json msgs = Json::array();
        for (const auto& m : round_->messages) msgs.push_back(m);
        round = Json{{"messages", std::move(msgs)},
                     {"opened_at", format_timestamp(round_->opened_at)},
                     {"last_user_msg_at", optional_ts(round_->last_user_msg_at)}};
    }
    Json day_log = Json::array();
    for (const auto& m : day_log_) day_log.push_back(m.id);
    Json ratings = Json::array();
    for (const auto& [_, r] : ratings_) ratings.push_back(r);
    return Json{{"persona", persona_},
                {"config", config_},
                {"memory", memory_.to_json()},
                {"schedule", queue_.to_json()},
                {"round", std::move(round)},
                {"current_day", current_day_ ? Json(format_date(*current_day_)) : Json(nullptr)},
                {"day_log", std::move(day_log)},
                {"last_reflection", last_reflection_ ? Json(*last_reflection_) : Json(nullptr)},
                {"ratings", std::move(ratings)},
                {"transcript_length", transcript_.size()},
                {"next_message_id", next_message_id_},
                {"rng_draws", rng_.draws()},
                {"last_seq", journal_->last_seq()}};
}

Json Agent::admin_json() const {
    Json entries = Json::array();
    for (const auto& e : queue_.entries()) entries.push_back(e);
    return Json{{"current_day", current_day_ ? Json(format_date(*current_day_)) : Json(nullptr)},
                {"entries", std::move(entries)},
                {"pending_entries", queue_.pending_count()},
                {"suppression_until", optional_ts(queue_.suppression_until())},
                {"dispatched_today", queue_.dispatched_today()},
                {"daily_cap", queue_.daily_cap()},
                {"short_term_length", memory_.buffer_message_count()},
                {"long_term_count", memory_.long_term().size()},
                {"pending_eviction", memory_.pending_eviction().size()},
                {"last_reflection", last_reflection_ ? Json(*last_reflection_) : Json(nullptr)},
                {"ratings", ratings_.size()},
                {"journal_seq", journal_->last_seq()},
                {"write_halted", write_halted_}};
}

// ---------------------------------------------------------------------------

std::vector<Message> run_until(Agent& agent, Timestamp start, Timestamp end,
                               const std::vector<ScriptedMessage>& script) {
    if (start.seconds % 60 != 0) throw ValidationError("start", "must fall on a whole minute");
    if (end < start) throw ValidationError("end", "must not precede start");
    for (std::size_t i = 0; i < script.size(); ++i) {
        if (script[i].at < start || script[i].at >= end) {
            throw ValidationError("user_messages", "message " + std::to_string(i + 1) +
                                                       " lies outside [start, end)");
        }
        if (i > 0 && script[i].at < script[i - 1].at) {
            throw ValidationError("user_messages",
                                  "message " + std::to_string(i + 1) + " is out of order");
        }
    }
    std::size_t next = 0;
    for (Timestamp t = start; t < end; t = t.plus_minutes(1)) {
        agent.tick(t);
        const Timestamp minute_end = t.plus_minutes(1);
        while (next < script.size() && script[next].at < minute_end) {
            agent.handle_user_message(script[next].text, script[next].at);
            ++next;
        }
    }
    return agent.transcript();
}

}  // namespace kindred
