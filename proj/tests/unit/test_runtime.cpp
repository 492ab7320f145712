#include <algorithm>

#include <doctest.h>

#include "fixtures.hpp"
#include "kindred/errors.hpp"
#include "kindred/runtime.hpp"

using namespace kindred;
using namespace std::chrono_literals;

namespace {

struct Rig {
    MockProvider mock;
    FixedWorldInfo world;
    std::unique_ptr<Agent> agent;

    explicit Rig(std::vector<MockRule> rules, AgentConfig config = {})
        : mock(std::move(rules)) {
        agent = std::make_unique<Agent>(test::persona(), config, mock, world);
    }

    std::vector<RecordKind> kinds() const {
        std::vector<RecordKind> out;
        for (const auto& r : agent->journal().records()) out.push_back(r.kind);
        return out;
    }
    std::size_t count(RecordKind k) const {
        const auto ks = kinds();
        return static_cast<std::size_t>(std::count(ks.begin(), ks.end(), k));
    }
    std::vector<JournalRecord> of(RecordKind k) const {
        std::vector<JournalRecord> out;
        for (const auto& r : agent->journal().records()) {
            if (r.kind == k) out.push_back(r);
        }
        return out;
    }
};

std::vector<MockRule> with(std::vector<MockRule> front, std::vector<MockRule> back) {
    front.insert(front.end(), back.begin(), back.end());
    return front;
}

MockRule rule(StageTag tag, std::string response, std::optional<std::string> contains = std::nullopt) {
    return MockRule{tag, std::move(contains), std::move(response), false, std::nullopt};
}

std::string plan(const std::vector<std::string>& timings) {
    Json arr = Json::array();
    for (const auto& t : timings) arr.push_back({{"Timing", t}, {"Content", "check in at " + t}});
    return arr.dump();
}

// Journals a fixed number of records, then fails every write.
class FailingJournal final : public Journal {
public:
    explicit FailingJournal(int ok) : ok_(ok) {}

protected:
    void write(const JournalRecord&) override {
        if (ok_-- <= 0) throw IoError("disk full");
    }

private:
    int ok_;
};

const Timestamp kDay1 = test::ts("2024-03-04T00:00");

}  // namespace

TEST_SUITE("runtime") {
    TEST_CASE("virtual clock never goes backwards") {
        VirtualClock c(test::ts("2024-03-04T10:00"));
        c.advance(90s);
        CHECK(c.now() == test::ts("2024-03-04T10:01:30"));
        CHECK_THROWS_AS(c.set(test::ts("2024-03-04T10:00")), PreconditionViolation);
    }

    TEST_CASE("system clock is monotone and shifted by the offset") {
        SystemClock utc(0);
        SystemClock plus2(120);
        const auto a = utc.now();
        const auto b = plus2.now();
        CHECK(std::abs((b.seconds - a.seconds) - 7200) <= 2);
        CHECK(utc.now() >= a);
        CHECK_THROWS_AS(SystemClock(0, 0.5), ValidationError);
    }

    TEST_CASE("agent config JSON") {
        AgentConfig c;
        c.daily_cap = 3;
        c.suppression_window = 60min;
        const Json j = c;
        CHECK(j["suppression_window_minutes"] == 60);
        CHECK(j.get<AgentConfig>() == c);
        Json bad = j;
        bad["quiet_hours"] = true;
        try {
            (void)bad.get<AgentConfig>();
            FAIL("unknown key accepted");
        } catch (const ValidationError& e) {
            CHECK(e.field() == "quiet_hours");
        }
        c.retrieval_k = 0;
        CHECK_THROWS_AS(validate_agent_config(c), ValidationError);
    }

    TEST_CASE("first message of the day opens the day and a round") {
        Rig rig(test::quiet_day_rules());
        const auto r = rig.agent->handle_user_message("I am nervous about my presentation tomorrow.",
                                                      test::ts("2024-03-04T09:30"));
        CHECK_FALSE(r.degraded);
        CHECK(r.reply.content == "I hear you. Tell me more?");
        CHECK(r.reply.origin == Origin::passive_reply);
        CHECK(r.user_message.id < r.reply.id);
        CHECK(rig.kinds() == std::vector<RecordKind>{RecordKind::reflection_done, RecordKind::day_rolled_over,
                                                     RecordKind::schedule_initialized, RecordKind::user_msg,
                                                     RecordKind::agent_msg});
        CHECK(rig.agent->current_day() == parse_date("2024-03-04"));
        CHECK(rig.agent->state_json()["round"]["messages"].size() == 2);
        // The first day has nothing to reflect on.
        CHECK(rig.mock.call_count(StageTag::reflection) == 0);
        CHECK_FALSE(rig.agent->last_reflection());
        CHECK(rig.agent->memory().buffer_message_count() == 2);
    }

    TEST_CASE("empty messages are rejected before anything is journaled") {
        Rig rig(test::quiet_day_rules());
        try {
            rig.agent->handle_user_message("  \n", test::ts("2024-03-04T09:30"));
            FAIL("accepted empty text");
        } catch (const ValidationError& e) {
            CHECK(e.field() == "content");
        }
        CHECK(rig.agent->journal().records().empty());
    }

    TEST_CASE("a passive reply costs two completions and one query embedding") {
        AgentConfig cfg;
        cfg.short_term_capacity = 2;
        Rig rig(test::quiet_day_rules(), cfg);
        rig.agent->handle_user_message("first", test::ts("2024-03-04T09:30"));
        rig.agent->handle_user_message("second", test::ts("2024-03-04T09:31"));
        REQUIRE(rig.agent->memory().long_term().size() == 1);
        const auto calls = rig.mock.total_calls();
        const auto embeds = rig.mock.embed_count();
        rig.agent->handle_user_message("third", test::ts("2024-03-04T09:32"));
        CHECK(rig.mock.total_calls() - calls == 2);
        // One for the query, one for the pair pushed out of the buffer.
        CHECK(rig.mock.embed_count() - embeds == 2);
        CHECK(rig.mock.calls().back().full_prompt().find("user: first") != std::string::npos);
    }

    TEST_CASE("two messages a minute apart share one round") {
        Rig rig(test::quiet_day_rules());
        rig.agent->handle_user_message("hey", test::ts("2024-03-04T10:00"));
        rig.agent->handle_user_message("you there?", test::ts("2024-03-04T10:01"));
        rig.agent->tick(test::ts("2024-03-04T10:05"));
        CHECK(rig.count(RecordKind::round_closed) == 0);
        rig.agent->tick(test::ts("2024-03-04T10:06"));
        const auto closed = rig.of(RecordKind::round_closed);
        REQUIRE(closed.size() == 1);
        CHECK(closed[0].payload["message_ids"].size() == 4);
        CHECK(rig.mock.call_count(StageTag::detector) == 1);
    }

    TEST_CASE("round closes at exactly five idle minutes") {
        Rig rig(test::quiet_day_rules());
        rig.agent->handle_user_message("hey", test::ts("2024-03-04T10:00:01"));
        rig.agent->tick(test::ts("2024-03-04T10:05:00"));
        CHECK(rig.mock.call_count(StageTag::detector) == 0);
        rig.agent->tick(test::ts("2024-03-04T10:05:01"));
        CHECK(rig.mock.call_count(StageTag::detector) == 1);
        rig.agent->tick(test::ts("2024-03-04T10:30:00"));
        CHECK(rig.mock.call_count(StageTag::detector) == 1);
    }

    TEST_CASE("a detected event is queued for later that day") {
        Rig rig(with({rule(StageTag::detector, R"({"Timing": "20:30", "Content": "The user feels uncomfortable due to the cold."})")},
                     test::quiet_day_rules()));
        rig.agent->handle_user_message("I feel somewhat tired, perhaps I have caught a cold.",
                                       test::ts("2024-03-04T16:20"));
        rig.agent->tick(test::ts("2024-03-04T16:25"));
        REQUIRE(rig.count(RecordKind::event_detected) == 1);
        const auto pending = rig.agent->schedule().pending_in_order();
        REQUIRE(pending.size() == 1);
        CHECK(pending[0].timing == TimeOfDay::hm(20, 30));
        CHECK(pending[0].source == EntrySource::event_detector);
        CHECK(pending[0].importance == 1.0);
    }

    TEST_CASE("midnight runs reflection then the day plan, once") {
        Rig rig(test::quiet_day_rules(plan({"08:00", "03:00", "21:00"})));
        rig.agent->handle_user_message("long day", test::ts("2024-03-04T22:00"));
        rig.agent->tick(test::ts("2024-03-04T23:59"));
        const auto before = rig.agent->journal().last_seq();
        rig.agent->tick(test::ts("2024-03-05T00:00"));
        rig.agent->tick(test::ts("2024-03-05T00:01"));
        CHECK(rig.mock.call_count(StageTag::reflection) == 1);
        CHECK(rig.mock.call_count(StageTag::schedule_init) == 2);

        std::vector<RecordKind> midnight;
        for (const auto& r : rig.agent->journal().after(before)) midnight.push_back(r.kind);
        // The day was first seen at 22:00, so its plan kept nothing to expire.
        CHECK(midnight == std::vector<RecordKind>{RecordKind::reflection_done,
                                                  RecordKind::day_rolled_over, RecordKind::entry_enqueued,
                                                  RecordKind::entry_enqueued, RecordKind::schedule_initialized});
        const auto refl = rig.of(RecordKind::reflection_done).back();
        CHECK(refl.payload["consumed"] == Json::array({1, 2}));
        REQUIRE(rig.agent->last_reflection());
        CHECK(rig.agent->last_reflection()->for_day == parse_date("2024-03-05"));
        CHECK(rig.agent->schedule().pending_count() == 2);
    }

    TEST_CASE("a due certain entry sends exactly one message and suppresses") {
        Rig rig(test::quiet_day_rules(plan({"09:00", "09:00"})));
        rig.agent->tick(test::ts("2024-03-04T08:59"));
        CHECK(rig.agent->tick(test::ts("2024-03-04T08:59:30")).empty());
        const auto sent = rig.agent->tick(test::ts("2024-03-04T09:00"));
        REQUIRE(sent.size() == 1);
        CHECK(sent[0].origin == Origin::proactive);
        CHECK(sent[0].content == "Hey, how is your day going?");
        CHECK(rig.agent->schedule().suppression_until() == test::ts("2024-03-04T12:00"));
        CHECK(rig.agent->tick(test::ts("2024-03-04T09:01")).empty());
        CHECK(rig.agent->schedule().pending_count() == 1);
        CHECK(rig.count(RecordKind::suppression_set) == 1);
        const auto dispatched = rig.of(RecordKind::entry_dispatched);
        REQUIRE(dispatched.size() == 1);
        CHECK(dispatched[0].payload["strategies"] == Json::array({"inquiring"}));
        // The unanswered message sits in memory as an agent-only pair.
        REQUIRE(rig.agent->memory().buffer().size() == 1);
        CHECK_FALSE(rig.agent->memory().buffer()[0].user_message.has_value());
    }

    TEST_CASE("a user message during suppression clears it before the next tick") {
        Rig rig(test::quiet_day_rules(plan({"09:00", "09:30"})));
        rig.agent->tick(test::ts("2024-03-04T09:00"));
        REQUIRE(rig.agent->schedule().suppression_until());
        rig.agent->handle_user_message("thanks, doing ok", test::ts("2024-03-04T09:10"));
        CHECK_FALSE(rig.agent->schedule().suppression_until());
        CHECK(rig.count(RecordKind::suppression_cleared) == 1);
        CHECK(rig.agent->tick(test::ts("2024-03-04T09:30")).size() == 1);
    }

    TEST_CASE("a failed proactive generation skips the entry without suppressing") {
        Rig rig(with({MockRule{StageTag::proactive_msg, std::nullopt, "", false, std::string("status:503")}},
                     test::quiet_day_rules(plan({"09:00", "09:00"}))));
        CHECK(rig.agent->tick(test::ts("2024-03-04T09:00")).empty());
        const auto skipped = rig.of(RecordKind::entry_skipped);
        REQUIRE(skipped.size() == 1);
        CHECK(skipped[0].payload["outcome"] == "skipped_failed");
        CHECK_FALSE(rig.agent->schedule().suppression_until());
        CHECK(rig.agent->transcript().empty());
    }

    TEST_CASE("reply generation falls back after two failures") {
        Rig rig(with({MockRule{StageTag::passive_reply, std::nullopt, "", false, std::string("timeout")}},
                     test::quiet_day_rules()));
        const auto r = rig.agent->handle_user_message("hello?", test::ts("2024-03-04T09:00"));
        CHECK(r.degraded);
        CHECK(r.reply.content == kFallbackReply);
        CHECK(rig.mock.call_count(StageTag::passive_reply) == 2);
        CHECK(rig.of(RecordKind::agent_msg).back().payload["degraded"] == true);
    }

    TEST_CASE("one dispatch per tick even with cap headroom and no suppression") {
        AgentConfig cfg;
        cfg.suppression_window = 0min;
        Rig rig(test::quiet_day_rules(plan({"09:00", "09:00", "09:00"})), cfg);
        CHECK(rig.agent->tick(test::ts("2024-03-04T09:00")).size() == 1);
        CHECK(rig.agent->tick(test::ts("2024-03-04T09:01")).size() == 1);
        CHECK(rig.agent->tick(test::ts("2024-03-04T09:02")).size() == 1);
        CHECK(rig.agent->tick(test::ts("2024-03-04T09:03")).empty());
    }

    TEST_CASE("ratings") {
        Rig rig(test::quiet_day_rules(plan({"09:00"})));
        const auto sent = rig.agent->tick(test::ts("2024-03-04T09:00"));
        REQUIRE(sent.size() == 1);
        const auto reply = rig.agent->handle_user_message("hi", test::ts("2024-03-04T09:05"));
        const Timestamp t = test::ts("2024-03-04T09:06");

        CHECK_THROWS_AS(rig.agent->rate(999, 5, t), NotFoundError);
        try {
            rig.agent->rate(reply.reply.id, 5, t);
            FAIL("passive reply rated");
        } catch (const ValidationError& e) {
            CHECK(e.field() == "message_id");
        }
        for (int bad : {0, 8}) {
            try {
                rig.agent->rate(sent[0].id, bad, t);
                FAIL("out-of-range score accepted");
            } catch (const ValidationError& e) {
                CHECK(e.field() == "score");
            }
        }
        rig.agent->rate(sent[0].id, 6, t);
        rig.agent->rate(sent[0].id, 3, t.plus_minutes(1));
        REQUIRE(rig.agent->ratings().size() == 1);
        CHECK(rig.agent->ratings().at(sent[0].id).score == 3);
        CHECK(rig.count(RecordKind::message_rated) == 2);
    }

    TEST_CASE("three quiet days: three reflections, three plans, same log twice") {
        auto run = [] {
            Rig rig(test::quiet_day_rules(plan({"08:00", "13:00", "19:00"}), "0.5"));
            run_until(*rig.agent, kDay1, kDay1.plus_minutes(3 * 1440));
            return std::make_pair(rig.count(RecordKind::reflection_done), rig.count(RecordKind::schedule_initialized));
        };
        const auto [reflections, inits] = run();
        CHECK(reflections == 3);
        CHECK(inits == 3);

        auto journal_text = [] {
            Rig rig(test::quiet_day_rules(plan({"08:00", "13:00", "19:00"}), "0.5"));
            run_until(*rig.agent, kDay1, kDay1.plus_minutes(3 * 1440),
                      {{test::ts("2024-03-04T08:05"), "morning"}, {test::ts("2024-03-05T20:00"), "evening"}});
            std::string out;
            for (const auto& r : rig.agent->journal().records()) out += serialize_record(r) + "\n";
            for (const auto& m : rig.agent->transcript()) out += Json(m).dump() + "\n";
            return out;
        };
        CHECK(journal_text() == journal_text());
    }

    TEST_CASE("replies ten minutes after each message keep dispatch on time") {
        const std::vector<std::string> timings = {"08:00", "10:00", "12:00", "14:00"};
        std::vector<ScriptedMessage> script;
        for (int day = 0; day < 2; ++day) {
            for (const auto& t : timings) {
                const Timestamp sent =
                    make_timestamp(CalendarDate{date_of(kDay1).days_since_epoch + day}, parse_time_of_day(t));
                script.push_back({sent.plus_minutes(10), "got it, thanks"});
            }
        }
        Rig rig(test::quiet_day_rules(plan(timings)));
        run_until(*rig.agent, kDay1, kDay1.plus_minutes(2 * 1440), script);
        const auto dispatched = rig.of(RecordKind::entry_dispatched);
        REQUIRE(dispatched.size() == 8);
        for (std::size_t i = 0; i < dispatched.size(); ++i) {
            CHECK(format_time_of_day(time_of_day(dispatched[i].at)) == timings[i % 4]);
        }
        CHECK(rig.count(RecordKind::entry_expired) == 0);
    }

    TEST_CASE("without replies, suppression delays the next entries") {
        Rig rig(test::quiet_day_rules(plan({"08:00", "10:00", "12:00", "14:00"})));
        run_until(*rig.agent, kDay1, kDay1.plus_minutes(1440));
        const auto dispatched = rig.of(RecordKind::entry_dispatched);
        REQUIRE(dispatched.size() == 4);
        // Each message holds the next entry for three hours.
        CHECK(dispatched[0].at == test::ts("2024-03-04T08:00"));
        CHECK(dispatched[1].at == test::ts("2024-03-04T11:00"));
        CHECK(dispatched[2].at == test::ts("2024-03-04T14:00"));
        CHECK(dispatched[3].at == test::ts("2024-03-04T17:00"));
    }

    TEST_CASE("the daily cap holds within a day and resets the next") {
        AgentConfig cfg;
        cfg.suppression_window = 0min;
        std::vector<std::string> twenty(20, "09:00");
        Rig rig(test::quiet_day_rules(plan(twenty)), cfg);
        run_until(*rig.agent, kDay1, kDay1.plus_minutes(1440 + 600));
        const auto dispatched = rig.of(RecordKind::entry_dispatched);
        REQUIRE(dispatched.size() == 10);
        CHECK(std::count_if(dispatched.begin(), dispatched.end(), [](const auto& r) { return date_of(r.at) == date_of(kDay1); }) == 5);
        std::size_t cap_skips = 0;
        for (const auto& r : rig.of(RecordKind::entry_skipped)) cap_skips += r.payload["outcome"] == "skipped_cap";
        CHECK(cap_skips == 30);
    }

    TEST_CASE("replay rebuilds the live state") {
        AgentConfig cfg;
        cfg.short_term_capacity = 6;
        cfg.seed = 99;
        const auto rules =
            with({rule(StageTag::detector, R"({"Timing": "21:00", "Content": "The user is worried about the exam."})",
                       std::string("exam tomorrow"))},
                 test::quiet_day_rules(plan({"08:00", "09:00", "13:00", "19:00"}), "0.6"));
        Rig rig(rules, cfg);
        std::vector<ScriptedMessage> script;
        for (int i = 0; i < 12; ++i) {
            script.push_back({kDay1.plus_minutes(8 * 60 + 37 * i), i == 3 ? "exam tomorrow, help" : "msg " + std::to_string(i)});
        }
        const Timestamp mid = kDay1.plus_minutes(1440 + 12 * 60);
        run_until(*rig.agent, kDay1, mid, script);
        const auto& transcript = rig.agent->transcript();
        const auto proactive = std::find_if(transcript.begin(), transcript.end(),
                                            [](const Message& m) { return m.origin == Origin::proactive; });
        REQUIRE(proactive != transcript.end());
        rig.agent->rate(proactive->id, 4, mid);
        REQUIRE(rig.agent->memory().long_term().size() > 0);
        REQUIRE(rig.count(RecordKind::event_detected) == 1);

        MockProvider idle;
        auto rebuilt = Agent::replay(test::persona(), cfg, idle, rig.world,
                                     std::make_unique<MemoryJournal>(rig.agent->journal().records()),
                                     rig.agent->memory().long_term());
        CHECK(rebuilt->state_json() == rig.agent->state_json());
        CHECK(idle.total_calls() == 0);

        // A replayed agent carries on exactly like the live one, gate draws included.
        MockProvider fresh(rules);
        auto resumed = Agent::replay(test::persona(), cfg, fresh, rig.world,
                                     std::make_unique<MemoryJournal>(rig.agent->journal().records()),
                                     rig.agent->memory().long_term());
        const auto seq = rig.agent->journal().last_seq();
        const Timestamp end = kDay1.plus_minutes(3 * 1440);
        run_until(*rig.agent, mid, end, {{mid.plus_minutes(90), "back again"}});
        run_until(*resumed, mid, end, {{mid.plus_minutes(90), "back again"}});
        CHECK(resumed->state_json() == rig.agent->state_json());
        CHECK(resumed->journal().after(seq) == rig.agent->journal().after(seq));
    }

    TEST_CASE("a failing journal halts writes but keeps the agent running") {
        MockProvider mock(test::quiet_day_rules());
        FixedWorldInfo world;
        Agent agent(test::persona(), {}, mock, world, std::make_unique<FailingJournal>(3));
        agent.handle_user_message("hello", test::ts("2024-03-04T09:00"));
        CHECK(agent.write_halted());
        CHECK(agent.journal().last_seq() == 3);
        CHECK(agent.transcript().size() == 2);
        CHECK(agent.admin_json()["write_halted"] == true);
    }

    TEST_CASE("run_until validates its script") {
        Rig rig(test::quiet_day_rules());
        CHECK_THROWS_AS(run_until(*rig.agent, kDay1.plus_seconds(30), kDay1.plus_minutes(5)), ValidationError);
        CHECK_THROWS_AS(run_until(*rig.agent, kDay1, kDay1.plus_minutes(5), {{kDay1.plus_minutes(5), "late"}}), ValidationError);
        CHECK_THROWS_AS(run_until(*rig.agent, kDay1, kDay1.plus_minutes(5),
                                  {{kDay1.plus_minutes(2), "b"}, {kDay1.plus_minutes(1), "a"}}),
                        ValidationError);
    }
}
