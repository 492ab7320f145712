#include <random>
#include <string>

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "kindred/memory.hpp"
#include "kindred/runtime.hpp"
#include "kindred/scheduler.hpp"

using namespace kindred;

namespace {

Message msg(MessageId id, Role role, std::string text) {
    return Message{id, role, std::move(text), Timestamp{1709546400},
                   role == Role::user ? Origin::user_initiated : Origin::passive_reply};
}

Persona persona() {
    Persona p;
    p.name = "Lin";
    p.age = 21;
    p.gender = "female";
    p.personality = "calm";
    p.occupation_or_major = "student";
    p.background = "city";
    p.hobbies = "yoga";
    p.language_style = "short";
    p.relationship_with_user = "friend";
    p.example_dialogues = {{"a", "b"}, {"c", "d"}, {"e", "f"}, {"g", "h"}};
    return p;
}

// Long-term store of the given size, embedded at dimension 256.
Memory filled_memory(std::size_t objects, const Embedder& embed) {
    Memory m;
    std::mt19937_64 gen(7);
    MessageId id = 1;
    while (m.long_term().size() < objects) {
        const std::string text = "note " + std::to_string(gen() % 100000);
        m.record_pair(msg(id, Role::user, text), msg(id + 1, Role::agent, "ok"), embed);
        id += 2;
    }
    return m;
}

}  // namespace

static void BM_HashEmbedding(benchmark::State& state) {
    const std::string text = "I am nervous about my presentation tomorrow.";
    for (auto _ : state) benchmark::DoNotOptimize(hash_embedding(text, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_HashEmbedding)->Arg(256)->Arg(1536);

static void BM_Retrieve(benchmark::State& state) {
    const Embedder embed = [](std::string_view t) { return hash_embedding(t, 256); };
    const Memory m = filled_memory(static_cast<std::size_t>(state.range(0)), embed);
    for (auto _ : state) benchmark::DoNotOptimize(m.retrieve("presentation nerves", 3, embed));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Retrieve)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_GateEvaluate(benchmark::State& state) {
    SeededUniform rng(1);
    const Timestamp at{1709546400 + 9 * 3600};
    for (auto _ : state) {
        ScheduleQueue q;
        q.enqueue(TimeOfDay::hm(9, 0), "check in", 0.6, EntrySource::daily_init);
        benchmark::DoNotOptimize(q.on_tick(at, rng));
    }
}
BENCHMARK(BM_GateEvaluate);

// One idle simulated day: 1440 ticks with a four-entry plan.
static void BM_IdleDay(benchmark::State& state) {
    spdlog::set_level(spdlog::level::err);
    const std::string plan =
        R"([{"Timing":"08:00","Content":"a"},{"Timing":"12:00","Content":"b"},)"
        R"({"Timing":"17:00","Content":"c"},{"Timing":"21:00","Content":"d"}])";
    const Timestamp start{1709510400};
    for (auto _ : state) {
        MockProvider mock({{StageTag::schedule_init, std::nullopt, plan, false, std::nullopt},
                           {StageTag::importance, std::nullopt, "0.7", false, std::nullopt},
                           {StageTag::strategy_select, std::nullopt, "(\"Adopted Strategy\": \"Inquiring\")", false,
                            std::nullopt},
                           {StageTag::proactive_msg, std::nullopt, "hey, how's it going?", false, std::nullopt}});
        FixedWorldInfo world;
        Agent agent(persona(), {}, mock, world);
        run_until(agent, start, start.plus_minutes(1440));
        benchmark::DoNotOptimize(agent.transcript().size());
    }
}
BENCHMARK(BM_IdleDay)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
