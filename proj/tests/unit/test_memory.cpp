#include <random>
#include <set>

#include <doctest.h>

#include "fixtures.hpp"
#include "kindred/errors.hpp"
#include "kindred/memory.hpp"
#include "oracles.hpp"

using namespace kindred;

namespace {

struct PairFeed {
    MessageId next_id = 1;
    Timestamp t = test::ts("2024-03-04T09:00");

    std::pair<Message, Message> pair(const std::string& tag) {
        t = t.plus_minutes(1);
        Message u = test::user_msg(next_id++, "u" + tag, t);
        Message a = test::agent_msg(next_id++, "a" + tag, t);
        return {u, a};
    }
};

// Every recorded pair id, from wherever memory currently keeps it.
std::multiset<std::string> all_ids(const Memory& m) {
    std::multiset<std::string> ids;
    for (const auto& o : m.buffer()) ids.insert(o.pair_id);
    for (const auto& o : m.long_term()) ids.insert(o.pair_id);
    for (const auto& o : m.pending_eviction()) ids.insert(o.pair_id);
    return ids;
}

}  // namespace

TEST_SUITE("memory") {
    TEST_CASE("one pair stays in the buffer") {
        Memory m;
        PairFeed f;
        auto [u, a] = f.pair("1");
        const auto r = m.record_pair(u, a, test::hash_embedder());
        CHECK(m.buffer_message_count() == 2);
        CHECK(m.long_term().empty());
        CHECK(r.archived.empty());
        CHECK(r.pair_id == "p1");
    }

    TEST_CASE("the 11th pair pushes the oldest into long-term") {
        Memory m;
        PairFeed f;
        for (int i = 1; i <= 10; ++i) {
            auto [u, a] = f.pair(std::to_string(i));
            m.record_pair(u, a, test::hash_embedder());
        }
        CHECK(m.buffer_message_count() == 20);
        CHECK(m.long_term().empty());
        auto [u, a] = f.pair("11");
        const auto r = m.record_pair(u, a, test::hash_embedder());
        CHECK(m.buffer_message_count() == 20);
        REQUIRE(m.long_term().size() == 1);
        CHECK(m.long_term()[0].user_message->content == "u1");
        REQUIRE(r.archived.size() == 1);
        CHECK(r.archived[0].pair_id == "p1");
        CHECK(*m.long_term()[0].embedding == hash_embedding("user: u1\nagent: a1", MockProvider::kDefaultDim));
    }

    TEST_CASE("15 pairs leave the 5 oldest in long-term, as a FIFO predicts") {
        Memory m;
        PairFeed f;
        oracle::PairFifo fifo(20);
        std::vector<std::size_t> evicted;
        for (int i = 0; i < 15; ++i) {
            auto [u, a] = f.pair(std::to_string(i));
            m.record_pair(u, a, test::hash_embedder());
            for (auto e : fifo.push(2)) evicted.push_back(e);
        }
        REQUIRE(m.long_term().size() == evicted.size());
        CHECK(evicted.size() == 5);
        for (std::size_t i = 0; i < evicted.size(); ++i) {
            CHECK(m.long_term()[i].user_message->content == "u" + std::to_string(evicted[i]));
        }
        const auto buffered = fifo.buffered();
        REQUIRE(m.buffer().size() == buffered.size());
        for (std::size_t i = 0; i < buffered.size(); ++i) {
            CHECK(m.buffer()[i].user_message->content == "u" + std::to_string(buffered[i]));
        }
    }

    TEST_CASE("context is oldest first") {
        Memory m;
        CHECK(m.context().empty());
        PairFeed f;
        auto [u1, a1] = f.pair("1");
        auto [u2, a2] = f.pair("2");
        m.record_pair(u1, a1, test::hash_embedder());
        m.record_pair(u2, a2, test::hash_embedder());
        CHECK(m.context() == std::vector<Message>{u1, a1, u2, a2});
    }

    TEST_CASE("after 11 pairs the context starts at the second user message") {
        Memory m;
        PairFeed f;
        std::vector<Message> all;
        for (int i = 1; i <= 11; ++i) {
            auto [u, a] = f.pair(std::to_string(i));
            m.record_pair(u, a, test::hash_embedder());
            all.push_back(u);
            all.push_back(a);
        }
        const auto ctx = m.context();
        CHECK(ctx.size() == 20);
        CHECK(ctx == std::vector<Message>(all.end() - 20, all.end()));
        CHECK(ctx.front().content == "u2");
    }

    TEST_CASE("agent-only pairs take one slot") {
        Memory m(4);
        PairFeed f;
        const Timestamp t = test::ts("2024-03-04T08:00");
        m.record_agent_only(test::agent_msg(100, "morning!", t, Origin::proactive), test::hash_embedder());
        auto [u, a] = f.pair("1");
        m.record_pair(u, a, test::hash_embedder());
        CHECK(m.buffer_message_count() == 3);
        auto [u2, a2] = f.pair("2");
        m.record_pair(u2, a2, test::hash_embedder());
        CHECK(m.buffer_message_count() == 4);
        REQUIRE(m.long_term().size() == 1);
        CHECK_FALSE(m.long_term()[0].user_message.has_value());
        CHECK(pair_text(m.long_term()[0]) == "agent: morning!");
    }

    TEST_CASE("retrieval on an empty or singleton store") {
        Memory m(2);
        CHECK(m.retrieve("anything", 3, test::hash_embedder()).objects.empty());
        PairFeed f;
        auto [u1, a1] = f.pair("1");
        auto [u2, a2] = f.pair("2");
        m.record_pair(u1, a1, test::hash_embedder());
        m.record_pair(u2, a2, test::hash_embedder());
        REQUIRE(m.long_term().size() == 1);
        const auto r = m.retrieve("unrelated query", 3, test::hash_embedder());
        REQUIRE(r.objects.size() == 1);
        CHECK(r.objects[0].pair_id == "p1");
        CHECK_THROWS_AS(m.retrieve("q", 0, test::hash_embedder()), PreconditionViolation);
    }

    TEST_CASE("top-3 of 50 objects equals a brute-force scan") {
        Memory m(2);
        PairFeed f;
        for (int i = 0; i < 51; ++i) {
            auto [u, a] = f.pair("topic " + std::to_string(i % 37));
            m.record_pair(u, a, test::hash_embedder());
        }
        REQUIRE(m.long_term().size() == 50);
        for (const char* q : {"utopic 3", "exam stress", "atopic 12", "yoga"}) {
            const auto got = m.retrieve(q, 3, test::hash_embedder());
            std::vector<std::string> ids;
            for (const auto& o : got.objects) ids.push_back(o.pair_id);
            CHECK(ids == oracle::top_k(m.long_term(), hash_embedding(q, MockProvider::kDefaultDim), 3));
        }
    }

    TEST_CASE("identical objects rank the newer one first") {
        Memory m(2);
        const Timestamp t = test::ts("2024-03-04T08:00");
        for (MessageId i = 1; i <= 4; ++i) {
            m.record_pair(test::user_msg(2 * i, "same", t), test::agent_msg(2 * i + 1, "same", t),
                          test::hash_embedder());
        }
        REQUIRE(m.long_term().size() == 3);
        const auto r = m.retrieve("user: same\nagent: same", 2, test::hash_embedder());
        REQUIRE(r.objects.size() == 2);
        CHECK(r.objects[0].pair_id == "p3");
        CHECK(r.objects[1].pair_id == "p2");
    }

    TEST_CASE("a failed query embedding degrades retrieval") {
        Memory m(2);
        PairFeed f;
        for (int i = 0; i < 3; ++i) {
            auto [u, a] = f.pair(std::to_string(i));
            m.record_pair(u, a, test::hash_embedder());
        }
        const Embedder broken = [](std::string_view) -> EmbeddingVector { throw EmbeddingFailed("down"); };
        const auto r = m.retrieve("q", 3, broken);
        CHECK(r.degraded);
        CHECK(r.objects.empty());
    }

    TEST_CASE("a pair whose embedding fails is parked and retried") {
        Memory m(2);
        MockProvider mock;
        mock.fail_embeddings_containing("poison");
        const Embedder embed = embedder_for(mock);
        PairFeed f;
        auto [u1, a1] = f.pair("poison");
        auto [u2, a2] = f.pair("2");
        m.record_pair(u1, a1, embed);
        m.record_pair(u2, a2, embed);
        CHECK(m.long_term().empty());
        REQUIRE(m.pending_eviction().size() == 1);
        CHECK(m.buffer_message_count() == 2);

        // Later pairs queue up behind the parked one so archive order stays FIFO.
        auto [u3, a3] = f.pair("3");
        m.record_pair(u3, a3, embed);
        CHECK(m.pending_eviction().size() == 2);

        // Embeddings work again: parked pairs drain first.
        auto [u4, a4] = f.pair("4");
        MockProvider fine;
        const auto r = m.record_pair(u4, a4, embedder_for(fine));
        REQUIRE(r.archived.size() == 3);
        CHECK(r.archived[0].pair_id == "p1");
        CHECK(r.archived[1].pair_id == "p2");
        CHECK(r.archived[2].pair_id == "p3");
        CHECK(m.pending_eviction().empty());
        CHECK(all_ids(m).size() == 4);
    }

    TEST_CASE("random operation sequences keep the cap and lose nothing") {
        std::mt19937_64 gen(11);
        for (int run = 0; run < 20; ++run) {
            Memory m;
            MockProvider mock;
            mock.fail_embeddings_containing("#flaky");
            PairFeed f;
            std::size_t recorded = 0;
            for (int op = 0; op < 300; ++op) {
                const bool flaky = gen() % 10 == 0;
                const std::string tag = std::to_string(op) + (flaky ? "#flaky" : "");
                if (gen() % 4 == 0) {
                    f.t = f.t.plus_minutes(1);
                    m.record_agent_only(test::agent_msg(f.next_id++, "p" + tag, f.t, Origin::proactive),
                                        embedder_for(mock));
                } else {
                    auto [u, a] = f.pair(tag);
                    m.record_pair(u, a, embedder_for(mock));
                }
                ++recorded;
                REQUIRE(m.buffer_message_count() <= 20);
                REQUIRE(m.context().size() == m.buffer_message_count());
                const auto ids = all_ids(m);
                REQUIRE(ids.size() == recorded);
                REQUIRE(std::set<std::string>(ids.begin(), ids.end()).size() == recorded);
            }
            for (const auto& o : m.long_term()) CHECK(o.embedding.has_value());
        }
    }

    TEST_CASE("restore rebuilds the same buffer, long-term and parked pairs") {
        Memory live;
        MockProvider mock;
        mock.fail_embeddings_containing("#7");
        PairFeed f;
        std::vector<MemoryObject> all;
        for (int i = 0; i < 30; ++i) {
            auto [u, a] = f.pair("#" + std::to_string(i % 9));
            const auto r = live.record_pair(u, a, embedder_for(mock));
            all.push_back(MemoryObject{r.pair_id, u, a, std::nullopt, a.sent_at});
        }
        Memory rebuilt;
        rebuilt.restore(all, live.long_term());
        CHECK(rebuilt.to_json() == live.to_json());
    }
}
