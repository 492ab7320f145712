#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "kindred/domain.hpp"
#include "kindred/llm.hpp"

namespace kindred {

using Embedder = std::function<EmbeddingVector(std::string_view)>;

inline Embedder embedder_for(Provider& p) {
    return [&p](std::string_view text) { return p.embed(text); };
}

// Text that gets embedded for a pair: "user: ...\nagent: ...". Agent-only
// pairs drop the user line.
std::string pair_text(const MemoryObject& pair);

struct RecordResult {
    std::string pair_id;
    // Pairs that reached long-term storage during this call, oldest first.
    std::vector<MemoryObject> archived;
};

struct RetrievalResult {
    std::vector<MemoryObject> objects;  // most similar first
    bool degraded = false;              // query embedding failed
};

// Two-tier conversation memory. The short-term buffer holds whole pairs and
// never more than `capacity` messages; overflowing pairs are embedded and
// moved to the append-only long-term store. A pair whose embedding fails is
// parked and retried on the next record call.
class Memory {
public:
    static constexpr std::size_t kDefaultCapacity = 20;

    explicit Memory(std::size_t capacity = kDefaultCapacity);

    RecordResult record_pair(const Message& user_msg, const Message& agent_msg,
                             const Embedder& embed);
    // A proactive message that opens a pair with no user side.
    RecordResult record_agent_only(const Message& agent_msg, const Embedder& embed);

    // Buffer contents, oldest first.
    std::vector<Message> context() const;

    // Top-k long-term objects by cosine similarity to the query; equal scores
    // rank the more recently archived object first.
    RetrievalResult retrieve(std::string_view query, std::size_t k, const Embedder& embed) const;

    std::size_t buffer_message_count() const { return buffer_messages_; }
    const std::deque<MemoryObject>& buffer() const { return buffer_; }
    const std::vector<MemoryObject>& long_term() const { return long_term_; }
    const std::vector<MemoryObject>& pending_eviction() const { return pending_; }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t pairs_recorded() const { return next_pair_; }

    // Rebuilds memory from every recorded pair (oldest first, no embeddings)
    // and the persisted long-term objects. The buffer becomes the longest
    // suffix of pairs that fits; older pairs absent from long_term are parked.
    void restore(const std::vector<MemoryObject>& all_pairs, std::vector<MemoryObject> long_term);

    Json to_json() const;

private:
    RecordResult record(MemoryObject pair, const Embedder& embed);
    bool try_archive(MemoryObject& pair, const Embedder& embed, RecordResult& out);

    std::size_t capacity_;
    std::deque<MemoryObject> buffer_;
    std::size_t buffer_messages_ = 0;
    std::vector<MemoryObject> long_term_;
    std::vector<MemoryObject> pending_;
    std::uint64_t next_pair_ = 0;
};

}  // namespace kindred
