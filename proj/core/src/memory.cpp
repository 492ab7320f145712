#include "kindred/memory.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "kindred/errors.hpp"

namespace kindred {

std::string pair_text(const MemoryObject& pair) {
    std::string out;
    if (pair.user_message) out = "user: " + pair.user_message->content + "\n";
    out += "agent: " + pair.agent_message.content;
    return out;
}

Memory::Memory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 2) throw ValidationError("capacity", "must hold at least one pair");
}

RecordResult Memory::record_pair(const Message& user_msg, const Message& agent_msg,
                                 const Embedder& embed) {
    if (user_msg.role != Role::user) throw PreconditionViolation("record_pair: first must be user");
    if (agent_msg.role != Role::agent) {
        throw PreconditionViolation("record_pair: second must be agent");
    }
    MemoryObject pair;
    pair.user_message = user_msg;
    pair.agent_message = agent_msg;
    pair.created_at = agent_msg.sent_at;
    return record(std::move(pair), embed);
}

RecordResult Memory::record_agent_only(const Message& agent_msg, const Embedder& embed) {
    if (agent_msg.role != Role::agent) {
        throw PreconditionViolation("record_agent_only: message must be from the agent");
    }
    MemoryObject pair;
    pair.agent_message = agent_msg;
    pair.created_at = agent_msg.sent_at;
    return record(std::move(pair), embed);
}

bool Memory::try_archive(MemoryObject& pair, const Embedder& embed, RecordResult& out) {
    try {
        pair.embedding = embed(pair_text(pair));
    } catch (const EmbeddingFailed& e) {
        spdlog::warn("memory: embedding {} failed, parking: {}", pair.pair_id, e.what());
        return false;
    } catch (const ProviderError& e) {
        spdlog::warn("memory: embedding {} failed, parking: {}", pair.pair_id, e.what());
        return false;
    }
    long_term_.push_back(pair);
    out.archived.push_back(std::move(pair));
    return true;
}

RecordResult Memory::record(MemoryObject pair, const Embedder& embed) {
    RecordResult out;
    pair.pair_id = "p" + std::to_string(++next_pair_);
    out.pair_id = pair.pair_id;

    // Parked pairs are older than anything in the buffer, so they go first.
    std::vector<MemoryObject> still_pending;
    for (auto& p : pending_) {
        if (!try_archive(p, embed, out)) still_pending.push_back(std::move(p));
    }
    pending_ = std::move(still_pending);

    buffer_messages_ += pair.message_count();
    buffer_.push_back(std::move(pair));
    while (buffer_messages_ > capacity_) {
        MemoryObject oldest = std::move(buffer_.front());
        buffer_.pop_front();
        buffer_messages_ -= oldest.message_count();
        if (!pending_.empty() || !try_archive(oldest, embed, out)) {
            pending_.push_back(std::move(oldest));
        }
    }
    return out;
}

std::vector<Message> Memory::context() const {
    std::vector<Message> out;
    out.reserve(buffer_messages_);
    for (const auto& p : buffer_) {
        if (p.user_message) out.push_back(*p.user_message);
        out.push_back(p.agent_message);
    }
    return out;
}

RetrievalResult Memory::retrieve(std::string_view query, std::size_t k,
                                 const Embedder& embed) const {
    if (k == 0) throw PreconditionViolation("retrieve: k must be >= 1");
    RetrievalResult out;
    if (long_term_.empty()) return out;

    EmbeddingVector q;
    try {
        q = embed(query);
    } catch (const std::exception& e) {
        spdlog::warn("memory: query embedding failed, retrieving nothing: {}", e.what());
        out.degraded = true;
        return out;
    }

    struct Scored {
        double score;
        std::size_t index;
    };
    std::vector<Scored> scored;
    scored.reserve(long_term_.size());
    for (std::size_t i = 0; i < long_term_.size(); ++i) {
        scored.push_back({cosine(q, *long_term_[i].embedding), i});
    }
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const Scored& a, const Scored& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.index > b.index;
                      });
    for (std::size_t i = 0; i < n; ++i) out.objects.push_back(long_term_[scored[i].index]);
    return out;
}

void Memory::restore(const std::vector<MemoryObject>& all_pairs,
                     std::vector<MemoryObject> long_term) {
    buffer_.clear();
    pending_.clear();
    buffer_messages_ = 0;
    long_term_ = std::move(long_term);
    next_pair_ = all_pairs.size();

    std::set<std::string> archived;
    for (const auto& o : long_term_) archived.insert(o.pair_id);

    std::size_t first_buffered = all_pairs.size();
    std::size_t count = 0;
    while (first_buffered > 0) {
        const auto& p = all_pairs[first_buffered - 1];
        if (archived.count(p.pair_id) || count + p.message_count() > capacity_) break;
        count += p.message_count();
        --first_buffered;
    }
    for (std::size_t i = 0; i < first_buffered; ++i) {
        if (!archived.count(all_pairs[i].pair_id)) pending_.push_back(all_pairs[i]);
    }
    for (std::size_t i = first_buffered; i < all_pairs.size(); ++i) {
        buffer_.push_back(all_pairs[i]);
        buffer_.back().embedding.reset();
    }
    buffer_messages_ = count;
}

Json Memory::to_json() const {
    Json buffer = Json::array();
    for (const auto& p : buffer_) buffer.push_back(p);
    Json pending = Json::array();
    for (const auto& p : pending_) pending.push_back(p);
    Json lt = Json::array();
    for (const auto& p : long_term_) lt.push_back(p);
    return Json{{"capacity", capacity_},
                {"buffer", std::move(buffer)},
                {"buffer_message_count", buffer_messages_},
                {"pending_eviction", std::move(pending)},
                {"long_term", std::move(lt)},
                {"pairs_recorded", next_pair_}};
}

}  // namespace kindred
