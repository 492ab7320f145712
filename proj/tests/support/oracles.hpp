#pragma once

// Reference implementations used to check the library. They are written for
// obviousness, not speed, and share no code with the code under test.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kindred/domain.hpp"

namespace kindred::oracle {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Full scan: score everything, sort by (score desc, archive position desc),
// take k.
inline std::vector<std::string> top_k(const std::vector<MemoryObject>& store,
                                      const std::vector<double>& query, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < store.size(); ++i) all.push_back({dot(query, *store[i].embedding), i});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second > b.second;
    });
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) ids.push_back(store[all[i].second].pair_id);
    return ids;
}

// Short-term buffer by hand: a FIFO of pair sizes. Returns how many of the
// oldest pairs have been pushed out after each pair is recorded.
class PairFifo {
public:
    explicit PairFifo(std::size_t capacity) : capacity_(capacity) {}

    // Records a pair of `size` messages; returns the indices evicted by it.
    std::vector<std::size_t> push(std::size_t size) {
        fifo_.push_back({next_++, size});
        held_ += size;
        std::vector<std::size_t> out;
        while (held_ > capacity_) {
            out.push_back(fifo_.front().first);
            held_ -= fifo_.front().second;
            fifo_.pop_front();
        }
        return out;
    }

    std::size_t held() const { return held_; }
    std::vector<std::size_t> buffered() const {
        std::vector<std::size_t> v;
        for (const auto& [i, _] : fifo_) v.push_back(i);
        return v;
    }

private:
    std::size_t capacity_;
    std::size_t held_ = 0;
    std::size_t next_ = 0;
    std::deque<std::pair<std::size_t, std::size_t>> fifo_;
};

// Fraction of n draws from `draws` falling strictly below p.
template <typename Draw>
double fraction_below(double p, int n, Draw&& draw) {
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += p > draw();
    return static_cast<double>(hits) / n;
}

}  // namespace kindred::oracle
