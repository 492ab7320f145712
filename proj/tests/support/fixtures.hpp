#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kindred/domain.hpp"
#include "kindred/llm.hpp"
#include "kindred/memory.hpp"

namespace kindred::test {

Persona persona();

Timestamp ts(std::string_view text);
Message user_msg(MessageId id, std::string text, Timestamp at);
Message agent_msg(MessageId id, std::string text, Timestamp at,
                  Origin origin = Origin::passive_reply);

// Mock embeddings computed directly, with no provider in between.
Embedder hash_embedder(std::size_t dim = MockProvider::kDefaultDim);

// Catch-all rules that keep an agent running with no events: the given day
// plan, a fixed importance, "" from the detector, and canned generations.
// Put scenario-specific rules in front of these.
std::vector<MockRule> quiet_day_rules(std::string schedule_json = "[]",
                                      std::string importance = "1.0");

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view text);

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::filesystem::path data_dir();

}  // namespace kindred::test
