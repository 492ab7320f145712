#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "kindred/domain.hpp"
#include "kindred/journal.hpp"
#include "kindred/runtime.hpp"
#include "kindred/scheduler.hpp"

namespace kindred {

// File names inside one agent directory.
inline constexpr const char* kPersonaFile = "persona.json";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kJournalFile = "journal.jsonl";
inline constexpr const char* kLongTermFile = "longterm.jsonl";

// Appends archived memory objects to longterm.jsonl, one per line, synced
// after every object.
class LongTermWriter {
public:
    explicit LongTermWriter(const std::filesystem::path& path);
    ~LongTermWriter();
    LongTermWriter(const LongTermWriter&) = delete;
    LongTermWriter& operator=(const LongTermWriter&) = delete;

    void append(const MemoryObject& o);

private:
    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
};

// Reads longterm.jsonl. A torn final line is dropped (and cut from the file
// when `repair` is set); any other bad line throws CorruptJournal with its
// line number. A missing file is empty.
std::vector<MemoryObject> load_long_term(const std::filesystem::path& path, bool repair = true);

void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

// An agent opened from its directory together with the objects it borrows.
// Members are destroyed bottom-up, so the agent goes first.
struct AgentHandle {
    std::filesystem::path dir;
    std::unique_ptr<FixedWorldInfo> world;
    std::unique_ptr<LongTermWriter> long_term;
    std::unique_ptr<Agent> agent;
};

// Opens an agent directory, creating it when needed. persona.json and
// config.json are written from the arguments if absent; existing files win.
// A non-empty journal is replayed, otherwise the agent starts fresh.
AgentHandle open_agent(const std::filesystem::path& dir, Provider& provider,
                       const std::optional<Persona>& persona = std::nullopt,
                       const std::optional<AgentConfig>& config = std::nullopt,
                       const std::vector<WorldInfo>& world_overrides = {});

}  // namespace kindred
