#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kindred/domain.hpp"
#include "kindred/journal.hpp"
#include "kindred/runtime.hpp"

namespace kindred::cli {

// Exit codes shared by the subcommands.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kInputError = 2;

struct SimulationScript {
    std::uint64_t seed = 0;
    Timestamp start;
    Timestamp end;
    std::filesystem::path mock_script;  // resolved against the script's directory
    std::vector<ScriptedMessage> user_messages;
    std::optional<Persona> persona;
    std::optional<AgentConfig> config;
    std::vector<WorldInfo> world;
};

// Parses a simulation script. Errors are ValidationError/ParseError whose
// message carries the offending line or message index.
SimulationScript parse_simulation_script(const std::string& text,
                                         const std::filesystem::path& base_dir);

// Counts taken from a journal, printed by simulate and inspect.
struct JournalSummary {
    std::size_t records = 0;
    std::size_t rounds = 0;
    std::size_t events = 0;
    std::size_t dispatches = 0;
    std::size_t skips = 0;
    std::size_t expired = 0;
    std::size_t reflections = 0;
    std::size_t schedule_inits = 0;
    std::size_t messages = 0;
};

JournalSummary summarize(const std::vector<JournalRecord>& records);

Persona sample_persona();

int cmd_serve(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::filesystem::path& script_path, const std::filesystem::path& out_dir,
                 std::ostream& out, std::ostream& err);
int cmd_inspect(const std::filesystem::path& agent_dir, std::ostream& out, std::ostream& err);

// Full command line, argv[0] included.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kindred::cli
