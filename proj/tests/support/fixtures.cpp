#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

namespace kindred::test {

namespace fs = std::filesystem;

namespace {

// Degraded paths log warnings on purpose; keep test output readable.
[[maybe_unused]] const bool kQuiet = [] {
    spdlog::set_level(spdlog::level::err);
    return true;
}();

}  // namespace

Persona persona() {
    Persona p;
    p.name = "Lin";
    p.age = 21;
    p.gender = "female";
    p.personality = "gentle and patient";
    p.occupation_or_major = "computer science undergraduate";
    p.background = "lives in the campus dorm, first in the family to attend university";
    p.hobbies = "yoga, guitar, science fiction";
    p.language_style = "plain and friendly, short replies";
    p.relationship_with_user = "classmate and close friend";
    p.example_dialogues = {
        {"I failed the quiz.", "Oh no, that stings. Want to look at it together tonight?"},
        {"I'm so tired today.", "Long day? Grab some tea and rest a little."},
        {"Guess what, I got the internship!", "No way, congrats! You earned it."},
        {"I miss home.", "That's hard. What do you miss most?"},
    };
    return p;
}

Timestamp ts(std::string_view text) { return parse_timestamp(text); }

Message user_msg(MessageId id, std::string text, Timestamp at) {
    return Message{id, Role::user, std::move(text), at, Origin::user_initiated};
}

Message agent_msg(MessageId id, std::string text, Timestamp at, Origin origin) {
    return Message{id, Role::agent, std::move(text), at, origin};
}

Embedder hash_embedder(std::size_t dim) {
    return [dim](std::string_view text) { return hash_embedding(text, dim); };
}

std::vector<MockRule> quiet_day_rules(std::string schedule_json, std::string importance) {
    std::vector<MockRule> rules;
    rules.push_back({StageTag::reflection, std::nullopt,
                     "1. none stated\n2. none stated\n3. none stated", false, std::nullopt});
    rules.push_back({StageTag::schedule_init, std::nullopt, std::move(schedule_json), false,
                     std::nullopt});
    rules.push_back({StageTag::importance, std::nullopt, std::move(importance), false,
                     std::nullopt});
    rules.push_back({StageTag::detector, std::nullopt, "\"\"", false, std::nullopt});
    rules.push_back({StageTag::strategy_select, std::nullopt,
                     R"(("Adopted Strategy": "Inquiring"))", false, std::nullopt});
    rules.push_back({StageTag::passive_reply, std::nullopt, "I hear you. Tell me more?", false,
                     std::nullopt});
    rules.push_back({StageTag::proactive_msg, std::nullopt, "Hey, how is your day going?", false,
                     std::nullopt});
    return rules;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("kindred-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path data_dir() { return KINDRED_TEST_DATA_DIR; }

}  // namespace kindred::test
