#include "kindred/dialogue.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <spdlog/spdlog.h>

#include "kindred/errors.hpp"
#include "kindred/memory.hpp"
#include "kindred/prompts.hpp"
#include "structured.hpp"

namespace kindred {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Catalogue names plus the wording variant used in the selector prompt list.
std::optional<Strategy> match_name(std::string_view token) {
    const std::string t = lower(token);
    for (Strategy s : kAllStrategies) {
        if (t == lower(display_name(s)) || t == to_string(s)) return s;
    }
    if (t == "invite the user to think" || t == "invite user to think") {
        return Strategy::invite_users_to_think;
    }
    if (t == "self disclosure") return Strategy::self_disclosure;
    if (t == "reflections of feelings") return Strategy::reflection_of_feelings;
    return std::nullopt;
}

std::string_view strip_token(std::string_view s) {
    auto junk = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '(' ||
               c == ')' || c == '.' || c == '*' || c == '[' || c == ']' || c == '-' || c == '`';
    };
    while (!s.empty() && (junk(s.front()) || std::isdigit(static_cast<unsigned char>(s.front())))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && junk(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<Strategy> canonical(const std::set<Strategy>& chosen) {
    std::vector<Strategy> out;
    for (Strategy s : kAllStrategies) {
        if (chosen.count(s)) out.push_back(s);
    }
    return out;
}

std::string strategies_line(const StrategySelection& sel) {
    return prompts::adopted_strategy_line(sel.strategies);
}

std::vector<ChatTurn> as_turns(std::span<const Message> context) {
    std::vector<ChatTurn> turns;
    turns.reserve(context.size());
    for (const auto& m : context) {
        turns.push_back({m.role == Role::user ? "user" : "assistant", m.content});
    }
    return turns;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
           (cp >= 0x20000 && cp <= 0x2FFFF);
}

bool is_separator(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
           (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF);
}

// Decodes one code point; malformed bytes decode as themselves.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    }
    if (len == 1 || i + static_cast<std::size_t>(len) > s.size()) {
        ++i;
        return b0;
    }
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    i += static_cast<std::size_t>(len);
    return cp;
}

}  // namespace

std::vector<Strategy> parse_strategies(std::string_view answer) {
    std::string_view list = detail::trim(answer);
    const std::string low = lower(list);
    if (const auto at = low.find("adopted strategy"); at != std::string::npos) {
        std::string_view rest = list.substr(at + 16);
        const auto colon = rest.find(':');
        if (colon != std::string_view::npos) rest.remove_prefix(colon + 1);
        const auto q1 = rest.find('"');
        const auto q2 = q1 == std::string_view::npos ? q1 : rest.find('"', q1 + 1);
        list = (q1 != std::string_view::npos && q2 != std::string_view::npos)
                   ? rest.substr(q1 + 1, q2 - q1 - 1)
                   : rest;
    }

    std::set<Strategy> chosen;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t end = list.find_first_of(",;\n/", start);
        if (end == std::string_view::npos) end = list.size();
        if (auto s = match_name(strip_token(list.substr(start, end - start)))) chosen.insert(*s);
        start = end + 1;
    }
    if (chosen.empty()) throw ParseError("no known strategy in answer");
    return canonical(chosen);
}

StrategySelection select_strategies(std::span<const Message> context, Provider& provider) {
    if (context.empty() || context.back().role != Role::user) {
        throw PreconditionViolation("passive selection needs a context ending in a user message");
    }
    const std::string prompt = prompts::render(
        prompts::kStrategySelect,
        {{"task", "conversation history and the user's latest message, to reply to the user"},
         {"strategies", prompts::strategy_catalogue(kAllStrategies)},
         {"input", prompts::dialogue_lines(context)}});
    auto parsed = detail::ask_structured(
        provider, make_request(StageTag::strategy_select, "", {{"user", prompt}}, 128),
        prompts::kStrategyRepair, parse_strategies);
    if (!parsed) return {{Strategy::affirmation_and_reassurance}, GenerationMode::passive};
    return {std::move(*parsed), GenerationMode::passive};
}

StrategySelection select_strategies(const ScheduleEntry& entry, Provider& provider) {
    const std::string prompt = prompts::render(
        prompts::kStrategySelect,
        {{"task", "sample schedule information, to generate proactive care messages"},
         {"strategies", prompts::strategy_catalogue(kProactiveAllowed)},
         {"input", prompts::entry_json(entry.timing, entry.content)}});
    auto parsed = detail::ask_structured(
        provider, make_request(StageTag::strategy_select, "", {{"user", prompt}}, 128),
        prompts::kStrategyRepair, parse_strategies);
    StrategySelection sel{{}, GenerationMode::proactive};
    if (parsed) {
        for (Strategy s : *parsed) {
            if (is_proactive_allowed(s)) sel.strategies.push_back(s);
        }
    }
    if (sel.strategies.empty()) sel.strategies = {Strategy::inquiring};
    return sel;
}

ChatRequest build_reply_request(std::span<const Message> context, const StrategySelection& sel,
                                const Persona& persona, std::span<const MemoryObject> memories) {
    std::string related;
    if (!memories.empty()) {
        std::string lines;
        for (const auto& m : memories) {
            if (!lines.empty()) lines += '\n';
            lines += "- " + pair_text(m);
        }
        related = prompts::render(prompts::kRelatedMemoryBlock, {{"memories", lines}});
    }
    std::string system = prompts::render(prompts::kPassiveReply,
                                         {{"persona", prompts::persona_block(persona)},
                                          {"strategies", strategies_line(sel)},
                                          {"related_memory", related}});
    system += prompts::kCompassion;
    return make_request(StageTag::passive_reply, std::move(system), as_turns(context));
}

ChatRequest build_proactive_request(const ScheduleEntry& entry, const StrategySelection& sel,
                                    const Persona& persona) {
    std::string system =
        prompts::render(prompts::kProactive, {{"persona", prompts::persona_block(persona)},
                                              {"event", prompts::entry_json(entry.timing, entry.content)},
                                              {"strategies", strategies_line(sel)}});
    system += prompts::kCompassion;
    return make_request(StageTag::proactive_msg, std::move(system),
                        {{"user", "Write the message you send to the user now."}});
}

Message generate_reply(std::span<const Message> context, const StrategySelection& sel,
                       const Persona& persona, std::span<const MemoryObject> memories,
                       Provider& provider, Timestamp now) {
    if (sel.mode != GenerationMode::passive) {
        throw PreconditionViolation("generate_reply needs a passive selection");
    }
    if (context.empty()) throw PreconditionViolation("generate_reply needs a non-empty context");
    const std::string text =
        std::string(detail::trim(provider.complete(build_reply_request(context, sel, persona, memories))));
    if (text.empty()) throw ProviderError("model returned an empty reply");
    return Message{0, Role::agent, text, now, Origin::passive_reply};
}

Message generate_proactive(const ScheduleEntry& entry, const StrategySelection& sel,
                           const Persona& persona, Provider& provider, Timestamp now) {
    if (sel.mode != GenerationMode::proactive) {
        throw PreconditionViolation("generate_proactive needs a proactive selection");
    }
    if (sel.strategies.empty()) throw PreconditionViolation("empty strategy selection");
    for (Strategy s : sel.strategies) {
        if (!is_proactive_allowed(s)) {
            throw PreconditionViolation("strategy '" + std::string(to_string(s)) +
                                        "' is not allowed in proactive messages");
        }
    }
    const std::string text =
        std::string(detail::trim(provider.complete(build_proactive_request(entry, sel, persona))));
    if (text.empty()) throw ProviderError("model returned an empty proactive message");
    return Message{0, Role::agent, text, now, Origin::proactive};
}

std::size_t count_words(std::string_view text) {
    std::size_t words = 0;
    bool in_word = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = next_code_point(text, i);
        if (is_separator(cp)) {
            in_word = false;
        } else if (is_cjk(cp)) {
            in_word = false;
            ++words;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

std::vector<std::string> style_check(const Message& m) {
    std::vector<std::string> warnings;
    const std::size_t n = count_words(m.content);
    if (n < kMinWords || n > kMaxWords) {
        warnings.push_back("length " + std::to_string(n) + " words is outside the " +
                           std::to_string(kMinWords) + "-" + std::to_string(kMaxWords) +
                           " word target");
    }
    return warnings;
}

}  // namespace kindred
