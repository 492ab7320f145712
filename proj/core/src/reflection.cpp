#include "kindred/reflection.hpp"

#include <array>
#include <optional>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "kindred/errors.hpp"
#include "kindred/prompts.hpp"
#include "structured.hpp"

namespace kindred {

Reflection empty_reflection(CalendarDate for_day) {
    return Reflection{for_day, std::string(kNoneStated), std::string(kNoneStated),
                      std::string(kNoneStated)};
}

Reflection parse_reflection(std::string_view answer, CalendarDate for_day) {
    static const std::regex kItem(R"(^\s*(?:[*#]+\s*)?([1-3])\s*[.):]\s*(?:\*+\s*)?(.*)$)");
    std::array<std::optional<std::string>, 3> items;
    int current = -1;
    std::istringstream in{std::string(answer)};
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (std::regex_match(line, m, kItem)) {
            const int idx = m[1].str()[0] - '1';
            if (idx == current + 1 && !items[idx]) {
                current = idx;
                items[idx] = std::string(detail::trim(m[2].str()));
                continue;
            }
        }
        if (current >= 0 && !detail::trim(line).empty()) {
            std::string& a = *items[current];
            if (!a.empty()) a += ' ';
            a += detail::trim(line);
        }
    }
    if (!items[0] || !items[1] || !items[2]) {
        // Inline form: "1) ..., 2) ..., 3) ..."
        const std::string text(answer);
        std::array<std::size_t, 3> starts{};
        std::array<std::size_t, 3> ends{};
        std::size_t from = 0;
        for (int i = 0; i < 3; ++i) {
            const std::regex marker("(^|\\s)" + std::to_string(i + 1) + "[.)]\\s");
            std::smatch m;
            const std::string rest = text.substr(from);
            if (!std::regex_search(rest, m, marker)) {
                throw ParseError("reflection answer lacks three numbered items");
            }
            starts[i] = from + static_cast<std::size_t>(m.position(0) + m.length(0));
            if (i > 0) ends[i - 1] = from + static_cast<std::size_t>(m.position(0));
            from = starts[i];
        }
        ends[2] = text.size();
        for (int i = 0; i < 3; ++i) items[i] = text.substr(starts[i], ends[i] - starts[i]);
    }
    auto finish = [](std::string s) {
        s = std::string(detail::trim(s));
        while (!s.empty() && (s.back() == '*' || s.back() == ',' || s.back() == ';')) s.pop_back();
        s = std::string(detail::trim(s));
        return s.empty() ? std::string(kNoneStated) : s;
    };
    return Reflection{for_day, finish(*items[0]), finish(*items[1]), finish(*items[2])};
}

Reflection reflect(std::span<const Message> prev_day_dialogues, CalendarDate for_day,
                   Provider& provider) {
    const CalendarDate prev = for_day.prev();
    std::vector<Message> day;
    for (const auto& m : prev_day_dialogues) {
        if (date_of(m.sent_at) == prev) day.push_back(m);
    }
    if (day.empty()) return empty_reflection(for_day);

    const std::string prompt = prompts::render(
        prompts::kReflection, {{"conversation_history", prompts::dialogue_lines(day)}});
    auto parsed = detail::ask_structured(
        provider, make_request(StageTag::reflection, "", {{"user", prompt}}),
        prompts::kReflectionRepair,
        [for_day](std::string_view a) { return parse_reflection(a, for_day); });
    if (!parsed) {
        spdlog::warn("reflection: falling back to an empty reflection for {}", format_date(for_day));
        return empty_reflection(for_day);
    }
    return *parsed;
}

}  // namespace kindred
