#include "kindred/detector.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "kindred/errors.hpp"
#include "kindred/prompts.hpp"
#include "structured.hpp"

namespace kindred {

namespace detail {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_code_fence(std::string_view s) {
    s = trim(s);
    if (s.substr(0, 3) != "```") return s;
    const auto first_nl = s.find('\n');
    if (first_nl == std::string_view::npos) return s;
    s.remove_prefix(first_nl + 1);
    const auto close = s.rfind("```");
    if (close != std::string_view::npos) s = s.substr(0, close);
    return trim(s);
}

}  // namespace detail

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const Json* find_key(const Json& obj, std::string_view key) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (lower(it.key()) == key) return &*it;
    }
    return nullptr;
}

EventCategory guess_category(std::string_view volunteered) {
    const std::string c = lower(volunteered);
    if (c.find("physical") != std::string::npos) return EventCategory::physical_condition;
    if (c.find("negative") != std::string::npos || c.find("feeling") != std::string::npos) {
        return EventCategory::negative_feeling;
    }
    if (c.find("challenge") != std::string::npos) return EventCategory::challenge;
    if (c.find("plan") != std::string::npos) return EventCategory::plan;
    return EventCategory::unknown;
}

bool means_no_event(std::string_view s) {
    if (s.empty()) return true;
    if (s.substr(0, 2) == "\"\"" || s.substr(0, 2) == "''") return true;
    const std::string l = lower(s);
    return l == "none" || l == "null" || l.rfind("no event", 0) == 0 || l == "(no event)";
}

}  // namespace

bool ConversationRound::has_user_message() const {
    return std::any_of(messages.begin(), messages.end(),
                       [](const Message& m) { return m.role == Role::user; });
}

bool round_boundary(Timestamp last_user_msg_at, Timestamp now, std::chrono::seconds idle) {
    return now.seconds - last_user_msg_at.seconds >= idle.count();
}

TimeOfDay validate_event_timing(TimeOfDay raw, Timestamp now) {
    const TimeOfDay current = time_of_day(now);
    if (raw > current) return raw;
    return TimeOfDay{std::min(current.minutes + 60, kEndOfDay.minutes)};
}

std::optional<RawEvent> parse_detector_output(std::string_view answer) {
    const std::string_view text = detail::strip_code_fence(answer);
    if (means_no_event(text)) return std::nullopt;

    RawEvent ev;
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        Json j;
        try {
            j = Json::parse(text.substr(open, close - open + 1));
        } catch (const Json::exception& e) {
            throw ParseError(std::string("detector answer is not JSON: ") + e.what());
        }
        if (!j.is_object()) throw ParseError("detector answer is not a JSON object");
        const Json* timing = find_key(j, "timing");
        const Json* content = find_key(j, "content");
        if (timing == nullptr || content == nullptr || !timing->is_string() ||
            !content->is_string()) {
            throw ParseError("detector answer lacks Timing/Content strings");
        }
        const std::string t = std::string(detail::trim(timing->get<std::string>()));
        const std::string c = std::string(detail::trim(content->get<std::string>()));
        if (t.empty() && c.empty()) return std::nullopt;
        ev.timing = parse_time_of_day(t);
        ev.content = c;
        if (const Json* cat = find_key(j, "category"); cat != nullptr && cat->is_string()) {
            ev.category = guess_category(cat->get<std::string>());
        }
    } else {
        static const std::regex kTiming(R"(Timing\W*(\d{1,2}:\d{2}))", std::regex::icase);
        static const std::regex kContent(R"(Content\W*([^\n]+))", std::regex::icase);
        const std::string s(text);
        std::smatch tm;
        std::smatch cm;
        if (!std::regex_search(s, tm, kTiming) || !std::regex_search(s, cm, kContent)) {
            throw ParseError("detector answer has neither JSON nor Timing/Content lines");
        }
        ev.timing = parse_time_of_day(tm[1].str());
        ev.content = std::string(detail::trim(cm[1].str()));
    }
    if (ev.content.empty()) throw ParseError("detector answer has empty Content");
    return ev;
}

ChatRequest build_detector_request(const ConversationRound& round, Timestamp now) {
    const std::string prompt =
        prompts::render(prompts::kDetector, {{"time", format_time_of_day(time_of_day(now))},
                                             {"conversations", prompts::dialogue_json(round.messages)}});
    return make_request(StageTag::detector, "", {{"user", prompt}});
}

std::optional<DetectedEvent> detect(const ConversationRound& round, Timestamp now,
                                    Provider& provider) {
    if (!round.has_user_message()) return std::nullopt;
    auto parsed = detail::ask_structured(provider, build_detector_request(round, now),
                                         prompts::kDetectorRepair, parse_detector_output);
    if (!parsed || !*parsed) return std::nullopt;
    const RawEvent& raw = **parsed;
    return DetectedEvent{validate_event_timing(raw.timing, now), raw.content, now, raw.category};
}

}  // namespace kindred
