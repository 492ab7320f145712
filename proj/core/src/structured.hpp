#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <spdlog/spdlog.h>

#include "kindred/errors.hpp"
#include "kindred/llm.hpp"

namespace kindred::detail {

// Sends req; when parse() rejects the answer, re-asks once with the model's
// bad answer and a repair instruction appended. Returns nullopt after a second
// parse failure or any provider failure.
template <typename Parse>
auto ask_structured(Provider& provider, ChatRequest req, std::string_view repair, Parse&& parse)
    -> std::optional<decltype(parse(std::string_view{}))> {
    const auto stage = to_string(req.tag);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string answer;
        try {
            answer = provider.complete(req);
        } catch (const ProviderError& e) {
            spdlog::warn("{}: provider failed: {}", stage, e.what());
            return std::nullopt;
        }
        try {
            return parse(std::string_view(answer));
        } catch (const ParseError& e) {
            spdlog::warn("{}: unreadable answer (attempt {}): {}", stage, attempt + 1, e.what());
            req.messages.push_back({"assistant", answer});
            req.messages.push_back({"user", std::string(repair)});
        }
    }
    return std::nullopt;
}

std::string_view trim(std::string_view s);
// Drops a surrounding ``` fence (with optional language tag).
std::string_view strip_code_fence(std::string_view s);

}  // namespace kindred::detail
