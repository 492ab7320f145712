#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kindred/domain.hpp"

// Prompt templates for every model-facing stage. Placeholders are written
// {name}; braces that do not wrap a supplied name (JSON examples) are left
// untouched by render().
namespace kindred::prompts {

inline constexpr std::string_view kVersion = "1";

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

// Persona card: {name} {age} {gender} {occupation_or_major} {personality}
// {background} {hobbies} {language_style} {relationship_with_user}
// {example_dialogues}
extern const std::string_view kPersona;
// Event detector: {time} {conversations}
extern const std::string_view kDetector;
extern const std::string_view kDetectorRepair;
// Reflection: {conversation_history}
extern const std::string_view kReflection;
extern const std::string_view kReflectionRepair;
// Day schedule: {persona} {world_info} {reflection}
extern const std::string_view kScheduleInit;
extern const std::string_view kScheduleRepair;
// Importance: {entry}
extern const std::string_view kImportance;
extern const std::string_view kImportanceRepair;
// Strategy selection: {task} {strategies} {input}
extern const std::string_view kStrategySelect;
extern const std::string_view kStrategyRepair;
// Passive reply: {persona} {strategies} {related_memory}
extern const std::string_view kPassiveReply;
// Appended to the passive-reply prompt only when memories were retrieved:
// {memories}
extern const std::string_view kRelatedMemoryBlock;
// Proactive message: {persona} {event} {strategies}
extern const std::string_view kProactive;
// Fixed sentence appended to both generation prompts.
extern const std::string_view kCompassion;

std::string persona_block(const Persona& p);
// "Today is Friday. The weather of today is rainy. The lowest temperature..."
std::string world_info_line(const WorldInfo& w);
std::string reflection_block(const Reflection& r);
// [{"role":"user","content":"..."}, {"role":"assistant","content":"..."}]
std::string dialogue_json(std::span<const Message> messages);
// One "HH:MM role: content" line per message.
std::string dialogue_lines(std::span<const Message> messages);
// {"Timing": "HH:MM", "Content": "..."}
std::string entry_json(TimeOfDay timing, std::string_view content);
// ("Adopted Strategy": "Self-disclosure, Inquiring")
std::string adopted_strategy_line(std::span<const Strategy> strategies);
// Numbered list of candidate strategies with description and example.
std::string strategy_catalogue(std::span<const Strategy> strategies);

}  // namespace kindred::prompts
