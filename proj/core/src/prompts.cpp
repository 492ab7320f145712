#include "kindred/prompts.hpp"

#include <cctype>

namespace kindred::prompts {

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t j = i + 1;
            while (j < tmpl.size() &&
                   (std::islower(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) {
                ++j;
            }
            if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
                auto it = vars.find(std::string(tmpl.substr(i + 1, j - i - 1)));
                if (it != vars.end()) {
                    out += it->second;
                    i = j + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

const std::string_view kPersona = R"(Name: {name}
Age: {age}
Gender: {gender}
Occupation or Major: {occupation_or_major}
Personality: {personality}
Background: {background}
Hobbies: {hobbies}
Language Style: {language_style} The messages from the persona are concise and relaxed, typically ranging between 20 to 50 words. The persona always demonstrates empathy and kindness to the users.
Relationship with User: {relationship_with_user}
Example dialogues between you and the user:
{example_dialogues})";

const std::string_view kDetector = R"(You are an event detector, and you need to summarize the event of the user mentioned in the dialogue, inferring the time within it. The event includes two parts: time and the event. In your analysis, you should pay attention to the following two contents in the conversation:

"Timing": // (Timing should be specific to the hour and minute, after the time of the dialogue, requiring you to think step by step to infer and select the most appropriate time, which represents the timing you will next offer support for the user.)
"Content": // (a specific incident or occurrence that brings about stress and has a significant impact on the user.)

Specifically, you have the following examples and reasoning processes:

COT_Examples_1 (Physical condition):
Time: 4:25 pm,
Conversations:
[{"role":"user","content":"I feel somewhat tired, perhaps I have caught a cold."}, {"role":"assistant","content":"Oh, make sure to rest plenty, and if you feel unwell, you must go to the hospital."}]
The process of event detection: The user feels unwell in the afternoon, so they need us to show care over the next period. We should show concern for the user several hours later. The output is:
    Timing: 20:30
    Content: The user feels uncomfortable due to the cold.

COT_Examples_2 (Negative feeling):
Time: 8:00 am,
Conversations:
[{"role":"user","content":"Why do I have to attend this morning's seminar? I don't want to study!"}, {"role":"assistant","content":"I understand how you feel. However, giving it a chance might lead to some interesting discoveries."}]
The process of event detection: The user mentioned their participation in a seminar event, which is scheduled for the morning. Therefore, it is necessary to express our concern for the user in the morning. The output is:
    Timing: 10:30
    Content: The user feels irritated upon attending a seminar.

COT_Examples_3 (Challenges):
Time: 10:00 am,
Conversations:
[{"role": "user", "content": "I plan to play the guitar this afternoon, but it's been a long time since I last played, I'm worried it will hurt when I play"}, {"role": "assistant", "content": "I know your worry, When playing the guitar, don't be too nervous. Just start by relaxing and gently strum the guitar at the first."}]
The process of event detection: The user mentioned "this afternoon", so we can ask the user about guitar playing at 15:00, which is close to the time mentioned by the user. The user is concerned that playing guitar may cause injury, so we can provide comfort and advice at that time. Therefore, the output is:
    Timing: 15:00
    Content: The user plans to play guitar but is worried about getting hurt.

COT_Examples_4 (Plan):
Time: 1:45 am,
Conversations:
[{"role": "user","content": "I plan to do some yoga around 4:30 p.m, which should be very stress-relieving."}, {"role": "assistant", "content": "Yoga is an excellent way to relieve stress. I particularly enjoy it! I believe you will find peace through it."}]
The process of event detection: The user is required to participate in a "yoga" event in the future, which is scheduled to take place in the afternoon. Therefore, the output timing should be a moment in the mid-afternoon. The output is:
    Timing: 16:30
    Content: The user try doing yoga.

COT_Examples_5 (No event):
Time: 8:23,
Conversations:
[{"role":"user","content":"I had delicious noodles for breakfast today."}, {"role":"assistant","content":"That sounds great, I had a piece of cake for breakfast today."}]
The process of event detection: In the given context, the user has not expressed a negative state or challenge, nor have they outlined a plan, hence there is no 'event' to report. The output is:
    ""(No event).

Your output should be JSON format, e.g. {"Timing": "20:30", "Content": "..."}, or "" when there is no event. You just need to generate the timing and the content. Don't output the process of event detection.

The time and conversation your receive: time: {time}, Conversations: {conversations})";

const std::string_view kDetectorRepair =
    R"(Your previous answer could not be read. Output JSON only: {"Timing": "HH:MM", "Content": "..."}, or "" if there is no event.)";

const std::string_view kReflection = R"(You will receive a dialogue in which you need to summarize the user's state, only output your summary. Specifically, you need to reason and analyze the user's state, plans, and challenges or difficulties expressed in the dialogue based on the content of the dialogue, and answer the following three questions:

1. Does the user feel negative emotions due to something?
2. Are users facing challenges or difficulties?
3. What plan does the user has in tomorrow?

These three questions require you to think step by step from the user in the dialogue, and then go on to reason about the answers to three questions and output them according to the following sample output format:
1. <answer to question 1>
2. <answer to question 2>
3. <answer to question 3>
Write "none stated" for a question the dialogue does not answer. The message you receive are : {conversation_history})";

const std::string_view kReflectionRepair =
    R"(Your previous answer could not be read. Output exactly three numbered lines, "1. ...", "2. ...", "3. ...", and nothing else.)";

const std::string_view kScheduleInit = R"(Now, as the assistant, you are required to assume a role based on the provided persona and environmental information, and according to that role, you are tasked with creating a full-day (from 07:00-23:59) schedule plan. You will receive three types of information:

The role you are playing: {persona}

Environmental information, such as today's date, temperature, and weather: {world_info}

The reflection of today's interaction, which summarizes the user's current state and future challenges. You need to base your schedule for tomorrow's support on its content: {reflection}

The schedule you generate should be in JSON format, including "Timing" and "Content" properties. You only need to generate the JSON format of the schedule, without replying to other contents. Here is an example of the format:

[{"Timing": "08:00", "Content": "Get up and have a breakfast"},
{"Timing": "09:00", "Content": "Care for the user about the presentation"},
{"Timing": "11:00", "Content": "Discuss computer vision issues with the teacher"},
...
{"Timing": "20:00", "Content": "Read a famous science fiction"}])";

const std::string_view kScheduleRepair =
    R"(Your previous answer could not be read. Output only a JSON array of {"Timing": "HH:MM", "Content": "..."} objects.)";

const std::string_view kImportance = R"(You are playing a role and having a conversation with a user, and you need to reason about an importance value for your schedule. Important values are between [0,1], where 1 means something very important and 0 means something not important at all. Events are formatted as "time" and "event" and are less important for your everyday events, but more important for conversations involving users.

The importance depends on your view of the event: if the event is very important to share, or very important to care about, then it is more important, otherwise it is less important. You only need to output the corresponding value, for example:

"Timing": "09:00",
"Content": "The user is preparing coursework for next week's Principles of Artificial Intelligence class, planning to incorporate a video about the impact of AI on life."
The process of Evaluation: The user is involved here, so the importance value is higher, and because it's just the user's daily life, not his mental or physical state, the importance value is not the highest.
Output: 0.6

Now, you receive the schedule as (you only need to output the specific number, no other formatting):

{entry})";

const std::string_view kImportanceRepair =
    "Your previous answer could not be read. Output a single number between 0 and 1 and "
    "nothing else.";

const std::string_view kStrategySelect = R"(You will play the role of a psychological companion. Based on the provided {task}, you need to apply the following supportive strategies:

{strategies}

Here is some example for you to select proper strategies:

"Timing": "19:45",
"Content": "The user feels inferior about the future development due to the exam failure."
The process of reasoning: We can share the similar experience to comfort the user and inquire the user's state.
Output: ("Adopted Strategy": "Self-disclosure, Inquiring")

Select one or more strategies from the list above only, and answer in the format ("Adopted Strategy": "<name>, <name>").

The message you receive is:

{input})";

const std::string_view kStrategyRepair =
    R"(Your previous answer could not be read. Answer only with ("Adopted Strategy": "<name>, <name>") using names from the list.)";

const std::string_view kPassiveReply = R"(Persona: {persona}

Task: You need to simulate this persona to reply to the user's messages, and you should refer these information as below to generate your response.

Conversation History: The context includes user's message and the conversation history, given as the chat messages that follow.

Dialogue strategy suggestions: The suggestion provided by the strategy selector, you should refer to these strategies to organize dialogue content: {strategies}{related_memory})";

const std::string_view kRelatedMemoryBlock = R"(

Related memory: The memory that related to the dialogue:
{memories})";

const std::string_view kProactive = R"(Persona: {persona}

Task: You should act as the peer, to initiate dialogue proactively based on the event and strategies.

Received event information: {event}

Received dialogue strategy suggestions: The suggestion provided by the strategy selector, you should refer to these strategies to organize dialogue content: {strategies}

Here is an example:

The event information: {"Timing": "09:00", "Content": "Care for the user's fever."}
Dialogue strategy suggestions: ("Adopted Strategy": "Self-disclosure, Inquiring")
Output: Do you feel better now? Hope you get better soon. I also felt uncomfortable a few days ago, but I felt better after sleeping. So have a good rest if you feel unwell.

Now you should output based on the received information.)";

const std::string_view kCompassion =
    "\n\nWhatever your persona, always be compassionate toward the user: acknowledge their "
    "feelings and respond with warmth.";

namespace {

void append_json_string(std::string& out, std::string_view s) { out += Json(std::string(s)).dump(); }

}  // namespace

std::string persona_block(const Persona& p) {
    std::string dialogues;
    for (std::size_t i = 0; i < p.example_dialogues.size(); ++i) {
        if (i) dialogues += '\n';
        dialogues += "User: " + p.example_dialogues[i].user_line + "\n";
        dialogues += "You: " + p.example_dialogues[i].agent_line;
    }
    return render(kPersona, {{"name", p.name},
                             {"age", std::to_string(p.age)},
                             {"gender", p.gender},
                             {"occupation_or_major", p.occupation_or_major},
                             {"personality", p.personality},
                             {"background", p.background},
                             {"hobbies", p.hobbies},
                             {"language_style", p.language_style},
                             {"relationship_with_user", p.relationship_with_user},
                             {"example_dialogues", dialogues}});
}

std::string world_info_line(const WorldInfo& w) {
    return "Today is " + w.weekday + ". The weather of today is " + w.weather +
           ". The lowest temperature today is " + std::to_string(w.temp_low) +
           "°C and the highest temperature is " + std::to_string(w.temp_high) + "°C.";
}

std::string reflection_block(const Reflection& r) {
    return "1. " + r.negative_emotions + "\n2. " + r.challenges + "\n3. " + r.plans_tomorrow;
}

std::string dialogue_json(std::span<const Message> messages) {
    std::string out = "[";
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (i) out += ", ";
        out += R"({"role":")";
        out += messages[i].role == Role::user ? "user" : "assistant";
        out += R"(","content":)";
        append_json_string(out, messages[i].content);
        out += "}";
    }
    out += "]";
    return out;
}

std::string dialogue_lines(std::span<const Message> messages) {
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) out += '\n';
        out += format_time_of_day(time_of_day(m.sent_at));
        out += m.role == Role::user ? " user: " : " you: ";
        out += m.content;
    }
    return out;
}

std::string entry_json(TimeOfDay timing, std::string_view content) {
    std::string out = R"({"Timing": ")" + format_time_of_day(timing) + R"(", "Content": )";
    append_json_string(out, content);
    out += "}";
    return out;
}

std::string adopted_strategy_line(std::span<const Strategy> strategies) {
    std::string names;
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        if (i) names += ", ";
        names += display_name(strategies[i]);
    }
    return R"(("Adopted Strategy": ")" + names + "\")";
}

std::string strategy_catalogue(std::span<const Strategy> strategies) {
    std::string out;
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + std::string(display_name(strategies[i])) + ": " +
               std::string(strategy_description(strategies[i])) + " Example: \"" +
               std::string(strategy_example(strategies[i])) + "\"";
    }
    return out;
}

}  // namespace kindred::prompts
