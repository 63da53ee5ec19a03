// Copyright 2026-present the cott-runtime project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cott/agent.h"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "cott/io.h"

namespace cott {
namespace {

constexpr std::string_view kTrainingPreamble =
    "Answer the given question. You must conduct reasoning inside <think> and </think> first "
    "every time before you get new information. After reasoning, if you find you lack some "
    "knowledge, you can call a tool from [rag, video_llm, vlm] by <tool> query </tool> and it "
    "will return the information between <information> and </information>. You can use tools "
    "as many times as your want. If you find no further external knowledge needed, you can "
    "provide the answer inside <answer> and </answer> after another thinking.\n"
    "The tools you can use are:\n";

constexpr std::string_view kTrainingExample =
    "\nFor example, if you want to search for information in the RAG database, you can use the "
    "following tool:\n"
    "<tool>\n"
    "{\n"
    "    \"name\": \"rag\",\n"
    "    \"arguments\": {\n"
    "        \"level\": \"day\",\n"
    "        \"keywords\": [\"screwdriver\", \"applause\"],\n"
    "        \"start_time\": \"DAY1_11210217\",\n"
    "        \"query_time\": \"DAY1_11220217\"\n"
    "    }\n"
    "}\n"
    "</tool>";

constexpr std::string_view kGenerationPrompt =
    "[BEGIN OF GOAL]\n"
    "\n"
    "You are an expert AI assistant specializing in analyzing human behavior and reasoning from "
    "egocentric video descriptions. You will be provided with a list of useful tools to help in "
    "reasoning the task, and your goal is to solve the user’s question. The user’s "
    "question is following the format: Question: <question> <timestamp> Options: <options>. You "
    "can either rely on your own capabilities or perform actions with external tools to help "
    "you. You should consider both the frequency and cost of each tool to make the best "
    "decision.\n"
    "\n"
    "[END OF GOAL]\n"
    "\n"
    "\n"
    "[BEGIN OF FORMAT INSTRUCTIONS]\n"
    "\n"
    "When answering questions:\n"
    "1. You will be provided with previous actions you have taken, based on these actions, "
    "think step-by-step about how to approach the problem.\n"
    "2. Show your reasoning process clearly before providing your next action.\n"
    "3. The video observation length is 10-min max.\n"
    "4. For visual questions, use `video_llm` and `vlm` to explore the visual context.\n"
    "5. For temporal questions, use `rag` to explore the context before and after the event.\n"
    "6. Only use the `terminate` tool after you have thoroughly explored the question with "
    "multiple tools.\n"
    "\n"
    "[END OF FORMAT INSTRUCTIONS]\n"
    "\n"
    "\n"
    "[BEGIN OF HINTS]\n"
    "\n"
    "1. All tools provided are crucial to the solvement of the question. You MUST exploit the "
    "usage of all tools before answering the question.\n"
    "2. You may want to use the same tool multiple times with different arguments to explore "
    "the problem from different angles, if needed.\n"
    "3. Make a balance between the cost and the frequency of the tools.\n"
    "4. Usually, solving a question requires over 5~10 steps of reasoning, and follows a "
    "hierarchical calling structure: rag => video_llm => vlm.\n"
    "5. Do not use the terminate tool too early. Instead, try to explore the question with the "
    "available tools, and only use the terminate tool when you are confident enough or have "
    "considered all the options.\n"
    "\n"
    "[END OF HINTS]\n"
    "\n"
    "\n"
    "Always structure your responses with your thought process first, followed by any tool "
    "calls.\n"
    "Think before you act. Think step-by-step about what information you need and which tool "
    "to use, then execute your plan exactly as reasoned without deviation. Output your thought "
    "process before using the tool, and you must strictly follow your thought process for the "
    "tool call. Currently, you are under the view of ";

constexpr std::string_view kAssistRequest =
    "The step limit has been reached. Provide your final answer inside <answer> and </answer>.";

std::optional<FinalAnswer>
read_assisted_answer(std::string_view text, std::span<const Option> options) {
    try {
        for (const auto& seg : parse_fragment(sanitize_utf8(text))) {
            if (seg.kind == SegmentKind::ANSWER) {
                if (auto label = normalize_choice(seg.body, options)) {
                    return FinalAnswer{*label};
                }
            }
        }
    } catch (const Error&) {
    }
    return std::nullopt;
}

}  // namespace

ScriptedPolicy
ScriptedPolicy::from_file(const std::filesystem::path& path) {
    auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw Error(ErrorType::IO, path.string() + ": expected a JSON array of strings");
    }
    std::vector<std::string> turns;
    for (const auto& t : doc) {
        if (!t.is_string()) {
            throw Error(ErrorType::IO, path.string() + ": expected a JSON array of strings");
        }
        turns.push_back(t.get<std::string>());
    }
    return ScriptedPolicy(std::move(turns));
}

std::string
ScriptedPolicy::generate(std::span<const Message> messages) {
    auto turn = static_cast<size_t>(std::count_if(
        messages.begin(), messages.end(), [](const Message& m) { return m.role == "assistant"; }));
    return turn < turns_.size() ? turns_[turn] : std::string();
}

void
EpisodeConfig::validate() const {
    if (max_steps == 0) {
        throw Error(ErrorType::INVALID_ARGUMENT, "max_steps must be at least 1");
    }
}

std::string
training_prompt() {
    std::string out(kTrainingPreamble);
    out += serialize_schemas(builtin_tool_schemas());
    out += kTrainingExample;
    return out;
}

std::string
generation_prompt(std::string_view identity) {
    std::string out(kGenerationPrompt);
    out += identity;
    out += ".";
    return out;
}

std::string
assemble_system_prompt(const EpisodeConfig& config) {
    return config.mode == PromptMode::TRAIN ? training_prompt()
                                            : generation_prompt(config.identity);
}

void
inject_observation(std::vector<Message>& context, const Observation& observation) {
    context.push_back({"tool", information_message(observation)});
}

Episode
run_episode(const QuestionSpec& question, PolicyAdapter& policy, const Dispatcher& dispatcher,
            const CorpusContext& corpus, const EpisodeConfig& config) {
    config.validate();
    if (question.question.empty()) {
        throw Error(ErrorType::INVALID_ARGUMENT, "question text is empty");
    }
    if (question.options.empty()) {
        throw Error(ErrorType::INVALID_ARGUMENT, "question has no options");
    }

    Episode ep;
    Trajectory& t = ep.trajectory;
    t.question_id = question.id;
    t.view_id = question.view_id;
    t.question = question.question;
    t.options = question.options;
    t.query_time = question.query_time;

    std::vector<Message>& context = ep.context;
    context.push_back({"system", assemble_system_prompt(config)});
    context.push_back(
        {"user", user_prompt(question.question, question.query_time, question.options)});

    CorpusContext bounds = corpus;
    if (config.causal) {
        bounds.causal_bound = question.query_time;
    }
    DispatchLimits limits = config.limits.value_or(dispatcher.limits());

    for (size_t turn = 0; turn < config.max_steps; ++turn) {
        std::string output;
        std::optional<std::string> policy_failure;
        try {
            output = sanitize_utf8(policy.generate(context));
        } catch (const std::exception& e) {
            policy_failure = std::string("policy failed: ") + e.what();
        }
        context.push_back({"assistant", output});

        StepReading reading = read_policy_output(output, t.options);
        CoTTStep step = std::move(reading.step);
        if (policy_failure) {
            reading.problem = policy_failure;
        }

        if (std::holds_alternative<MalformedAction>(step.action)) {
            step.observation = Observation::failure(std::string(kEnvironmentSource),
                                                    ErrorType::SYNTAX, *reading.problem);
            inject_observation(context, *step.observation);
            t.steps.push_back(std::move(step));
            continue;
        }
        if (std::holds_alternative<FinalAnswer>(step.action)) {
            t.steps.push_back(std::move(step));
            break;
        }

        const auto& call = std::get<ToolCall>(step.action);
        std::string source(tool_name(call.name()));
        bool terminating = call.name() == ToolName::TERMINATE;
        if (terminating && config.mode == PromptMode::TRAIN) {
            step.observation = Observation::failure(
                source, ErrorType::UNKNOWN_TOOL, "terminate is only offered in data-generation mode");
        } else {
            try {
                step.observation = dispatcher.dispatch(preverify(call, bounds), limits);
            } catch (const Error& e) {
                step.observation = Observation::failure(source, e.type(), e.what());
            }
        }
        inject_observation(context, *step.observation);
        bool closed = terminating && !step.observation->error();
        t.steps.push_back(std::move(step));
        if (closed) {
            break;
        }
    }

    if (!t.answer() && config.summary_assist) {
        std::vector<Message> request = context;
        request.push_back({"user", std::string(kAssistRequest)});
        try {
            t.assisted_answer =
                read_assisted_answer(config.summary_assist->generate(request), t.options);
        } catch (const std::exception&) {
        }
    }
    return ep;
}

}  // namespace cott
