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

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cott/tools.h"
#include "cott/trace.h"

namespace cott {

/// Text generator behind the agent. Implementations must not keep state
/// between calls other than what the messages carry.
class PolicyAdapter {
public:
    virtual ~PolicyAdapter() = default;

    virtual std::string
    generate(std::span<const Message> messages) = 0;
};

/// Replays fixed outputs. The turn is the number of assistant messages
/// already in the context; past the end it returns an empty string.
class ScriptedPolicy final : public PolicyAdapter {
public:
    explicit ScriptedPolicy(std::vector<std::string> turns) : turns_(std::move(turns)) {
    }

    /// A JSON array of strings. Throws Error(IO).
    static ScriptedPolicy
    from_file(const std::filesystem::path& path);

    std::string
    generate(std::span<const Message> messages) override;

    std::span<const std::string>
    turns() const noexcept {
        return turns_;
    }

private:
    std::vector<std::string> turns_;
};

enum class PromptMode { TRAIN, DATAGEN };

struct EpisodeConfig {
    /// Policy calls per episode, at least 1.
    size_t max_steps = 10;
    PromptMode mode = PromptMode::TRAIN;
    std::string identity;
    /// Restrict tools to footage before the question's query time.
    bool causal = true;
    /// Overrides the dispatcher's limits when set.
    std::optional<DispatchLimits> limits;
    /// Called once on a finished trajectory without an answer; its output is
    /// read as an <answer> and stored as the assisted answer.
    std::shared_ptr<PolicyAdapter> summary_assist;

    /// Throws Error(INVALID_ARGUMENT).
    void
    validate() const;
};

std::string
training_prompt();

std::string
generation_prompt(std::string_view identity);

std::string
assemble_system_prompt(const EpisodeConfig& config);

struct QuestionSpec {
    std::string id;
    std::string view_id;
    std::string question;
    std::vector<Option> options;
    Timestamp query_time;
};

/// Appends a tool message carrying the escaped payload in <information>.
void
inject_observation(std::vector<Message>& context, const Observation& observation);

struct Episode {
    Trajectory trajectory;
    /// The full conversation handed to the policy on its last turn, plus the
    /// last observation.
    std::vector<Message> context;
};

/// Runs one question to an answer or to the step limit. Nothing escapes:
/// policy exceptions, malformed output and tool failures are recorded as
/// steps with error observations. Throws Error(INVALID_ARGUMENT) only for an
/// invalid config or question.
Episode
run_episode(const QuestionSpec& question, PolicyAdapter& policy, const Dispatcher& dispatcher,
            const CorpusContext& corpus, const EpisodeConfig& config);

/// Builds a fresh policy for group member `member` of a question.
using PolicyFactory =
    std::function<std::unique_ptr<PolicyAdapter>(const QuestionSpec& question, size_t member)>;

}  // namespace cott
