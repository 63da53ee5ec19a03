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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cott/error.h"
#include "cott/memory_index.h"
#include "cott/timebase.h"

namespace cott {

// ---------------------------------------------------------------------------
// Special-token segments

enum class SegmentKind { THINK, TOOL, INFORMATION, ANSWER, TEXT };

std::string_view
segment_tag(SegmentKind kind);

struct Segment {
    SegmentKind kind;
    /// Tag interior with &lt; &gt; &amp; decoded; raw text for TEXT.
    std::string body;
    /// Byte offset of the opening tag (or of the text run).
    size_t offset = 0;

    bool
    operator==(const Segment&) const = default;
};

/// Splits model output into <think>, <tool>, <information> and <answer>
/// segments. Non-blank text outside tags is returned as TEXT segments. Tags
/// must be closed and must not nest.
///
/// Throws Error(UNCLOSED_TAG), Error(NESTED_TAG) or Error(UNKNOWN_TAG).
std::vector<Segment>
parse_fragment(std::string_view text);

/// Escapes '&', '<' and '>' so a body can never be read as a tag.
std::string
escape_body(std::string_view text);

std::string
unescape_body(std::string_view text);

// ---------------------------------------------------------------------------
// Tool calls

enum class ToolName { RAG, VIDEO_LLM, VLM, TERMINATE };

inline constexpr size_t kToolCount = 4;

std::string_view
tool_name(ToolName tool);

std::optional<ToolName>
tool_from_name(std::string_view name);

struct RagArgs {
    Level level = Level::DAY;  // WEEK, DAY or HOUR
    std::vector<std::string> keywords;
    Timestamp start_time;
    Timestamp query_time;

    bool
    operator==(const RagArgs&) const = default;
};

struct VideoLlmArgs {
    std::string question;
    TimeRange range;

    bool
    operator==(const VideoLlmArgs&) const = default;
};

struct VlmArgs {
    std::string question;
    Timestamp timestamp;

    bool
    operator==(const VlmArgs&) const = default;
};

/// Data-generation only; carries the final option label.
struct TerminateArgs {
    std::string answer;

    bool
    operator==(const TerminateArgs&) const = default;
};

struct ToolCall {
    std::variant<RagArgs, VideoLlmArgs, VlmArgs, TerminateArgs> args;

    ToolName
    name() const noexcept {
        return static_cast<ToolName>(args.index());
    }

    bool
    operator==(const ToolCall&) const = default;
};

/// Parses the interior of a <tool> tag: {"name": ..., "arguments": {...}}.
///
/// Throws Error(JSON_SYNTAX), Error(UNKNOWN_TOOL), Error(MISSING_ARGUMENT),
/// Error(EXTRA_ARGUMENT) or Error(ARGUMENT_TYPE). Timestamp and range
/// failures surface as ARGUMENT_TYPE with the timebase error as cause and the
/// argument path set.
ToolCall
parse_tool_call(std::string_view body);

/// Applies the schema constraints to a programmatically built call. Throws
/// the same errors as parse_tool_call.
void
validate_tool_call(const ToolCall& call);

/// Compact canonical JSON with keys in schema order.
std::string
tool_call_json(const ToolCall& call);

/// The slice of the recording a call reads: [start_time, query_time) for rag,
/// the range for video_llm, one frame for vlm, nothing for terminate.
std::optional<TimeRange>
referenced_window(const ToolCall& call);

// ---------------------------------------------------------------------------
// Trajectories

/// Text returned to the agent inside <information>. Failures are encoded in
/// the payload as "[error:<ErrorName>] message" so they survive rendering.
struct Observation {
    std::string source;
    std::string payload;
    /// Structured retrieval result for rag observations; not rendered.
    std::shared_ptr<const RagResult> attachment;

    static Observation
    failure(std::string source, ErrorType type, std::string_view message);

    std::optional<ErrorType>
    error() const;

    /// Compares the rendered fields only.
    bool
    operator==(const Observation& other) const {
        return source == other.source && payload == other.payload;
    }
};

inline constexpr std::string_view kEnvironmentSource = "environment";

struct FinalAnswer {
    std::string choice;

    bool
    operator==(const FinalAnswer&) const = default;
};

/// Policy output that could not be read as a tool call or a valid answer.
/// Rendered as a JSON string inside <tool>, which can never parse as a call.
struct MalformedAction {
    std::string raw;

    bool
    operator==(const MalformedAction&) const = default;
};

using Action = std::variant<ToolCall, FinalAnswer, MalformedAction>;

struct CoTTStep {
    std::string thought;
    Action action;
    std::optional<Observation> observation;

    bool
    operator==(const CoTTStep&) const = default;
};

struct Option {
    std::string label;
    std::string text;

    bool
    operator==(const Option&) const = default;
};

struct Trajectory {
    std::string question_id;
    std::string view_id;
    std::string question;
    std::vector<Option> options;
    Timestamp query_time;
    std::vector<CoTTStep> steps;
    /// Set by the post-episode summary hook when the policy never answered.
    std::optional<FinalAnswer> assisted_answer;

    /// The final <answer>, or the answer carried by a closing terminate call
    /// that was not rejected.
    std::optional<FinalAnswer>
    answer() const;

    bool
    operator==(const Trajectory&) const = default;
};

/// Matches `text` against the option labels, ignoring case and surrounding
/// whitespace. Returns the canonical label.
std::optional<std::string>
normalize_choice(std::string_view text, std::span<const Option> options);

std::string
render_step(const CoTTStep& step);

/// Steps only, one per line.
std::string
render_trajectory(const Trajectory& trajectory);

/// Inverse of render_trajectory. Text outside tags is ignored. Throws
/// Error(SYNTAX) when segments are out of order (information without a tool,
/// a thought without an action, anything after an answer) and the
/// parse_fragment errors.
std::vector<CoTTStep>
parse_steps(std::string_view text, std::span<const Option> options);

/// One policy output read as a step (observation not yet attached).
struct StepReading {
    CoTTStep step;
    /// Why the output was rejected; set iff the action is MalformedAction.
    std::optional<std::string> problem;
    /// Non-blank text found outside tags.
    std::vector<Segment> stray_text;
};

/// Reads one policy turn: an optional <think> followed by exactly one <tool>
/// or <answer>. Anything else becomes a MalformedAction holding the whole
/// output. Never throws.
StepReading
read_policy_output(std::string_view text, std::span<const Option> options);

struct FormatReport {
    std::vector<bool> step_ok;
    double fraction_ok = 1.0;
    bool answerless = true;

    bool
    ok() const noexcept {
        return fraction_ok == 1.0;
    }
};

/// A step is well formed iff its thought is non-blank and its action is a
/// schema-valid tool call or an answer from the option set. An empty
/// trajectory scores 1.0 and is flagged answerless.
FormatReport
validate_format(const Trajectory& trajectory);

// ---------------------------------------------------------------------------
// Conversations

struct Message {
    std::string role;  // system, user, assistant, tool
    std::string content;

    bool
    operator==(const Message&) const = default;
};

/// "Question: <question> <timestamp> Options: <options>"
std::string
user_prompt(std::string_view question, Timestamp query_time, std::span<const Option> options);

std::string
information_message(const Observation& observation);

/// One SFT conversation as a single JSON line: question metadata plus the
/// system, user, and alternating assistant/tool messages.
std::string
to_sft_line(const Trajectory& trajectory, std::string_view system_prompt);

Trajectory
from_sft_line(std::string_view line);

/// Stored trajectory record: question metadata plus the rendered steps.
std::string
to_trajectory_line(const Trajectory& trajectory);

Trajectory
from_trajectory_line(std::string_view line);

}  // namespace cott
