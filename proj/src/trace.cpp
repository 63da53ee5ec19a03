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

#include "cott/trace.h"

#include <algorithm>
#include <array>

#include <nlohmann/json.hpp>

#include "cott/io.h"

namespace cott {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 4> kTagNames{"think", "tool", "information", "answer"};
constexpr std::array<std::string_view, kToolCount> kToolNames{"rag", "video_llm", "vlm",
                                                               "terminate"};
constexpr size_t kMaxJsonDepth = 32;

struct TagToken {
    bool closing = false;
    std::string_view name;
    size_t end = 0;  // one past '>'
};

bool
is_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool
is_name_char(char c) {
    return is_alpha(c) || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

// Reads `<name>` or `</name>` at `pos`; anything else is plain text.
std::optional<TagToken>
read_tag(std::string_view text, size_t pos) {
    size_t i = pos + 1;
    TagToken tag;
    if (i < text.size() && text[i] == '/') {
        tag.closing = true;
        ++i;
    }
    size_t name_begin = i;
    if (i >= text.size() || !is_alpha(text[i])) {
        return std::nullopt;
    }
    while (i < text.size() && is_name_char(text[i])) {
        ++i;
    }
    if (i >= text.size() || text[i] != '>') {
        return std::nullopt;
    }
    tag.name = text.substr(name_begin, i - name_begin);
    tag.end = i + 1;
    return tag;
}

std::optional<SegmentKind>
kind_from_tag(std::string_view name) {
    for (size_t i = 0; i < kTagNames.size(); ++i) {
        if (kTagNames[i] == name) {
            return static_cast<SegmentKind>(i);
        }
    }
    return std::nullopt;
}

bool
is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string_view
trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool
exceeds_depth(std::string_view body) {
    size_t depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (char c : body) {
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            if (++depth > kMaxJsonDepth) {
                return true;
            }
        } else if ((c == '}' || c == ']') && depth > 0) {
            --depth;
        }
    }
    return false;
}

[[noreturn]] void
fail_argument(ErrorType type, const std::string& path, const std::string& message) {
    throw Error(type, type, path, message);
}

[[noreturn]] void
fail_type(const std::string& path, const std::string& message) {
    throw Error(ErrorType::ARGUMENT_TYPE, ErrorType::ARGUMENT_TYPE, path, message);
}

template <typename Fn>
auto
with_cause(const std::string& path, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(ErrorType::ARGUMENT_TYPE, e.type(), path, e.what());
    }
}

// Schema order of the argument names per tool.
std::span<const std::string_view>
argument_names(ToolName tool) {
    static constexpr std::array<std::string_view, 4> kRag{"level", "keywords", "start_time",
                                                          "query_time"};
    static constexpr std::array<std::string_view, 2> kVideo{"question", "range"};
    static constexpr std::array<std::string_view, 2> kVlm{"question", "timestamp"};
    static constexpr std::array<std::string_view, 1> kTerminate{"answer"};
    switch (tool) {
        case ToolName::RAG:
            return kRag;
        case ToolName::VIDEO_LLM:
            return kVideo;
        case ToolName::VLM:
            return kVlm;
        case ToolName::TERMINATE:
            return kTerminate;
    }
    return {};
}

std::string
arg_path(std::string_view name) {
    return "arguments." + std::string(name);
}

const std::string&
expect_string(const json& args, std::string_view name) {
    const json& v = args.at(std::string(name));
    if (!v.is_string()) {
        fail_type(arg_path(name), "expected a string, got " + std::string(v.type_name()));
    }
    return v.get_ref<const std::string&>();
}

Timestamp
expect_timestamp(const json& args, std::string_view name) {
    const std::string& s = expect_string(args, name);
    return with_cause(arg_path(name), [&] { return parse_timestamp(s); });
}

void
require_text(const std::string& value, std::string_view name) {
    if (is_blank(value)) {
        fail_type(arg_path(name), "must not be blank");
    }
}

ToolCall
call_from_json(ToolName tool, const json& args) {
    switch (tool) {
        case ToolName::RAG: {
            RagArgs a;
            const std::string& level = expect_string(args, "level");
            if (level != "week" && level != "day" && level != "hour") {
                fail_type("arguments.level", "'" + level + "' is not one of week|day|hour");
            }
            a.level = *level_from_name(level);
            const json& kws = args.at("keywords");
            if (!kws.is_array()) {
                fail_type("arguments.keywords", "expected a list of strings");
            }
            for (const auto& k : kws) {
                if (!k.is_string()) {
                    fail_type("arguments.keywords", "expected a list of strings");
                }
                a.keywords.push_back(k.get<std::string>());
            }
            a.start_time = expect_timestamp(args, "start_time");
            a.query_time = expect_timestamp(args, "query_time");
            return ToolCall{std::move(a)};
        }
        case ToolName::VIDEO_LLM: {
            VideoLlmArgs a;
            a.question = expect_string(args, "question");
            const std::string& range = expect_string(args, "range");
            a.range = with_cause("arguments.range", [&] { return parse_range(range); });
            return ToolCall{std::move(a)};
        }
        case ToolName::VLM: {
            VlmArgs a;
            a.question = expect_string(args, "question");
            a.timestamp = expect_timestamp(args, "timestamp");
            return ToolCall{std::move(a)};
        }
        case ToolName::TERMINATE:
            return ToolCall{TerminateArgs{expect_string(args, "answer")}};
    }
    throw Error(ErrorType::UNKNOWN_TOOL, "unreachable");
}

std::string
options_list(std::span<const Option> options) {
    std::string out;
    for (const auto& o : options) {
        if (!out.empty()) {
            out += ", ";
        }
        out += o.label;
    }
    return out;
}

std::string
action_markup(const Action& action) {
    struct Visitor {
        std::string
        operator()(const ToolCall& call) const {
            return "<tool>" + escape_body(tool_call_json(call)) + "</tool>";
        }
        std::string
        operator()(const FinalAnswer& answer) const {
            return "<answer>" + escape_body(answer.choice) + "</answer>";
        }
        std::string
        operator()(const MalformedAction& bad) const {
            return "<tool>" +
                   escape_body(json(bad.raw).dump(-1, ' ', false, json::error_handler_t::replace)) +
                   "</tool>";
        }
    };
    return std::visit(Visitor{}, action);
}

Action
action_from_tool_body(const std::string& body) {
    try {
        return parse_tool_call(body);
    } catch (const Error&) {
    }
    json j = json::parse(body, nullptr, false);
    if (!j.is_discarded() && j.is_string()) {
        return MalformedAction{j.get<std::string>()};
    }
    return MalformedAction{body};
}

std::string
observation_source(const Action& action) {
    if (const auto* call = std::get_if<ToolCall>(&action)) {
        return std::string(tool_name(call->name()));
    }
    return std::string(kEnvironmentSource);
}

json
options_json(std::span<const Option> options) {
    json out = json::array();
    for (const auto& o : options) {
        out.push_back({{"label", o.label}, {"text", o.text}});
    }
    return out;
}

std::vector<Option>
options_from_json(const json& j) {
    std::vector<Option> out;
    for (const auto& o : j) {
        out.push_back({o.at("label").get<std::string>(), o.at("text").get<std::string>()});
    }
    return out;
}

std::string
dump_line(const json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace

std::string_view
segment_tag(SegmentKind kind) {
    if (kind == SegmentKind::TEXT) {
        return "";
    }
    return kTagNames[static_cast<size_t>(kind)];
}

std::vector<Segment>
parse_fragment(std::string_view text) {
    std::vector<Segment> out;
    // TEXT marks "no tag open".
    SegmentKind open = SegmentKind::TEXT;
    size_t open_offset = 0;
    size_t body_begin = 0;
    size_t text_begin = 0;
    size_t pos = 0;

    auto flush_text = [&](size_t end) {
        std::string_view run = text.substr(text_begin, end - text_begin);
        if (!is_blank(run)) {
            out.push_back({SegmentKind::TEXT, std::string(run), text_begin});
        }
    };

    while (pos < text.size()) {
        if (text[pos] != '<') {
            ++pos;
            continue;
        }
        auto tag = read_tag(text, pos);
        if (!tag) {
            ++pos;
            continue;
        }
        auto kind = kind_from_tag(tag->name);
        if (!kind) {
            throw Error(ErrorType::UNKNOWN_TAG, "unknown tag <" + std::string(tag->name) +
                                                    "> at offset " + std::to_string(pos));
        }
        if (open == SegmentKind::TEXT) {
            if (tag->closing) {
                throw Error(ErrorType::UNCLOSED_TAG, "</" + std::string(tag->name) +
                                                         "> at offset " + std::to_string(pos) +
                                                         " closes nothing");
            }
            flush_text(pos);
            open = *kind;
            open_offset = pos;
            body_begin = tag->end;
        } else if (tag->closing && *kind == open) {
            out.push_back({open, unescape_body(text.substr(body_begin, pos - body_begin)),
                           open_offset});
            open = SegmentKind::TEXT;
            text_begin = tag->end;
        } else if (!tag->closing) {
            throw Error(ErrorType::NESTED_TAG, "<" + std::string(tag->name) + "> at offset " +
                                                   std::to_string(pos) + " inside <" +
                                                   std::string(segment_tag(open)) + ">");
        } else {
            throw Error(ErrorType::UNCLOSED_TAG, "<" + std::string(segment_tag(open)) +
                                                     "> at offset " + std::to_string(open_offset) +
                                                     " is closed by </" +
                                                     std::string(tag->name) + ">");
        }
        pos = tag->end;
    }
    if (open != SegmentKind::TEXT) {
        throw Error(ErrorType::UNCLOSED_TAG, "<" + std::string(segment_tag(open)) +
                                                 "> at offset " + std::to_string(open_offset) +
                                                 " is never closed");
    }
    flush_text(text.size());
    return out;
}

std::string
escape_body(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            default:
                out.push_back(c);
        }
    }
    return out;
}

std::string
unescape_body(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '&') {
            std::string_view rest = text.substr(i);
            if (rest.starts_with("&amp;")) {
                out.push_back('&');
                i += 5;
                continue;
            }
            if (rest.starts_with("&lt;")) {
                out.push_back('<');
                i += 4;
                continue;
            }
            if (rest.starts_with("&gt;")) {
                out.push_back('>');
                i += 4;
                continue;
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

std::string_view
tool_name(ToolName tool) {
    return kToolNames[static_cast<size_t>(tool)];
}

std::optional<ToolName>
tool_from_name(std::string_view name) {
    for (size_t i = 0; i < kToolNames.size(); ++i) {
        if (kToolNames[i] == name) {
            return static_cast<ToolName>(i);
        }
    }
    return std::nullopt;
}

ToolCall
parse_tool_call(std::string_view body) {
    if (exceeds_depth(body)) {
        throw Error(ErrorType::JSON_SYNTAX, "tool body nests deeper than " +
                                                std::to_string(kMaxJsonDepth) + " levels");
    }
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorType::JSON_SYNTAX, "tool body is not valid JSON");
    }
    if (!doc.is_object()) {
        throw Error(ErrorType::JSON_SYNTAX, "tool body must be a JSON object");
    }
    for (const auto& [key, _] : doc.items()) {
        if (key != "name" && key != "arguments") {
            fail_argument(ErrorType::EXTRA_ARGUMENT, key, "unexpected key '" + key + "'");
        }
    }
    if (!doc.contains("name")) {
        fail_argument(ErrorType::MISSING_ARGUMENT, "name", "tool call has no name");
    }
    if (!doc["name"].is_string()) {
        fail_type("name", "expected a string");
    }
    const std::string& name = doc["name"].get_ref<const std::string&>();
    auto tool = tool_from_name(name);
    if (!tool) {
        throw Error(ErrorType::UNKNOWN_TOOL, "unknown tool '" + name + "'");
    }
    if (!doc.contains("arguments")) {
        fail_argument(ErrorType::MISSING_ARGUMENT, "arguments", "tool call has no arguments");
    }
    const json& args = doc["arguments"];
    if (!args.is_object()) {
        fail_type("arguments", "expected an object");
    }
    auto names = argument_names(*tool);
    for (auto required : names) {
        if (!args.contains(std::string(required))) {
            fail_argument(ErrorType::MISSING_ARGUMENT, arg_path(required),
                          "missing required argument '" + std::string(required) + "'");
        }
    }
    for (const auto& [key, _] : args.items()) {
        if (std::find(names.begin(), names.end(), key) == names.end()) {
            fail_argument(ErrorType::EXTRA_ARGUMENT, arg_path(key),
                          "'" + name + "' takes no argument '" + key + "'");
        }
    }
    ToolCall call = call_from_json(*tool, args);
    validate_tool_call(call);
    return call;
}

void
validate_tool_call(const ToolCall& call) {
    struct Visitor {
        void
        operator()(const RagArgs& a) const {
            if (a.level != Level::WEEK && a.level != Level::DAY && a.level != Level::HOUR) {
                fail_type("arguments.level", "'" + std::string(level_name(a.level)) +
                                                 "' is not one of week|day|hour");
            }
            if (a.keywords.empty()) {
                throw Error(ErrorType::ARGUMENT_TYPE, ErrorType::EMPTY_KEYWORDS,
                            "arguments.keywords", "keyword list is empty");
            }
            for (const auto& k : a.keywords) {
                if (normalize_for_search(k).empty()) {
                    throw Error(ErrorType::ARGUMENT_TYPE, ErrorType::EMPTY_KEYWORDS,
                                "arguments.keywords", "keyword '" + k + "' has no searchable text");
                }
            }
            if (!(a.start_time < a.query_time)) {
                throw Error(ErrorType::ARGUMENT_TYPE, ErrorType::ORDER, "arguments.query_time",
                            "query_time must be after start_time");
            }
        }
        void
        operator()(const VideoLlmArgs& a) const {
            require_text(a.question, "question");
            with_cause("arguments.range", [&] { validate_video_range(a.range); });
        }
        void
        operator()(const VlmArgs& a) const {
            require_text(a.question, "question");
        }
        void
        operator()(const TerminateArgs& a) const {
            require_text(a.answer, "answer");
        }
    };
    std::visit(Visitor{}, call.args);
}

std::string
tool_call_json(const ToolCall& call) {
    ordered_json args = ordered_json::object();
    struct Visitor {
        ordered_json& args;
        void
        operator()(const RagArgs& a) const {
            args["level"] = level_name(a.level);
            args["keywords"] = a.keywords;
            args["start_time"] = format_timestamp(a.start_time);
            args["query_time"] = format_timestamp(a.query_time);
        }
        void
        operator()(const VideoLlmArgs& a) const {
            args["question"] = a.question;
            args["range"] = format_range(a.range);
        }
        void
        operator()(const VlmArgs& a) const {
            args["question"] = a.question;
            args["timestamp"] = format_timestamp(a.timestamp);
        }
        void
        operator()(const TerminateArgs& a) const {
            args["answer"] = a.answer;
        }
    };
    std::visit(Visitor{args}, call.args);
    ordered_json doc;
    doc["name"] = tool_name(call.name());
    doc["arguments"] = std::move(args);
    return doc.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::optional<TimeRange>
referenced_window(const ToolCall& call) {
    if (const auto* a = std::get_if<RagArgs>(&call.args)) {
        if (a->start_time < a->query_time) {
            return TimeRange(a->start_time, a->query_time);
        }
        return std::nullopt;
    }
    if (const auto* a = std::get_if<VideoLlmArgs>(&call.args)) {
        return a->range;
    }
    if (const auto* a = std::get_if<VlmArgs>(&call.args)) {
        return TimeRange(a->timestamp, Timestamp::from_frame_index(a->timestamp.frame_index() + 1));
    }
    return std::nullopt;
}

Observation
Observation::failure(std::string source, ErrorType type, std::string_view message) {
    Observation obs;
    obs.source = std::move(source);
    obs.payload = "[error:" + std::string(error_type_name(type)) + "] " + std::string(message);
    return obs;
}

std::optional<ErrorType>
Observation::error() const {
    constexpr std::string_view kPrefix = "[error:";
    if (!payload.starts_with(kPrefix)) {
        return std::nullopt;
    }
    size_t close = payload.find(']');
    if (close == std::string::npos) {
        return std::nullopt;
    }
    return error_type_from_name(
        std::string_view(payload).substr(kPrefix.size(), close - kPrefix.size()));
}

std::optional<FinalAnswer>
Trajectory::answer() const {
    if (steps.empty()) {
        return std::nullopt;
    }
    const Action& last = steps.back().action;
    if (const auto* a = std::get_if<FinalAnswer>(&last)) {
        return *a;
    }
    if (const auto* call = std::get_if<ToolCall>(&last)) {
        const auto& obs = steps.back().observation;
        const auto* t = std::get_if<TerminateArgs>(&call->args);
        if (t != nullptr && !(obs && obs->error())) {
            if (auto label = normalize_choice(t->answer, options)) {
                return FinalAnswer{*label};
            }
        }
    }
    return std::nullopt;
}

std::optional<std::string>
normalize_choice(std::string_view text, std::span<const Option> options) {
    std::string_view t = trim(text);
    for (const auto& o : options) {
        if (o.label.size() != t.size()) {
            continue;
        }
        bool same = std::equal(t.begin(), t.end(), o.label.begin(), [](char a, char b) {
            return std::tolower(static_cast<unsigned char>(a)) ==
                   std::tolower(static_cast<unsigned char>(b));
        });
        if (same) {
            return o.label;
        }
    }
    return std::nullopt;
}

std::string
render_step(const CoTTStep& step) {
    std::string out = "<think>" + escape_body(step.thought) + "</think>" + action_markup(step.action);
    if (step.observation) {
        out += information_message(*step.observation);
    }
    return out;
}

std::string
render_trajectory(const Trajectory& trajectory) {
    std::string out;
    for (const auto& step : trajectory.steps) {
        if (!out.empty()) {
            out += "\n";
        }
        out += render_step(step);
    }
    return out;
}

std::vector<CoTTStep>
parse_steps(std::string_view text, std::span<const Option> options) {
    std::vector<Segment> segments;
    for (auto& s : parse_fragment(text)) {
        if (s.kind != SegmentKind::TEXT) {
            segments.push_back(std::move(s));
        }
    }
    std::vector<CoTTStep> steps;
    size_t i = 0;
    while (i < segments.size()) {
        std::string thought;
        if (segments[i].kind == SegmentKind::THINK) {
            thought = std::move(segments[i].body);
            ++i;
        }
        if (i == segments.size()) {
            throw Error(ErrorType::SYNTAX, "thought without a following <tool> or <answer>");
        }
        Segment& act = segments[i++];
        if (act.kind == SegmentKind::TOOL) {
            CoTTStep step{std::move(thought), action_from_tool_body(act.body), std::nullopt};
            if (i < segments.size() && segments[i].kind == SegmentKind::INFORMATION) {
                step.observation =
                    Observation{observation_source(step.action), std::move(segments[i].body), {}};
                ++i;
            }
            steps.push_back(std::move(step));
        } else if (act.kind == SegmentKind::ANSWER) {
            auto label = normalize_choice(act.body, options);
            steps.push_back(CoTTStep{std::move(thought),
                                     FinalAnswer{label ? *label : std::move(act.body)},
                                     std::nullopt});
            if (i != segments.size()) {
                throw Error(ErrorType::SYNTAX, "segments follow the final <answer>");
            }
        } else {
            throw Error(ErrorType::SYNTAX, "<" + std::string(segment_tag(act.kind)) +
                                               "> at offset " + std::to_string(act.offset) +
                                               " is not preceded by a tool call");
        }
    }
    return steps;
}

StepReading
read_policy_output(std::string_view raw, std::span<const Option> options) {
    StepReading reading;
    std::string text = sanitize_utf8(raw);
    auto malformed = [&](std::string thought, std::string problem) {
        reading.step = CoTTStep{std::move(thought), MalformedAction{text}, std::nullopt};
        reading.problem = std::move(problem);
        return reading;
    };

    std::vector<Segment> segments;
    try {
        segments = parse_fragment(text);
    } catch (const Error& e) {
        return malformed("", e.what());
    }
    std::vector<Segment> tags;
    for (auto& s : segments) {
        (s.kind == SegmentKind::TEXT ? reading.stray_text : tags).push_back(std::move(s));
    }

    std::string thought;
    const Segment* act = nullptr;
    if (tags.size() == 2 && tags[0].kind == SegmentKind::THINK) {
        thought = tags[0].body;
        act = &tags[1];
    } else if (tags.size() == 1) {
        act = &tags[0];
    }
    if (act == nullptr || (act->kind != SegmentKind::TOOL && act->kind != SegmentKind::ANSWER)) {
        std::string t = !tags.empty() && tags[0].kind == SegmentKind::THINK ? tags[0].body : "";
        return malformed(std::move(t),
                         "expected an optional <think> followed by exactly one <tool> or <answer>");
    }
    if (act->kind == SegmentKind::TOOL) {
        try {
            reading.step = CoTTStep{std::move(thought), parse_tool_call(act->body), std::nullopt};
        } catch (const Error& e) {
            return malformed(std::move(thought), e.what());
        }
        return reading;
    }
    auto label = normalize_choice(act->body, options);
    if (!label) {
        return malformed(std::move(thought), "answer '" + std::string(trim(act->body)) +
                                                 "' is not one of " + options_list(options));
    }
    reading.step = CoTTStep{std::move(thought), FinalAnswer{*label}, std::nullopt};
    return reading;
}

FormatReport
validate_format(const Trajectory& trajectory) {
    FormatReport report;
    size_t ok = 0;
    for (size_t i = 0; i < trajectory.steps.size(); ++i) {
        const CoTTStep& step = trajectory.steps[i];
        bool good = !is_blank(step.thought);
        if (good) {
            if (const auto* call = std::get_if<ToolCall>(&step.action)) {
                try {
                    validate_tool_call(*call);
                } catch (const Error&) {
                    good = false;
                }
            } else if (const auto* answer = std::get_if<FinalAnswer>(&step.action)) {
                bool in_set = trajectory.options.empty() ||
                              normalize_choice(answer->choice, trajectory.options) == answer->choice;
                good = in_set && i + 1 == trajectory.steps.size();
            } else {
                good = false;
            }
        }
        report.step_ok.push_back(good);
        ok += good ? 1 : 0;
    }
    report.fraction_ok = trajectory.steps.empty()
                             ? 1.0
                             : static_cast<double>(ok) / static_cast<double>(trajectory.steps.size());
    report.answerless = !trajectory.answer().has_value();
    return report;
}

std::string
user_prompt(std::string_view question, Timestamp query_time, std::span<const Option> options) {
    std::string out = "Question: ";
    out += question;
    out += " ";
    out += format_timestamp(query_time);
    out += " Options:";
    for (const auto& o : options) {
        out += " ";
        out += o.label;
        out += ". ";
        out += o.text;
    }
    return out;
}

std::string
information_message(const Observation& observation) {
    return "<information>" + escape_body(observation.payload) + "</information>";
}

std::string
to_sft_line(const Trajectory& trajectory, std::string_view system_prompt) {
    json messages = json::array();
    messages.push_back({{"role", "system"}, {"content", system_prompt}});
    messages.push_back(
        {{"role", "user"},
         {"content", user_prompt(trajectory.question, trajectory.query_time, trajectory.options)}});
    for (const auto& step : trajectory.steps) {
        messages.push_back(
            {{"role", "assistant"},
             {"content", "<think>" + escape_body(step.thought) + "</think>" +
                             action_markup(step.action)}});
        if (step.observation) {
            messages.push_back({{"role", "tool"}, {"content", information_message(*step.observation)}});
        }
    }
    json doc;
    doc["id"] = trajectory.question_id;
    doc["view_id"] = trajectory.view_id;
    doc["question"] = trajectory.question;
    doc["options"] = options_json(trajectory.options);
    doc["query_time"] = format_timestamp(trajectory.query_time);
    doc["messages"] = std::move(messages);
    return dump_line(doc);
}

Trajectory
from_sft_line(std::string_view line) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorType::SYNTAX, "SFT record is not a JSON object");
    }
    try {
        Trajectory t;
        t.question_id = doc.at("id").get<std::string>();
        t.view_id = doc.at("view_id").get<std::string>();
        t.question = doc.at("question").get<std::string>();
        t.options = options_from_json(doc.at("options"));
        t.query_time = parse_timestamp(doc.at("query_time").get<std::string>());
        const json& messages = doc.at("messages");
        if (messages.size() < 2 || messages[0].at("role") != "system" ||
            messages[1].at("role") != "user") {
            throw Error(ErrorType::SYNTAX, "SFT record must open with system and user messages");
        }
        for (size_t i = 2; i < messages.size(); ++i) {
            if (messages[i].at("role") != "assistant") {
                throw Error(ErrorType::SYNTAX, "expected an assistant message at position " +
                                                   std::to_string(i));
            }
            std::string turn = messages[i].at("content").get<std::string>();
            if (i + 1 < messages.size() && messages[i + 1].at("role") == "tool") {
                turn += messages[++i].at("content").get<std::string>();
            }
            auto steps = parse_steps(turn, t.options);
            if (steps.size() != 1) {
                throw Error(ErrorType::SYNTAX, "assistant turn does not hold exactly one step");
            }
            t.steps.push_back(std::move(steps.front()));
        }
        return t;
    } catch (const json::exception& e) {
        throw Error(ErrorType::SYNTAX, std::string("malformed SFT record: ") + e.what());
    }
}

std::string
to_trajectory_line(const Trajectory& trajectory) {
    json doc;
    doc["id"] = trajectory.question_id;
    doc["view_id"] = trajectory.view_id;
    doc["question"] = trajectory.question;
    doc["options"] = options_json(trajectory.options);
    doc["query_time"] = format_timestamp(trajectory.query_time);
    doc["steps"] = render_trajectory(trajectory);
    doc["assisted_answer"] =
        trajectory.assisted_answer ? json(trajectory.assisted_answer->choice) : json(nullptr);
    return dump_line(doc);
}

Trajectory
from_trajectory_line(std::string_view line) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorType::SYNTAX, "trajectory record is not a JSON object");
    }
    try {
        Trajectory t;
        t.question_id = doc.at("id").get<std::string>();
        t.view_id = doc.at("view_id").get<std::string>();
        t.question = doc.at("question").get<std::string>();
        t.options = options_from_json(doc.at("options"));
        t.query_time = parse_timestamp(doc.at("query_time").get<std::string>());
        t.steps = parse_steps(doc.at("steps").get<std::string>(), t.options);
        if (doc.contains("assisted_answer") && doc["assisted_answer"].is_string()) {
            t.assisted_answer = FinalAnswer{doc["assisted_answer"].get<std::string>()};
        }
        return t;
    } catch (const json::exception& e) {
        throw Error(ErrorType::SYNTAX, std::string("malformed trajectory record: ") + e.what());
    }
}

}  // namespace cott
