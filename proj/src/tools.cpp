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

#include "cott/tools.h"

#include <future>
#include <thread>

#include <nlohmann/json.hpp>

namespace cott {
namespace {

std::string
json_quoted(std::string_view s) {
    return nlohmann::json(s).dump();
}

bool
is_continuation(char c) {
    return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

// Byte length of the first `max_chars` code points, or npos if shorter.
size_t
prefix_bytes(std::string_view s, size_t max_chars) {
    size_t chars = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (is_continuation(s[i])) {
            continue;
        }
        if (chars == max_chars) {
            return i;
        }
        ++chars;
    }
    return std::string_view::npos;
}

size_t
count_chars(std::string_view s) {
    size_t n = 0;
    for (char c : s) {
        n += is_continuation(c) ? 0 : 1;
    }
    return n;
}

std::string
padded(std::string_view text) {
    std::string out = " ";
    out += normalize_for_search(text);
    out += " ";
    return out;
}

}  // namespace

std::span<const ToolSchema>
builtin_tool_schemas() {
    static const std::vector<ToolSchema> kSchemas{
        {"rag",
         "Use this tool to search for information in the RAG database.",
         {
             {"level", "str", "The granularity of the search, choose from week|day|hour"},
             {"keywords", "List[str]", "The keywords to search for in the RAG database."},
             {"start_time", "str",
              "The timestamp of the start time of the search. The format should be "
              "DAYX_HHMMSSFF (X is the day number, HHMMSS is the hour, minute, second, and FF "
              "is the frame number(00~19))."},
             {"query_time", "str", "The timestamp of the query that was proposed by the user."},
         }},
        {"video_llm",
         "Use this tool to get the answer from the video language model.",
         {
             {"question", "str",
              "The question you want to use the video language model to answer."},
             {"range", "str",
              "The timestamp range of the video to answer the question. Use the format "
              "'DAYX_HHMMSSFF-DAYX_HHMMSSFF'. The ending timestamp should be strictly larger "
              "than the start timestamp. The length of the range should be smaller than 10 "
              "minutes, greater than 1 second."},
         }},
        {"vlm",
         "Use this tool to get the answer from the vision language model.",
         {
             {"question", "str",
              "The question you want to use the vision language model to answer."},
             {"timestamp", "str", "The timestamp of the video to answer the question."},
         }},
    };
    return kSchemas;
}

const ToolSchema&
terminate_schema() {
    static const ToolSchema kSchema{
        "terminate",
        "Use this tool to end the episode and submit the final answer.",
        {{"answer", "str", "The label of the option you choose."}},
    };
    return kSchema;
}

std::string
serialize_schema(const ToolSchema& schema) {
    std::string out = "{\n";
    out += "    \"name\": " + json_quoted(schema.name) + ",\n";
    out += "    \"description\": " + json_quoted(schema.description) + ",\n";
    out += "    \"arguments\": {\n";
    out += "        \"type\": \"object\",\n";
    out += "        \"properties\": {\n";
    std::string required;
    for (size_t i = 0; i < schema.arguments.size(); ++i) {
        const ArgSpec& arg = schema.arguments[i];
        out += "            " + json_quoted(arg.name) + ": {\n";
        out += "                \"type\": " + json_quoted(arg.type) + ",\n";
        out += "                \"description\": " + json_quoted(arg.description) + "\n";
        out += i + 1 < schema.arguments.size() ? "            },\n" : "            }\n";
        if (arg.required) {
            required += required.empty() ? "" : ", ";
            required += json_quoted(arg.name);
        }
    }
    out += "        },\n";
    out += "        \"required\": [" + required + "]\n";
    out += "    }\n";
    out += "}";
    return out;
}

std::string
serialize_schemas(std::span<const ToolSchema> schemas) {
    std::string out;
    for (const auto& s : schemas) {
        if (!out.empty()) {
            out += "\n";
        }
        out += serialize_schema(s);
    }
    return out;
}

CorpusContext
CorpusContext::from_index(const HierIndex& index) {
    auto bounds = index.bounds();
    if (!bounds) {
        throw Error(ErrorType::INVALID_ARGUMENT, "index has no clips");
    }
    return CorpusContext{*bounds, index.coarsest(), std::nullopt};
}

ValidatedCall
preverify(const ToolCall& call, const CorpusContext& context) {
    if (const auto* video = std::get_if<VideoLlmArgs>(&call.args)) {
        try {
            validate_video_range(video->range);
        } catch (const Error& e) {
            throw Error(ErrorType::RANGE_INVALID, e.type(), "arguments.range", e.what());
        }
    }
    validate_tool_call(call);
    ValidatedCall out{call, std::nullopt};
    const TimeRange& bounds = context.bounds;
    std::string tool(tool_name(call.name()));

    if (auto* rag = std::get_if<RagArgs>(&out.call.args)) {
        TimeRange window(rag->start_time, rag->query_time);
        if (!window.intersects(bounds)) {
            throw Error(ErrorType::OUT_OF_CORPUS,
                        "rag window " + format_range(window) + " lies outside the recording " +
                            format_range(bounds));
        }
        if (rag->level > context.coarsest) {
            out.clamped_from = rag->level;
            rag->level = context.coarsest;
        }
    } else if (const auto* video = std::get_if<VideoLlmArgs>(&call.args)) {
        if (!bounds.contains(video->range)) {
            throw Error(ErrorType::OUT_OF_CORPUS, "range " + format_range(video->range) +
                                                      " is not inside the recording " +
                                                      format_range(bounds));
        }
    } else if (const auto* vlm = std::get_if<VlmArgs>(&call.args)) {
        if (!bounds.contains(vlm->timestamp)) {
            throw Error(ErrorType::OUT_OF_CORPUS, "timestamp " + format_timestamp(vlm->timestamp) +
                                                      " is not inside the recording " +
                                                      format_range(bounds));
        }
    }

    if (context.causal_bound) {
        auto window = referenced_window(call);
        if (window && window->end() > *context.causal_bound) {
            throw Error(ErrorType::OUT_OF_CORPUS,
                        tool + " reads footage after the query time " +
                            format_timestamp(*context.causal_bound));
        }
    }
    return out;
}

void
DispatchLog::record(DispatchRecord entry) {
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(entry));
}

std::vector<DispatchRecord>
DispatchLog::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

size_t
DispatchLog::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

void
DispatchLog::clear() {
    std::lock_guard lock(mutex_);
    records_.clear();
}

std::string
truncate_payload(std::string_view payload, size_t max_chars) {
    size_t cut = prefix_bytes(payload, max_chars);
    if (cut == std::string_view::npos) {
        return std::string(payload);
    }
    std::string out(payload.substr(0, cut));
    out += "\n[truncated: " + std::to_string(max_chars) + " of " +
           std::to_string(count_chars(payload)) + " characters shown]";
    return out;
}

void
Dispatcher::set_backend(std::shared_ptr<Backend> backend) {
    if (!backend) {
        throw Error(ErrorType::INVALID_ARGUMENT, "null backend");
    }
    backends_[static_cast<size_t>(backend->tool())] = std::move(backend);
}

bool
Dispatcher::has_backend(ToolName tool) const {
    return backends_[static_cast<size_t>(tool)] != nullptr;
}

Observation
Dispatcher::dispatch(const ValidatedCall& call) const {
    return dispatch(call, limits_);
}

Observation
Dispatcher::dispatch(const ValidatedCall& call, const DispatchLimits& limits) const {
    std::string source(tool_name(call.call.name()));
    std::shared_ptr<Backend> backend = backends_[static_cast<size_t>(call.call.name())];

    auto run = [&]() -> Observation {
        if (!backend) {
            return Observation::failure(source, ErrorType::TOOL_UNAVAILABLE,
                                        "no backend registered for " + source);
        }
        try {
            if (limits.timeout.count() <= 0) {
                return backend->execute(call);
            }
            // The worker owns copies of everything it touches so it can outlive
            // this call after a timeout.
            auto promise = std::make_shared<std::promise<Observation>>();
            auto future = promise->get_future();
            std::thread([backend, call, promise] {
                try {
                    promise->set_value(backend->execute(call));
                } catch (...) {
                    promise->set_exception(std::current_exception());
                }
            }).detach();
            if (future.wait_for(limits.timeout) != std::future_status::ready) {
                return Observation::failure(source, ErrorType::TIMEOUT,
                                            source + " did not answer within " +
                                                std::to_string(limits.timeout.count()) + " ms");
            }
            return future.get();
        } catch (const Error& e) {
            return Observation::failure(source, e.type(), e.what());
        } catch (const std::exception& e) {
            return Observation::failure(source, ErrorType::BACKEND, e.what());
        }
    };

    Observation obs = run();
    obs.source = source;
    if (limits.max_payload_chars > 0 && count_chars(obs.payload) > limits.max_payload_chars) {
        if (limits.truncate) {
            obs.payload = truncate_payload(obs.payload, limits.max_payload_chars);
        } else {
            obs = Observation::failure(source, ErrorType::PAYLOAD_TOO_LARGE,
                                       "payload of " + std::to_string(count_chars(obs.payload)) +
                                           " characters exceeds the cap of " +
                                           std::to_string(limits.max_payload_chars));
        }
    }
    if (log_) {
        log_->record({call.call, referenced_window(call.call), obs.error()});
    }
    return obs;
}

std::string
format_rag_payload(const RagResult& result) {
    std::string out = "rag entry=" + std::string(level_name(result.entry)) +
                      " hits=" + std::to_string(result.hits.size());
    if (result.clamped) {
        out += " (requested " + std::string(level_name(result.requested)) + ", not built)";
    }
    if (result.truncated) {
        out += " (more hits omitted)";
    }
    if (result.hits.empty()) {
        out += "\nNo matching entries.";
    }
    for (const auto& hit : result.hits) {
        out += "\n[" + std::string(level_name(hit.level)) + " " + format_range(hit.range) +
               "] matched: ";
        std::vector<std::string> needles;
        for (size_t i = 0; i < hit.matched_keywords.size(); ++i) {
            out += i == 0 ? "" : ", ";
            out += hit.matched_keywords[i];
            needles.push_back(padded(hit.matched_keywords[i]));
        }
        size_t shown = 0;
        std::string_view text = hit.text;
        size_t pos = 0;
        while (shown < 3 && pos <= text.size()) {
            size_t nl = text.find('\n', pos);
            if (nl == std::string_view::npos) {
                nl = text.size();
            }
            std::string_view line = text.substr(pos, nl - pos);
            pos = nl + 1;
            std::string hay = padded(line);
            bool relevant = false;
            for (const auto& n : needles) {
                relevant = relevant || hay.find(n) != std::string::npos;
            }
            if (!relevant) {
                continue;
            }
            size_t cut = prefix_bytes(line, 200);
            out += "\n  ";
            out += cut == std::string_view::npos ? line : line.substr(0, cut);
            ++shown;
        }
    }
    return out;
}

namespace {

class MockRag final : public Backend {
public:
    MockRag(std::shared_ptr<const HierIndex> index, size_t max_hits)
        : index_(std::move(index)), max_hits_(max_hits) {
    }

    ToolName
    tool() const override {
        return ToolName::RAG;
    }

    Observation
    execute(const ValidatedCall& call) override {
        const auto& args = std::get<RagArgs>(call.call.args);
        RagQuery q{args.level, args.keywords, args.start_time, args.query_time};
        if (!index_->bounds()->intersects(TimeRange(args.start_time, args.query_time))) {
            throw Error(ErrorType::OUT_OF_CORPUS, "no footage in the search window");
        }
        auto result = std::make_shared<RagResult>(query(*index_, q, {max_hits_, nullptr}));
        if (call.clamped_from) {
            result->requested = *call.clamped_from;
            result->clamped = true;
        }
        Observation obs;
        obs.payload = format_rag_payload(*result);
        obs.attachment = std::move(result);
        return obs;
    }

private:
    std::shared_ptr<const HierIndex> index_;
    size_t max_hits_;
};

std::string
clip_line(const ClipLog& clip) {
    std::string line = "[" + format_range(clip.range) + "] " + clip.caption;
    if (!clip.asr.empty()) {
        line += " / " + clip.asr;
    }
    for (char& c : line) {
        if (c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    return line;
}

class MockVideoLlm final : public Backend {
public:
    explicit MockVideoLlm(std::shared_ptr<const HierIndex> index) : index_(std::move(index)) {
    }

    ToolName
    tool() const override {
        return ToolName::VIDEO_LLM;
    }

    Observation
    execute(const ValidatedCall& call) override {
        const auto& args = std::get<VideoLlmArgs>(call.call.args);
        try {
            validate_video_range(args.range);
        } catch (const Error& e) {
            throw Error(ErrorType::RANGE_INVALID, e.type(), "arguments.range", e.what());
        }
        if (!index_->bounds()->contains(args.range)) {
            throw Error(ErrorType::OUT_OF_CORPUS,
                        format_range(args.range) + " is outside the recording");
        }
        Observation obs;
        for (const auto& clip : index_->clips().overlapping(args.range)) {
            obs.payload += obs.payload.empty() ? "" : "\n";
            obs.payload += clip_line(clip);
        }
        if (obs.payload.empty()) {
            obs.payload = "No footage was recorded in " + format_range(args.range) + ".";
        }
        return obs;
    }

private:
    std::shared_ptr<const HierIndex> index_;
};

class MockVlm final : public Backend {
public:
    explicit MockVlm(std::shared_ptr<const HierIndex> index) : index_(std::move(index)) {
    }

    ToolName
    tool() const override {
        return ToolName::VLM;
    }

    Observation
    execute(const ValidatedCall& call) override {
        const auto& args = std::get<VlmArgs>(call.call.args);
        if (!index_->bounds()->contains(args.timestamp)) {
            throw Error(ErrorType::OUT_OF_CORPUS,
                        format_timestamp(args.timestamp) + " is outside the recording");
        }
        const ClipLog* clip = index_->clips().containing(args.timestamp);
        Observation obs;
        obs.payload = clip ? clip_line(*clip)
                           : "No footage was recorded at " + format_timestamp(args.timestamp) + ".";
        return obs;
    }

private:
    std::shared_ptr<const HierIndex> index_;
};

class TerminateBackend final : public Backend {
public:
    ToolName
    tool() const override {
        return ToolName::TERMINATE;
    }

    Observation
    execute(const ValidatedCall& call) override {
        const auto& args = std::get<TerminateArgs>(call.call.args);
        Observation obs;
        obs.payload = "Episode terminated with answer " + args.answer + ".";
        return obs;
    }
};

}  // namespace

std::shared_ptr<Backend>
make_mock_rag(std::shared_ptr<const HierIndex> index, size_t max_hits) {
    return std::make_shared<MockRag>(std::move(index), max_hits);
}

std::shared_ptr<Backend>
make_mock_video_llm(std::shared_ptr<const HierIndex> index) {
    return std::make_shared<MockVideoLlm>(std::move(index));
}

std::shared_ptr<Backend>
make_mock_vlm(std::shared_ptr<const HierIndex> index) {
    return std::make_shared<MockVlm>(std::move(index));
}

std::shared_ptr<Backend>
make_terminate_backend() {
    return std::make_shared<TerminateBackend>();
}

std::shared_ptr<Dispatcher>
make_mock_dispatcher(std::shared_ptr<const HierIndex> index, DispatchLimits limits,
                     size_t max_hits) {
    auto d = std::make_shared<Dispatcher>(limits);
    d->set_backend(make_mock_rag(index, max_hits));
    d->set_backend(make_mock_video_llm(index));
    d->set_backend(make_mock_vlm(index));
    d->set_backend(make_terminate_backend());
    return d;
}

}  // namespace cott
