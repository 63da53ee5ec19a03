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

#include <array>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cott/memory_index.h"
#include "cott/trace.h"

namespace cott {

// ---------------------------------------------------------------------------
// Schemas

struct ArgSpec {
    std::string name;
    std::string type;  // "str", "List[str]"
    std::string description;
    bool required = true;
};

struct ToolSchema {
    std::string name;
    std::string description;
    std::vector<ArgSpec> arguments;
};

/// rag, video_llm and vlm, as shown to the policy.
std::span<const ToolSchema>
builtin_tool_schemas();

/// Episode-closing tool, offered in data-generation mode only.
const ToolSchema&
terminate_schema();

/// Pretty-printed JSON block with four-space indentation.
std::string
serialize_schema(const ToolSchema& schema);

/// Blocks joined by newlines, no trailing newline.
std::string
serialize_schemas(std::span<const ToolSchema> schemas);

// ---------------------------------------------------------------------------
// Pre-verification

struct CorpusContext {
    TimeRange bounds;
    Level coarsest = Level::CLIP30S;
    /// When set, calls may only read footage strictly before this time.
    std::optional<Timestamp> causal_bound;

    static CorpusContext
    from_index(const HierIndex& index);
};

struct ValidatedCall {
    ToolCall call;
    /// Requested rag level when it was lowered to the coarsest available one.
    std::optional<Level> clamped_from;
};

/// Semantic checks past the schema. rag windows must intersect the corpus;
/// video_llm ranges and vlm timestamps must lie inside it. A rag level above
/// the coarsest built level is lowered and flagged rather than rejected.
///
/// Throws Error(OUT_OF_CORPUS) (also for causal violations) or
/// Error(RANGE_INVALID) with the timebase error as cause.
ValidatedCall
preverify(const ToolCall& call, const CorpusContext& context);

// ---------------------------------------------------------------------------
// Backends and dispatch

class Backend {
public:
    virtual ~Backend() = default;

    virtual ToolName
    tool() const = 0;

    /// Returns the observation payload (source is filled in by the
    /// dispatcher). Throws Error on failure.
    virtual Observation
    execute(const ValidatedCall& call) = 0;
};

struct DispatchLimits {
    /// Zero or negative runs the backend inline without a watchdog.
    std::chrono::milliseconds timeout{30000};
    /// In Unicode code points.
    size_t max_payload_chars = 4000;
    /// When false an oversized payload becomes a PayloadTooLarge error.
    bool truncate = true;
};

struct DispatchRecord {
    ToolCall call;
    std::optional<TimeRange> window;
    std::optional<ErrorType> error;
};

/// Thread-safe record of every call that reached a backend.
class DispatchLog {
public:
    void
    record(DispatchRecord entry);

    std::vector<DispatchRecord>
    records() const;

    size_t
    size() const;

    void
    clear();

private:
    mutable std::mutex mutex_;
    std::vector<DispatchRecord> records_;
};

/// Cuts `payload` to `max_chars` code points and appends a marker line when
/// anything was removed.
std::string
truncate_payload(std::string_view payload, size_t max_chars);

/// Routes validated calls to one backend per tool. Configure before sharing;
/// dispatch() is safe to call concurrently.
class Dispatcher {
public:
    explicit Dispatcher(DispatchLimits limits = {}) : limits_(limits) {
    }

    /// Replaces any backend registered for the same tool.
    void
    set_backend(std::shared_ptr<Backend> backend);

    bool
    has_backend(ToolName tool) const;

    void
    set_log(std::shared_ptr<DispatchLog> log) {
        log_ = std::move(log);
    }

    const std::shared_ptr<DispatchLog>&
    log() const noexcept {
        return log_;
    }

    const DispatchLimits&
    limits() const noexcept {
        return limits_;
    }

    void
    set_limits(DispatchLimits limits) {
        limits_ = limits;
    }

    /// Never throws: missing backends, timeouts and backend errors come back
    /// as error observations.
    Observation
    dispatch(const ValidatedCall& call) const;

    Observation
    dispatch(const ValidatedCall& call, const DispatchLimits& limits) const;

private:
    std::array<std::shared_ptr<Backend>, kToolCount> backends_;
    DispatchLimits limits_;
    std::shared_ptr<DispatchLog> log_;
};

/// Header line plus one block per hit: "[level START-END] matched: kw, kw"
/// followed by up to three lines of the node text that contain a matched
/// keyword.
std::string
format_rag_payload(const RagResult& result);

std::shared_ptr<Backend>
make_mock_rag(std::shared_ptr<const HierIndex> index, size_t max_hits = 20);

/// One "[START-END] caption / asr" line per clip overlapping the range.
std::shared_ptr<Backend>
make_mock_video_llm(std::shared_ptr<const HierIndex> index);

/// The single clip containing the timestamp, or a note when it falls in a
/// recording gap.
std::shared_ptr<Backend>
make_mock_vlm(std::shared_ptr<const HierIndex> index);

std::shared_ptr<Backend>
make_terminate_backend();

/// All four tools backed by mocks over `index`.
std::shared_ptr<Dispatcher>
make_mock_dispatcher(std::shared_ptr<const HierIndex> index, DispatchLimits limits = {},
                     size_t max_hits = 20);

}  // namespace cott
