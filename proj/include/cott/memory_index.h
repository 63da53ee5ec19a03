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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cott/timebase.h"

namespace cott {

/// Summary granularity, finest first. The numeric order is relied upon.
enum class Level : int { CLIP30S = 0, MIN10 = 1, HOUR = 2, DAY = 3, WEEK = 4 };

inline constexpr size_t kLevelCount = 5;
inline constexpr int64_t kMaxClipFrames = 30 * kFramesPerSecond;

std::string_view
level_name(Level level);

std::optional<Level>
level_from_name(std::string_view name);

/// Caption and speech transcript for one (nominally 30 s) clip of one view.
struct ClipLog {
    std::string view_id;
    TimeRange range;
    std::string caption;
    std::string asr;

    /// Text of the leaf node built from this clip.
    std::string
    text() const;

    bool
    operator==(const ClipLog&) const = default;
};

/// Chronologically sorted, non-overlapping clips of a single view.
class ClipStore {
public:
    ClipStore() = default;

    const std::string&
    view_id() const noexcept {
        return view_id_;
    }
    std::span<const ClipLog>
    clips() const noexcept {
        return clips_;
    }
    size_t
    size() const noexcept {
        return clips_.size();
    }
    bool
    empty() const noexcept {
        return clips_.empty();
    }

    /// [first start, last end), or nullopt when empty.
    std::optional<TimeRange>
    bounds() const;

    /// Clips whose range intersects `range`, in order.
    std::span<const ClipLog>
    overlapping(const TimeRange& range) const;

    const ClipLog*
    containing(Timestamp t) const;

    bool
    operator==(const ClipStore&) const = default;

private:
    friend ClipStore
    ingest_clip_logs(std::vector<ClipLog> records);

    std::string view_id_;
    std::vector<ClipLog> clips_;
};

/// Sorts the records and rejects overlaps (OVERLAP), clips longer than 30 s
/// (DURATION) and records from more than one view (MIXED_VIEW).
ClipStore
ingest_clip_logs(std::vector<ClipLog> records);

/// Line-delimited clip records: {"view_id","start","end","caption","asr"}.
std::vector<ClipLog>
read_clip_logs(std::istream& in);
std::vector<ClipLog>
read_clip_logs(const std::filesystem::path& path);
void
write_clip_logs(std::ostream& out, std::span<const ClipLog> clips);

struct SummaryNode {
    Level level = Level::CLIP30S;
    TimeRange range;
    std::string text;
    /// Indices into the next finer level, chronological. Empty for clips.
    std::vector<uint32_t> children;
    /// Lower-cased tokens of `text` joined by single spaces. Derived, never
    /// serialized.
    std::string search_text;

    bool
    operator==(const SummaryNode& other) const {
        return level == other.level && range == other.range && text == other.text &&
               children == other.children;
    }
};

/// Produces the text of an aggregate node from its children's texts.
using Summarizer = std::function<std::string(
    Level level, std::span<const std::string_view> child_texts, const TimeRange& range)>;

/// Deterministic fallback: a "[level START-END]" header line followed by the
/// child texts, one per line.
std::string
concat_summarizer(Level level, std::span<const std::string_view> child_texts,
                  const TimeRange& range);

struct BuildIssue {
    Level level;
    size_t node;
    std::string message;

    bool
    operator==(const BuildIssue&) const = default;
};

/// The per-view hierarchical memory bank. Immutable once built.
class HierIndex {
public:
    HierIndex() = default;

    const std::string&
    view_id() const noexcept {
        return clips_.view_id();
    }
    const ClipStore&
    clips() const noexcept {
        return clips_;
    }

    /// Nodes at `level` in chronological order; empty when the level is absent.
    std::span<const SummaryNode>
    nodes(Level level) const noexcept {
        return levels_[static_cast<size_t>(level)];
    }

    bool
    has_level(Level level) const noexcept {
        return !nodes(level).empty();
    }

    /// Coarsest level present. The present levels always form a contiguous
    /// run starting at CLIP30S.
    Level
    coarsest() const noexcept;

    std::vector<Level>
    depth() const;

    std::span<const BuildIssue>
    issues() const noexcept {
        return issues_;
    }

    std::optional<TimeRange>
    bounds() const {
        return clips_.bounds();
    }

    bool
    operator==(const HierIndex&) const = default;

private:
    friend HierIndex
    build_hierarchy(ClipStore store, const Summarizer& summarizer);
    friend HierIndex
    deserialize_index(std::string_view document);

    ClipStore clips_;
    std::array<std::vector<SummaryNode>, kLevelCount> levels_;
    std::vector<BuildIssue> issues_;
};

/// Aggregates clips bottom-up into wall-clock aligned 10-minute, hour and day
/// nodes plus one week node. A node never bridges a recording gap, so node
/// ranges cover exactly the recorded time. Levels are dropped for short
/// corpora: MIN10 needs a span of 10 min, HOUR a span of 1 h, DAY a span of a
/// day or a crossed midnight, WEEK exists whenever DAY does.
///
/// A summarizer exception is recorded as a BuildIssue and the node falls back
/// to concat_summarizer. Throws Error(INVALID_ARGUMENT) on an empty store.
HierIndex
build_hierarchy(ClipStore store, const Summarizer& summarizer = concat_summarizer);

/// Lower-cases ASCII and splits on anything that is not [A-Za-z0-9] or a
/// non-ASCII byte; tokens are joined by single spaces.
std::string
normalize_for_search(std::string_view text);

class KeywordMatcher {
public:
    virtual ~KeywordMatcher() = default;

    /// The subset of `keywords` that match `node`, in keyword order.
    virtual std::vector<std::string>
    match(const SummaryNode& node, std::span<const std::string> keywords) const = 0;
};

/// Case-insensitive whole-token match; multi-word keywords match as a
/// contiguous token sequence.
class TokenMatcher final : public KeywordMatcher {
public:
    std::vector<std::string>
    match(const SummaryNode& node, std::span<const std::string> keywords) const override;
};

struct RagQuery {
    Level level = Level::DAY;
    std::vector<std::string> keywords;
    Timestamp start_time;
    Timestamp query_time;
};

struct RagHit {
    Level level = Level::CLIP30S;
    size_t node = 0;
    TimeRange range;
    std::string text;
    std::vector<std::string> matched_keywords;

    bool
    operator==(const RagHit&) const = default;
};

struct RagResult {
    Level requested = Level::DAY;
    Level entry = Level::DAY;
    bool clamped = false;
    std::vector<RagHit> hits;
    bool truncated = false;

    bool
    operator==(const RagResult&) const = default;
};

struct QueryOptions {
    /// 0 disables the cap.
    size_t max_hits = 20;
    /// nullptr selects TokenMatcher.
    const KeywordMatcher* matcher = nullptr;
};

/// Top-down retrieval. Enters at `q.level` (clamped to the coarsest present
/// level, flagged in the result), keeps the nodes that intersect
/// [start_time, query_time) and match at least one keyword, then descends
/// exactly one level under each matched node and keeps the matching children
/// in the window. Hits are chronological, coarser first on ties.
///
/// Throws Error(EMPTY_KEYWORDS) or Error(BAD_WINDOW).
RagResult
query(const HierIndex& index, const RagQuery& q, const QueryOptions& options = {});

inline constexpr int kIndexSchemaVersion = 1;

std::string
serialize_index(const HierIndex& index);

/// Throws Error(IO) for unparsable documents and Error(SCHEMA_VERSION) for a
/// missing or unknown version or a structurally invalid tree.
HierIndex
deserialize_index(std::string_view document);

void
save_index(const HierIndex& index, const std::filesystem::path& path);

HierIndex
load_index(const std::filesystem::path& path);

}  // namespace cott
