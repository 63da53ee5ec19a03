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

#include "cott/memory_index.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cott/error.h"
#include "cott/io.h"

namespace cott {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, kLevelCount> kLevelNames{"clip30s", "min10", "hour",
                                                                "day", "week"};

// Bucket width of the wall-clock alignment per aggregate level; WEEK has a
// single bucket.
int64_t
bucket_frames(Level level) {
    switch (level) {
        case Level::MIN10:
            return 10 * kFramesPerMinute;
        case Level::HOUR:
            return kFramesPerHour;
        case Level::DAY:
            return kFramesPerDay;
        default:
            return 0;
    }
}

bool
is_token_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

size_t
present_depth(Level coarsest) {
    return static_cast<size_t>(coarsest) + 1;
}

Level
coarsest_for(const ClipStore& store) {
    TimeRange span = *store.bounds();
    int64_t frames = span.duration().frames;
    if (frames < 10 * kFramesPerMinute) {
        return Level::CLIP30S;
    }
    if (frames < kFramesPerHour) {
        return Level::MIN10;
    }
    Timestamp last_frame = Timestamp::from_frame_index(span.end().frame_index() - 1);
    bool crosses_midnight = last_frame.day() != span.start().day();
    if (frames < kFramesPerDay && !crosses_midnight) {
        return Level::HOUR;
    }
    return Level::WEEK;
}

std::vector<SummaryNode>
aggregate(Level level, const std::vector<SummaryNode>& finer, const Summarizer& summarizer,
          std::vector<BuildIssue>& issues) {
    std::vector<std::vector<uint32_t>> groups;
    int64_t width = bucket_frames(level);
    for (uint32_t i = 0; i < finer.size(); ++i) {
        bool start_new = groups.empty();
        if (!start_new && width > 0) {
            const SummaryNode& prev = finer[groups.back().back()];
            const SummaryNode& cur = finer[i];
            bool same_bucket = prev.range.start().frame_index() / width ==
                               cur.range.start().frame_index() / width;
            bool contiguous = prev.range.end() == cur.range.start();
            start_new = !same_bucket || !contiguous;
        }
        if (start_new) {
            groups.emplace_back();
        }
        groups.back().push_back(i);
    }

    std::vector<SummaryNode> nodes;
    nodes.reserve(groups.size());
    for (auto& group : groups) {
        TimeRange range(finer[group.front()].range.start(), finer[group.back()].range.end());
        std::vector<std::string_view> texts;
        texts.reserve(group.size());
        for (uint32_t child : group) {
            texts.emplace_back(finer[child].text);
        }
        std::string text;
        try {
            text = summarizer(level, texts, range);
        } catch (const std::exception& e) {
            issues.push_back({level, nodes.size(), e.what()});
            text = concat_summarizer(level, texts, range);
        }
        nodes.push_back(SummaryNode{level, range, std::move(text), std::move(group), {}});
    }
    return nodes;
}

bool
contains_phrase(std::string_view haystack, std::string_view needle) {
    size_t pos = haystack.find(needle);
    while (pos != std::string_view::npos) {
        bool left = pos == 0 || haystack[pos - 1] == ' ';
        size_t end = pos + needle.size();
        bool right = end == haystack.size() || haystack[end] == ' ';
        if (left && right) {
            return true;
        }
        pos = haystack.find(needle, pos + 1);
    }
    return false;
}

// Index of the first node whose end lies after `t`. Nodes of one level are
// chronological and non-overlapping, so ends are sorted as well.
size_t
first_ending_after(std::span<const SummaryNode> nodes, Timestamp t) {
    auto it = std::partition_point(nodes.begin(), nodes.end(),
                                   [&](const SummaryNode& n) { return n.range.end() <= t; });
    return static_cast<size_t>(it - nodes.begin());
}

void
fill_search_text(std::array<std::vector<SummaryNode>, kLevelCount>& levels) {
    for (auto& level : levels) {
        for (auto& node : level) {
            node.search_text = normalize_for_search(node.text);
        }
    }
}

std::string
json_error_context(const std::exception& e) {
    return e.what();
}

}  // namespace

std::string_view
level_name(Level level) {
    return kLevelNames[static_cast<size_t>(level)];
}

std::optional<Level>
level_from_name(std::string_view name) {
    for (size_t i = 0; i < kLevelNames.size(); ++i) {
        if (kLevelNames[i] == name) {
            return static_cast<Level>(i);
        }
    }
    return std::nullopt;
}

std::string
ClipLog::text() const {
    if (asr.empty()) {
        return caption;
    }
    return caption + "\n" + asr;
}

std::optional<TimeRange>
ClipStore::bounds() const {
    if (clips_.empty()) {
        return std::nullopt;
    }
    return TimeRange(clips_.front().range.start(), clips_.back().range.end());
}

std::span<const ClipLog>
ClipStore::overlapping(const TimeRange& range) const {
    auto first = std::partition_point(clips_.begin(), clips_.end(), [&](const ClipLog& c) {
        return c.range.end() <= range.start();
    });
    auto last = std::partition_point(first, clips_.end(), [&](const ClipLog& c) {
        return c.range.start() < range.end();
    });
    return {first, last};
}

const ClipLog*
ClipStore::containing(Timestamp t) const {
    auto it = std::partition_point(clips_.begin(), clips_.end(),
                                   [&](const ClipLog& c) { return c.range.end() <= t; });
    if (it != clips_.end() && it->range.contains(t)) {
        return &*it;
    }
    return nullptr;
}

ClipStore
ingest_clip_logs(std::vector<ClipLog> records) {
    ClipStore store;
    if (records.empty()) {
        return store;
    }
    const std::string& view = records.front().view_id;
    for (const auto& r : records) {
        if (r.view_id != view) {
            throw Error(ErrorType::MIXED_VIEW,
                        "clip logs mix views '" + view + "' and '" + r.view_id + "'");
        }
        if (r.range.duration().frames > kMaxClipFrames) {
            throw Error(ErrorType::DURATION,
                        "clip " + format_range(r.range) + " is longer than 30 seconds");
        }
    }
    std::stable_sort(records.begin(), records.end(), [](const ClipLog& a, const ClipLog& b) {
        return a.range.start() < b.range.start();
    });
    for (size_t i = 1; i < records.size(); ++i) {
        if (records[i].range.start() < records[i - 1].range.end()) {
            throw Error(ErrorType::OVERLAP, "clip " + format_range(records[i].range) +
                                                " overlaps " + format_range(records[i - 1].range));
        }
    }
    store.view_id_ = view;
    store.clips_ = std::move(records);
    return store;
}

std::vector<ClipLog>
read_clip_logs(std::istream& in) {
    std::vector<ClipLog> clips;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            json j = json::parse(line);
            clips.push_back(ClipLog{
                j.at("view_id").get<std::string>(),
                TimeRange(parse_timestamp(j.at("start").get<std::string>()),
                          parse_timestamp(j.at("end").get<std::string>())),
                j.value("caption", std::string{}),
                j.value("asr", std::string{}),
            });
        } catch (const Error& e) {
            throw Error(e.type(), "clip log line " + std::to_string(line_no) + ": " + e.what());
        } catch (const json::exception& e) {
            throw Error(ErrorType::IO, "clip log line " + std::to_string(line_no) + ": " +
                                           json_error_context(e));
        }
    }
    return clips;
}

std::vector<ClipLog>
read_clip_logs(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    return read_clip_logs(in);
}

void
write_clip_logs(std::ostream& out, std::span<const ClipLog> clips) {
    for (const auto& c : clips) {
        json j;
        j["view_id"] = c.view_id;
        j["start"] = format_timestamp(c.range.start());
        j["end"] = format_timestamp(c.range.end());
        j["caption"] = c.caption;
        j["asr"] = c.asr;
        out << j.dump() << '\n';
    }
}

std::string
concat_summarizer(Level level, std::span<const std::string_view> child_texts,
                  const TimeRange& range) {
    size_t total = 0;
    for (auto t : child_texts) {
        total += t.size() + 1;
    }
    std::string out;
    out.reserve(total + 48);
    out += "[";
    out += level_name(level);
    out += " ";
    out += format_range(range);
    out += "]";
    for (auto t : child_texts) {
        out += "\n";
        out += t;
    }
    return out;
}

Level
HierIndex::coarsest() const noexcept {
    for (size_t i = kLevelCount; i-- > 0;) {
        if (!levels_[i].empty()) {
            return static_cast<Level>(i);
        }
    }
    return Level::CLIP30S;
}

std::vector<Level>
HierIndex::depth() const {
    std::vector<Level> out;
    for (size_t i = 0; i < kLevelCount; ++i) {
        if (!levels_[i].empty()) {
            out.push_back(static_cast<Level>(i));
        }
    }
    return out;
}

HierIndex
build_hierarchy(ClipStore store, const Summarizer& summarizer) {
    if (store.empty()) {
        throw Error(ErrorType::INVALID_ARGUMENT, "cannot build an index from an empty clip store");
    }
    HierIndex index;
    auto& leaves = index.levels_[0];
    leaves.reserve(store.size());
    for (const auto& clip : store.clips()) {
        leaves.push_back(SummaryNode{Level::CLIP30S, clip.range, clip.text(), {}, {}});
    }
    Level top = coarsest_for(store);
    for (size_t l = 1; l < present_depth(top); ++l) {
        index.levels_[l] =
            aggregate(static_cast<Level>(l), index.levels_[l - 1], summarizer, index.issues_);
    }
    fill_search_text(index.levels_);
    index.clips_ = std::move(store);
    return index;
}

std::string
normalize_for_search(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_token = false;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_token_byte(c)) {
            if (!in_token && !out.empty()) {
                out.push_back(' ');
            }
            out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
            in_token = true;
        } else {
            in_token = false;
        }
    }
    return out;
}

std::vector<std::string>
TokenMatcher::match(const SummaryNode& node, std::span<const std::string> keywords) const {
    std::vector<std::string> matched;
    for (const auto& kw : keywords) {
        std::string needle = normalize_for_search(kw);
        if (needle.empty()) {
            continue;
        }
        if (std::find(matched.begin(), matched.end(), kw) != matched.end()) {
            continue;
        }
        if (contains_phrase(node.search_text, needle)) {
            matched.push_back(kw);
        }
    }
    return matched;
}

RagResult
query(const HierIndex& index, const RagQuery& q, const QueryOptions& options) {
    bool any_keyword = std::any_of(q.keywords.begin(), q.keywords.end(), [](const std::string& k) {
        return !normalize_for_search(k).empty();
    });
    if (!any_keyword) {
        throw Error(ErrorType::EMPTY_KEYWORDS, "query has no searchable keyword");
    }
    if (!(q.start_time < q.query_time)) {
        throw Error(ErrorType::BAD_WINDOW, "start_time " + format_timestamp(q.start_time) +
                                               " is not before query_time " +
                                               format_timestamp(q.query_time));
    }
    static const TokenMatcher kDefaultMatcher;
    const KeywordMatcher& matcher = options.matcher ? *options.matcher : kDefaultMatcher;

    RagResult result;
    result.requested = q.level;
    result.entry = std::min(q.level, index.coarsest());
    result.clamped = result.entry != q.level;

    TimeRange window(q.start_time, q.query_time);
    auto entry_nodes = index.nodes(result.entry);
    for (size_t i = first_ending_after(entry_nodes, q.start_time);
         i < entry_nodes.size() && entry_nodes[i].range.start() < q.query_time; ++i) {
        const SummaryNode& node = entry_nodes[i];
        auto matched = matcher.match(node, q.keywords);
        if (matched.empty()) {
            continue;
        }
        result.hits.push_back({result.entry, i, node.range, node.text, std::move(matched)});
        if (result.entry == Level::CLIP30S) {
            continue;
        }
        Level finer = static_cast<Level>(static_cast<int>(result.entry) - 1);
        auto finer_nodes = index.nodes(finer);
        for (uint32_t child : node.children) {
            const SummaryNode& c = finer_nodes[child];
            if (!c.range.intersects(window)) {
                continue;
            }
            auto child_matched = matcher.match(c, q.keywords);
            if (!child_matched.empty()) {
                result.hits.push_back({finer, child, c.range, c.text, std::move(child_matched)});
            }
        }
    }
    std::stable_sort(result.hits.begin(), result.hits.end(), [](const RagHit& a, const RagHit& b) {
        if (a.range.start() != b.range.start()) {
            return a.range.start() < b.range.start();
        }
        return a.level > b.level;
    });
    if (options.max_hits > 0 && result.hits.size() > options.max_hits) {
        result.hits.resize(options.max_hits);
        result.truncated = true;
    }
    return result;
}

std::string
serialize_index(const HierIndex& index) {
    json doc;
    doc["schema_version"] = kIndexSchemaVersion;
    doc["view_id"] = index.view_id();
    json clips = json::array();
    for (const auto& c : index.clips().clips()) {
        clips.push_back({{"start", format_timestamp(c.range.start())},
                         {"end", format_timestamp(c.range.end())},
                         {"caption", c.caption},
                         {"asr", c.asr}});
    }
    doc["clips"] = std::move(clips);
    json levels = json::array();
    for (Level level : index.depth()) {
        if (level == Level::CLIP30S) {
            continue;
        }
        json nodes = json::array();
        for (const auto& n : index.nodes(level)) {
            nodes.push_back({{"start", format_timestamp(n.range.start())},
                             {"end", format_timestamp(n.range.end())},
                             {"text", n.text},
                             {"children", n.children}});
        }
        levels.push_back({{"level", level_name(level)}, {"nodes", std::move(nodes)}});
    }
    doc["levels"] = std::move(levels);
    json issues = json::array();
    for (const auto& issue : index.issues()) {
        issues.push_back(
            {{"level", level_name(issue.level)}, {"node", issue.node}, {"message", issue.message}});
    }
    doc["issues"] = std::move(issues);
    return doc.dump(1, '\t', false, json::error_handler_t::replace) + "\n";
}

HierIndex
deserialize_index(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw Error(ErrorType::IO, std::string("index document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("schema_version") ||
        !doc["schema_version"].is_number_integer()) {
        throw Error(ErrorType::SCHEMA_VERSION, "index document has no schema_version");
    }
    if (doc["schema_version"].get<int>() != kIndexSchemaVersion) {
        throw Error(ErrorType::SCHEMA_VERSION,
                    "unsupported index schema_version " + doc["schema_version"].dump());
    }

    auto malformed = [](const std::string& what) {
        return Error(ErrorType::SCHEMA_VERSION, "malformed index document: " + what);
    };

    HierIndex index;
    try {
        std::string view = doc.at("view_id").get<std::string>();
        std::vector<ClipLog> clips;
        for (const auto& c : doc.at("clips")) {
            clips.push_back(ClipLog{view,
                                    TimeRange(parse_timestamp(c.at("start").get<std::string>()),
                                              parse_timestamp(c.at("end").get<std::string>())),
                                    c.at("caption").get<std::string>(),
                                    c.at("asr").get<std::string>()});
        }
        if (clips.empty()) {
            throw malformed("no clips");
        }
        ClipStore store = ingest_clip_logs(std::move(clips));
        if (store.view_id() != view) {
            throw malformed("view mismatch");
        }
        auto& leaves = index.levels_[0];
        for (const auto& clip : store.clips()) {
            leaves.push_back(SummaryNode{Level::CLIP30S, clip.range, clip.text(), {}, {}});
        }
        size_t expected = 1;
        for (const auto& lv : doc.at("levels")) {
            auto level = level_from_name(lv.at("level").get<std::string>());
            if (!level || static_cast<size_t>(*level) != expected) {
                throw malformed("levels out of order");
            }
            const auto& finer = index.levels_[expected - 1];
            std::vector<bool> claimed(finer.size(), false);
            auto& nodes = index.levels_[expected];
            for (const auto& n : lv.at("nodes")) {
                SummaryNode node{*level,
                                 TimeRange(parse_timestamp(n.at("start").get<std::string>()),
                                           parse_timestamp(n.at("end").get<std::string>())),
                                 n.at("text").get<std::string>(),
                                 n.at("children").get<std::vector<uint32_t>>(),
                                 {}};
                if (node.children.empty()) {
                    throw malformed("aggregate node without children");
                }
                for (uint32_t child : node.children) {
                    if (child >= finer.size() || claimed[child] ||
                        !node.range.contains(finer[child].range)) {
                        throw malformed("bad child reference");
                    }
                    claimed[child] = true;
                }
                nodes.push_back(std::move(node));
            }
            if (std::find(claimed.begin(), claimed.end(), false) != claimed.end()) {
                throw malformed("orphaned node at level " + std::string(level_name(*level)));
            }
            ++expected;
        }
        for (const auto& issue : doc.at("issues")) {
            auto level = level_from_name(issue.at("level").get<std::string>());
            if (!level) {
                throw malformed("unknown issue level");
            }
            index.issues_.push_back(
                {*level, issue.at("node").get<size_t>(), issue.at("message").get<std::string>()});
        }
        index.clips_ = std::move(store);
    } catch (const json::exception& e) {
        throw malformed(e.what());
    } catch (const Error& e) {
        if (e.type() == ErrorType::SCHEMA_VERSION) {
            throw;
        }
        throw malformed(e.what());
    }
    fill_search_text(index.levels_);
    return index;
}

void
save_index(const HierIndex& index, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_index(index));
}

HierIndex
load_index(const std::filesystem::path& path) {
    return deserialize_index(read_file(path));
}

}  // namespace cott
