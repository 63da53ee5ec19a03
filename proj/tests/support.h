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

// Shared fixtures and reference implementations for the test binaries. The
// reference code here is written independently of the library on purpose.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include <doctest.h>

#include "cott/agent.h"
#include "cott/error.h"
#include "cott/harness.h"
#include "cott/memory_index.h"
#include "cott/timebase.h"
#include "cott/tools.h"
#include "cott/trace.h"

namespace cott::testing {

inline constexpr int64_t kSecond = 20;
inline constexpr int64_t kMinute = 60 * kSecond;
inline constexpr int64_t kHour = 60 * kMinute;
inline constexpr int64_t kDay = 24 * kHour;
inline constexpr int64_t kClip = 30 * kSecond;

/// Runs `fn` and returns the ErrorType it throws; fails the test otherwise.
template <typename Fn>
ErrorType
error_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.type();
    }
    FAIL("expected an Error");
    return ErrorType::SPEC;
}

inline Timestamp
ts(std::string_view text) {
    return parse_timestamp(text);
}

inline Timestamp
at(int64_t frame) {
    return Timestamp::from_frame_index(frame);
}

inline ClipLog
clip(int64_t start, int64_t end, std::string caption = "clip", std::string asr = "",
     std::string view = "A1") {
    return ClipLog{std::move(view), TimeRange(at(start), at(end)), std::move(caption),
                   std::move(asr)};
}

/// `n` back-to-back 30 s clips starting at `start`, captioned "clip <i>".
inline std::vector<ClipLog>
contiguous_clips(size_t n, int64_t start = 0) {
    std::vector<ClipLog> out;
    for (size_t i = 0; i < n; ++i) {
        int64_t s = start + static_cast<int64_t>(i) * kClip;
        out.push_back(clip(s, s + kClip, "clip " + std::to_string(i)));
    }
    return out;
}

/// Field-wise frame index, computed from the calendar definition.
inline int64_t
reference_frame_index(int day, int hour, int minute, int second, int frame) {
    return ((((static_cast<int64_t>(day) - 1) * 24 + hour) * 60 + minute) * 60 + second) * 20 +
           frame;
}

// ---------------------------------------------------------------------------
// Reference keyword matching

inline std::vector<std::string>
reference_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        bool word = c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                    (c >= 'A' && c <= 'Z');
        if (word) {
            cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) {
        tokens.push_back(cur);
    }
    return tokens;
}

inline bool
reference_match(std::string_view text, std::string_view keyword) {
    auto hay = reference_tokens(text);
    auto needle = reference_tokens(keyword);
    if (needle.empty() || needle.size() > hay.size()) {
        return false;
    }
    for (size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<long>(i))) {
            return true;
        }
    }
    return false;
}

using HitKey = std::tuple<int, size_t>;

struct ReferenceHits {
    std::set<HitKey> entry;
    std::set<HitKey> children;
};

/// Brute-force scan: every entry-level node in the window with a keyword,
/// plus the children of those nodes that are in the window with a keyword.
inline ReferenceHits
reference_query(const HierIndex& index, const RagQuery& q) {
    ReferenceHits out;
    Level entry = std::min(q.level, index.coarsest());
    TimeRange window(q.start_time, q.query_time);
    auto matches = [&](const SummaryNode& n) {
        if (!n.range.intersects(window)) {
            return false;
        }
        for (const auto& k : q.keywords) {
            if (reference_match(n.text, k)) {
                return true;
            }
        }
        return false;
    };
    auto nodes = index.nodes(entry);
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (!matches(nodes[i])) {
            continue;
        }
        out.entry.insert({static_cast<int>(entry), i});
        if (entry == Level::CLIP30S) {
            continue;
        }
        auto finer = static_cast<Level>(static_cast<int>(entry) - 1);
        for (uint32_t c : nodes[i].children) {
            if (matches(index.nodes(finer)[c])) {
                out.children.insert({static_cast<int>(finer), c});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random inputs

inline constexpr std::array<std::string_view, 16> kWords{
    "kettle", "door",   "phone",  "Screwdriver", "applause", "coffee", "laptop", "stairs",
    "music",  "window", "garden", "dog",         "TV",       "lunch",  "keys",   "shoes"};

/// A random single-view clip log: bursts of contiguous clips separated by
/// gaps, occasional short clips, spread over up to `max_days` days.
inline std::vector<ClipLog>
random_clips(std::mt19937_64& rng, size_t max_clips, int max_days = 3) {
    std::vector<ClipLog> out;
    size_t n = 1 + rng() % max_clips;
    int64_t t = static_cast<int64_t>(rng() % static_cast<uint64_t>(6 * kHour));
    int64_t horizon = static_cast<int64_t>(max_days) * kDay;
    while (out.size() < n && t + kClip < horizon) {
        int64_t len = rng() % 8 == 0 ? 1 + static_cast<int64_t>(rng() % kClip) : kClip;
        std::string caption;
        size_t words = 1 + rng() % 4;
        for (size_t w = 0; w < words; ++w) {
            caption += (w ? " " : "") + std::string(kWords[rng() % kWords.size()]);
        }
        std::string asr = rng() % 3 == 0 ? std::string(kWords[rng() % kWords.size()]) : "";
        out.push_back(clip(t, t + len, caption, asr));
        t += len;
        if (rng() % 20 == 0) {
            t += static_cast<int64_t>(rng() % static_cast<uint64_t>(3 * kHour));
        }
    }
    return out;
}

/// Text with a high density of tag fragments, JSON punctuation and
/// timestamps, to stress the readers.
inline std::string
random_policy_text(std::mt19937_64& rng, size_t max_pieces = 12) {
    static constexpr std::array<std::string_view, 30> kPieces{
        "<think>", "</think>", "<tool>", "</tool>", "<answer>", "</answer>", "<information>",
        "</information>", "<", ">", "</", "<br>", "{", "}", "\"name\"", "\"rag\"", "\"vlm\"",
        "\"video_llm\"", ":", ",", "[", "]", "\"arguments\"", "\"level\": \"day\"",
        "\"keywords\": [\"kettle\"]", "DAY1_11210217", "DAY1_12000000-DAY1_12050000", "A",
        "&lt;", "\xff\xfe"};
    std::string out;
    size_t n = rng() % (max_pieces + 1);
    for (size_t i = 0; i < n; ++i) {
        if (rng() % 4 == 0) {
            size_t len = rng() % 6;
            for (size_t k = 0; k < len; ++k) {
                out.push_back(static_cast<char>(rng() % 256));
            }
        } else {
            out += kPieces[rng() % kPieces.size()];
        }
    }
    return out;
}

inline std::vector<Option>
abcd(std::string_view a = "red", std::string_view b = "green", std::string_view c = "blue",
     std::string_view d = "white") {
    return {{"A", std::string(a)}, {"B", std::string(b)}, {"C", std::string(c)},
            {"D", std::string(d)}};
}

// ---------------------------------------------------------------------------
// Tool-call fixtures

/// The rag example from the training prompt, byte for byte.
inline constexpr std::string_view kExampleRagBody = R"(
{
    "name": "rag",
    "arguments": {
        "level": "day",
        "keywords": ["screwdriver", "applause"],
        "start_time": "DAY1_11210217",
        "query_time": "DAY1_11220217"
    }
}
)";

struct Violation {
    std::string_view label;
    std::string body;
    ErrorType expected;
    std::optional<ErrorType> cause;
};

/// Schema-violating tool bodies: every missing required key, every enum and
/// range violation, plus the structural failures.
inline std::vector<Violation>
violation_corpus() {
    auto rag = [](std::string_view args) {
        return R"({"name": "rag", "arguments": {)" + std::string(args) + "}}";
    };
    auto video = [](std::string_view args) {
        return R"({"name": "video_llm", "arguments": {)" + std::string(args) + "}}";
    };
    auto vlm = [](std::string_view args) {
        return R"({"name": "vlm", "arguments": {)" + std::string(args) + "}}";
    };
    const std::string kw = R"("keywords": ["kettle"])";
    const std::string st = R"("start_time": "DAY1_10000000")";
    const std::string qt = R"("query_time": "DAY1_12000000")";
    const std::string lv = R"("level": "day")";
    const std::string q = R"("question": "what is on the table?")";
    using E = ErrorType;
    return {
        {"rag without level", rag(kw + "," + st + "," + qt), E::MISSING_ARGUMENT, {}},
        {"rag without keywords", rag(lv + "," + st + "," + qt), E::MISSING_ARGUMENT, {}},
        {"rag without start_time", rag(lv + "," + kw + "," + qt), E::MISSING_ARGUMENT, {}},
        {"rag without query_time", rag(lv + "," + kw + "," + st), E::MISSING_ARGUMENT, {}},
        {"video_llm without question", video(R"("range": "DAY1_11000000-DAY1_11050000")"),
         E::MISSING_ARGUMENT, {}},
        {"video_llm without range", video(q), E::MISSING_ARGUMENT, {}},
        {"vlm without question", vlm(R"("timestamp": "DAY1_11000000")"), E::MISSING_ARGUMENT, {}},
        {"vlm without timestamp", vlm(q), E::MISSING_ARGUMENT, {}},
        {"rag level month", rag(R"("level": "month",)" + kw + "," + st + "," + qt),
         E::ARGUMENT_TYPE, {}},
        {"rag level min10", rag(R"("level": "min10",)" + kw + "," + st + "," + qt),
         E::ARGUMENT_TYPE, {}},
        {"video_llm range of one hour",
         video(q + R"(, "range": "DAY1_11000000-DAY1_12000000")"), E::ARGUMENT_TYPE,
         E::TOO_LONG},
        {"video_llm range of one second",
         video(q + R"(, "range": "DAY1_11000000-DAY1_11000100")"), E::ARGUMENT_TYPE,
         E::TOO_SHORT},
        {"video_llm range reversed", video(q + R"(, "range": "DAY1_11050000-DAY1_11000000")"),
         E::ARGUMENT_TYPE, E::ORDER},
        {"vlm frame 20", vlm(q + R"(, "timestamp": "DAY1_11000020")"), E::ARGUMENT_TYPE,
         E::RANGE},
        {"rag start after query",
         rag(lv + "," + kw + R"(, "start_time": "DAY1_13000000",)" + qt), E::ARGUMENT_TYPE,
         E::ORDER},
        {"rag keywords not a list", rag(lv + R"(, "keywords": "kettle",)" + st + "," + qt),
         E::ARGUMENT_TYPE, {}},
        {"unknown tool", R"({"name": "search", "arguments": {}})", E::UNKNOWN_TOOL, {}},
        {"extra argument", rag(lv + "," + kw + "," + st + "," + qt + R"(, "top_k": 3)"),
         E::EXTRA_ARGUMENT, {}},
        {"not json", R"({"name": "rag", "arguments": {)", E::JSON_SYNTAX, {}},
    };
}

// ---------------------------------------------------------------------------
// Random trajectories

inline std::string
random_text(std::mt19937_64& rng, size_t max_len = 40) {
    static constexpr std::array<std::string_view, 14> kBits{
        "a", "the ", "kettle", " ", "<", ">", "&", "&amp;", "\"", "\n", "\xc3\xa9", "\xe6\x97\xa5",
        "</think>", "{\"x\":1}"};
    std::string out;
    size_t n = rng() % (max_len + 1);
    for (size_t i = 0; i < n; ++i) {
        out += kBits[rng() % kBits.size()];
    }
    return out;
}

inline std::string
random_nonblank(std::mt19937_64& rng) {
    return std::string(kWords[rng() % kWords.size()]) + random_text(rng, 8);
}

/// A schema-valid call somewhere in days 1..3.
inline ToolCall
random_tool_call(std::mt19937_64& rng, bool allow_terminate = true) {
    int64_t base = static_cast<int64_t>(rng() % static_cast<uint64_t>(3 * kDay - kHour));
    switch (rng() % (allow_terminate ? 4 : 3)) {
        case 0: {
            RagArgs a;
            a.level = static_cast<Level>(2 + rng() % 3);
            size_t n = 1 + rng() % 3;
            for (size_t i = 0; i < n; ++i) {
                a.keywords.emplace_back(kWords[rng() % kWords.size()]);
            }
            a.start_time = at(base);
            a.query_time = at(base + 1 + static_cast<int64_t>(rng() % kHour));
            return ToolCall{a};
        }
        case 1:
            return ToolCall{VideoLlmArgs{
                random_nonblank(rng),
                TimeRange(at(base), at(base + 21 + static_cast<int64_t>(rng() % 11979)))}};
        case 2:
            return ToolCall{VlmArgs{random_nonblank(rng), at(base)}};
        default:
            return ToolCall{TerminateArgs{std::string(1, static_cast<char>('A' + rng() % 4))}};
    }
}

/// A trajectory in canonical form: tool steps carry an observation whose
/// source matches the action, and only the last step may be an answer.
inline Trajectory
random_trajectory(std::mt19937_64& rng, size_t max_steps = 10) {
    Trajectory t;
    t.question_id = "q" + std::to_string(rng() % 10000);
    t.view_id = "A" + std::to_string(1 + rng() % 6);
    t.question = random_nonblank(rng) + "?";
    t.options = abcd(random_nonblank(rng), random_nonblank(rng), random_nonblank(rng),
                     random_nonblank(rng));
    t.query_time = at(static_cast<int64_t>(rng() % static_cast<uint64_t>(3 * kDay)));
    size_t n = rng() % (max_steps + 1);
    for (size_t i = 0; i < n; ++i) {
        CoTTStep step;
        step.thought = random_text(rng);
        bool last = i + 1 == n;
        int pick = static_cast<int>(rng() % 10);
        if (last && pick < 4) {
            step.action = FinalAnswer{std::string(1, static_cast<char>('A' + rng() % 4))};
        } else {
            if (pick == 9) {
                step.action = MalformedAction{random_text(rng)};
            } else {
                step.action = random_tool_call(rng);
            }
            if (!last || rng() % 2) {
                const auto* call = std::get_if<ToolCall>(&step.action);
                std::string source =
                    call ? std::string(tool_name(call->name())) : std::string(kEnvironmentSource);
                step.observation = Observation{source, random_text(rng, 60), {}};
            }
        }
        t.steps.push_back(std::move(step));
    }
    return t;
}

/// Adversarial policy: random tag soup, schema-valid calls with times
/// scattered around the query time (including after it), and answers that
/// may or may not be option labels.
class RandomTextPolicy final : public PolicyAdapter {
public:
    RandomTextPolicy(uint64_t seed, TimeRange corpus, Timestamp query_time)
        : rng_(seed), corpus_(corpus), query_time_(query_time) {
    }

    std::string
    generate(std::span<const Message>) override {
        switch (rng_() % 4) {
            case 0:
                return random_policy_text(rng_);
            case 1:
                return "<answer>" + std::string(1, static_cast<char>('A' + rng_() % 6)) +
                       "</answer>";
            default:
                return "<think>" + escape_body(random_text(rng_, 6)) + "</think><tool>" +
                       escape_body(tool_call_json(call())) + "</tool>";
        }
    }

private:
    Timestamp
    near_query() {
        int64_t lo = std::max<int64_t>(0, corpus_.start().frame_index() - kHour);
        int64_t hi = query_time_.frame_index() + 2 * kHour;
        return at(lo + static_cast<int64_t>(rng_() % static_cast<uint64_t>(hi - lo)));
    }

    ToolCall
    call() {
        Timestamp t = near_query();
        switch (rng_() % 4) {
            case 0: {
                Timestamp end = rng_() % 2 ? query_time_ : near_query();
                if (!(t < end)) {
                    std::swap(t, end);
                }
                if (t == end) {
                    end = advance(end, {1});
                }
                return ToolCall{RagArgs{static_cast<Level>(2 + rng_() % 3),
                                        {std::string(kWords[rng_() % kWords.size()])}, t, end}};
            }
            case 1:
                return ToolCall{VideoLlmArgs{
                    "what happens?",
                    TimeRange(t, advance(t, {21 + static_cast<int64_t>(rng_() % 11979)}))}};
            case 2:
                return ToolCall{VlmArgs{"what is this?", t}};
            default:
                return ToolCall{TerminateArgs{"B"}};
        }
    }

    std::mt19937_64 rng_;
    TimeRange corpus_;
    Timestamp query_time_;
};

#ifdef COTT_GOLDEN_DIR
/// Contents of a checked-in golden file.
inline std::string
golden(std::string_view name) {
    std::ifstream in(std::filesystem::path(COTT_GOLDEN_DIR) / name, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing golden file ", name);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}
#endif

/// Per-test scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("cott-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir&
    operator=(const TempDir&) = delete;

    std::filesystem::path
    operator/(std::string_view name) const {
        return path_ / name;
    }
    const std::filesystem::path&
    path() const {
        return path_;
    }

private:
    std::filesystem::path path_;
};

}  // namespace cott::testing
