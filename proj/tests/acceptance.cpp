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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fail. Thresholds are fixed below and must not be relaxed.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cott/rollout.h"
#include "support.h"

using namespace cott;
using namespace cott::testing;

namespace {

// Pinned thresholds.
constexpr double kAc1MaxSeconds = 5.0;
constexpr size_t kAc1RoundTrips = 10000;
constexpr double kAc3MaxBuildSeconds = 10.0;
constexpr size_t kAc4Corpora = 100;
constexpr size_t kAc4MaxClips = 5000;
constexpr size_t kAc4QueriesPerCorpus = 20;
constexpr size_t kAc5Trajectories = 1000;
constexpr size_t kAc5FuzzInputs = 10000;
constexpr size_t kAc5MinViolations = 12;
constexpr size_t kAc6Policies = 1000;
constexpr double kAc7MeanTolerance = 1e-9;
constexpr double kAc8MaxSeconds = 120.0;
constexpr size_t kAc8RandomQuestions = 400;
constexpr double kAc8RandomLow = 0.20;
constexpr double kAc8RandomHigh = 0.30;

class Check {
public:
    void
    expect(bool ok, const std::string& what) {
        if (!ok && first_failure_.empty()) {
            first_failure_ = what;
        }
        ok_ = ok_ && ok;
    }
    bool
    ok() const {
        return ok_;
    }
    const std::string&
    failure() const {
        return first_failure_;
    }
    std::string note;

private:
    bool ok_ = true;
    std::string first_failure_;
};

using Clock = std::chrono::steady_clock;

double
seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::optional<ErrorType>
thrown(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.type();
    }
    return std::nullopt;
}

std::string
read_golden(std::string_view name) {
    std::ifstream in(std::filesystem::path(COTT_GOLDEN_DIR) / name, std::ios::binary);
    if (!in) {
        throw std::runtime_error("missing golden file " + std::string(name));
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string
fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---------------------------------------------------------------------------

void
ac1(Check& c) {
    auto t0 = Clock::now();
    std::mt19937_64 rng(1);
    for (size_t i = 0; i < kAc1RoundTrips; ++i) {
        int day = 1 + static_cast<int>(rng() % 99);
        int h = static_cast<int>(rng() % 24);
        int m = static_cast<int>(rng() % 60);
        int s = static_cast<int>(rng() % 60);
        int f = static_cast<int>(rng() % 20);
        char text[32];
        std::snprintf(text, sizeof text, "DAY%d_%02d%02d%02d%02d", day, h, m, s, f);
        Timestamp t = parse_timestamp(text);
        c.expect(format_timestamp(t) == text, std::string("round trip of ") + text);
        c.expect(t.frame_index() == reference_frame_index(day, h, m, s, f),
                 std::string("frame index of ") + text);
        c.expect(Timestamp::from_frame_index(t.frame_index()) == t, "frame index inverse");
    }
    struct Bad {
        std::function<void()> fn;
        ErrorType type;
        const char* what;
    };
    std::vector<Bad> corpus{
        {[] { parse_timestamp("DAY1_11210220"); }, ErrorType::RANGE, "frame 20"},
        {[] { parse_timestamp("DAY1_11600000"); }, ErrorType::RANGE, "minute 60"},
        {[] { parse_timestamp("DAY1_1121021"); }, ErrorType::SYNTAX, "short shape"},
        {[] { parse_timestamp("DAY1-11210217"); }, ErrorType::SYNTAX, "separator"},
        {[] { parse_timestamp("day1_11210217"); }, ErrorType::SYNTAX, "case"},
        {[] { parse_timestamp(""); }, ErrorType::SYNTAX, "empty"},
        {[] { parse_range("DAY1_11000000-DAY1_11000000"); }, ErrorType::ORDER, "empty range"},
        {[] { parse_range("DAY1_11050000-DAY1_11000000"); }, ErrorType::ORDER, "end before start"},
        {[] { TimeRange(ts("DAY1_11000000"), ts("DAY1_11000000")); }, ErrorType::ORDER,
         "empty TimeRange"},
    };
    for (const auto& b : corpus) {
        c.expect(thrown(b.fn) == b.type, std::string("invalid case: ") + b.what);
    }
    double secs = seconds_since(t0);
    c.expect(secs < kAc1MaxSeconds, "runtime " + fixed(secs) + " s");
    c.note = std::to_string(kAc1RoundTrips) + " round trips, " + std::to_string(corpus.size()) +
             " invalid cases, " + fixed(secs) + " s";
}

void
ac2(Check& c) {
    Timestamp base = ts("DAY1_11000000");
    size_t accepted = 0;
    for (int64_t secs = 0; secs <= 601; ++secs) {
        std::string range = format_timestamp(base) + "-" +
                            format_timestamp(advance(base, Duration{secs * kSecond}));
        std::optional<ErrorType> expected;
        if (secs == 0) {
            expected = ErrorType::ORDER;
        } else if (secs <= 1) {
            expected = ErrorType::TOO_SHORT;
        } else if (secs >= 600) {
            expected = ErrorType::TOO_LONG;
        }
        auto direct = thrown([&] { validate_video_range(parse_range(range)); });
        c.expect(direct == expected, "validator at " + std::to_string(secs) + " s");

        // Through the tool-call schema as the policy would send it.
        std::string body = R"({"name":"video_llm","arguments":{"question":"q","range":")" + range +
                           "\"}}";
        std::optional<ErrorType> cause;
        bool ok = true;
        try {
            parse_tool_call(body);
        } catch (const Error& e) {
            ok = false;
            cause = e.cause();
            c.expect(e.type() == ErrorType::ARGUMENT_TYPE, "schema error class");
        }
        c.expect(ok == !expected.has_value(), "schema at " + std::to_string(secs) + " s");
        if (!ok) {
            c.expect(cause == expected, "schema cause at " + std::to_string(secs) + " s");
        }
        accepted += ok ? 1 : 0;
    }
    c.expect(accepted == 598, "interior count " + std::to_string(accepted));
    c.note = "0..601 s checked, " + std::to_string(accepted) + " interior durations accepted";
}

void
ac3(Check& c) {
    auto t0 = Clock::now();
    HierIndex day = build_hierarchy(ingest_clip_logs(contiguous_clips(2880)));
    double secs = seconds_since(t0);
    c.expect(day.nodes(Level::CLIP30S).size() == 2880, "2880 leaves");
    c.expect(day.nodes(Level::MIN10).size() == 144, "144 ten-minute nodes");
    c.expect(day.nodes(Level::HOUR).size() == 24, "24 hour nodes");
    c.expect(day.nodes(Level::DAY).size() == 1, "1 day node");
    HierIndex short_one =
        build_hierarchy(ingest_clip_logs(contiguous_clips(82, 11 * kHour + 3 * kMinute)));
    c.expect(short_one.depth() == std::vector<Level>{Level::CLIP30S, Level::MIN10},
             "41-minute corpus depth");
    c.expect(secs < kAc3MaxBuildSeconds, "build took " + fixed(secs) + " s");
    c.note = "144/24/1 and {clip30s, min10}; one-day build " + fixed(secs) + " s";
}

void
ac4(Check& c) {
    std::mt19937_64 rng(2025);
    size_t cases = 0;
    size_t equal = 0;
    size_t nonempty = 0;
    for (size_t k = 0; k < kAc4Corpora; ++k) {
        HierIndex index = build_hierarchy(ingest_clip_logs(random_clips(rng, kAc4MaxClips, 4)));
        c.expect(index.clips().size() <= kAc4MaxClips, "corpus size");
        TimeRange b = *index.bounds();
        for (size_t qn = 0; qn < kAc4QueriesPerCorpus; ++qn) {
            int64_t lo = b.start().frame_index();
            int64_t span = b.duration().frames;
            int64_t x = lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(span));
            int64_t y = lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(span + 1));
            if (x == y) {
                continue;
            }
            RagQuery q;
            q.level = static_cast<Level>(2 + rng() % 3);
            q.start_time = at(std::min(x, y));
            q.query_time = at(std::max(x, y));
            size_t nk = 1 + rng() % 3;
            for (size_t i = 0; i < nk; ++i) {
                q.keywords.emplace_back(kWords[rng() % kWords.size()]);
            }
            RagResult got = query(index, q, QueryOptions{0, nullptr});
            ReferenceHits want = reference_query(index, q);
            std::set<HitKey> entry;
            std::set<HitKey> children;
            for (const auto& h : got.hits) {
                (h.level == got.entry ? entry : children)
                    .insert({static_cast<int>(h.level), h.node});
            }
            ++cases;
            bool same = entry == want.entry && children == want.children;
            equal += same ? 1 : 0;
            nonempty += want.entry.empty() ? 0 : 1;
        }
    }
    c.expect(equal == cases, std::to_string(cases - equal) + " mismatching queries");
    c.expect(nonempty > cases / 4, "too few queries with hits to be meaningful");
    c.note = std::to_string(kAc4Corpora) + " corpora, " + std::to_string(equal) + "/" +
             std::to_string(cases) + " queries equal (" + std::to_string(nonempty) +
             " with hits)";
}

void
ac5(Check& c) {
    std::mt19937_64 rng(55);
    size_t round_trips = 0;
    for (size_t i = 0; i < kAc5Trajectories; ++i) {
        Trajectory t = random_trajectory(rng);
        bool ok = parse_steps(render_trajectory(t), t.options) == t.steps;
        c.expect(ok, "trajectory round trip " + std::to_string(i));
        round_trips += ok ? 1 : 0;
    }
    auto opts = abcd();
    size_t fuzz = 0;
    for (size_t i = 0; i < kAc5FuzzInputs; ++i) {
        std::string s = random_policy_text(rng);
        try {
            parse_fragment(s);
        } catch (const Error&) {
        }
        try {
            ToolCall call = parse_tool_call(s);
            validate_tool_call(call);
        } catch (const Error&) {
        }
        try {
            parse_steps(s, opts);
        } catch (const Error&) {
        }
        read_policy_output(s, opts);
        ++fuzz;
    }
    auto corpus = violation_corpus();
    size_t rejected = 0;
    for (const auto& v : corpus) {
        try {
            parse_tool_call(v.body);
            c.expect(false, std::string("accepted: ") + std::string(v.label));
        } catch (const Error& e) {
            bool match = e.type() == v.expected && (!v.cause || e.cause() == v.cause);
            c.expect(match, std::string("wrong class: ") + std::string(v.label));
            rejected += match ? 1 : 0;
        }
    }
    c.expect(corpus.size() >= kAc5MinViolations, "violation corpus too small");

    HierIndex day = build_hierarchy(ingest_clip_logs(contiguous_clips(2880)));
    ToolCall example = parse_tool_call(kExampleRagBody);
    const auto& args = std::get<RagArgs>(example.args);
    c.expect(args.keywords == std::vector<std::string>{"screwdriver", "applause"},
             "example keywords");
    ValidatedCall v = preverify(example, CorpusContext::from_index(day));
    c.expect(!v.clamped_from, "example call clamped");
    c.note = std::to_string(round_trips) + " round trips, " + std::to_string(fuzz) +
             " fuzz inputs, " + std::to_string(rejected) + "/" + std::to_string(corpus.size()) +
             " violations rejected, example call pre-verified";
}

void
ac6(Check& c) {
    SyntheticCorpus sc = generate_synthetic_corpus(SyntheticSpec{});
    auto index = std::make_shared<const HierIndex>(build_hierarchy(ingest_clip_logs(sc.clips)));
    CorpusContext ctx = CorpusContext::from_index(*index);
    DispatchLimits limits;
    limits.timeout = std::chrono::milliseconds(0);
    auto dispatcher = make_mock_dispatcher(index, limits);
    auto log = std::make_shared<DispatchLog>();
    dispatcher->set_log(log);

    std::mt19937_64 rng(66);
    size_t dispatched = 0;
    size_t violations = 0;
    size_t halted = 0;
    size_t reparsed = 0;
    for (size_t i = 0; i < kAc6Policies; ++i) {
        EpisodeConfig cfg;
        cfg.max_steps = 1 + rng() % 10;
        cfg.causal = true;
        cfg.mode = rng() % 2 ? PromptMode::TRAIN : PromptMode::DATAGEN;
        cfg.identity = sc.questions.front().view_id;
        QuestionSpec q = sc.questions[rng() % sc.questions.size()].spec();
        RandomTextPolicy policy(rng(), *index->bounds(), q.query_time);
        log->clear();
        Episode ep = run_episode(q, policy, *dispatcher, ctx, cfg);
        const Trajectory& t = ep.trajectory;
        halted += t.steps.size() <= cfg.max_steps ? 1 : 0;
        bool reparse = parse_steps(render_trajectory(t), t.options) == t.steps;
        reparsed += reparse ? 1 : 0;
        for (const auto& rec : log->records()) {
            ++dispatched;
            if (rec.window && rec.window->end() > q.query_time) {
                ++violations;
            }
        }
    }
    c.expect(halted == kAc6Policies, "episodes over the step limit");
    c.expect(reparsed == kAc6Policies, "trajectories that do not re-parse");
    c.expect(violations == 0, std::to_string(violations) + " calls read past query_time");
    c.expect(dispatched > kAc6Policies / 2, "too few dispatched calls to be meaningful");
    c.note = std::to_string(kAc6Policies) + " episodes halted and re-parsed, " +
             std::to_string(dispatched) + " dispatched calls, " + std::to_string(violations) +
             " after query_time";
}

void
ac7(Check& c) {
    std::vector<double> rewards{1, 0, 1, 0};
    c.expect(group_advantages(rewards) == std::vector<double>{1, -1, 1, -1}, "[1,0,1,0]");
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double worst = 0;
    size_t groups = 0;
    for (int i = 0; i < 10000; ++i) {
        size_t g = 1 + rng() % 32;
        std::vector<double> r(g);
        int style = static_cast<int>(rng() % 3);
        for (auto& x : r) {
            x = style == 0 ? u(rng) : style == 1 ? static_cast<double>(rng() % 2)
                                                 : 0.1 * static_cast<double>(rng() % 11);
        }
        auto a = group_advantages(r);
        double mean = 0;
        for (double x : a) {
            mean += x;
        }
        mean /= static_cast<double>(g);
        worst = std::max(worst, std::abs(mean));
        ++groups;
    }
    c.expect(worst < kAc7MeanTolerance, "advantage mean " + std::to_string(worst));
    for (double v : {0.0, 1.0, 0.3, -2.5, 1e6}) {
        for (size_t g : {1u, 2u, 5u, 16u}) {
            auto a = group_advantages(std::vector<double>(g, v));
            c.expect(a == std::vector<double>(g, 0.0), "constant group");
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1e", worst);
    c.note = "[1,0,1,0] -> [1,-1,1,-1]; " + std::to_string(groups) + " groups, max |mean| " + buf +
             "; constant groups zero";
}

void
ac8(Check& c) {
    auto t0 = Clock::now();
    SyntheticCorpus sc = generate_synthetic_corpus(SyntheticSpec{});
    c.expect(sc.clips.size() == 5760, "clip count");
    c.expect(sc.questions.size() == 10, "question count");
    auto index = std::make_shared<const HierIndex>(build_hierarchy(ingest_clip_logs(sc.clips)));
    CorpusContext ctx = CorpusContext::from_index(*index);
    auto dispatcher = make_mock_dispatcher(index);
    EpisodeConfig cfg;

    std::map<std::string, std::vector<std::string>> scripts;
    for (size_t i = 0; i < sc.questions.size(); ++i) {
        scripts[sc.questions[i].id] =
            oracle_script(sc.questions[i], sc.answers[i], index->bounds()->start());
    }
    PolicyFactory oracle = [&](const QuestionSpec& q, size_t) -> std::unique_ptr<PolicyAdapter> {
        return std::make_unique<ScriptedPolicy>(scripts.at(q.id));
    };
    BenchReport o = run_bench(sc.questions, oracle, *dispatcher, ctx, cfg);
    c.expect(o.accuracy == 1.0, "oracle accuracy " + fixed(o.accuracy));
    c.expect(o.format_accuracy == 1.0, "oracle format accuracy " + fixed(o.format_accuracy));

    SyntheticSpec big;
    big.random_events = kAc8RandomQuestions;
    SyntheticCorpus many = generate_synthetic_corpus(big);
    c.expect(many.questions.size() == kAc8RandomQuestions, "random question count");
    bool four = std::all_of(many.questions.begin(), many.questions.end(),
                            [](const QARecord& r) { return r.options.size() == 4; });
    c.expect(four, "four options per question");
    auto big_index =
        std::make_shared<const HierIndex>(build_hierarchy(ingest_clip_logs(many.clips)));
    PolicyFactory random = [](const QuestionSpec& q, size_t) -> std::unique_ptr<PolicyAdapter> {
        return std::make_unique<RandomAnswerPolicy>(q, 0);
    };
    BenchReport r = run_bench(many.questions, random, *make_mock_dispatcher(big_index),
                              CorpusContext::from_index(*big_index), cfg);
    c.expect(r.accuracy >= kAc8RandomLow && r.accuracy <= kAc8RandomHigh,
             "random accuracy " + fixed(r.accuracy));
    double secs = seconds_since(t0);
    c.expect(secs < kAc8MaxSeconds, "runtime " + fixed(secs) + " s");
    c.note = "oracle acc " + fixed(o.accuracy) + " format " + fixed(o.format_accuracy) +
             "; random acc " + fixed(r.accuracy, 4) + " over " +
             std::to_string(many.questions.size()) + "; " + fixed(secs) + " s";
}

void
ac9(Check& c) {
    c.expect(serialize_schemas(builtin_tool_schemas()) == read_golden("tool_schemas.txt"),
             "tool schemas differ from golden");
    c.expect(training_prompt() == read_golden("train_prompt.txt"),
             "training prompt differs from golden");
    EpisodeConfig gen;
    gen.mode = PromptMode::DATAGEN;
    gen.identity = "A2";
    std::string g = assemble_system_prompt(gen);
    c.expect(g == read_golden("datagen_prompt_A2.txt"), "generation prompt differs from golden");
    c.expect(g.find("under the view of A2") != std::string::npos, "identity substitution");
    c.expect(training_prompt().find("choose from week|day|hour") != std::string::npos,
             "level enumeration");
    c.expect(assemble_system_prompt(EpisodeConfig{}) == training_prompt(), "train mode prompt");
    c.note = "schemas, training prompt and generation prompt (A2) byte-identical";
}

void
ac10(Check& c) {
    std::mt19937_64 rng(1010);
    std::vector<Trajectory> trajectories;
    for (int i = 0; i < 300; ++i) {
        trajectories.push_back(random_trajectory(rng));
    }
    // Plus real episodes from the oracle.
    SyntheticCorpus sc = generate_synthetic_corpus(SyntheticSpec{});
    auto index = std::make_shared<const HierIndex>(build_hierarchy(ingest_clip_logs(sc.clips)));
    PolicyFactory oracle = [](const QuestionSpec& q, size_t) -> std::unique_ptr<PolicyAdapter> {
        return std::make_unique<SyntheticOraclePolicy>(q);
    };
    std::vector<Trajectory> episodes;
    run_bench(sc.questions, oracle, *make_mock_dispatcher(index), CorpusContext::from_index(*index),
              EpisodeConfig{}, 1, &episodes);
    trajectories.insert(trajectories.end(), episodes.begin(), episodes.end());

    TempDir dir;
    size_t written = export_sft(trajectories, training_prompt(), dir / "sft.jsonl");
    std::ifstream in(dir / "sft.jsonl");
    size_t lines = 0;
    for (std::string line; std::getline(in, line);) {
        ++lines;
    }
    auto back = import_sft(dir / "sft.jsonl");
    c.expect(written == trajectories.size(), "reported count");
    c.expect(lines == trajectories.size(), "line count");
    c.expect(back.size() == trajectories.size(), "imported count");
    size_t equal = 0;
    for (size_t i = 0; i < std::min(back.size(), trajectories.size()); ++i) {
        equal += back[i] == trajectories[i] ? 1 : 0;
    }
    c.expect(equal == trajectories.size(), "structurally different re-imports");
    c.expect(export_sft({}, training_prompt(), dir / "empty.jsonl") == 0, "empty export");
    c.note = std::to_string(lines) + " lines for " + std::to_string(trajectories.size()) +
             " trajectories, " + std::to_string(equal) + " re-imported equal";
}

}  // namespace

int
main() {
    struct Criterion {
        const char* id;
        const char* title;
        void (*run)(Check&);
    };
    const Criterion criteria[] = {
        {"AC1", "timestamp grammar", ac1},
        {"AC2", "video range validator", ac2},
        {"AC3", "hierarchy arithmetic", ac3},
        {"AC4", "retrieval oracle equivalence", ac4},
        {"AC5", "trace grammar", ac5},
        {"AC6", "episode termination and causality", ac6},
        {"AC7", "rewards and advantages", ac7},
        {"AC8", "end-to-end synthetic benchmark", ac8},
        {"AC9", "golden prompts and schemas", ac9},
        {"AC10", "SFT export round trip", ac10},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        Check c;
        try {
            cr.run(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        if (c.ok()) {
            std::printf("%s PASS %s: %s\n", cr.id, cr.title, c.note.c_str());
        } else {
            ++failures;
            std::printf("%s FAIL %s: %s\n", cr.id, cr.title, c.failure().c_str());
        }
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
