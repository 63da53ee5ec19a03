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

#include "cott/harness.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "cott/io.h"
#include "cott/parallel.h"
#include "cott/rollout.h"

namespace cott {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 24> kObjects{
    "screwdriver", "kettle",  "notebook", "guitar",   "umbrella", "scissors",
    "flashlight",  "teapot",  "backpack", "stapler",  "camera",   "headphones",
    "blender",     "wrench",  "candle",   "keyboard", "basket",   "mirror",
    "toaster",     "hammer",  "lantern",  "bicycle",  "sponge",   "calculator"};
constexpr std::array<std::string_view, 8> kRooms{"kitchen", "living room", "bedroom", "garage",
                                                 "office",  "hallway",     "garden",  "bathroom"};
constexpr std::array<std::string_view, 10> kVerbs{"look at", "move",  "clean",  "hold",
                                                  "put down", "open", "close",  "check",
                                                  "wipe",    "carry"};
constexpr std::array<std::string_view, 6> kSpeech{
    "okay, let me think about lunch", "where did I leave my phone", "that was a long meeting",
    "we should tidy up later",        "turn the music down please", "time for a short break"};

constexpr int64_t kClipFrames = 30 * kFramesPerSecond;

// A planted token must not occur anywhere else, so it may not be a word the
// caption templates use.
bool
is_template_word(std::string_view token) {
    static const std::set<std::string, std::less<>> words = [] {
        std::set<std::string, std::less<>> out{"i", "pick", "up", "the", "marked", "in", "see", "a"};
        auto add = [&](const auto& table) {
            for (auto entry : table) {
                std::istringstream split(normalize_for_search(entry));
                for (std::string w; split >> w;) {
                    out.insert(w);
                }
            }
        };
        add(kObjects);
        add(kRooms);
        add(kVerbs);
        add(kSpeech);
        return out;
    }();
    return words.contains(token);
}
constexpr int64_t kQueryLagFrames = 2 * kFramesPerHour;

uint64_t
fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename Seq>
std::string_view
pick(std::mt19937_64& rng, const Seq& items) {
    return items[rng() % items.size()];
}

std::string
make_token(std::mt19937_64& rng) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "evt%06llx",
                  static_cast<unsigned long long>(rng() % 0x1000000ULL));
    return buf;
}

std::string
padded(std::string_view text) {
    return " " + normalize_for_search(text) + " ";
}

bool
has_phrase(std::string_view text, std::string_view phrase) {
    std::string needle = normalize_for_search(phrase);
    return !needle.empty() && padded(text).find(" " + needle + " ") != std::string::npos;
}

std::string
tool_turn(std::string_view thought, const ToolCall& call) {
    return "<think>" + escape_body(thought) + "</think><tool>" + escape_body(tool_call_json(call)) +
           "</tool>";
}

std::string
answer_turn(std::string_view thought, std::string_view label) {
    return "<think>" + escape_body(thought) + "</think><answer>" + escape_body(label) +
           "</answer>";
}

std::optional<std::string>
find_token(std::string_view question) {
    std::istringstream words{std::string(normalize_for_search(question))};
    std::string w;
    while (words >> w) {
        if (w.size() == 9 && w.starts_with("evt")) {
            return w;
        }
    }
    return std::nullopt;
}

std::string
last_observation(std::span<const Message> messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "tool") {
            try {
                for (const auto& seg : parse_fragment(it->content)) {
                    if (seg.kind == SegmentKind::INFORMATION) {
                        return seg.body;
                    }
                }
            } catch (const Error&) {
            }
            return {};
        }
    }
    return {};
}

std::optional<TimeRange>
finest_hit(std::string_view payload) {
    std::optional<std::pair<Level, TimeRange>> best;
    for (auto line : split_lines(payload)) {
        if (!line.starts_with("[")) {
            continue;
        }
        size_t close = line.find("] matched:");
        size_t space = line.find(' ');
        if (close == std::string_view::npos || space == std::string_view::npos || space > close) {
            continue;
        }
        auto level = level_from_name(line.substr(1, space - 1));
        if (!level) {
            continue;
        }
        try {
            TimeRange range = parse_range(line.substr(space + 1, close - space - 1));
            if (!best || *level < best->first) {
                best = std::make_pair(*level, range);
            }
        } catch (const Error&) {
        }
    }
    if (!best) {
        return std::nullopt;
    }
    return best->second;
}

Timestamp
at_frame(int64_t frame) {
    return Timestamp::from_frame_index(frame);
}

std::optional<size_t>
parse_size(std::string_view text) {
    size_t value = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// QA records

void
QARecord::validate() const {
    if (options.size() < 2) {
        throw Error(ErrorType::SPEC, "question " + id + " needs at least two options");
    }
    std::set<std::string> labels;
    for (const auto& o : options) {
        if (o.label.empty() || !labels.insert(o.label).second) {
            throw Error(ErrorType::SPEC, "question " + id + " has an empty or repeated label");
        }
    }
    if (!labels.contains(gold)) {
        throw Error(ErrorType::SPEC, "question " + id + ": gold '" + gold + "' is not an option");
    }
    if (question.empty()) {
        throw Error(ErrorType::SPEC, "question " + id + " has no text");
    }
}

QuestionSpec
QARecord::spec() const {
    return QuestionSpec{id, view_id, question, options, query_time};
}

std::string
qa_to_line(const QARecord& r) {
    json doc;
    doc["id"] = r.id;
    doc["view_id"] = r.view_id;
    doc["question"] = r.question;
    doc["options"] = json::array();
    for (const auto& o : r.options) {
        doc["options"].push_back({{"label", o.label}, {"text", o.text}});
    }
    doc["gold"] = r.gold;
    doc["query_time"] = format_timestamp(r.query_time);
    return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

QARecord
qa_from_line(std::string_view line) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorType::IO, "QA record is not a JSON object");
    }
    QARecord r;
    try {
        r.id = doc.at("id").get<std::string>();
        r.view_id = doc.at("view_id").get<std::string>();
        r.question = doc.at("question").get<std::string>();
        for (const auto& o : doc.at("options")) {
            r.options.push_back({o.at("label").get<std::string>(), o.at("text").get<std::string>()});
        }
        r.gold = doc.at("gold").get<std::string>();
        r.query_time = parse_timestamp(doc.at("query_time").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorType::IO, std::string("malformed QA record: ") + e.what());
    }
    r.validate();
    return r;
}

std::vector<QARecord>
read_qa_records(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::vector<QARecord> out;
    for (auto line : split_lines(text)) {
        try {
            out.push_back(qa_from_line(line));
        } catch (const Error& e) {
            auto offset = static_cast<long>(line.data() - text.data());
            auto n = 1 + std::count(text.begin(), text.begin() + offset, '\n');
            throw Error(e.type(), path.string() + " line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void
write_qa_records(std::span<const QARecord> records, const std::filesystem::path& path) {
    std::string out;
    for (const auto& r : records) {
        out += qa_to_line(r);
        out += "\n";
    }
    write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Synthetic corpora

void
SyntheticSpec::validate() const {
    if (days < 1 || days > kMaxDay) {
        throw Error(ErrorType::SPEC, "days must be within 1.." + std::to_string(kMaxDay));
    }
    if (clips_per_day < 1 || static_cast<int64_t>(clips_per_day) > kFramesPerDay / kClipFrames) {
        throw Error(ErrorType::SPEC, "clips_per_day must be within 1..2880");
    }
    if (view_id.empty()) {
        throw Error(ErrorType::SPEC, "view_id is empty");
    }
    if (!(distractor_density >= 0.0 && distractor_density <= 1.0)) {
        throw Error(ErrorType::SPEC, "distractor_density must be within [0, 1]");
    }
    size_t total = static_cast<size_t>(days) * clips_per_day;
    if (events.size() > total || (random_events > 0 && events.size() + random_events > total - 1)) {
        throw Error(ErrorType::SPEC, "more events than clips can hold");
    }
    std::set<std::string> tokens;
    std::set<int64_t> slots;
    for (const auto& e : events) {
        bool alnum = !e.token.empty() && std::all_of(e.token.begin(), e.token.end(), [](char c) {
            return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        });
        if (!alnum || !tokens.insert(e.token).second) {
            throw Error(ErrorType::SPEC,
                        "event tokens must be unique lower-case alphanumeric words: '" + e.token +
                            "'");
        }
        if (is_template_word(e.token)) {
            throw Error(ErrorType::SPEC, "event token '" + e.token + "' also appears in captions");
        }
        int64_t frame = e.time.frame_index();
        int64_t day = frame / kFramesPerDay;
        int64_t slot = (frame % kFramesPerDay) / kClipFrames;
        if (day >= days || slot >= static_cast<int64_t>(clips_per_day)) {
            throw Error(ErrorType::SPEC,
                        "event at " + format_timestamp(e.time) + " lies outside the corpus");
        }
        if (!slots.insert(day * static_cast<int64_t>(clips_per_day) + slot).second) {
            throw Error(ErrorType::SPEC, "two events share the clip at " + format_timestamp(e.time));
        }
    }
}

SyntheticCorpus
generate_synthetic_corpus(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const size_t total = static_cast<size_t>(spec.days) * spec.clips_per_day;
    auto clip_start = [&](size_t index) {
        int64_t day = static_cast<int64_t>(index / spec.clips_per_day);
        int64_t slot = static_cast<int64_t>(index % spec.clips_per_day);
        return day * kFramesPerDay + slot * kClipFrames;
    };

    // Planted slots and tokens first so look-alike tokens can avoid them.
    std::vector<std::pair<size_t, std::string>> planted;
    std::unordered_set<size_t> used;
    std::unordered_set<std::string> tokens;
    for (const auto& e : spec.events) {
        int64_t frame = e.time.frame_index();
        size_t index = static_cast<size_t>(frame / kFramesPerDay) * spec.clips_per_day +
                       static_cast<size_t>((frame % kFramesPerDay) / kClipFrames);
        planted.emplace_back(index, e.token);
        used.insert(index);
        tokens.insert(e.token);
    }
    for (size_t k = 0; k < spec.random_events; ++k) {
        size_t index = 0;
        do {
            index = rng() % (total - 1);
        } while (used.contains(index));
        std::string token;
        do {
            token = make_token(rng);
        } while (tokens.contains(token));
        planted.emplace_back(index, token);
        used.insert(index);
        tokens.insert(token);
    }

    SyntheticCorpus corpus;
    corpus.clips.reserve(total);
    const auto density_scale = static_cast<uint64_t>(spec.distractor_density * 1000000.0);
    for (size_t i = 0; i < total; ++i) {
        ClipLog clip;
        clip.view_id = spec.view_id;
        int64_t start = clip_start(i);
        clip.range = TimeRange(at_frame(start), at_frame(start + kClipFrames));
        if (used.contains(i)) {
            corpus.clips.push_back(std::move(clip));
            continue;
        }
        std::string object(pick(rng, kObjects));
        std::string room(pick(rng, kRooms));
        if (rng() % 1000000 < density_scale) {
            std::string fake;
            do {
                fake = make_token(rng);
            } while (tokens.contains(fake));
            clip.caption = "I see a " + object + " marked " + fake + " in the " + room + ".";
        } else {
            clip.caption =
                "I " + std::string(pick(rng, kVerbs)) + " the " + object + " in the " + room + ".";
        }
        if (rng() % 3 == 0) {
            clip.asr = std::string(pick(rng, kSpeech));
        }
        corpus.clips.push_back(std::move(clip));
    }

    const int64_t corpus_end = clip_start(total - 1) + kClipFrames;
    for (size_t q = 0; q < planted.size(); ++q) {
        auto& [index, token] = planted[q];
        ClipLog& clip = corpus.clips[index];
        std::vector<std::string_view> pool(kObjects.begin(), kObjects.end());
        for (size_t i = pool.size() - 1; i > 0; --i) {
            std::swap(pool[i], pool[rng() % (i + 1)]);
        }
        std::string object(pool[0]);
        std::string room(pick(rng, kRooms));
        clip.caption = "I pick up the " + object + " marked " + token + " in the " + room + ".";

        std::vector<std::string_view> shown(pool.begin(), pool.begin() + 4);
        for (size_t i = shown.size() - 1; i > 0; --i) {
            std::swap(shown[i], shown[rng() % (i + 1)]);
        }
        QARecord record;
        char id[32];
        std::snprintf(id, sizeof id, "q%04zu", q + 1);
        record.id = spec.view_id + "-" + id;
        record.view_id = spec.view_id;
        record.question = "Which object was marked " + token + " when I picked it up?";
        for (size_t i = 0; i < shown.size(); ++i) {
            std::string label(1, static_cast<char>('A' + i));
            record.options.push_back({label, std::string(shown[i])});
            if (shown[i] == object) {
                record.gold = label;
            }
        }
        int64_t lag = static_cast<int64_t>(rng() % static_cast<uint64_t>(kQueryLagFrames));
        record.query_time = at_frame(std::min(clip.range.end().frame_index() + lag, corpus_end));
        corpus.answers.push_back({record.id, token, clip.range});
        corpus.questions.push_back(std::move(record));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Reference policies

std::vector<std::string>
oracle_script(const QARecord& record, const PlantedAnswer& answer, Timestamp corpus_start) {
    std::string object;
    for (const auto& o : record.options) {
        if (o.label == record.gold) {
            object = o.text;
        }
    }
    std::vector<std::string> turns;
    turns.push_back(tool_turn(
        "The question hinges on the tag " + answer.token +
            ". I will search the day summaries for it before the question time.",
        ToolCall{RagArgs{Level::DAY, {answer.token}, corpus_start, record.query_time}}));
    turns.push_back(tool_turn(
        "The tag shows up at " + format_timestamp(answer.clip.start()) +
            ". I will look at that frame to see which object carries it.",
        ToolCall{VlmArgs{"Which object is marked " + answer.token + "?", answer.clip.start()}}));
    turns.push_back(answer_turn("The frame shows the " + object + " marked " + answer.token + ".",
                                record.gold));
    return turns;
}

std::string
SyntheticOraclePolicy::generate(std::span<const Message> messages) {
    size_t turn = static_cast<size_t>(std::count_if(
        messages.begin(), messages.end(), [](const Message& m) { return m.role == "assistant"; }));
    auto token = find_token(question_.question);
    const std::string& fallback = question_.options.front().label;
    if (!token) {
        return answer_turn("The question names no tag I can search for.", fallback);
    }

    if (turn == 0) {
        return tool_turn("I need to find when the tag " + *token +
                             " was seen. An hour-level search narrows it down.",
                         ToolCall{RagArgs{Level::HOUR, {*token}, at_frame(0), question_.query_time}});
    }
    std::string payload = last_observation(messages);
    if (turn == 1) {
        auto hit = finest_hit(payload);
        if (!hit) {
            return answer_turn("The search found nothing for " + *token + ".", fallback);
        }
        int64_t end = std::min(hit->end().frame_index(), question_.query_time.frame_index());
        int64_t start = hit->start().frame_index();
        end = std::min(end, start + kMaxVideoFrames - 1);
        start = std::max<int64_t>(0, std::min(start, end - kMinVideoFrames - 1));
        TimeRange range(at_frame(start), at_frame(end));
        return tool_turn("The tag appears in " + format_range(*hit) +
                             ". I will watch that stretch to see what carries it.",
                         ToolCall{VideoLlmArgs{"Which object is marked " + *token + "?", range}});
    }
    for (auto line : split_lines(payload)) {
        if (!has_phrase(line, *token)) {
            continue;
        }
        for (const auto& o : question_.options) {
            if (has_phrase(line, o.text)) {
                return answer_turn("The footage shows the " + o.text + " marked " + *token + ".",
                                   o.label);
            }
        }
    }
    return answer_turn("None of the options is visible next to " + *token + ".", fallback);
}

RandomAnswerPolicy::RandomAnswerPolicy(const QuestionSpec& question, uint64_t seed) {
    std::mt19937_64 rng(seed ^ fnv1a(question.id));
    if (!question.options.empty()) {
        label_ = question.options[rng() % question.options.size()].label;
    }
}

std::string
RandomAnswerPolicy::generate(std::span<const Message>) {
    return answer_turn("I will guess.", label_);
}

// ---------------------------------------------------------------------------
// Benchmarks

BenchReport
summarize_bench(std::vector<BenchRow> rows) {
    BenchReport report;
    report.n_questions = rows.size();
    if (!rows.empty()) {
        size_t correct = 0;
        size_t formatted = 0;
        size_t steps = 0;
        for (const auto& r : rows) {
            correct += r.correct ? 1 : 0;
            formatted += r.format_ok ? 1 : 0;
            steps += r.steps;
        }
        auto n = static_cast<double>(rows.size());
        report.accuracy = static_cast<double>(correct) / n;
        report.format_accuracy = static_cast<double>(formatted) / n;
        report.mean_steps = static_cast<double>(steps) / n;
    }
    report.rows = std::move(rows);
    return report;
}

std::string
BenchReport::to_json() const {
    json doc;
    doc["n_questions"] = n_questions;
    doc["accuracy"] = accuracy;
    doc["format_accuracy"] = format_accuracy;
    doc["mean_steps"] = mean_steps;
    doc["rows"] = json::array();
    for (const auto& r : rows) {
        doc["rows"].push_back({{"id", r.id},
                               {"gold", r.gold},
                               {"predicted", r.predicted ? json(*r.predicted) : json(nullptr)},
                               {"correct", r.correct},
                               {"format_ok", r.format_ok},
                               {"steps", r.steps}});
    }
    return doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

std::string
BenchReport::to_table() const {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-6s %-9s %-7s %-7s %5s\n", "id", "gold", "predicted",
                  "correct", "format", "steps");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-16s %-6s %-9s %-7s %-7s %5zu\n", r.id.c_str(),
                      r.gold.c_str(), r.predicted ? r.predicted->c_str() : "-",
                      r.correct ? "yes" : "no", r.format_ok ? "yes" : "no", r.steps);
        out += line;
    }
    std::snprintf(line, sizeof line,
                  "questions %zu  accuracy %.4f  format_accuracy %.4f  mean_steps %.3f\n",
                  n_questions, accuracy, format_accuracy, mean_steps);
    out += line;
    return out;
}

BenchReport
run_bench(std::span<const QARecord> questions, const PolicyFactory& factory,
          const Dispatcher& dispatcher, const CorpusContext& corpus, const EpisodeConfig& config,
          size_t workers, std::vector<Trajectory>* out) {
    std::vector<BenchRow> rows(questions.size());
    std::vector<Trajectory> trajectories(questions.size());
    parallel_for(questions.size(), workers, [&](size_t i) {
        const QARecord& q = questions[i];
        BenchRow& row = rows[i];
        row.id = q.id;
        row.gold = q.gold;
        try {
            auto policy = factory(q.spec(), 0);
            trajectories[i] = run_episode(q.spec(), *policy, dispatcher, corpus, config).trajectory;
        } catch (const std::exception&) {
            trajectories[i] = Trajectory{q.id, q.view_id, q.question, q.options, q.query_time,
                                         {}, std::nullopt};
        }
        const Trajectory& t = trajectories[i];
        auto answer = t.answer();
        if (!answer) {
            answer = t.assisted_answer;
        }
        if (answer) {
            row.predicted = answer->choice;
        }
        row.correct = score_trajectory(t, q.gold).answer_correct;
        row.format_ok = !t.steps.empty() && validate_format(t).ok();
        row.steps = t.steps.size();
    });
    if (out != nullptr) {
        *out = std::move(trajectories);
    }
    return summarize_bench(std::move(rows));
}

// ---------------------------------------------------------------------------
// Settings

std::optional<std::string>
process_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) {
        return std::nullopt;
    }
    return std::string(v);
}

Settings
resolve_settings(const SettingsOverrides& flags,
                 const std::optional<std::filesystem::path>& config_file, const EnvLookup& env) {
    Settings s;
    if (config_file) {
        json doc = json::parse(read_file(*config_file), nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw Error(ErrorType::SPEC, config_file->string() + " is not a JSON object");
        }
        auto take = [&](const char* key, auto& field) {
            if (!doc.contains(key)) {
                return;
            }
            const json& v = doc[key];
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0)) {
                throw Error(ErrorType::SPEC, config_file->string() + ": '" + key +
                                                 "' must be a non-negative integer");
            }
            field = v.get<std::decay_t<decltype(field)>>();
        };
        take("max_steps", s.max_steps);
        take("max_hits", s.max_hits);
        take("payload_cap", s.payload_cap);
        take("timeout_ms", s.timeout_ms);
    }
    auto from_env = [&](const char* name, auto& field) {
        auto value = env(name);
        if (!value) {
            return;
        }
        auto parsed = parse_size(*value);
        if (!parsed) {
            throw Error(ErrorType::SPEC, std::string(name) + "='" + *value +
                                             "' is not a non-negative integer");
        }
        field = static_cast<std::decay_t<decltype(field)>>(*parsed);
    };
    from_env("COTT_MAX_STEPS", s.max_steps);
    from_env("COTT_MAX_HITS", s.max_hits);
    from_env("COTT_PAYLOAD_CAP", s.payload_cap);
    from_env("COTT_TIMEOUT_MS", s.timeout_ms);

    if (flags.max_steps) {
        s.max_steps = *flags.max_steps;
    }
    if (flags.max_hits) {
        s.max_hits = *flags.max_hits;
    }
    if (flags.payload_cap) {
        s.payload_cap = *flags.payload_cap;
    }
    if (flags.timeout_ms) {
        s.timeout_ms = *flags.timeout_ms;
    }
    if (s.max_steps == 0) {
        throw Error(ErrorType::SPEC, "max_steps must be at least 1");
    }
    return s;
}

}  // namespace cott
