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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cott/agent.h"
#include "cott/memory_index.h"
#include "cott/trace.h"

namespace cott {

// ---------------------------------------------------------------------------
// QA records

struct QARecord {
    std::string id;
    std::string view_id;
    std::string question;
    std::vector<Option> options;
    std::string gold;
    Timestamp query_time;

    /// Throws Error(SPEC): fewer than two options, duplicate labels, or a
    /// gold label outside the options.
    void
    validate() const;

    QuestionSpec
    spec() const;

    bool
    operator==(const QARecord&) const = default;
};

/// {"id","view_id","question","options":[{"label","text"}],"gold","query_time"}
std::string
qa_to_line(const QARecord& record);

QARecord
qa_from_line(std::string_view line);

std::vector<QARecord>
read_qa_records(const std::filesystem::path& path);

void
write_qa_records(std::span<const QARecord> records, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic corpora

struct PlantedEvent {
    Timestamp time;
    /// A single alphanumeric token, unique across the corpus.
    std::string token;
};

struct SyntheticSpec {
    uint64_t seed = 7;
    int days = 2;
    /// Consecutive 30 s clips from midnight of each day, at most 2880.
    size_t clips_per_day = 2880;
    std::string view_id = "A1";
    std::vector<PlantedEvent> events;
    /// Extra events placed at seeded random clips.
    size_t random_events = 10;
    /// Fraction of background clips that mention a look-alike token.
    double distractor_density = 0.05;

    /// Throws Error(SPEC).
    void
    validate() const;
};

struct PlantedAnswer {
    std::string question_id;
    std::string token;
    TimeRange clip;
};

struct SyntheticCorpus {
    std::vector<ClipLog> clips;
    std::vector<QARecord> questions;
    /// Parallel to `questions`.
    std::vector<PlantedAnswer> answers;
};

/// Deterministic per seed. Each question asks which object carried a planted
/// token; the token appears in exactly one clip caption.
SyntheticCorpus
generate_synthetic_corpus(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Reference policies

/// rag(day) for the token from the corpus start, vlm at the planted clip,
/// then the gold answer.
std::vector<std::string>
oracle_script(const QARecord& record, const PlantedAnswer& answer, Timestamp corpus_start);

/// Solves synthetic questions from observations alone: rag(hour) for the
/// question's token, video_llm over the finest hit, then the option named on
/// the line that carries the token.
class SyntheticOraclePolicy final : public PolicyAdapter {
public:
    explicit SyntheticOraclePolicy(QuestionSpec question) : question_(std::move(question)) {
    }

    std::string
    generate(std::span<const Message> messages) override;

private:
    QuestionSpec question_;
};

/// Answers immediately with a label drawn uniformly, seeded per question.
class RandomAnswerPolicy final : public PolicyAdapter {
public:
    RandomAnswerPolicy(const QuestionSpec& question, uint64_t seed);

    std::string
    generate(std::span<const Message> messages) override;

private:
    std::string label_;
};

// ---------------------------------------------------------------------------
// Benchmarks

struct BenchRow {
    std::string id;
    std::string gold;
    std::optional<std::string> predicted;
    bool correct = false;
    bool format_ok = false;
    size_t steps = 0;
};

struct BenchReport {
    size_t n_questions = 0;
    double accuracy = 0.0;
    double format_accuracy = 0.0;
    double mean_steps = 0.0;
    std::vector<BenchRow> rows;

    /// {"n_questions","accuracy","format_accuracy","mean_steps","rows":[...]}
    std::string
    to_json() const;

    std::string
    to_table() const;
};

BenchReport
summarize_bench(std::vector<BenchRow> rows);

/// Runs every question once. Trajectories are returned through `out` in
/// question order when it is non-null.
BenchReport
run_bench(std::span<const QARecord> questions, const PolicyFactory& factory,
          const Dispatcher& dispatcher, const CorpusContext& corpus, const EpisodeConfig& config,
          size_t workers = 1, std::vector<Trajectory>* out = nullptr);

// ---------------------------------------------------------------------------
// Settings

struct Settings {
    size_t max_steps = 10;
    size_t max_hits = 20;
    size_t payload_cap = 4000;
    int64_t timeout_ms = 30000;
};

struct SettingsOverrides {
    std::optional<size_t> max_steps;
    std::optional<size_t> max_hits;
    std::optional<size_t> payload_cap;
    std::optional<int64_t> timeout_ms;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;

std::optional<std::string>
process_env(const std::string& name);

/// Flags beat COTT_MAX_STEPS / COTT_MAX_HITS / COTT_PAYLOAD_CAP /
/// COTT_TIMEOUT_MS, which beat the config file's max_steps / max_hits /
/// payload_cap / timeout_ms, which beat the defaults. Throws Error(SPEC) for
/// unparsable values.
Settings
resolve_settings(const SettingsOverrides& flags,
                 const std::optional<std::filesystem::path>& config_file,
                 const EnvLookup& env = process_env);

}  // namespace cott
