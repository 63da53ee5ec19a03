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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cott/agent.h"
#include "cott/trace.h"

namespace cott {

struct RewardWeights {
    double answer = 1.0;
    double format = 0.0;

    /// Throws Error(INVALID_ARGUMENT) for negative weights or both zero.
    void
    validate() const;
};

struct RewardReport {
    bool answer_correct = false;
    double format_fraction = 0.0;
    double reward = 0.0;
};

/// The answer is the trajectory's own answer, or the assisted answer when it
/// has none; it is compared to `gold` ignoring case.
RewardReport
score_trajectory(const Trajectory& trajectory, std::string_view gold,
                 const RewardWeights& weights = {});

inline constexpr double kAdvantageEpsilon = 1e-8;

/// (r - mean) / max(std, epsilon) with the population standard deviation.
/// A constant group maps to zeros.
std::vector<double>
group_advantages(std::span<const double> rewards, double epsilon = kAdvantageEpsilon);

struct RolloutGroup {
    QuestionSpec question;
    std::vector<Trajectory> trajectories;
    std::vector<RewardReport> reports;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

/// Runs `group_size` independent episodes of one question, each with a fresh
/// policy from `factory`, then scores them and standardizes the rewards. A
/// member whose episode could not run gets an empty trajectory and reward 0.
RolloutGroup
run_rollout_group(const QuestionSpec& question, std::string_view gold,
                  const PolicyFactory& factory, const Dispatcher& dispatcher,
                  const CorpusContext& corpus, size_t group_size, const EpisodeConfig& config,
                  const RewardWeights& weights = {}, size_t workers = 1);

/// {"question_id","group_index","reward","advantage","trajectory"}
std::string
rollout_record(const RolloutGroup& group, size_t member);

void
write_rollout_records(std::span<const RolloutGroup> groups, const std::filesystem::path& path);

/// One conversation per line; returns the line count. The file is replaced
/// atomically and created even when empty. Throws Error(IO).
size_t
export_sft(std::span<const Trajectory> trajectories, std::string_view system_prompt,
           const std::filesystem::path& path);

std::vector<Trajectory>
import_sft(const std::filesystem::path& path);

/// Stored trajectory records, one per line.
void
write_trajectories(std::span<const Trajectory> trajectories, const std::filesystem::path& path);

std::vector<Trajectory>
read_trajectories(const std::filesystem::path& path);

}  // namespace cott
