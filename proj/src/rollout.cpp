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

#include "cott/rollout.h"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cott/io.h"
#include "cott/parallel.h"

namespace cott {
namespace {

bool
iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

template <typename Fn>
std::vector<Trajectory>
read_lines(const std::filesystem::path& path, Fn&& parse) {
    std::string text = read_file(path);
    std::vector<Trajectory> out;
    for (auto line : split_lines(text)) {
        try {
            out.push_back(parse(line));
        } catch (const Error& e) {
            auto offset = static_cast<size_t>(line.data() - text.data());
            auto line_no = 1 + std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n');
            throw Error(e.type(), path.string() + " line " + std::to_string(line_no) + ": " +
                                      e.what());
        }
    }
    return out;
}

}  // namespace

void
RewardWeights::validate() const {
    if (!(answer >= 0.0) || !(format >= 0.0)) {
        throw Error(ErrorType::INVALID_ARGUMENT, "reward weights must be non-negative");
    }
    if (answer == 0.0 && format == 0.0) {
        throw Error(ErrorType::INVALID_ARGUMENT, "reward weights must not both be zero");
    }
}

RewardReport
score_trajectory(const Trajectory& trajectory, std::string_view gold,
                 const RewardWeights& weights) {
    RewardReport report;
    auto answer = trajectory.answer();
    if (!answer) {
        answer = trajectory.assisted_answer;
    }
    report.answer_correct = answer && iequals(answer->choice, gold);
    report.format_fraction = validate_format(trajectory).fraction_ok;
    report.reward = weights.answer * (report.answer_correct ? 1.0 : 0.0) +
                    weights.format * report.format_fraction;
    return report;
}

std::vector<double>
group_advantages(std::span<const double> rewards, double epsilon) {
    std::vector<double> out(rewards.size(), 0.0);
    if (rewards.empty() ||
        std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) {
        return out;
    }
    auto n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) {
        mean += r;
    }
    mean /= n;
    // Second pass removes the rounding left in the first mean.
    double residual = 0.0;
    for (size_t i = 0; i < rewards.size(); ++i) {
        out[i] = rewards[i] - mean;
        residual += out[i];
    }
    residual /= n;
    double var = 0.0;
    for (double& d : out) {
        d -= residual;
        var += d * d;
    }
    double scale = std::max(std::sqrt(var / n), epsilon);
    for (double& d : out) {
        d /= scale;
    }
    return out;
}

RolloutGroup
run_rollout_group(const QuestionSpec& question, std::string_view gold,
                  const PolicyFactory& factory, const Dispatcher& dispatcher,
                  const CorpusContext& corpus, size_t group_size, const EpisodeConfig& config,
                  const RewardWeights& weights, size_t workers) {
    if (group_size == 0) {
        throw Error(ErrorType::INVALID_ARGUMENT, "group size must be at least 1");
    }
    weights.validate();
    RolloutGroup group;
    group.question = question;
    group.trajectories.resize(group_size);
    group.reports.resize(group_size);

    parallel_for(group_size, workers, [&](size_t k) {
        Trajectory& t = group.trajectories[k];
        try {
            auto policy = factory(question, k);
            t = run_episode(question, *policy, dispatcher, corpus, config).trajectory;
            group.reports[k] = score_trajectory(t, gold, weights);
        } catch (const std::exception&) {
            t = Trajectory{question.id, question.view_id, question.question, question.options,
                           question.query_time, {}, std::nullopt};
            group.reports[k] = RewardReport{false, 0.0, 0.0};
        }
    });

    for (const auto& r : group.reports) {
        group.rewards.push_back(r.reward);
    }
    group.advantages = group_advantages(group.rewards);
    return group;
}

std::string
rollout_record(const RolloutGroup& group, size_t member) {
    nlohmann::json doc;
    doc["question_id"] = group.question.id;
    doc["group_index"] = member;
    doc["reward"] = group.rewards.at(member);
    doc["advantage"] = group.advantages.at(member);
    doc["trajectory"] = render_trajectory(group.trajectories.at(member));
    return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void
write_rollout_records(std::span<const RolloutGroup> groups, const std::filesystem::path& path) {
    std::string out;
    for (const auto& g : groups) {
        for (size_t k = 0; k < g.trajectories.size(); ++k) {
            out += rollout_record(g, k);
            out += "\n";
        }
    }
    write_file_atomic(path, out);
}

size_t
export_sft(std::span<const Trajectory> trajectories, std::string_view system_prompt,
           const std::filesystem::path& path) {
    std::string out;
    for (const auto& t : trajectories) {
        out += to_sft_line(t, system_prompt);
        out += "\n";
    }
    write_file_atomic(path, out);
    return trajectories.size();
}

std::vector<Trajectory>
import_sft(const std::filesystem::path& path) {
    return read_lines(path, [](std::string_view line) { return from_sft_line(line); });
}

void
write_trajectories(std::span<const Trajectory> trajectories, const std::filesystem::path& path) {
    std::string out;
    for (const auto& t : trajectories) {
        out += to_trajectory_line(t);
        out += "\n";
    }
    write_file_atomic(path, out);
}

std::vector<Trajectory>
read_trajectories(const std::filesystem::path& path) {
    return read_lines(path, [](std::string_view line) { return from_trajectory_line(line); });
}

}  // namespace cott
