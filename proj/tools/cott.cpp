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

// Command-line front end: corpus generation, indexing, single questions,
// benchmarks, rollout groups and SFT export.

#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cott/agent.h"
#include "cott/harness.h"
#include "cott/io.h"
#include "cott/memory_index.h"
#include "cott/remote.h"
#include "cott/rollout.h"
#include "cott/tools.h"

namespace {

using namespace cott;

struct CommonFlags {
    std::string config;
    std::optional<size_t> max_steps;
    std::optional<size_t> max_hits;
    std::optional<size_t> payload_cap;
    std::optional<int64_t> timeout_ms;
    std::string mode = "train";
    std::string identity;
    bool no_causal = false;
    bool remote_tools = false;
    std::string dispatch_log;

    Settings
    settings() const {
        SettingsOverrides o{max_steps, max_hits, payload_cap, timeout_ms};
        std::optional<std::filesystem::path> file;
        if (!config.empty()) {
            file = config;
        }
        return resolve_settings(o, file);
    }
};

struct PolicyFlags {
    std::string policy = "oracle";
    std::string script;
    uint64_t seed = 0;
};

void
add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON settings file");
    cmd->add_option("--max-steps", f.max_steps, "Policy calls per episode (default 10)");
    cmd->add_option("--max-hits", f.max_hits, "Retrieval hit cap, 0 for none (default 20)");
    cmd->add_option("--payload-cap", f.payload_cap, "Observation size cap in characters (default 4000)");
    cmd->add_option("--timeout-ms", f.timeout_ms, "Per-call tool timeout (default 30000)");
    cmd->add_option("--mode", f.mode, "Prompt mode")->check(CLI::IsMember({"train", "datagen"}));
    cmd->add_option("--identity", f.identity, "View name used in the data-generation prompt");
    cmd->add_flag("--no-causal", f.no_causal, "Allow tools to read footage after the query time");
    cmd->add_flag("--remote-tools", f.remote_tools,
                  "Use COTT_<TOOL>_URL endpoints instead of the built-in mocks where set");
    cmd->add_option("--dispatch-log", f.dispatch_log, "Write every dispatched call here (JSONL)");
}

void
add_policy(CLI::App* cmd, PolicyFlags& f) {
    cmd->add_option("--policy", f.policy, "oracle, random, scripted or http")
        ->check(CLI::IsMember({"oracle", "random", "scripted", "http"}));
    cmd->add_option("--script", f.script, "JSON array of turns for --policy scripted");
    cmd->add_option("--seed", f.seed, "Seed for --policy random");
}

PolicyFactory
make_factory(const PolicyFlags& f) {
    if (f.policy == "oracle") {
        return [](const QuestionSpec& q, size_t) {
            return std::make_unique<SyntheticOraclePolicy>(q);
        };
    }
    if (f.policy == "random") {
        uint64_t seed = f.seed;
        return [seed](const QuestionSpec& q, size_t member) {
            return std::make_unique<RandomAnswerPolicy>(q, seed + member);
        };
    }
    if (f.policy == "scripted") {
        if (f.script.empty()) {
            throw Error(ErrorType::SPEC, "--policy scripted needs --script");
        }
        auto turns = std::make_shared<ScriptedPolicy>(ScriptedPolicy::from_file(f.script));
        return [turns](const QuestionSpec&, size_t) {
            return std::make_unique<ScriptedPolicy>(*turns);
        };
    }
    auto endpoint = endpoint_from_env("policy");
    if (!endpoint) {
        throw Error(ErrorType::SPEC, "--policy http needs COTT_POLICY_URL");
    }
    return [ep = *endpoint](const QuestionSpec&, size_t) { return std::make_unique<HttpPolicy>(ep); };
}

struct Runtime {
    std::shared_ptr<const HierIndex> index;
    std::shared_ptr<Dispatcher> dispatcher;
    std::shared_ptr<DispatchLog> log;
    CorpusContext corpus;
    EpisodeConfig config;
};

Runtime
make_runtime(const std::string& index_path, const CommonFlags& f) {
    Settings s = f.settings();
    Runtime rt;
    rt.index = std::make_shared<const HierIndex>(load_index(index_path));
    DispatchLimits limits;
    limits.timeout = std::chrono::milliseconds(s.timeout_ms);
    limits.max_payload_chars = s.payload_cap;
    rt.dispatcher = make_mock_dispatcher(rt.index, limits, s.max_hits);
    if (f.remote_tools) {
        for (ToolName tool : {ToolName::RAG, ToolName::VIDEO_LLM, ToolName::VLM}) {
            if (auto ep = endpoint_from_env(tool_name(tool))) {
                ep->timeout = limits.timeout;
                rt.dispatcher->set_backend(
                    std::make_shared<HttpToolBackend>(tool, *ep, rt.index->view_id()));
            }
        }
    }
    if (!f.dispatch_log.empty()) {
        rt.log = std::make_shared<DispatchLog>();
        rt.dispatcher->set_log(rt.log);
    }
    rt.corpus = CorpusContext::from_index(*rt.index);
    rt.config.max_steps = s.max_steps;
    rt.config.mode = f.mode == "datagen" ? PromptMode::DATAGEN : PromptMode::TRAIN;
    rt.config.identity = f.identity.empty() ? rt.index->view_id() : f.identity;
    rt.config.causal = !f.no_causal;
    return rt;
}

void
write_dispatch_log(const Runtime& rt, const CommonFlags& f) {
    if (!rt.log) {
        return;
    }
    std::string out;
    for (const auto& r : rt.log->records()) {
        nlohmann::json line;
        line["tool"] = tool_name(r.call.name());
        line["call"] = nlohmann::json::parse(tool_call_json(r.call));
        line["window"] = r.window ? nlohmann::json(format_range(*r.window)) : nlohmann::json();
        line["error"] = r.error ? nlohmann::json(error_type_name(*r.error)) : nlohmann::json();
        out += line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
    }
    write_file_atomic(f.dispatch_log, out);
}

std::vector<Option>
parse_options(const std::vector<std::string>& raw) {
    std::vector<Option> out;
    for (const auto& r : raw) {
        size_t colon = r.find(':');
        if (colon == std::string::npos || colon == 0) {
            throw Error(ErrorType::SPEC, "option '" + r + "' must look like LABEL:text");
        }
        out.push_back({r.substr(0, colon), r.substr(colon + 1)});
    }
    return out;
}

}  // namespace

int
main(int argc, char** argv) {
    CLI::App app{"Chain-of-tool-thought agent runtime for long egocentric video"};
    app.require_subcommand(1);

    // gen-corpus
    SyntheticSpec spec;
    std::string clips_out;
    std::string qa_out;
    std::vector<std::string> planted;
    auto* gen = app.add_subcommand("gen-corpus", "Write a seeded synthetic corpus and QA set");
    gen->add_option("--seed", spec.seed, "RNG seed");
    gen->add_option("--days", spec.days, "Days of recording");
    gen->add_option("--clips-per-day", spec.clips_per_day, "30 s clips per day, from midnight");
    gen->add_option("--events", spec.random_events, "Randomly placed planted events");
    gen->add_option("--event", planted, "Extra planted event TIMESTAMP:TOKEN (repeatable)");
    gen->add_option("--view", spec.view_id, "View id");
    gen->add_option("--distractors", spec.distractor_density, "Look-alike token density");
    gen->add_option("--clips", clips_out, "Clip log output (JSONL)")->required();
    gen->add_option("--qa", qa_out, "QA output (JSONL)")->required();

    // build-index
    std::string clips_in;
    std::string index_out;
    auto* build = app.add_subcommand("build-index", "Build a retrieval index from clip logs");
    build->add_option("--clips", clips_in, "Clip log input (JSONL)")->required();
    build->add_option("--out", index_out, "Index output")->required();

    // ask
    CommonFlags ask_common;
    PolicyFlags ask_policy;
    std::string ask_index;
    std::string ask_qa;
    std::string ask_id;
    std::string ask_question;
    std::vector<std::string> ask_options;
    std::string ask_time;
    std::string ask_out;
    auto* ask = app.add_subcommand("ask", "Run one episode and print the trajectory");
    ask->add_option("--index", ask_index, "Index file")->required();
    ask->add_option("--qa", ask_qa, "Take the question from this QA file");
    ask->add_option("--id", ask_id, "Question id within --qa (default: first)");
    ask->add_option("--question", ask_question, "Question text");
    ask->add_option("--option", ask_options, "LABEL:text (repeatable)");
    ask->add_option("--query-time", ask_time, "DAYX_HHMMSSFF");
    ask->add_option("--out", ask_out, "Also write the trajectory record here");
    add_common(ask, ask_common);
    add_policy(ask, ask_policy);

    // bench
    CommonFlags bench_common;
    PolicyFlags bench_policy;
    std::string bench_index;
    std::string bench_qa;
    std::string bench_report;
    std::string bench_traj;
    size_t bench_workers = 1;
    auto* bench = app.add_subcommand("bench", "Run a QA file and report accuracy");
    bench->add_option("--index", bench_index, "Index file")->required();
    bench->add_option("--qa", bench_qa, "QA file")->required();
    bench->add_option("--report", bench_report, "JSON report output");
    bench->add_option("--trajectories", bench_traj, "Trajectory records output (JSONL)");
    bench->add_option("--workers", bench_workers, "Concurrent episodes");
    add_common(bench, bench_common);
    add_policy(bench, bench_policy);

    // rollout
    CommonFlags roll_common;
    PolicyFlags roll_policy;
    std::string roll_index;
    std::string roll_qa;
    std::string roll_out;
    size_t roll_group = 4;
    size_t roll_workers = 1;
    RewardWeights weights;
    auto* roll = app.add_subcommand("rollout", "Produce scored rollout groups");
    roll->add_option("--index", roll_index, "Index file")->required();
    roll->add_option("--qa", roll_qa, "QA file")->required();
    roll->add_option("--out", roll_out, "Rollout records output (JSONL)")->required();
    roll->add_option("--group-size", roll_group, "Episodes per question");
    roll->add_option("--workers", roll_workers, "Concurrent questions");
    roll->add_option("--w-answer", weights.answer, "Answer reward weight");
    roll->add_option("--w-format", weights.format, "Format reward weight");
    add_common(roll, roll_common);
    add_policy(roll, roll_policy);

    // export-sft
    std::string sft_in;
    std::string sft_out;
    std::string sft_mode = "train";
    std::string sft_identity = "A1";
    auto* sft = app.add_subcommand("export-sft", "Convert stored trajectories to SFT conversations");
    sft->add_option("--trajectories", sft_in, "Trajectory records (JSONL)")->required();
    sft->add_option("--out", sft_out, "SFT output (JSONL)")->required();
    sft->add_option("--mode", sft_mode, "System prompt mode")
        ->check(CLI::IsMember({"train", "datagen"}));
    sft->add_option("--identity", sft_identity, "View name for the data-generation prompt");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            for (const auto& p : planted) {
                size_t colon = p.find(':');
                if (colon == std::string::npos) {
                    throw Error(ErrorType::SPEC, "--event must look like TIMESTAMP:TOKEN");
                }
                spec.events.push_back({parse_timestamp(p.substr(0, colon)), p.substr(colon + 1)});
            }
            SyntheticCorpus corpus = generate_synthetic_corpus(spec);
            std::ostringstream clips;
            write_clip_logs(clips, corpus.clips);
            write_file_atomic(clips_out, clips.str());
            write_qa_records(corpus.questions, qa_out);
            std::cout << corpus.clips.size() << " clips, " << corpus.questions.size()
                      << " questions\n";
        } else if (*build) {
            HierIndex index = build_hierarchy(ingest_clip_logs(read_clip_logs(clips_in)));
            save_index(index, index_out);
            std::cout << "levels:";
            for (Level l : index.depth()) {
                std::cout << " " << level_name(l) << "=" << index.nodes(l).size();
            }
            std::cout << "\n";
            for (const auto& issue : index.issues()) {
                std::cerr << "warning: " << level_name(issue.level) << " node " << issue.node
                          << ": " << issue.message << "\n";
            }
        } else if (*ask) {
            Runtime rt = make_runtime(ask_index, ask_common);
            QuestionSpec q;
            if (!ask_qa.empty()) {
                auto records = read_qa_records(ask_qa);
                auto it = std::find_if(records.begin(), records.end(), [&](const QARecord& r) {
                    return ask_id.empty() || r.id == ask_id;
                });
                if (it == records.end()) {
                    throw Error(ErrorType::SPEC, "no question '" + ask_id + "' in " + ask_qa);
                }
                q = it->spec();
            } else {
                if (ask_question.empty() || ask_options.empty() || ask_time.empty()) {
                    throw Error(ErrorType::SPEC,
                                "give --qa, or --question with --option and --query-time");
                }
                q = QuestionSpec{"ask", rt.index->view_id(), ask_question,
                                 parse_options(ask_options), parse_timestamp(ask_time)};
            }
            auto policy = make_factory(ask_policy)(q, 0);
            Episode ep = run_episode(q, *policy, *rt.dispatcher, rt.corpus, rt.config);
            std::cout << render_trajectory(ep.trajectory) << "\n";
            auto answer = ep.trajectory.answer();
            if (!answer) {
                answer = ep.trajectory.assisted_answer;
            }
            std::cout << "answer: " << (answer ? answer->choice : "none") << "\n";
            if (!ask_out.empty()) {
                write_trajectories(std::span(&ep.trajectory, 1), ask_out);
            }
            write_dispatch_log(rt, ask_common);
        } else if (*bench) {
            Runtime rt = make_runtime(bench_index, bench_common);
            auto records = read_qa_records(bench_qa);
            std::vector<Trajectory> trajectories;
            BenchReport report = run_bench(records, make_factory(bench_policy), *rt.dispatcher,
                                           rt.corpus, rt.config, bench_workers, &trajectories);
            if (!bench_report.empty()) {
                write_file_atomic(bench_report, report.to_json());
            }
            if (!bench_traj.empty()) {
                write_trajectories(trajectories, bench_traj);
            }
            write_dispatch_log(rt, bench_common);
            std::cout << report.to_table();
        } else if (*roll) {
            weights.validate();
            Runtime rt = make_runtime(roll_index, roll_common);
            auto records = read_qa_records(roll_qa);
            auto factory = make_factory(roll_policy);
            std::vector<RolloutGroup> groups;
            for (const auto& r : records) {
                groups.push_back(run_rollout_group(r.spec(), r.gold, factory, *rt.dispatcher,
                                                   rt.corpus, roll_group, rt.config, weights,
                                                   roll_workers));
            }
            write_rollout_records(groups, roll_out);
            write_dispatch_log(rt, roll_common);
            std::cout << groups.size() << " groups, " << groups.size() * roll_group
                      << " episodes\n";
        } else if (*sft) {
            EpisodeConfig cfg;
            cfg.mode = sft_mode == "datagen" ? PromptMode::DATAGEN : PromptMode::TRAIN;
            cfg.identity = sft_identity;
            auto trajectories = read_trajectories(sft_in);
            size_t n = export_sft(trajectories, assemble_system_prompt(cfg), sft_out);
            std::cout << n << " conversations\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
