#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maro/analysis.hpp"
#include "maro/evidence.hpp"
#include "maro/judge.hpp"
#include "maro/optimizer.hpp"
#include "maro/prompts.hpp"
#include "maro/provider.hpp"
#include "maro/tasks.hpp"

namespace maro {

/// Settings shared by every stage after ingestion.
struct PipelineConfig {
    std::uint64_t seed = 0;
    TaskSetConfig tasks;
    OptimizerConfig optimizer;
    JudgeConfig judge;
    AnalysisConfig analysis;
    EvidenceConfig evidence;
    /// false skips optimization: r0 alone is used with K = 1.
    bool optimize = true;
    int workers = 1;
};

struct Services {
    Provider& provider;
    const PromptRegistry& prompts;
};

/// Stamped into every artifact.
struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> prompt_hashes;

    nlohmann::json to_json() const;
};

/// Deterministic JSON of the settings that influence results (worker
/// counts and directories excluded).
nlohmann::json config_fingerprint(const PipelineConfig& config);
Provenance make_provenance(const PipelineConfig& config, const PromptRegistry& prompts);

JudgeContext judge_context(const PipelineConfig& config, const Services& services);
AgentContext agent_context(const PipelineConfig& config, const Services& services);

/// Caps every source domain (per-domain cap, seeded per domain name) and
/// builds the validation tasks over the capped parts.
std::vector<ValidationTask> cap_and_build_tasks(const std::map<std::string, Dataset>& sources,
                                                const std::map<std::string, MultiDimReport>& reports,
                                                const PipelineConfig& config,
                                                std::vector<std::string>* warnings = nullptr);

/// Union of the capped source parts, used as the evaluation demo pool.
Dataset capped_pool(const std::map<std::string, Dataset>& sources, const PipelineConfig& config);

struct OptimizationOutcome {
    std::vector<LedgerEntry> top;
    OptimizerState state;
};

/// Scores r0 and runs the optimizer over `tasks` (or only scores r0 when
/// optimization is disabled). With a run directory this writes
/// checkpoint.json, ledger.jsonl, proposals.jsonl, judgements.jsonl and
/// rules.json, and resumes from an existing checkpoint.
OptimizationOutcome run_optimization(const std::vector<ValidationTask>& tasks, const PipelineConfig& config,
                                     const Services& services,
                                     const std::optional<std::filesystem::path>& run_dir = std::nullopt,
                                     const Provenance& provenance = {});

/// rules.json body.
nlohmann::json rules_artifact(const std::vector<LedgerEntry>& top, const OptimizerState& state,
                              const Provenance& provenance);
std::vector<DecisionRule> load_rules_artifact(const std::filesystem::path& path);

/// Ledger in the rule | accuracy table shape.
std::string format_ledger_table(const RuleLedger& ledger);

}  // namespace maro
