#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maro/domain.hpp"
#include "maro/judge.hpp"
#include "maro/pipeline.hpp"

namespace maro {

struct Confusion {
    std::size_t tp = 0;  // fake predicted fake
    std::size_t fp = 0;  // real predicted fake
    std::size_t fn = 0;  // fake predicted real
    std::size_t tn = 0;
};

struct EvalMetrics {
    double accuracy = 0.0;
    double f1_fake = 0.0;
    double f1_real = 0.0;
    double f1_macro = 0.0;
    std::size_t n = 0;
    Confusion confusion;
};

nlohmann::json to_json(const EvalMetrics& m);

/// Fake is the positive class. F1 is 0 when precision + recall is 0.
EvalMetrics compute_metrics(const std::vector<Verdict>& preds, const std::vector<Verdict>& golds);

struct ItemPrediction {
    std::string item_id;
    Verdict gold = Verdict::Real;
    Verdict predicted = Verdict::Real;
    bool resolved = true;  ///< false when no rule produced a usable verdict
    std::vector<Judgement> judgements;
};

nlohmann::json to_json(const ItemPrediction& p);

struct TargetEvaluation {
    EvalMetrics metrics;
    std::vector<ItemPrediction> log;  ///< target order
};

/// Infers every target item under the top-K rules. Demonstrations are drawn
/// per item from `demo_pool`, which must not share a domain with the target.
TargetEvaluation evaluate_target(const Dataset& target, const std::map<std::string, MultiDimReport>& reports,
                                 const Dataset& demo_pool, const std::vector<DecisionRule>& rules,
                                 const JudgeContext& ctx, std::size_t demos_per_item, std::uint64_t seed,
                                 int workers);

struct DomainResult {
    std::string domain;
    EvalMetrics metrics;
    std::vector<LedgerEntry> rules;
};

struct CrossDomainResult {
    std::vector<DomainResult> rows;  ///< sorted by domain
    double avg_accuracy = 0.0;
    double avg_f1_fake = 0.0;
    double avg_f1_macro = 0.0;
};

/// Unweighted means over rows.
void compute_averages(CrossDomainResult& result);

/// Holds each domain out as the target in turn: caps the remaining source
/// domains, builds tasks, optimizes rules and evaluates the held-out domain.
/// With a run directory, per-domain artifacts land in <run_dir>/<domain>/
/// and finished domains are reused on resume.
CrossDomainResult leave_one_domain_out(const Dataset& corpus, const std::map<std::string, MultiDimReport>& reports,
                                       const PipelineConfig& config, const Services& services,
                                       const std::optional<std::filesystem::path>& run_dir = std::nullopt,
                                       const Provenance& provenance = {});

/// Machine-readable results table.
nlohmann::json results_to_json(const CrossDomainResult& result, const Provenance& provenance);
/// Fixed-width table for terminals.
std::string format_results_table(const CrossDomainResult& result);

struct SweepRow {
    std::size_t n_tasks = 0;
    CrossDomainResult folds;
};

/// Grid search over task counts: each candidate is scored by holding out
/// each source domain in turn (one fold per source domain).
std::vector<SweepRow> sweep_n_tasks(const Dataset& sources, const std::map<std::string, MultiDimReport>& reports,
                                    const std::vector<std::size_t>& grid, const PipelineConfig& config,
                                    const Services& services);

}  // namespace maro
