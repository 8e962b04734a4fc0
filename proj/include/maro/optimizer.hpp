#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maro/judge.hpp"
#include "maro/prompts.hpp"
#include "maro/provider.hpp"
#include "maro/tasks.hpp"

namespace maro {

struct LedgerEntry {
    DecisionRule rule;
    double accuracy = 0.0;
    std::size_t iteration = 0;  ///< iteration that found it; 0 for the initial rule
};

/// Insertion-ordered <rule, accuracy> pairs. After the first pair, an entry is
/// only accepted when it strictly beats the current best.
class RuleLedger {
public:
    /// Returns false (and leaves the ledger unchanged) when `entry` does not
    /// strictly improve on the best accuracy.
    bool insert(LedgerEntry entry);

    const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }
    const LedgerEntry& best() const;
    bool contains_text(std::string_view text) const;

    /// Unchecked append, used when restoring a ledger from disk.
    void restore(LedgerEntry entry) { entries_.push_back(std::move(entry)); }

private:
    std::vector<LedgerEntry> entries_;
};

/// Top `size` pairs by accuracy in ascending order. Equal accuracies rank the
/// later insertion higher.
std::vector<LedgerEntry> build_trajectory(const std::vector<LedgerEntry>& pairs, std::size_t size);
std::vector<LedgerEntry> build_trajectory(const RuleLedger& ledger, std::size_t size);

/// Pairs sorted by accuracy descending, at most k of them.
std::vector<LedgerEntry> top_k(const RuleLedger& ledger, std::size_t k);

struct OptimizerConfig {
    std::size_t n_iter_max = 500;
    std::size_t n_att_max = 10;
    std::size_t k = 3;
    std::size_t trajectory_size = 10;
    std::size_t exemplar_count = 3;
    /// Extra requests made when a proposal duplicates a ledger rule.
    int duplicate_retries = 3;
};

nlohmann::json to_json(const OptimizerConfig& c);

struct IterationRecord {
    std::size_t iteration = 0;
    std::optional<std::uint64_t> rule_id;
    std::string text;
    std::optional<double> accuracy;
    bool improved = false;
    std::string note;  ///< "duplicate", "empty", or blank
    std::size_t n_att = 0;  ///< counter value after this iteration
};

struct OptimizerState {
    std::size_t n_iter = 0;
    std::size_t n_att = 0;
    std::uint64_t next_rule_id = 1;
    RuleLedger ledger;
    std::vector<IterationRecord> history;

    bool started() const noexcept { return !ledger.empty(); }
};

nlohmann::json state_to_json(const OptimizerState& state);
OptimizerState state_from_json(const nlohmann::json& j);

/// Atomic write of the run state.
void checkpoint(const OptimizerState& state, const std::filesystem::path& path);
/// CorruptCheckpoint on unreadable or incomplete files.
OptimizerState resume(const std::filesystem::path& path);

/// What the optimizer agent is being asked for on a given call.
struct ProposalRequest {
    std::vector<LedgerEntry> trajectory;
    std::size_t iteration = 0;
    int attempt = 0;  ///< 0 for the first request, >0 for duplicate re-requests
};

using Scorer = std::function<double(const DecisionRule&)>;
/// Returns the raw rule text; may throw EmptyProposal.
using Proposer = std::function<std::string(const ProposalRequest&)>;
/// Called after r0 is scored and after every iteration.
using StateHook = std::function<void(const OptimizerState&)>;

struct OptimizeResult {
    std::vector<LedgerEntry> top;  ///< descending accuracy, length min(k, ledger size)
    OptimizerState state;
};

/// Iterative rule optimization. Continues from `state` when it has already
/// started (resume), otherwise scores r0 first.
OptimizeResult optimize(const DecisionRule& r0, const Scorer& scorer, const Proposer& proposer,
                        const OptimizerConfig& config, OptimizerState state = {},
                        const StateHook& on_state = nullptr);

// ---- optimizer agent -------------------------------------------------------

std::string render_trajectory(const std::vector<LedgerEntry>& trajectory);
std::string render_exemplars(const std::vector<ValidationTask>& exemplars);

/// Fills the optimizer template.
std::string build_optimizer_prompt(const std::string& prompt_template, const std::vector<LedgerEntry>& trajectory,
                                   const std::vector<ValidationTask>& exemplars);

/// Strips wrapping quotes, code fences and a leading "Decision rule:" label.
std::string clean_rule_text(const std::string& raw);

struct Proposal {
    DecisionRule rule;
    bool duplicate = false;  ///< exact text match against the ledger
};

struct OptimizerAgent {
    Provider& provider;
    const PromptRegistry& prompts;
    double temperature = 1.0;
    int max_tokens = 2048;
};

/// One proposal from the optimizer agent. EmptyProposal on a blank reply.
Proposal propose_rule(const ProposalRequest& request, const std::vector<ValidationTask>& exemplars,
                      const RuleLedger& ledger, std::uint64_t rule_id, const OptimizerAgent& agent);

/// Raw proposal text for `request`; what optimize's Proposer expects.
std::string request_rule_text(const ProposalRequest& request, const std::vector<ValidationTask>& exemplars,
                              const OptimizerAgent& agent);

}  // namespace maro
