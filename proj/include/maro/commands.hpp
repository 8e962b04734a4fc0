#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "maro/config.hpp"
#include "maro/eval.hpp"
#include "maro/pipeline.hpp"

namespace maro {

/// Everything a stage command needs, built once at startup so that a bad
/// config or prompt directory fails before any output is written.
struct Session {
    RunConfig config;
    PromptRegistry prompts;
    std::shared_ptr<Provider> provider;
    std::shared_ptr<UsageMeter> meter;
    std::unique_ptr<Retriever> retriever;
    Provenance provenance;
    bool resume = false;

    /// `backend` replaces the configured provider (tests); the cache and
    /// recording layers still apply.
    static Session open(RunConfig config, bool resume = false, std::shared_ptr<Provider> backend = nullptr);

    Services services() const { return Services{*provider, prompts}; }
};

struct AnalyzeSummary {
    std::size_t requested = 0;
    std::size_t reused = 0;
    std::size_t produced = 0;
    std::vector<std::pair<std::string, std::string>> failures;  ///< item id, message
    std::optional<Errc> first_error;
};

/// Reports every item of `input` into the archive at `out`. Items already in
/// the archive are skipped. The archive is rewritten in dataset order after
/// each chunk, so an interrupted run keeps its finished items. Reports for
/// items outside `input` stay in the archive.
AnalyzeSummary cmd_analyze(Session& session, const std::filesystem::path& input, const std::filesystem::path& out);

/// Caps each source domain, builds the task set and writes its archive.
std::vector<ValidationTask> cmd_tasks(Session& session, const std::filesystem::path& sources,
                                      const std::filesystem::path& reports, const std::filesystem::path& out);

/// Builds (or loads) tasks and runs the optimizer into `run_dir`. Prints the
/// ledger table to `log`.
OptimizationOutcome cmd_optimize(Session& session, const std::filesystem::path& sources,
                                 const std::filesystem::path& reports, const std::filesystem::path& run_dir,
                                 const std::optional<std::filesystem::path>& tasks, std::ostream& log);

/// Evaluates `target` under a rules artifact; writes metrics.json and
/// predictions.jsonl into `out_dir`.
TargetEvaluation cmd_eval(Session& session, const std::filesystem::path& target, const std::filesystem::path& sources,
                          const std::filesystem::path& reports, const std::filesystem::path& rules,
                          const std::filesystem::path& out_dir, std::ostream& log);

/// Leave-one-domain-out over `corpus`; writes results.json plus per-domain
/// directories into `run_dir`.
CrossDomainResult cmd_eval_lodo(Session& session, const std::filesystem::path& corpus,
                                const std::filesystem::path& reports, const std::filesystem::path& run_dir,
                                std::ostream& log);

std::vector<SweepRow> cmd_sweep(Session& session, const std::filesystem::path& sources,
                                const std::filesystem::path& reports, const std::vector<std::size_t>& grid,
                                const std::filesystem::path& out, std::ostream& log);

/// Exit code for an error class: usage 1, data 2, provider 3.
int exit_code_for(ErrorClass c) noexcept;

}  // namespace maro
