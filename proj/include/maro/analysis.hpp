#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maro/domain.hpp"
#include "maro/error.hpp"
#include "maro/evidence.hpp"
#include "maro/prompts.hpp"
#include "maro/provider.hpp"

namespace maro {

enum class SectionKind { Linguistic = 0, Comment = 1, Fact = 2 };

std::string_view section_name(SectionKind kind) noexcept;
std::optional<SectionKind> section_from_name(std::string_view name) noexcept;
/// Agent role that wrote a section and answers its reflection questions.
Role section_role(SectionKind kind) noexcept;

struct AnalysisReport {
    SectionKind kind = SectionKind::Linguistic;
    std::string body;
    std::vector<std::string> reflection_questions;
    std::vector<std::string> reflection_answers;
    std::vector<std::string> warnings;
};

struct MultiDimReport {
    std::string item_id;
    std::vector<AnalysisReport> sections;
    std::string composed_text;
    std::vector<std::string> fact_questions;
    EvidenceSet evidence;
    std::vector<std::string> warnings;

    const AnalysisReport* section(SectionKind kind) const;
};

struct AnalysisConfig {
    std::size_t max_comments = 50;
    std::size_t max_fact_questions = 5;
    std::size_t max_reflection_questions = 3;
    /// 0 disables the question-reflection pass entirely.
    int reflection_rounds = 1;
    int max_tokens = 2048;
    TemperatureTable temperatures;
};

/// Everything an analysis agent needs to issue a call.
struct AgentContext {
    Provider& provider;
    const PromptRegistry& prompts;
    AnalysisConfig config;
};

// User-content builders, shared by the agents and their reflection rounds.
std::string comment_block(const NewsItem& item, std::size_t max_comments);
std::string comment_prompt(const NewsItem& item, std::size_t max_comments);
std::string fact_check_prompt(const NewsItem& item, const EvidenceSet& evidence);

/// One question per non-empty line, list markers stripped, capped.
std::vector<std::string> parse_question_list(const std::string& response, std::size_t cap);

/// Splits a numbered multi-answer blob into `expected` answers. Returns
/// nullopt when the numbering does not line up.
std::optional<std::vector<std::string>> split_numbered_answers(const std::string& blob, std::size_t expected);

AnalysisReport analyze_linguistic(const NewsItem& item, const AgentContext& ctx);
AnalysisReport analyze_comments(const NewsItem& item, const AgentContext& ctx);
std::vector<std::string> generate_fact_questions(const NewsItem& item, const AgentContext& ctx);
AnalysisReport check_facts(const NewsItem& item, const EvidenceSet& evidence, const AgentContext& ctx);

/// Questioning-agent pass over one report. `evidence` is consulted for Fact
/// reports only; comments are included for Comment reports only.
std::vector<std::string> reflect(const NewsItem& item, const AnalysisReport& report, const EvidenceSet* evidence,
                                 const AgentContext& ctx);

/// Re-invokes the report's own agent to answer `questions`; one answer per
/// question, aligned by index. Records a warning on fallback splitting.
std::vector<std::string> respond_to_reflection(const NewsItem& item, AnalysisReport& report,
                                               const std::vector<std::string>& questions,
                                               const EvidenceSet* evidence, const AgentContext& ctx);

/// Deterministic composition; sections are emitted as Linguistic, Comment,
/// Fact regardless of input order.
MultiDimReport compose(const NewsItem& item, std::vector<AnalysisReport> sections);

/// Recovers section bodies from composed text by header.
std::map<SectionKind, std::string> parse_composed(const std::string& composed_text);

/// Whole analysis pipeline for one item. `retriever` may be null, which
/// yields empty evidence.
MultiDimReport analyze_full(const NewsItem& item, Retriever* retriever, const AgentContext& ctx);

/// Upper bound on provider calls analyze_full issues for an item.
std::size_t call_budget(const NewsItem& item, const AnalysisConfig& config);

nlohmann::json report_to_json(const MultiDimReport& report);
MultiDimReport report_from_json(const nlohmann::json& j);

struct BatchOutcome {
    std::optional<MultiDimReport> report;
    std::string error;
    std::optional<Errc> code;  ///< set when the failure was a maro::Error
};

/// Reference implementation: items analyzed one after another.
std::vector<BatchOutcome> analyze_batch_serial(const std::vector<NewsItem>& items, Retriever* retriever,
                                               const AgentContext& ctx);

/// Items analyzed concurrently on `workers` threads; output order follows input.
std::vector<BatchOutcome> analyze_batch(const std::vector<NewsItem>& items, Retriever* retriever,
                                        const AgentContext& ctx, int workers);

/// Report archive: one report per line, keyed by item id.
std::map<std::string, MultiDimReport> load_report_archive(const std::filesystem::path& path);
void append_report(const std::filesystem::path& path, const MultiDimReport& report);

}  // namespace maro
