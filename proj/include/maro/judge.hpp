#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maro/analysis.hpp"
#include "maro/domain.hpp"
#include "maro/prompts.hpp"
#include "maro/provider.hpp"
#include "maro/tasks.hpp"

namespace maro {

enum class RuleOrigin { Manual, Optimized };

struct DecisionRule {
    std::uint64_t id = 0;
    std::string text;
    RuleOrigin origin = RuleOrigin::Manual;
};

std::string_view origin_name(RuleOrigin o) noexcept;

enum class ParseStatus { Clean, Repaired, Failed };

std::string_view parse_status_name(ParseStatus s) noexcept;

struct ParsedVerdict {
    std::optional<Verdict> verdict;
    ParseStatus status = ParseStatus::Failed;
};

struct Judgement {
    std::optional<Verdict> verdict;
    std::string raw;
    ParseStatus status = ParseStatus::Failed;
};

/// Words accepted as a repaired verdict when no "judgment: d" anchor exists.
/// ASCII entries match whole words case-insensitively; others match as
/// substrings.
struct VerdictKeywords {
    std::vector<std::string> fake{"fake", "false", "misinformation", "rumor", "rumour", "\xE8\x99\x9A\xE5\x81\x87",
                                  "\xE8\xB0\xA3\xE8\xA8\x80"};
    std::vector<std::string> real{"real", "true", "genuine", "legitimate", "\xE7\x9C\x9F\xE5\xAE\x9E"};
};

/// The required output-format line appended to every judge prompt.
inline constexpr std::string_view kOutputFormat =
    "judgment: <'1' represents fake-news, '0' represents real-news>";

/// Precedence: the last "judgment: 0|1" anchor (Clean); else a trailing lone
/// 0/1 token or the last verdict keyword (Repaired); else Failed.
ParsedVerdict parse_verdict(std::string_view raw, const VerdictKeywords& keywords = {});

enum class TieBreak { Fake, Real };

struct JudgeConfig {
    double temperature = 0.0;
    int max_tokens = 2048;
    TieBreak tie_break = TieBreak::Fake;
    VerdictKeywords keywords;
};

struct JudgeContext {
    Provider& provider;
    const PromptRegistry& prompts;
    JudgeConfig config;
};

/// Demonstrations, then the rule, then the query with its report, then the
/// output-format instruction.
std::string build_judge_prompt(const NewsItem& item, const MultiDimReport& report,
                               const std::vector<Demonstration>& demos, const DecisionRule& rule);

Judgement judge_one(const NewsItem& item, const MultiDimReport& report, const std::vector<Demonstration>& demos,
                    const DecisionRule& rule, const JudgeContext& ctx);

/// One line of the per-task judgement log.
struct TaskJudgement {
    std::size_t task_index = 0;
    std::uint64_t rule_id = 0;
    std::string raw;
    std::optional<Verdict> parsed;
    ParseStatus status = ParseStatus::Failed;
    Verdict gold = Verdict::Real;
    bool correct = false;
};

nlohmann::json to_json(const TaskJudgement& j);

struct RuleScore {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::vector<TaskJudgement> log;  ///< ordered by task index
};

/// Reference implementation: tasks judged one after another.
RuleScore score_rule_serial(const DecisionRule& rule, const std::vector<ValidationTask>& tasks,
                            const JudgeContext& ctx);

/// Tasks judged on `workers` threads. Results match score_rule_serial
/// exactly; the first provider error (by task index) is rethrown.
RuleScore score_rule(const DecisionRule& rule, const std::vector<ValidationTask>& tasks, const JudgeContext& ctx,
                     int workers);

/// Modal verdict over judgements with a verdict; ties go to `tie_break`.
Verdict majority_vote(const std::vector<Judgement>& judgements, TieBreak tie_break = TieBreak::Fake);

struct Inference {
    Verdict verdict = Verdict::Real;
    std::vector<Judgement> judgements;  ///< one per rule; upstream failures are Failed
};

/// judge_one under each of the top-K rules, then majority_vote.
Inference infer(const NewsItem& item, const MultiDimReport& report, const std::vector<Demonstration>& demos,
                const std::vector<DecisionRule>& rules, const JudgeContext& ctx, int workers = 1);

}  // namespace maro
