#include "maro/judge.hpp"

#include <algorithm>
#include <cctype>
#include <exception>

#include "maro/error.hpp"
#include "maro/util.hpp"

namespace maro {

using nlohmann::json;

std::string_view origin_name(RuleOrigin o) noexcept { return o == RuleOrigin::Manual ? "manual" : "optimized"; }

std::string_view parse_status_name(ParseStatus s) noexcept {
    switch (s) {
        case ParseStatus::Clean: return "clean";
        case ParseStatus::Repaired: return "repaired";
        case ParseStatus::Failed: return "failed";
    }
    return "unknown";
}

namespace {

bool is_wrapper(char c) { return c == '<' || c == '"' || c == '\'' || c == '*' || c == '`' || c == '[' || c == '('; }
bool is_closer(char c) { return c == '>' || c == '"' || c == '\'' || c == '*' || c == '`' || c == ']' || c == ')'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

/// Digit following an anchor at `pos`, or nullopt.
std::optional<char> anchored_digit(const std::string& lower, std::size_t pos) {
    std::size_t p = pos;
    while (p < lower.size() && is_space(lower[p])) ++p;
    if (lower.compare(p, 1, ":") == 0) {
        p += 1;
    } else if (lower.compare(p, 3, "\xEF\xBC\x9A") == 0) {  // fullwidth colon
        p += 3;
    } else {
        return std::nullopt;
    }
    while (p < lower.size() && (is_space(lower[p]) || is_wrapper(lower[p]))) ++p;
    if (p >= lower.size() || (lower[p] != '0' && lower[p] != '1')) return std::nullopt;
    char digit = lower[p++];
    if (p < lower.size() && std::isdigit(static_cast<unsigned char>(lower[p]))) return std::nullopt;
    std::size_t q = p;
    while (q < lower.size() && (is_space(lower[q]) || is_closer(lower[q]))) ++q;
    // "<'1' represents fake-news ...>" is the format template echoed back
    if (lower.compare(q, 10, "represents") == 0) return std::nullopt;
    return digit;
}

void erase_all(std::string& s, std::string_view needle) {
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos)) s.erase(pos, needle.size());
}

/// Position of the last whole-word (ASCII) or substring (non-ASCII) match.
std::optional<std::size_t> last_keyword(const std::string& lower, const std::vector<std::string>& words) {
    std::optional<std::size_t> best;
    for (const auto& w : words) {
        std::string key = to_lower_ascii(w);
        bool ascii = std::all_of(key.begin(), key.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
        for (auto pos = lower.rfind(key); pos != std::string::npos; pos = pos == 0 ? std::string::npos : lower.rfind(key, pos - 1)) {
            if (ascii) {
                bool left_ok = pos == 0 || !is_word(lower[pos - 1]);
                bool right_ok = pos + key.size() >= lower.size() || !is_word(lower[pos + key.size()]);
                if (!left_ok || !right_ok) continue;
            }
            if (!best || pos > *best) best = pos;
            break;
        }
    }
    return best;
}

}  // namespace

ParsedVerdict parse_verdict(std::string_view raw, const VerdictKeywords& keywords) {
    std::string lower = to_lower_ascii(raw);

    // last anchor carrying a digit wins; "judgement" is accepted as a variant
    std::optional<char> anchored;
    std::size_t anchored_pos = 0;
    for (std::string_view anchor : {"judgment", "judgement"}) {
        for (auto pos = lower.find(anchor); pos != std::string::npos; pos = lower.find(anchor, pos + 1)) {
            auto d = anchored_digit(lower, pos + anchor.size());
            if (d && (!anchored || pos > anchored_pos)) {
                anchored = d;
                anchored_pos = pos;
            }
        }
    }
    if (anchored) return {*anchored == '1' ? Verdict::Fake : Verdict::Real, ParseStatus::Clean};

    std::string text = lower;
    erase_all(text, "'1' represents fake-news");
    erase_all(text, "'0' represents real-news");

    // lone trailing 0/1 token
    std::size_t end = text.size();
    while (end > 0 && is_space(text[end - 1])) --end;
    std::size_t start = end;
    while (start > 0 && !is_space(text[start - 1])) --start;
    std::string token = text.substr(start, end - start);
    std::size_t b = 0, e = token.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1]))) --e;
    token = token.substr(b, e - b);
    if (token == "1") return {Verdict::Fake, ParseStatus::Repaired};
    if (token == "0") return {Verdict::Real, ParseStatus::Repaired};

    auto fake_pos = last_keyword(text, keywords.fake);
    auto real_pos = last_keyword(text, keywords.real);
    if (fake_pos && (!real_pos || *fake_pos > *real_pos)) return {Verdict::Fake, ParseStatus::Repaired};
    if (real_pos) return {Verdict::Real, ParseStatus::Repaired};
    return {std::nullopt, ParseStatus::Failed};
}

std::string build_judge_prompt(const NewsItem& item, const MultiDimReport& report,
                               const std::vector<Demonstration>& demos, const DecisionRule& rule) {
    std::string out;
    if (!demos.empty()) {
        out += "Labeled example news:\n\n";
        for (std::size_t i = 0; i < demos.size(); ++i) {
            out += "[Example " + std::to_string(i + 1) + "]\nNews: " + demos[i].item.content + "\n";
            out += "Output: judgment: " + std::to_string(to_int(demos[i].label)) + "\n\n";
        }
    }
    out += "Decision rule:\n" + rule.text + "\n\n";
    out += "Query news:\n" + item.content + "\n\n";
    out += "Multi-dimensional analysis report:\n" + report.composed_text + "\n";
    out += "Output format: " + std::string(kOutputFormat) + "\n";
    return out;
}

Judgement judge_one(const NewsItem& item, const MultiDimReport& report, const std::vector<Demonstration>& demos,
                    const DecisionRule& rule, const JudgeContext& ctx) {
    ChatRequest req;
    req.role = Role::Judge;
    req.system_prompt = ctx.prompts.system_prompt(Role::Judge);
    req.user_content = build_judge_prompt(item, report, demos, rule);
    req.temperature = ctx.config.temperature;
    req.max_tokens = ctx.config.max_tokens;
    Judgement j;
    j.raw = ctx.provider.complete(req).text;
    auto parsed = parse_verdict(j.raw, ctx.config.keywords);
    j.verdict = parsed.verdict;
    j.status = parsed.status;
    return j;
}

json to_json(const TaskJudgement& j) {
    return json{{"task_index", j.task_index},
                {"rule_id", j.rule_id},
                {"raw", j.raw},
                {"parsed", j.parsed ? json(to_int(*j.parsed)) : json(nullptr)},
                {"status", parse_status_name(j.status)},
                {"gold", to_int(j.gold)},
                {"correct", j.correct}};
}

namespace {

TaskJudgement judge_task(const DecisionRule& rule, const ValidationTask& task, std::size_t index,
                         const JudgeContext& ctx) {
    auto j = judge_one(task.query, task.query_report, task.demonstrations, rule, ctx);
    TaskJudgement t;
    t.task_index = index;
    t.rule_id = rule.id;
    t.raw = std::move(j.raw);
    t.parsed = j.verdict;
    t.status = j.status;
    t.gold = task.gold;
    t.correct = j.verdict.has_value() && *j.verdict == task.gold;
    return t;
}

RuleScore tally(std::vector<TaskJudgement> log) {
    RuleScore score;
    for (const auto& t : log) score.correct += t.correct ? 1 : 0;
    score.accuracy = static_cast<double>(score.correct) / static_cast<double>(log.size());
    score.log = std::move(log);
    return score;
}

}  // namespace

RuleScore score_rule_serial(const DecisionRule& rule, const std::vector<ValidationTask>& tasks,
                            const JudgeContext& ctx) {
    if (tasks.empty()) throw Error(Errc::EmptyTaskSet, "cannot score a rule on zero tasks");
    std::vector<TaskJudgement> log;
    log.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) log.push_back(judge_task(rule, tasks[i], i, ctx));
    return tally(std::move(log));
}

RuleScore score_rule(const DecisionRule& rule, const std::vector<ValidationTask>& tasks, const JudgeContext& ctx,
                     int workers) {
    if (tasks.empty()) throw Error(Errc::EmptyTaskSet, "cannot score a rule on zero tasks");
    std::vector<TaskJudgement> log(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    const auto n = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (long i = 0; i < n; ++i) {
        try {
            log[i] = judge_task(rule, tasks[i], static_cast<std::size_t>(i), ctx);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return tally(std::move(log));
}

Verdict majority_vote(const std::vector<Judgement>& judgements, TieBreak tie_break) {
    std::size_t fake = 0, real = 0;
    for (const auto& j : judgements) {
        if (!j.verdict) continue;
        (*j.verdict == Verdict::Fake ? fake : real) += 1;
    }
    if (fake + real == 0) throw Error(Errc::NoUsableVerdicts, "no judgement carried a verdict");
    if (fake > real) return Verdict::Fake;
    if (real > fake) return Verdict::Real;
    return tie_break == TieBreak::Fake ? Verdict::Fake : Verdict::Real;
}

Inference infer(const NewsItem& item, const MultiDimReport& report, const std::vector<Demonstration>& demos,
                const std::vector<DecisionRule>& rules, const JudgeContext& ctx, int workers) {
    if (rules.empty()) throw Error(Errc::BadConfig, "infer needs at least one rule");
    Inference out;
    out.judgements.resize(rules.size());
    const auto n = static_cast<long>(rules.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (long i = 0; i < n; ++i) {
        try {
            out.judgements[i] = judge_one(item, report, demos, rules[i], ctx);
        } catch (const std::exception& e) {
            out.judgements[i].raw = std::string("[provider error] ") + e.what();
            out.judgements[i].status = ParseStatus::Failed;
        }
    }
    out.verdict = majority_vote(out.judgements, ctx.config.tie_break);
    return out;
}

}  // namespace maro
