#include "maro/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <fstream>

#include "maro/error.hpp"
#include "maro/util.hpp"

namespace maro {

using nlohmann::json;

std::string_view section_name(SectionKind kind) noexcept {
    switch (kind) {
        case SectionKind::Linguistic: return "Linguistic";
        case SectionKind::Comment: return "Comment";
        case SectionKind::Fact: return "Fact";
    }
    return "Unknown";
}

std::optional<SectionKind> section_from_name(std::string_view name) noexcept {
    for (auto k : {SectionKind::Linguistic, SectionKind::Comment, SectionKind::Fact}) {
        if (section_name(k) == name) return k;
    }
    return std::nullopt;
}

Role section_role(SectionKind kind) noexcept {
    switch (kind) {
        case SectionKind::Linguistic: return Role::Linguistic;
        case SectionKind::Comment: return Role::Comment;
        case SectionKind::Fact: return Role::FactCheck;
    }
    return Role::Linguistic;
}

const AnalysisReport* MultiDimReport::section(SectionKind kind) const {
    for (const auto& s : sections) {
        if (s.kind == kind) return &s;
    }
    return nullptr;
}

namespace {

ChatResponse call(const AgentContext& ctx, Role role, std::string user_content) {
    ChatRequest req;
    req.role = role;
    req.system_prompt = ctx.prompts.system_prompt(role);
    req.user_content = std::move(user_content);
    req.temperature = ctx.config.temperatures.for_role(role);
    req.max_tokens = ctx.config.max_tokens;
    return ctx.provider.complete(req);
}

std::string section_header(SectionKind kind) {
    switch (kind) {
        case SectionKind::Linguistic: return "=== Linguistic Feature Analysis ===";
        case SectionKind::Comment: return "=== Comment Analysis ===";
        case SectionKind::Fact: return "=== Fact-Checking Analysis ===";
    }
    return "";
}

constexpr const char* kReflectionHeader = "--- Reflection Q&A ---";

/// Length of a leading list marker such as "1.", "2)", "-", "*", "Q1:",
/// "Answer 2:" and the whitespace after it; 0 when there is none.
std::size_t marker_length(const std::string& line, int* number = nullptr) {
    std::size_t i = 0;
    if (number) *number = -1;
    if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
        i = 1;
    } else if (line.compare(0, 3, "\xE2\x80\xA2") == 0) {  // bullet
        i = 3;
    } else {
        std::size_t p = 0;
        for (const char* prefix : {"Answer ", "answer ", "Question ", "question ", "Q", "A"}) {
            std::string_view pv(prefix);
            if (line.compare(0, pv.size(), pv) == 0 && line.size() > pv.size() &&
                std::isdigit(static_cast<unsigned char>(line[pv.size()]))) {
                p = pv.size();
                break;
            }
        }
        std::size_t d = p;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        if (d == p || d - p > 3) return 0;
        if (d >= line.size() || (line[d] != '.' && line[d] != ')' && line[d] != ':')) return 0;
        if (number) *number = std::stoi(line.substr(p, d - p));
        i = d + 1;
    }
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    return i;
}

std::string numbered(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) out += std::to_string(i + 1) + ". " + lines[i] + "\n";
    return out;
}

void warn(std::vector<std::string>& sink, std::string msg) { sink.push_back(std::move(msg)); }

}  // namespace

std::string comment_block(const NewsItem& item, std::size_t max_comments) {
    std::size_t shown = std::min(max_comments, item.comments.size());
    std::string out = "Comments:\n";
    for (std::size_t i = 0; i < shown; ++i) out += std::to_string(i + 1) + ". " + item.comments[i] + "\n";
    if (shown < item.comments.size()) {
        out += "[Showing the first " + std::to_string(shown) + " of " + std::to_string(item.comments.size()) +
               " comments; the rest were truncated.]\n";
    }
    return out;
}

std::string comment_prompt(const NewsItem& item, std::size_t max_comments) {
    return "News:\n" + item.content + "\n\n" + comment_block(item, max_comments);
}

std::string fact_check_prompt(const NewsItem& item, const EvidenceSet& evidence) {
    return "News:\n" + item.content + "\n\nEvidence:\n" + render_evidence(evidence);
}

std::vector<std::string> parse_question_list(const std::string& response, std::size_t cap) {
    std::vector<std::string> out;
    for (const auto& raw : split_lines(response)) {
        std::string line = trim(raw);
        line = trim(line.substr(marker_length(line)));
        if (line.empty()) continue;
        if (out.size() >= cap) break;
        out.push_back(std::move(line));
    }
    return out;
}

std::optional<std::vector<std::string>> split_numbered_answers(const std::string& blob, std::size_t expected) {
    std::vector<std::string> blocks;
    int next = 1;
    for (const auto& raw : split_lines(blob)) {
        std::string line = trim(raw);
        int n = -1;
        std::size_t m = marker_length(line, &n);
        if (n == next) {
            blocks.push_back(trim(line.substr(m)));
            ++next;
        } else if (!blocks.empty()) {
            if (!line.empty()) {
                if (!blocks.back().empty()) blocks.back().push_back('\n');
                blocks.back() += line;
            }
        } else if (!line.empty()) {
            return std::nullopt;  // prose before the first numbered answer
        }
    }
    if (blocks.size() != expected) return std::nullopt;
    return blocks;
}

AnalysisReport analyze_linguistic(const NewsItem& item, const AgentContext& ctx) {
    AnalysisReport report;
    report.kind = SectionKind::Linguistic;
    report.body = call(ctx, Role::Linguistic, item.content).text;
    if (trim(report.body).empty()) warn(report.warnings, "linguistic agent returned an empty report");
    return report;
}

AnalysisReport analyze_comments(const NewsItem& item, const AgentContext& ctx) {
    if (!item.has_comments()) throw Error(Errc::NoComments, "item " + item.id + " has no comments");
    AnalysisReport report;
    report.kind = SectionKind::Comment;
    report.body = call(ctx, Role::Comment, comment_prompt(item, ctx.config.max_comments)).text;
    if (item.comments.size() > ctx.config.max_comments) {
        warn(report.warnings, "comments truncated to " + std::to_string(ctx.config.max_comments));
    }
    if (trim(report.body).empty()) warn(report.warnings, "comment agent returned an empty report");
    return report;
}

std::vector<std::string> generate_fact_questions(const NewsItem& item, const AgentContext& ctx) {
    auto text = call(ctx, Role::FactQuestion, item.content).text;
    auto questions = parse_question_list(text, ctx.config.max_fact_questions);
    if (questions.empty() && !trim(text).empty()) {
        throw Error(Errc::UnparsableQuestions, "no questions in fact-question response for " + item.id);
    }
    return questions;
}

AnalysisReport check_facts(const NewsItem& item, const EvidenceSet& evidence, const AgentContext& ctx) {
    AnalysisReport report;
    report.kind = SectionKind::Fact;
    report.body = call(ctx, Role::FactCheck, fact_check_prompt(item, evidence)).text;
    if (trim(report.body).empty()) warn(report.warnings, "fact-checking agent returned an empty report");
    return report;
}

namespace {

/// The inputs that produced a section, as shown to the reviewer and to the
/// agent answering the review.
std::string section_inputs(const NewsItem& item, const AnalysisReport& report, const EvidenceSet* evidence,
                           std::size_t max_comments) {
    switch (report.kind) {
        case SectionKind::Linguistic: return "News:\n" + item.content + "\n";
        case SectionKind::Comment: return comment_prompt(item, max_comments);
        case SectionKind::Fact: {
            EvidenceSet empty;
            return fact_check_prompt(item, evidence ? *evidence : empty);
        }
    }
    return {};
}

}  // namespace

std::vector<std::string> reflect(const NewsItem& item, const AnalysisReport& report, const EvidenceSet* evidence,
                                 const AgentContext& ctx) {
    std::string content = section_inputs(item, report, evidence, ctx.config.max_comments);
    content += "\n" + std::string(section_name(report.kind)) + " analysis report:\n" + report.body + "\n\n";
    content += "Pose at most " + std::to_string(ctx.config.max_reflection_questions) +
               " targeted questions about aspects this report overlooked, one per line.";
    auto text = call(ctx, Role::Questioning, std::move(content)).text;
    return parse_question_list(text, ctx.config.max_reflection_questions);
}

std::vector<std::string> respond_to_reflection(const NewsItem& item, AnalysisReport& report,
                                               const std::vector<std::string>& questions,
                                               const EvidenceSet* evidence, const AgentContext& ctx) {
    if (questions.empty()) return {};
    std::string content = section_inputs(item, report, evidence, ctx.config.max_comments);
    content += "\nYour previous report:\n" + report.body + "\n\n";
    content += "Answer each question below. Number your answers to match the questions.\n" + numbered(questions);
    auto text = call(ctx, section_role(report.kind), std::move(content)).text;

    if (questions.size() == 1) {
        std::string line = trim(text);
        return {trim(line.substr(marker_length(line)))};
    }
    if (auto split = split_numbered_answers(text, questions.size())) return *split;

    warn(report.warnings, "could not split reflection answers for " + std::string(section_name(report.kind)) +
                              "; stored the reply as the first answer");
    std::vector<std::string> answers(questions.size());
    answers[0] = trim(text);
    return answers;
}

MultiDimReport compose(const NewsItem& item, std::vector<AnalysisReport> sections) {
    if (sections.empty()) throw Error(Errc::NoSections, "nothing to compose for " + item.id);
    std::stable_sort(sections.begin(), sections.end(),
                     [](const AnalysisReport& a, const AnalysisReport& b) { return a.kind < b.kind; });
    MultiDimReport out;
    out.item_id = item.id;
    std::string text;
    for (const auto& s : sections) {
        text += section_header(s.kind) + "\n" + s.body + "\n";
        if (!s.reflection_questions.empty()) {
            text += std::string(kReflectionHeader) + "\n";
            for (std::size_t i = 0; i < s.reflection_questions.size(); ++i) {
                text += "Q" + std::to_string(i + 1) + ": " + s.reflection_questions[i] + "\n";
                text += "A" + std::to_string(i + 1) + ": " +
                        (i < s.reflection_answers.size() ? s.reflection_answers[i] : std::string()) + "\n";
            }
        }
        text += "\n";
    }
    out.composed_text = std::move(text);
    out.sections = std::move(sections);
    return out;
}

std::map<SectionKind, std::string> parse_composed(const std::string& composed_text) {
    std::map<SectionKind, std::string> out;
    std::optional<SectionKind> current;
    bool in_body = false;
    std::string body;
    auto flush = [&] {
        if (current) {
            while (!body.empty() && body.back() == '\n') body.pop_back();
            out[*current] = body;
        }
        body.clear();
    };
    for (const auto& line : split_lines(composed_text)) {
        std::optional<SectionKind> header;
        for (auto k : {SectionKind::Linguistic, SectionKind::Comment, SectionKind::Fact}) {
            if (line == section_header(k)) header = k;
        }
        if (header) {
            flush();
            current = header;
            in_body = true;
            continue;
        }
        if (line == kReflectionHeader) {
            in_body = false;
            continue;
        }
        if (in_body) body += line + "\n";
    }
    flush();
    return out;
}

MultiDimReport analyze_full(const NewsItem& item, Retriever* retriever, const AgentContext& ctx) {
    std::vector<std::string> warnings;
    std::vector<AnalysisReport> sections;

    // codes of failed sections; all-provider failures surface as such
    std::vector<Errc> failed;
    auto attempt = [&](const char* what, auto&& fn) {
        try {
            sections.push_back(fn());
        } catch (const Error& e) {
            failed.push_back(e.code());
            warn(warnings, std::string(what) + " section omitted: " + e.what());
        } catch (const std::exception& e) {
            failed.push_back(Errc::AllSectionsFailed);
            warn(warnings, std::string(what) + " section omitted: " + e.what());
        }
    };

    attempt("linguistic", [&] { return analyze_linguistic(item, ctx); });
    if (item.has_comments()) attempt("comment", [&] { return analyze_comments(item, ctx); });

    std::vector<std::string> questions;
    try {
        questions = generate_fact_questions(item, ctx);
    } catch (const std::exception& e) {
        warn(warnings, std::string("fact questions unavailable: ") + e.what());
    }
    if (questions.empty()) warn(warnings, "no fact questions; evidence limited to encyclopedia lookups");

    EvidenceSet evidence;
    evidence.item_id = item.id;
    if (retriever) evidence = gather_evidence(item, questions, *retriever, &warnings);
    attempt("fact-checking", [&] { return check_facts(item, evidence, ctx); });

    if (sections.empty()) {
        bool upstream = std::all_of(failed.begin(), failed.end(),
                                    [](Errc c) { return errc_class(c) == ErrorClass::Provider; });
        std::string msg = "every analysis section failed for " + item.id + ": " + warnings.back();
        throw Error(upstream && !failed.empty() ? failed.front() : Errc::AllSectionsFailed, msg);
    }

    for (int round = 0; round < ctx.config.reflection_rounds; ++round) {
        for (auto& section : sections) {
            if (trim(section.body).empty()) continue;
            const EvidenceSet* ev = section.kind == SectionKind::Fact ? &evidence : nullptr;
            try {
                auto qs = reflect(item, section, ev, ctx);
                if (qs.empty()) continue;
                auto answers = respond_to_reflection(item, section, qs, ev, ctx);
                section.reflection_questions.insert(section.reflection_questions.end(), qs.begin(), qs.end());
                section.reflection_answers.insert(section.reflection_answers.end(), answers.begin(), answers.end());
            } catch (const std::exception& e) {
                warn(section.warnings, std::string("reflection skipped: ") + e.what());
            }
        }
    }

    auto report = compose(item, std::move(sections));
    report.fact_questions = std::move(questions);
    report.evidence = std::move(evidence);
    for (const auto& s : report.sections) {
        for (const auto& w : s.warnings) report.warnings.push_back(std::string(section_name(s.kind)) + ": " + w);
    }
    report.warnings.insert(report.warnings.end(), warnings.begin(), warnings.end());
    return report;
}

std::size_t call_budget(const NewsItem& item, const AnalysisConfig& config) {
    std::size_t sections = item.has_comments() ? 3 : 2;
    std::size_t per_round = config.reflection_rounds > 0 ? 2 * sections : 0;
    return sections + 1 + per_round * static_cast<std::size_t>(std::max(0, config.reflection_rounds));
}

json report_to_json(const MultiDimReport& report) {
    json sections = json::array();
    for (const auto& s : report.sections) {
        sections.push_back(json{{"kind", section_name(s.kind)},
                                {"body", s.body},
                                {"reflection_questions", s.reflection_questions},
                                {"reflection_answers", s.reflection_answers},
                                {"warnings", s.warnings}});
    }
    return json{{"item_id", report.item_id},
                {"sections", sections},
                {"composed_text", report.composed_text},
                {"fact_questions", report.fact_questions},
                {"evidence", evidence_to_json(report.evidence)},
                {"warnings", report.warnings}};
}

MultiDimReport report_from_json(const json& j) {
    MultiDimReport r;
    r.item_id = j.at("item_id").get<std::string>();
    for (const auto& s : j.at("sections")) {
        AnalysisReport a;
        auto kind = section_from_name(s.at("kind").get<std::string>());
        if (!kind) throw Error(Errc::BadRecord, "unknown section kind in report " + r.item_id);
        a.kind = *kind;
        a.body = s.at("body").get<std::string>();
        a.reflection_questions = s.value("reflection_questions", std::vector<std::string>{});
        a.reflection_answers = s.value("reflection_answers", std::vector<std::string>{});
        a.warnings = s.value("warnings", std::vector<std::string>{});
        r.sections.push_back(std::move(a));
    }
    r.composed_text = j.at("composed_text").get<std::string>();
    r.fact_questions = j.value("fact_questions", std::vector<std::string>{});
    if (j.contains("evidence")) r.evidence = evidence_from_json(j.at("evidence"));
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
}

namespace {

BatchOutcome analyze_one(const NewsItem& item, Retriever* retriever, const AgentContext& ctx) {
    BatchOutcome out;
    try {
        out.report = analyze_full(item, retriever, ctx);
    } catch (const Error& e) {
        out.error = e.what();
        out.code = e.code();
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace

std::vector<BatchOutcome> analyze_batch_serial(const std::vector<NewsItem>& items, Retriever* retriever,
                                               const AgentContext& ctx) {
    std::vector<BatchOutcome> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(analyze_one(item, retriever, ctx));
    return out;
}

std::vector<BatchOutcome> analyze_batch(const std::vector<NewsItem>& items, Retriever* retriever,
                                        const AgentContext& ctx, int workers) {
    std::vector<BatchOutcome> out(items.size());
    const auto n = static_cast<long>(items.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (long i = 0; i < n; ++i) out[i] = analyze_one(items[i], retriever, ctx);
    return out;
}

std::map<std::string, MultiDimReport> load_report_archive(const std::filesystem::path& path) {
    std::map<std::string, MultiDimReport> out;
    if (!std::filesystem::exists(path)) return out;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;  // torn trailing append
        if (j.value("kind", "") == "provenance") continue;
        auto r = report_from_json(j);
        out[r.item_id] = std::move(r);
    }
    return out;
}

void append_report(const std::filesystem::path& path, const MultiDimReport& report) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot append to " + path.string());
    out << report_to_json(report).dump() << '\n';
}

}  // namespace maro
