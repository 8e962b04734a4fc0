#include "maro/synthetic.hpp"

#include <array>
#include <cstdio>
#include <cstring>

#include "maro/util.hpp"

namespace maro {

namespace {

constexpr std::array<const char*, 10> kFakeCues{"shocking", "secret", "!!!", "they don't want", "miracle",
                                                "share before", "banned", "exposed", "100%", "cover-up"};
constexpr std::array<const char*, 8> kRealCues{"officials said", "according to", "published", "reported",
                                               "study", "announced", "spokesperson", "data"};

std::uint64_t hash64(std::string_view a, std::string_view b = {}) {
    auto hex = hash_fields({a, b});
    return std::stoull(hex.substr(0, 16), nullptr, 16);
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0); }

/// Text between `start` and the next blank line.
std::string block_after(const std::string& text, const std::string& start) {
    auto pos = text.find(start);
    if (pos == std::string::npos) return {};
    pos += start.size();
    auto end = text.find("\n\n", pos);
    return text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

int cue_score(const std::string& text) {
    int score = 0;
    for (const char* c : kFakeCues) score += contains_ci(text, c) ? 1 : 0;
    for (const char* c : kRealCues) score -= contains_ci(text, c) ? 1 : 0;
    return score;
}

std::string news_of(const ChatRequest& r) {
    auto news = block_after(r.user_content, "News:\n");
    return news.empty() ? r.user_content : news;
}

std::string first_words(const std::string& text, std::size_t n) {
    std::string out;
    std::size_t words = 0;
    for (char c : text) {
        if (c == '\n') c = ' ';
        if (c == ' ' && ++words >= n) break;
        out += c;
    }
    return trim(out);
}

std::string answers_reply(const ChatRequest& r) {
    const std::string marker = "Number your answers to match the questions.\n";
    auto pos = r.user_content.find(marker);
    std::size_t count = 0;
    if (pos != std::string::npos) {
        for (const auto& line : split_lines(r.user_content.substr(pos + marker.size()))) {
            if (!trim(line).empty()) ++count;
        }
    }
    std::string out;
    for (std::size_t i = 1; i <= count; ++i) {
        out += std::to_string(i) + ". On reflection, point " + std::to_string(i) +
               (hash64(r.user_content, std::to_string(i)) % 2 ? " is supported by the text." : " remains unverified.") +
               "\n";
    }
    return out;
}

std::string judge_reply(const ChatRequest& r, const SyntheticOptions& o) {
    auto rule = block_after(r.user_content, "Decision rule:\n");
    auto query = block_after(r.user_content, "Query news:\n");
    auto h = hash64(rule, query);
    if (unit(hash64(query, "unparsable:" + rule)) < o.unparsable_rate) return "I cannot decide on this one.";
    int score = cue_score(query);
    bool fake = score > 0 || (score == 0 && (hash64(query) & 1));
    double noise = o.min_noise + (o.max_noise - o.min_noise) * unit(hash64(rule, "skill"));
    if (unit(h) < noise) fake = !fake;
    std::string reasoning = fake ? "The wording leans on sensational cues." : "The wording reads like a plain report.";
    return reasoning + "\njudgment: " + (fake ? "1" : "0");
}

std::string optimizer_reply(const ChatRequest& r) {
    static constexpr std::array<const char*, 6> kFocus{"emotional language", "named sources", "comment skepticism",
                                                       "verifiable numbers", "evidence agreement", "headline tone"};
    auto h = hash64(r.user_content, r.sample_tag);
    std::string a = kFocus[h % kFocus.size()];
    std::string b = kFocus[(h >> 8) % kFocus.size()];
    char tag[17];
    std::snprintf(tag, sizeof tag, "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
    return "Weigh " + a + " against " + b + " (variant " + tag +
           "). Output format: judgment: <'1' represents fake-news, '0' represents real-news>";
}

}  // namespace

std::string synthetic_reply(const ChatRequest& r, const SyntheticOptions& o) {
    const bool answering = r.user_content.find("Number your answers to match the questions.") != std::string::npos;
    if (answering) return answers_reply(r);
    switch (r.role) {
        case Role::Linguistic: {
            auto news = news_of(r);
            int s = cue_score(news);
            return std::string("Tone: ") + (s > 0 ? "sensational" : s < 0 ? "measured" : "neutral") +
                   ". Cue balance " + std::to_string(s) + ". Opening: \"" + first_words(news, 6) + "\".";
        }
        case Role::Comment: {
            auto comments = r.user_content.substr(r.user_content.find("Comments:") == std::string::npos
                                                      ? r.user_content.size()
                                                      : r.user_content.find("Comments:"));
            bool doubt = contains_ci(comments, "fake") || contains_ci(comments, "source?") || contains_ci(comments, "hoax");
            return std::string("Commenters are ") + (doubt ? "skeptical" : "mostly accepting") + " of the claim.";
        }
        case Role::FactQuestion: {
            auto news = news_of(r);
            return "1. Is it true that " + first_words(news, 8) + "?\n2. Which source first reported this claim?";
        }
        case Role::FactCheck: {
            bool none = r.user_content.find("No external evidence found.") != std::string::npos;
            return none ? "No evidence was available; the claim is unverified."
                        : "The retrieved evidence partly addresses the claim.";
        }
        case Role::Questioning:
            return "1. Does the report consider who published the news?\n2. Are the emotional cues weighed against "
                   "the evidence?";
        case Role::Judge: return judge_reply(r, o);
        case Role::Optimizer: return optimizer_reply(r);
    }
    return {};
}

std::shared_ptr<ScriptedMock> make_synthetic_mock(const SyntheticOptions& options) {
    ScriptEntry entry;
    entry.kind = MatchKind::Any;
    entry.response = Responder([options](const ChatRequest& r) { return synthetic_reply(r, options); });
    return std::make_shared<ScriptedMock>(std::vector<ScriptEntry>{entry}, "mock:synthetic");
}

}  // namespace maro
