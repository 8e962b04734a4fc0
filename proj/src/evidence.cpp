#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "maro/evidence.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <set>

#include "maro/error.hpp"
#include "maro/provider.hpp"
#include "maro/util.hpp"

namespace maro {

using nlohmann::json;

std::string_view clue_source_name(ClueSource s) noexcept {
    switch (s) {
        case ClueSource::Search: return "search";
        case ClueSource::Encyclopedia: return "encyclopedia";
        case ClueSource::Fixture: return "fixture";
    }
    return "unknown";
}

namespace {

std::optional<ClueSource> clue_source_from_name(std::string_view name) {
    for (auto s : {ClueSource::Search, ClueSource::Encyclopedia, ClueSource::Fixture}) {
        if (clue_source_name(s) == name) return s;
    }
    return std::nullopt;
}

void add_warning(std::vector<std::string>* warnings, std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
}

std::vector<Clue> clues_from_items(const std::string& query, const json& items, ClueSource source, std::size_t k,
                                   const char* url_field) {
    std::vector<Clue> out;
    if (!items.is_array()) return out;
    for (const auto& it : items) {
        if (out.size() >= k) break;
        Clue c;
        c.source = source;
        c.query = query;
        c.title = it.value("title", "");
        c.snippet = trim(it.value("snippet", ""));
        if (c.snippet.empty()) continue;
        if (auto u = it.find(url_field); u != it.end() && u->is_string()) c.url = u->get<std::string>();
        out.push_back(std::move(c));
    }
    return out;
}

std::string url_encode(const std::string& s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xf]);
        }
    }
    return out;
}

}  // namespace

// ---- fixtures ---------------------------------------------------------------

std::filesystem::path FixtureSearch::path_for(const std::filesystem::path& dir, const std::string& query) {
    return dir / (fixture_stem(normalize_query(query)) + ".json");
}

std::vector<Clue> FixtureSearch::search(const std::string& query, std::size_t k) {
    if (!std::filesystem::is_directory(dir_)) throw Error(Errc::Io, "search fixture dir missing: " + dir_.string());
    auto path = path_for(dir_, query);
    if (!std::filesystem::exists(path)) return {};
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(Errc::BadRecord, path.string() + ": " + e.what());
    }
    return clues_from_items(query, doc, ClueSource::Fixture, k, "url");
}

std::filesystem::path FixtureEncyclopedia::path_for(const std::filesystem::path& dir, const std::string& title) {
    return dir / (fixture_stem(normalize_query(title)) + ".txt");
}

std::optional<Clue> FixtureEncyclopedia::lookup(const std::string& title) {
    auto path = path_for(dir_, title);
    if (!std::filesystem::exists(path)) return std::nullopt;
    Clue c;
    c.source = ClueSource::Encyclopedia;
    c.query = title;
    c.title = title;
    c.snippet = trim(read_file(path));
    if (c.snippet.empty()) return std::nullopt;
    return c;
}

// ---- live backends ----------------------------------------------------------

HttpSearch::HttpSearch(std::string endpoint, std::string key_env)
    : endpoint_(std::move(endpoint)), key_env_(std::move(key_env)) {}

std::vector<Clue> HttpSearch::parse_body(const std::string& query, const std::string& body, std::size_t k) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(Errc::Upstream5xx, std::string("malformed search body: ") + e.what());
    }
    auto items = doc.find("items");
    if (items == doc.end()) return {};
    return clues_from_items(query, *items, ClueSource::Search, k, "link");
}

std::vector<Clue> HttpSearch::search(const std::string& query, std::size_t k) {
    auto [host, prefix] = split_base_url(endpoint_);
    httplib::Client client(host);
    client.set_read_timeout(std::chrono::seconds(30));
    httplib::Params params{{"q", query}, {"num", std::to_string(k)}};
    if (const char* key = std::getenv(key_env_.c_str()); key && *key) params.emplace("key", key);
    auto res = client.Get(prefix.empty() ? "/" : prefix, params, httplib::Headers{});
    if (!res) throw Error(Errc::Transport, "search request failed: " + httplib::to_string(res.error()));
    if (res->status >= 500) throw Error(Errc::Upstream5xx, "search HTTP " + std::to_string(res->status));
    if (res->status >= 400) throw Error(Errc::Upstream4xx, "search HTTP " + std::to_string(res->status));
    return parse_body(query, res->body, k);
}

std::optional<Clue> HttpEncyclopedia::lookup(const std::string& title) {
    auto [host, prefix] = split_base_url(base_url_);
    httplib::Client client(host);
    client.set_read_timeout(std::chrono::seconds(30));
    std::string underscored = title;
    std::replace(underscored.begin(), underscored.end(), ' ', '_');
    auto res = client.Get(prefix + "/page/summary/" + url_encode(underscored));
    if (!res) throw Error(Errc::Transport, "encyclopedia request failed: " + httplib::to_string(res.error()));
    if (res->status == 404) return std::nullopt;
    if (res->status >= 400) throw Error(Errc::Upstream4xx, "encyclopedia HTTP " + std::to_string(res->status));
    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("extract")) return std::nullopt;
    Clue c;
    c.source = ClueSource::Encyclopedia;
    c.query = title;
    c.title = doc.value("title", title);
    c.snippet = trim(doc.value("extract", ""));
    if (auto urls = doc.find("content_urls"); urls != doc.end()) {
        try {
            c.url = urls->at("desktop").at("page").get<std::string>();
        } catch (const json::exception&) {
        }
    }
    if (c.snippet.empty()) return std::nullopt;
    return c;
}

// ---- operations -------------------------------------------------------------

std::vector<Clue> search(const std::vector<std::string>& queries, SearchBackend& backend,
                         const EvidenceConfig& config, std::vector<std::string>* warnings) {
    if (queries.empty()) return {};
    const auto n = static_cast<long>(queries.size());
    std::vector<std::vector<Clue>> results(queries.size());
    std::vector<std::exception_ptr> errors(queries.size());

    int threads = std::max(1, std::min<int>(config.max_in_flight, static_cast<int>(n)));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long i = 0; i < n; ++i) {
        try {
            results[i] = backend.search(queries[i], config.results_per_query);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }

    std::size_t failed = 0;
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<Clue> out;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (errors[i]) {
            ++failed;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                add_warning(warnings, "search failed for '" + queries[i] + "': " + e.what());
            }
            continue;
        }
        if (results[i].empty()) add_warning(warnings, "no search results for '" + queries[i] + "'");
        for (auto& clue : results[i]) {
            if (seen.emplace(clue.title, clue.snippet).second) out.push_back(std::move(clue));
        }
    }
    if (failed == queries.size()) throw Error(Errc::AllQueriesFailed, std::to_string(failed) + " queries failed");
    return out;
}

std::vector<std::string> extract_entities(const std::string& text, std::size_t max_entities) {
    static const std::set<std::string> kStop = {"The", "A", "An", "This", "That", "These", "Those", "Is", "Are",
                                                "Was", "Were", "Did", "Does", "Do", "Has", "Have", "Had", "In",
                                                "On", "At", "Of", "For", "It", "Its", "Can", "Will", "Breaking"};
    struct Token {
        std::string word;
        bool capitalized;
        bool sentence_initial;
        bool ends_span;
    };
    std::vector<Token> tokens;
    bool next_initial = true;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (start == i) break;
        std::string raw = text.substr(start, i - start);
        std::size_t b = 0, e = raw.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(raw[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1]))) --e;
        bool trailing_punct = e < raw.size();
        bool sentence_end = !raw.empty() && std::string(".!?").find(raw.back()) != std::string::npos;
        std::string word = raw.substr(b, e - b);
        Token t{word, !word.empty() && std::isupper(static_cast<unsigned char>(word[0])) != 0, next_initial,
                trailing_punct};
        tokens.push_back(std::move(t));
        next_initial = sentence_end;
    }

    std::vector<std::string> multi, single;
    std::size_t t = 0;
    while (t < tokens.size()) {
        if (!tokens[t].capitalized) {
            ++t;
            continue;
        }
        std::vector<const Token*> run;
        while (t < tokens.size() && tokens[t].capitalized) {
            run.push_back(&tokens[t]);
            bool stop = tokens[t].ends_span;
            ++t;
            if (stop) break;
        }
        std::size_t lead = 0;
        while (lead < run.size() && kStop.count(run[lead]->word)) ++lead;
        std::size_t words = run.size() - lead;
        if (words == 0) continue;
        std::string span;
        for (std::size_t k = lead; k < run.size(); ++k) {
            if (!span.empty()) span.push_back(' ');
            span += run[k]->word;
        }
        if (words >= 2) {
            multi.push_back(span);
        } else if (lead > 0 || !run[0]->sentence_initial) {
            single.push_back(span);
        }
    }

    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto* group : {&multi, &single}) {
        for (auto& s : *group) {
            if (out.size() >= max_entities) return out;
            if (seen.insert(s).second) out.push_back(s);
        }
    }
    return out;
}

std::vector<Clue> encyclopedia_lookup(const NewsItem& item, const std::vector<std::string>& fact_questions,
                                      EncyclopediaBackend& backend, const EvidenceConfig& config,
                                      std::vector<std::string>* warnings) {
    std::string joined;
    for (const auto& q : fact_questions) joined += q + "\n";
    auto titles = extract_entities(joined, config.max_entities);
    if (titles.empty()) titles = extract_entities(item.content, config.max_entities);

    std::vector<Clue> out;
    for (const auto& title : titles) {
        if (out.size() >= config.encyclopedia_articles) break;
        try {
            if (auto clue = backend.lookup(title)) out.push_back(std::move(*clue));
        } catch (const std::exception& e) {
            add_warning(warnings, "encyclopedia lookup failed for '" + title + "': " + e.what());
        }
    }
    return out;
}

EvidenceSet assemble(std::string item_id, const std::vector<Clue>& search_clues,
                     const std::vector<Clue>& encyclopedia_clues, std::size_t budget) {
    EvidenceSet set;
    set.item_id = std::move(item_id);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto* group : {&encyclopedia_clues, &search_clues}) {
        for (const auto& clue : *group) {
            if (!seen.emplace(clue.title, clue.snippet).second) continue;
            if (set.total_chars + clue.chars() > budget) return set;
            set.total_chars += clue.chars();
            set.clues.push_back(clue);
        }
    }
    return set;
}

EvidenceSet gather_evidence(const NewsItem& item, const std::vector<std::string>& fact_questions,
                            Retriever& retriever, std::vector<std::string>* warnings) {
    std::vector<Clue> web, wiki;
    if (retriever.search && !fact_questions.empty()) {
        try {
            web = search(fact_questions, *retriever.search, retriever.config, warnings);
        } catch (const Error& e) {
            add_warning(warnings, std::string("search unavailable: ") + e.what());
        }
    }
    if (retriever.encyclopedia) {
        wiki = encyclopedia_lookup(item, fact_questions, *retriever.encyclopedia, retriever.config, warnings);
    }
    return assemble(item.id, web, wiki, retriever.config.char_budget);
}

std::string render_evidence(const EvidenceSet& evidence) {
    if (evidence.empty()) return kNoEvidenceMarker;
    std::string out;
    for (std::size_t i = 0; i < evidence.clues.size(); ++i) {
        const auto& c = evidence.clues[i];
        out += "[" + std::to_string(i + 1) + "] (source: " + std::string(clue_source_name(c.source)) + ") ";
        if (!c.title.empty()) out += c.title + ": ";
        out += c.snippet;
        if (c.url) out += " <" + *c.url + ">";
        out.push_back('\n');
    }
    return out;
}

json evidence_to_json(const EvidenceSet& evidence) {
    json clues = json::array();
    for (const auto& c : evidence.clues) {
        json j{{"source", clue_source_name(c.source)}, {"query", c.query}, {"title", c.title}, {"snippet", c.snippet}};
        if (c.url) j["url"] = *c.url;
        clues.push_back(std::move(j));
    }
    return json{{"item_id", evidence.item_id}, {"clues", clues}, {"total_chars", evidence.total_chars}};
}

EvidenceSet evidence_from_json(const json& j) {
    EvidenceSet set;
    set.item_id = j.at("item_id").get<std::string>();
    set.total_chars = j.at("total_chars").get<std::size_t>();
    for (const auto& c : j.at("clues")) {
        Clue clue;
        auto source = clue_source_from_name(c.at("source").get<std::string>());
        if (!source) throw Error(Errc::BadRecord, "unknown clue source");
        clue.source = *source;
        clue.query = c.value("query", "");
        clue.title = c.value("title", "");
        clue.snippet = c.at("snippet").get<std::string>();
        if (c.contains("url")) clue.url = c.at("url").get<std::string>();
        set.clues.push_back(std::move(clue));
    }
    return set;
}

}  // namespace maro
