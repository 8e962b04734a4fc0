#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "maro/domain.hpp"

namespace maro {

enum class ClueSource { Search, Encyclopedia, Fixture };

std::string_view clue_source_name(ClueSource s) noexcept;

struct Clue {
    ClueSource source = ClueSource::Search;
    std::string query;
    std::string title;
    std::string snippet;
    std::optional<std::string> url;

    /// Characters charged against the evidence budget.
    std::size_t chars() const noexcept { return title.size() + snippet.size(); }
};

struct EvidenceSet {
    std::string item_id;
    std::vector<Clue> clues;
    std::size_t total_chars = 0;

    bool empty() const noexcept { return clues.empty(); }
};

struct EvidenceConfig {
    std::size_t results_per_query = 3;     // k
    std::size_t encyclopedia_articles = 2;  // m
    std::size_t char_budget = 6000;
    std::size_t max_entities = 5;
    int max_in_flight = 4;
};

/// Web search. Throws maro::Error when the backend fails; a query with no
/// results returns an empty list.
class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    virtual std::vector<Clue> search(const std::string& query, std::size_t k) = 0;
};

class EncyclopediaBackend {
public:
    virtual ~EncyclopediaBackend() = default;
    /// Article summary for an exact title, or nullopt on a miss.
    virtual std::optional<Clue> lookup(const std::string& title) = 0;
};

/// Directory holding `<fixture_stem(normalize_query(q))>.json` files, each an
/// array of {title, snippet, url}.
class FixtureSearch final : public SearchBackend {
public:
    explicit FixtureSearch(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::vector<Clue> search(const std::string& query, std::size_t k) override;

    static std::filesystem::path path_for(const std::filesystem::path& dir, const std::string& query);

private:
    std::filesystem::path dir_;
};

/// Directory of `<fixture_stem(normalize_query(title))>.txt` summary files.
class FixtureEncyclopedia final : public EncyclopediaBackend {
public:
    explicit FixtureEncyclopedia(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::optional<Clue> lookup(const std::string& title) override;

    static std::filesystem::path path_for(const std::filesystem::path& dir, const std::string& title);

private:
    std::filesystem::path dir_;
};

/// GET {endpoint}?q=<query>&num=<k>&key=<$key_env>, expecting a body of the
/// form {"items":[{"title","snippet","link"}]}.
class HttpSearch final : public SearchBackend {
public:
    HttpSearch(std::string endpoint, std::string key_env);
    std::vector<Clue> search(const std::string& query, std::size_t k) override;

    static std::vector<Clue> parse_body(const std::string& query, const std::string& body, std::size_t k);

private:
    std::string endpoint_;
    std::string key_env_;
};

/// GET {base}/page/summary/<title> (REST summary endpoint), reading "extract".
class HttpEncyclopedia final : public EncyclopediaBackend {
public:
    explicit HttpEncyclopedia(std::string base_url) : base_url_(std::move(base_url)) {}
    std::optional<Clue> lookup(const std::string& title) override;

private:
    std::string base_url_;
};

/// Backends and limits used by the fact-checking branch.
struct Retriever {
    std::shared_ptr<SearchBackend> search;
    std::shared_ptr<EncyclopediaBackend> encyclopedia;
    EvidenceConfig config;
};

/// Runs each query, keeping at most k results per query in order. Duplicate
/// (title, snippet) pairs are kept once. Failing queries contribute nothing
/// and add a warning; AllQueriesFailed only when every query failed.
std::vector<Clue> search(const std::vector<std::string>& queries, SearchBackend& backend,
                         const EvidenceConfig& config, std::vector<std::string>* warnings = nullptr);

/// Candidate article titles: capitalized multiword spans first, then
/// non-sentence-initial capitalized words.
std::vector<std::string> extract_entities(const std::string& text, std::size_t max_entities);

/// Looks up entities drawn from the fact questions, falling back to the news
/// content when the questions yield none. At most m clues.
std::vector<Clue> encyclopedia_lookup(const NewsItem& item, const std::vector<std::string>& fact_questions,
                                      EncyclopediaBackend& backend, const EvidenceConfig& config,
                                      std::vector<std::string>* warnings = nullptr);

/// Encyclopedia clues first, then search clues, deduplicated and cut on a
/// clue boundary at the character budget.
EvidenceSet assemble(std::string item_id, const std::vector<Clue>& search_clues,
                     const std::vector<Clue>& encyclopedia_clues, std::size_t budget);

/// Full fact-checking evidence path for one item. Backend failures degrade.
EvidenceSet gather_evidence(const NewsItem& item, const std::vector<std::string>& fact_questions,
                            Retriever& retriever, std::vector<std::string>* warnings = nullptr);

inline constexpr const char* kNoEvidenceMarker = "No external evidence found.";

/// Prompt rendering; every clue carries its source tag.
std::string render_evidence(const EvidenceSet& evidence);

nlohmann::json evidence_to_json(const EvidenceSet& evidence);
EvidenceSet evidence_from_json(const nlohmann::json& j);

}  // namespace maro
