#include <algorithm>

#include "doctest.h"
#include "maro/error.hpp"
#include "maro/evidence.hpp"
#include "support.hpp"

using namespace maro;
using testing::code_of;
using testing::TempDir;

namespace {

void put_search(const TempDir& dir, const std::string& query, const std::string& json_array) {
    auto p = FixtureSearch::path_for(dir.path(), query);
    dir.write(p.filename().string(), json_array);
}

void put_article(const TempDir& dir, const std::string& title, const std::string& summary) {
    auto p = FixtureEncyclopedia::path_for(dir.path(), title);
    dir.write(p.filename().string(), summary);
}

Clue clue(ClueSource s, std::string title, std::size_t snippet_len) {
    Clue c;
    c.source = s;
    c.title = std::move(title);
    c.snippet = std::string(snippet_len, 'x');
    return c;
}

class DownSearch final : public SearchBackend {
public:
    std::vector<Clue> search(const std::string&, std::size_t) override {
        throw Error(Errc::Transport, "search backend down");
    }
};

}  // namespace

TEST_SUITE("evidence") {

TEST_CASE("fixture search echoes stored results") {
    TempDir dir;
    put_search(dir, "Did X happen?",
               R"([{"title":"X report","snippet":"X happened on Monday","url":"https://a"},
                   {"title":"X denial","snippet":"X did not happen","url":"https://b"}])");
    FixtureSearch backend(dir.path());
    std::vector<std::string> warnings;
    auto clues = search({"Did X happen?"}, backend, EvidenceConfig{}, &warnings);
    REQUIRE(clues.size() == 2);
    for (const auto& c : clues) CHECK(c.source == ClueSource::Fixture);
    CHECK(clues[0].title == "X report");
    CHECK(clues[0].url == std::optional<std::string>("https://a"));
    CHECK(warnings.empty());
    // normalization: case and spacing do not matter
    CHECK(search({"  did   x HAPPEN? "}, backend, EvidenceConfig{}).size() == 2);
}

TEST_CASE("a miss contributes nothing and warns") {
    TempDir dir;
    put_search(dir, "hit", R"([{"title":"t","snippet":"s","url":"u"}])");
    FixtureSearch backend(dir.path());
    std::vector<std::string> warnings;
    auto clues = search({"hit", "miss"}, backend, EvidenceConfig{}, &warnings);
    CHECK(clues.size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("miss") != std::string::npos);
}

TEST_CASE("duplicate results across queries appear once") {
    TempDir dir;
    put_search(dir, "q1", R"([{"title":"same","snippet":"dup","url":"u"},{"title":"one","snippet":"a","url":"u"}])");
    put_search(dir, "q2", R"([{"title":"same","snippet":"dup","url":"u"},{"title":"two","snippet":"b","url":"u"}])");
    FixtureSearch backend(dir.path());
    auto clues = search({"q1", "q2"}, backend, EvidenceConfig{});
    REQUIRE(clues.size() == 3);
    CHECK(clues[0].title == "same");
    CHECK(clues[1].title == "one");
    CHECK(clues[2].title == "two");
}

TEST_CASE("k caps results per query") {
    TempDir dir;
    put_search(dir, "many", R"([{"title":"1","snippet":"a"},{"title":"2","snippet":"b"},{"title":"3","snippet":"c"},
                                {"title":"4","snippet":"d"},{"title":"5","snippet":"e"}])");
    FixtureSearch backend(dir.path());
    EvidenceConfig cfg;
    cfg.results_per_query = 3;
    CHECK(search({"many"}, backend, cfg).size() == 3);
}

TEST_CASE("all queries failing is an error; empty query list is not") {
    DownSearch down;
    CHECK(code_of([&] { search({"a", "b"}, down, EvidenceConfig{}); }) == Errc::AllQueriesFailed);
    CHECK(search({}, down, EvidenceConfig{}).empty());
    CHECK(code_of([] {
              FixtureSearch missing("/nonexistent/maro/dir");
              missing.search("q", 3);
          }) == Errc::Io);
}

TEST_CASE("entity extraction") {
    auto e = extract_entities("Did the Eiffel Tower close? Officials in Paris said no.", 5);
    REQUIRE_FALSE(e.empty());
    CHECK(e[0] == "Eiffel Tower");
    CHECK(std::find(e.begin(), e.end(), "Paris") != e.end());
    CHECK(std::find(e.begin(), e.end(), "Did") == e.end());
    CHECK(extract_entities("nothing capitalized here at all", 5).empty());
    CHECK(extract_entities("Alpha Beta and Gamma Delta and Epsilon Zeta", 2).size() == 2);
}

TEST_CASE("encyclopedia lookup") {
    TempDir dir;
    put_article(dir, "Eiffel Tower", "Wrought-iron lattice tower in Paris.");
    FixtureEncyclopedia enc(dir.path());
    EvidenceConfig cfg;

    auto news = testing::item("n", "d", Verdict::Real, "Tourists visited the Eiffel Tower today.");
    auto clues = encyclopedia_lookup(news, {}, enc, cfg);
    REQUIRE(clues.size() == 1);
    CHECK(clues[0].source == ClueSource::Encyclopedia);
    CHECK(clues[0].snippet == "Wrought-iron lattice tower in Paris.");

    auto plain = testing::item("p", "d", Verdict::Real, "no entities in this lowercase text");
    CHECK(encyclopedia_lookup(plain, {}, enc, cfg).empty());

    auto two = testing::item("t", "d", Verdict::Real, "The Eiffel Tower and the Louvre Pyramid reopened.");
    CHECK(encyclopedia_lookup(two, {}, enc, cfg).size() == 1);

    // entities come from the fact questions first
    auto q = encyclopedia_lookup(plain, {"Is the Eiffel Tower open?"}, enc, cfg);
    CHECK(q.size() == 1);
}

TEST_CASE("assemble ordering and budget") {
    auto set = assemble("i", {clue(ClueSource::Search, "s1", 10), clue(ClueSource::Search, "s2", 10)},
                        {clue(ClueSource::Encyclopedia, "e1", 10)}, 6000);
    REQUIRE(set.clues.size() == 3);
    CHECK(set.clues[0].source == ClueSource::Encyclopedia);
    CHECK(set.clues[1].title == "s1");

    std::vector<Clue> big;
    for (int i = 0; i < 9; ++i) big.push_back(clue(ClueSource::Search, "t" + std::to_string(i), 998));
    auto cut = assemble("i", big, {}, 6000);
    CHECK(cut.total_chars <= 6000);
    CHECK(cut.clues.size() == 6);
    for (std::size_t i = 0; i < cut.clues.size(); ++i) CHECK(cut.clues[i].title == big[i].title);

    auto empty = assemble("i", {}, {}, 6000);
    CHECK(empty.empty());
    CHECK(render_evidence(empty) == kNoEvidenceMarker);
}

TEST_CASE("budget property over random clue lengths") {
    Rng rng(11);
    for (int round = 0; round < 300; ++round) {
        std::vector<Clue> s, e;
        auto ns = rng.below(12), ne = rng.below(4);
        for (std::uint64_t i = 0; i < ns; ++i) s.push_back(clue(ClueSource::Search, "s" + std::to_string(i), rng.below(3000)));
        for (std::uint64_t i = 0; i < ne; ++i) e.push_back(clue(ClueSource::Encyclopedia, "e" + std::to_string(i), rng.below(3000)));
        std::size_t budget = rng.below(8000);
        auto set = assemble("i", s, e, budget);
        std::size_t sum = 0;
        for (const auto& c : set.clues) sum += c.chars();
        REQUIRE(set.total_chars == sum);
        REQUIRE(set.total_chars <= budget);
    }
}

TEST_CASE("rendered evidence tags every clue with its source") {
    auto set = assemble("i", {clue(ClueSource::Search, "a", 5), clue(ClueSource::Fixture, "b", 5)},
                        {clue(ClueSource::Encyclopedia, "c", 5)}, 6000);
    auto text = render_evidence(set);
    std::size_t tags = 0;
    for (auto pos = text.find("(source: "); pos != std::string::npos; pos = text.find("(source: ", pos + 1)) ++tags;
    CHECK(tags == 3);
    auto back = evidence_from_json(evidence_to_json(set));
    CHECK(render_evidence(back) == text);
}

TEST_CASE("search down, encyclopedia up still yields evidence") {
    TempDir dir;
    put_article(dir, "Eiffel Tower", "Tower in Paris.");
    Retriever r;
    r.search = std::make_shared<DownSearch>();
    r.encyclopedia = std::make_shared<FixtureEncyclopedia>(dir.path());
    std::vector<std::string> warnings;
    auto ev = gather_evidence(testing::item("n", "d", Verdict::Real, "Visit the Eiffel Tower."), {"Is it open?"}, r,
                              &warnings);
    REQUIRE(ev.clues.size() == 1);
    CHECK(ev.clues[0].source == ClueSource::Encyclopedia);
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("http search body parsing") {
    auto clues = HttpSearch::parse_body("q", R"({"items":[{"title":"T","snippet":"S","link":"L"},{"title":"U","snippet":"V"}]})", 1);
    REQUIRE(clues.size() == 1);
    CHECK(clues[0].source == ClueSource::Search);
    CHECK(clues[0].url == std::optional<std::string>("L"));
    CHECK(HttpSearch::parse_body("q", R"({})", 3).empty());
}

}  // TEST_SUITE
