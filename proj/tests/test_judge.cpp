#include <optional>

#include "doctest.h"
#include "maro/judge.hpp"
#include "maro/synthetic.hpp"
#include "parse_cases.hpp"
#include "support.hpp"

using namespace maro;
using testing::code_of;
using testing::item;
using testing::kParseTable;
constexpr auto F = Verdict::Fake;
constexpr auto R = Verdict::Real;

namespace {

NewsItem query() { return item("q", "target", Verdict::Fake, "Query body."); }

MultiDimReport report_for(const std::string& id) {
    MultiDimReport r;
    r.item_id = id;
    r.composed_text = "=== Linguistic Feature Analysis ===\nstub\n";
    return r;
}

std::vector<ValidationTask> tasks_with_gold(const std::vector<Verdict>& gold) {
    std::vector<ValidationTask> out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ValidationTask t;
        t.query = item("t" + std::to_string(i), "x", gold[i], "Task body " + std::to_string(i) + ".");
        t.query_report = report_for(t.query.id);
        t.demonstrations = {{item("d1", "y", Verdict::Real, "Demo one."), Verdict::Real},
                            {item("d2", "y", Verdict::Fake, "Demo two."), Verdict::Fake}};
        t.gold = gold[i];
        out.push_back(std::move(t));
    }
    return out;
}

Judgement j(std::optional<Verdict> v) {
    Judgement out;
    out.verdict = v;
    out.status = v ? ParseStatus::Clean : ParseStatus::Failed;
    return out;
}

}  // namespace

TEST_SUITE("judge") {

TEST_CASE("verdict parse table") {
    for (const auto& c : kParseTable) {
        CAPTURE(c.raw);
        auto p = parse_verdict(c.raw);
        CHECK(p.verdict == c.verdict);
        CHECK(p.status == c.status);
    }
}

TEST_CASE("majority vote over every triple") {
    const std::optional<Verdict> options[] = {Verdict::Fake, Verdict::Real, std::nullopt};
    for (auto a : options) {
        for (auto b : options) {
            for (auto c : options) {
                std::vector<Judgement> js{j(a), j(b), j(c)};
                int fake = 0, real = 0;
                for (auto v : {a, b, c}) {
                    if (v == Verdict::Fake) ++fake;
                    if (v == Verdict::Real) ++real;
                }
                if (fake + real == 0) {
                    CHECK(code_of([&] { majority_vote(js); }) == Errc::NoUsableVerdicts);
                    continue;
                }
                auto expect_fake_tie = fake >= real ? Verdict::Fake : Verdict::Real;
                auto expect_real_tie = fake > real ? Verdict::Fake : Verdict::Real;
                CHECK(majority_vote(js, TieBreak::Fake) == expect_fake_tie);
                CHECK(majority_vote(js, TieBreak::Real) == expect_real_tie);
            }
        }
    }
    CHECK(majority_vote({j(F), j(R)}) == Verdict::Fake);
    CHECK(majority_vote({j(F), j(R)}, TieBreak::Real) == Verdict::Real);
}

TEST_CASE("judge prompt order") {
    std::vector<Demonstration> demos{{item("d1", "y", Verdict::Real, "Demo one."), Verdict::Real},
                                     {item("d2", "y", Verdict::Fake, "Demo two."), Verdict::Fake}};
    DecisionRule rule{3, "Prefer named sources.", RuleOrigin::Optimized};
    auto text = build_judge_prompt(query(), report_for("q"), demos, rule);
    auto p_demo1 = text.find("Demo one."), p_demo2 = text.find("Demo two."), p_rule = text.find("Prefer named sources.");
    auto p_query = text.find("Query body."), p_report = text.find("stub"), p_format = text.find(kOutputFormat);
    REQUIRE(p_format != std::string::npos);
    CHECK(p_demo1 < p_demo2);
    CHECK(p_demo2 < p_rule);
    CHECK(p_rule < p_query);
    CHECK(p_query < p_report);
    CHECK(p_report < p_format);
    CHECK(text.find("Output: judgment: 0") < p_demo2);
    CHECK(text.find("Output: judgment: 1") > p_demo2);

    auto bare = build_judge_prompt(query(), report_for("q"), {}, rule);
    CHECK(bare.find("Example") == std::string::npos);
}

TEST_CASE("judge_one uses the judge role at temperature zero") {
    ScriptedMock mock({{Role::Judge, MatchKind::Any, "", std::string("judgment: 1")}});
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{mock, prompts, {}};
    auto out = judge_one(query(), report_for("q"), {}, DecisionRule{0, "r0", RuleOrigin::Manual}, ctx);
    CHECK(out.verdict == Verdict::Fake);
    CHECK(out.status == ParseStatus::Clean);
    auto req = mock.captured().at(0);
    CHECK(req.role == Role::Judge);
    CHECK(req.temperature == 0.0);
    CHECK(req.system_prompt == prompts.system_prompt(Role::Judge));
}

TEST_CASE("scoring counts failed parses as incorrect") {
    ScriptedMock mock({{Role::Judge, MatchKind::Contains, "Task body 0.", std::string("judgment: 1")},
                       {Role::Judge, MatchKind::Contains, "Task body 1.", std::string("judgment: 1")},
                       {Role::Judge, MatchKind::Contains, "Task body 2.", std::string("no idea")},
                       {Role::Judge, MatchKind::Any, "", std::string("judgment: 0")}});
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{mock, prompts, {}};
    auto tasks = tasks_with_gold({F, R, F, R});
    auto s = score_rule_serial(DecisionRule{1, "rule", RuleOrigin::Manual}, tasks, ctx);
    CHECK(s.correct == 2);
    CHECK(s.accuracy == doctest::Approx(0.5));
    REQUIRE(s.log.size() == 4);
    CHECK(s.log[2].status == ParseStatus::Failed);
    CHECK_FALSE(s.log[2].correct);
    CHECK(s.log[1].rule_id == 1);

    CHECK(code_of([&] { score_rule_serial(DecisionRule{}, {}, ctx); }) == Errc::EmptyTaskSet);
    CHECK(code_of([&] { score_rule(DecisionRule{}, {}, ctx, 4); }) == Errc::EmptyTaskSet);
}

TEST_CASE("parallel scoring matches the serial reference") {
    auto mock = make_synthetic_mock();
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{*mock, prompts, {}};
    std::vector<Verdict> gold;
    for (int i = 0; i < 40; ++i) gold.push_back(i % 3 ? Verdict::Real : Verdict::Fake);
    auto tasks = tasks_with_gold(gold);
    DecisionRule rule{7, "Weigh sourcing against sensational tone.", RuleOrigin::Optimized};
    auto serial = score_rule_serial(rule, tasks, ctx);
    for (int workers : {1, 2, 4, 8}) {
        auto par = score_rule(rule, tasks, ctx, workers);
        CHECK(par.correct == serial.correct);
        CHECK(par.accuracy == serial.accuracy);
        REQUIRE(par.log.size() == serial.log.size());
        for (std::size_t i = 0; i < par.log.size(); ++i) CHECK(to_json(par.log[i]) == to_json(serial.log[i]));
    }
}

TEST_CASE("provider errors propagate from scoring but not from inference") {
    ScriptedMock mock({{Role::Judge, MatchKind::Contains, "rule A", std::string("judgment: 1")},
                       {Role::Judge, MatchKind::Contains, "rule C", std::string("judgment: 1")}});
    mock.fail_when("rule B", Errc::Upstream5xx);
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{mock, prompts, {}};

    std::vector<DecisionRule> rules{{1, "rule A", RuleOrigin::Manual},
                                    {2, "rule B", RuleOrigin::Optimized},
                                    {3, "rule C", RuleOrigin::Optimized}};
    auto inf = infer(query(), report_for("q"), {}, rules, ctx, 3);
    CHECK(inf.verdict == Verdict::Fake);
    REQUIRE(inf.judgements.size() == 3);
    CHECK(inf.judgements[1].status == ParseStatus::Failed);
    CHECK(inf.judgements[1].raw.find("provider error") != std::string::npos);

    auto tasks = tasks_with_gold({F, R});
    CHECK(code_of([&] { score_rule(rules[1], tasks, ctx, 2); }) == Errc::Upstream5xx);
    CHECK(code_of([&] { infer(query(), report_for("q"), {}, {}, ctx); }) == Errc::BadConfig);

    ScriptedMock down({});
    down.fail_when("Query body.", Errc::Transport);
    JudgeContext dctx{down, prompts, {}};
    CHECK(code_of([&] { infer(query(), report_for("q"), {}, rules, dctx); }) == Errc::NoUsableVerdicts);
}

TEST_CASE("inference votes across rules") {
    ScriptedMock mock({{Role::Judge, MatchKind::Contains, "rule A", std::string("judgment: 0")},
                       {Role::Judge, MatchKind::Contains, "rule B", std::string("judgment: 1")},
                       {Role::Judge, MatchKind::Contains, "rule C", std::string("judgment: 0")}});
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{mock, prompts, {}};
    std::vector<DecisionRule> rules{{1, "rule A", RuleOrigin::Manual},
                                    {2, "rule B", RuleOrigin::Optimized},
                                    {3, "rule C", RuleOrigin::Optimized}};
    CHECK(infer(query(), report_for("q"), {}, rules, ctx, 1).verdict == Verdict::Real);
    std::vector<DecisionRule> two(rules.begin(), rules.begin() + 2);
    CHECK(infer(query(), report_for("q"), {}, two, ctx, 2).verdict == Verdict::Fake);
}

}  // TEST_SUITE
