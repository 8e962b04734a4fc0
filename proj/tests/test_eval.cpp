#include <cmath>

#include "doctest.h"
#include "maro/eval.hpp"
#include "maro/synthetic.hpp"
#include "support.hpp"

using namespace maro;
using testing::code_of;
using testing::item;

namespace {

constexpr auto F = Verdict::Fake;
constexpr auto R = Verdict::Real;

/// Independent oracle: precision/recall written out longhand.
double oracle_f1(const std::vector<Verdict>& p, const std::vector<Verdict>& g, Verdict positive) {
    double tp = 0, pred_pos = 0, gold_pos = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == positive) pred_pos += 1;
        if (g[i] == positive) gold_pos += 1;
        if (p[i] == positive && g[i] == positive) tp += 1;
    }
    if (tp == 0) return 0.0;
    double precision = tp / pred_pos, recall = tp / gold_pos;
    return 2 * precision * recall / (precision + recall);
}

std::map<std::string, MultiDimReport> stub_reports(const Dataset& ds) {
    std::map<std::string, MultiDimReport> out;
    for (const auto& it : ds.items()) {
        MultiDimReport r;
        r.item_id = it.id;
        r.composed_text = "stub";
        out[it.id] = r;
    }
    return out;
}

/// Reports for the whole synthetic corpus, produced once.
const std::map<std::string, MultiDimReport>& corpus_reports() {
    static const auto reports = [] {
        auto corpus = load_dataset(testing::data("synthetic_corpus.jsonl"));
        auto mock = make_synthetic_mock();
        auto prompts = PromptRegistry::defaults();
        AgentContext ctx{*mock, prompts, {}};
        std::map<std::string, MultiDimReport> out;
        for (auto& o : analyze_batch(corpus.items(), nullptr, ctx, 4)) out[o.report->item_id] = *o.report;
        return out;
    }();
    return reports;
}

PipelineConfig small_config() {
    PipelineConfig c;
    c.seed = 3;
    c.tasks.seed = 3;
    c.tasks.n_tasks = 12;
    c.optimizer.n_iter_max = 3;
    c.optimizer.n_att_max = 2;
    c.optimizer.k = 3;
    c.workers = 2;
    return c;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("hand-computed metrics") {
    auto m = compute_metrics({F, F, R, R}, {F, R, F, R});
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.f1_fake == doctest::Approx(0.5));
    CHECK(m.f1_real == doctest::Approx(0.5));
    CHECK(m.confusion.tp == 1);
    CHECK(m.confusion.fp == 1);
    CHECK(m.confusion.fn == 1);
    CHECK(m.confusion.tn == 1);

    auto all_real = compute_metrics({R, R, R, R}, {F, F, F, F});
    CHECK(all_real.accuracy == 0.0);
    CHECK(all_real.f1_fake == 0.0);
    CHECK(all_real.f1_macro == 0.0);

    auto perfect = compute_metrics({F, R}, {F, R});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.f1_macro == 1.0);

    CHECK(code_of([] { compute_metrics({F}, {F, R}); }) == Errc::LengthMismatch);
    CHECK(code_of([] { compute_metrics({}, {}); }) == Errc::Empty);
}

TEST_CASE("metrics agree with an independent oracle") {
    Rng rng(77);
    for (int round = 0; round < 500; ++round) {
        std::size_t n = 1 + rng.below(40);
        std::vector<Verdict> p(n), g(n);
        std::size_t same = 0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng.below(2) ? F : R;
            g[i] = rng.below(2) ? F : R;
            same += p[i] == g[i];
        }
        auto m = compute_metrics(p, g);
        REQUIRE(m.accuracy == doctest::Approx(static_cast<double>(same) / static_cast<double>(n)));
        REQUIRE(m.f1_fake == doctest::Approx(oracle_f1(p, g, F)));
        REQUIRE(m.f1_real == doctest::Approx(oracle_f1(p, g, R)));
        REQUIRE(m.f1_macro == doctest::Approx((m.f1_fake + m.f1_real) / 2));
        for (double v : {m.accuracy, m.f1_fake, m.f1_real, m.f1_macro}) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
        REQUIRE(m.confusion.tp + m.confusion.fp + m.confusion.fn + m.confusion.tn == n);
    }
}

TEST_CASE("target evaluation with a scripted judge") {
    Dataset target("t", {item("t1", "target", F, "Alpha story."), item("t2", "target", F, "Beta story."),
                         item("t3", "target", R, "Gamma story."), item("t4", "target", R, "Delta story.")});
    Dataset pool("p", {item("p1", "src", F), item("p2", "src", R), item("p3", "src", F), item("p4", "src", R)});
    ScriptedMock mock({{Role::Judge, MatchKind::Contains, "Query news:\nAlpha", std::string("judgment: 1")},
                       {Role::Judge, MatchKind::Any, "", std::string("judgment: 0")}});
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{mock, prompts, {}};
    std::vector<DecisionRule> rules{{0, "r0", RuleOrigin::Manual}};
    auto reports = stub_reports(target);

    auto eval = evaluate_target(target, reports, pool, rules, ctx, 2, 1, 2);
    CHECK(eval.metrics.accuracy == doctest::Approx(0.75));
    REQUIRE(eval.log.size() == 4);
    CHECK(eval.log[0].item_id == "t1");
    CHECK(eval.log[0].predicted == F);
    CHECK(eval.log[1].predicted == R);
    for (const auto& p : eval.log) CHECK(p.resolved);

    // demonstrations come from the pool only
    for (const auto& req : mock.captured()) {
        CHECK(req.user_content.find("News body of p") != std::string::npos);
    }

    Dataset empty("e", {});
    CHECK(code_of([&] { evaluate_target(empty, reports, pool, rules, ctx, 2, 1, 1); }) == Errc::Empty);
    Dataset leaky("l", {item("x1", "target", F), item("x2", "src", R)});
    CHECK(code_of([&] { evaluate_target(target, reports, leaky, rules, ctx, 2, 1, 1); }) == Errc::CrossDomainLeak);
    CHECK(code_of([&] { evaluate_target(target, reports, pool, {}, ctx, 2, 1, 1); }) == Errc::BadConfig);
    CHECK(code_of([&] { evaluate_target(target, reports, pool, rules, ctx, 9, 1, 1); }) == Errc::NotEnoughDemos);
    CHECK(code_of([&] { evaluate_target(target, {}, pool, rules, ctx, 2, 1, 1); }) == Errc::MissingReport);
}

TEST_CASE("unparsable judgements fall back to the tie-break class") {
    Dataset target("t", {item("t1", "target", R, "Alpha story.")});
    Dataset pool("p", {item("p1", "src", F), item("p2", "src", R)});
    ScriptedMock mock({{Role::Judge, MatchKind::Any, "", std::string("no idea")}});
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{mock, prompts, {}};
    auto eval = evaluate_target(target, stub_reports(target), pool, {{0, "r0", RuleOrigin::Manual}}, ctx, 2, 1, 1);
    CHECK_FALSE(eval.log[0].resolved);
    CHECK(eval.log[0].predicted == F);
    CHECK(eval.metrics.accuracy == 0.0);
}

TEST_CASE("evaluation is independent of worker count") {
    auto corpus = load_dataset(testing::data("synthetic_corpus.jsonl"));
    auto parts = split_by_domain(corpus);
    auto pool = merge("pool", {&parts.at("health"), &parts.at("politics")});
    auto prompts = PromptRegistry::defaults();
    std::vector<DecisionRule> rules{{0, prompts.initial_rule(), RuleOrigin::Manual},
                                    {1, "Weigh sourcing against tone.", RuleOrigin::Optimized}};
    nlohmann::json first;
    for (int workers : {1, 4}) {
        auto mock = make_synthetic_mock();
        JudgeContext ctx{*mock, prompts, {}};
        auto eval = evaluate_target(parts.at("science"), corpus_reports(), pool, rules, ctx, 4, 9, workers);
        nlohmann::json log = nlohmann::json::array();
        for (const auto& p : eval.log) log.push_back(to_json(p));
        if (workers == 1) first = log;
        else CHECK(log == first);
    }
}

TEST_CASE("averages are unweighted means") {
    CrossDomainResult r;
    for (double acc : {0.8, 0.6, 0.7}) {
        DomainResult row;
        row.metrics.accuracy = acc;
        row.metrics.f1_fake = acc / 2;
        row.metrics.f1_macro = acc / 4;
        r.rows.push_back(row);
    }
    compute_averages(r);
    CHECK(r.avg_accuracy == doctest::Approx(0.7));
    CHECK(r.avg_f1_fake == doctest::Approx(0.35));
    CHECK(r.avg_f1_macro == doctest::Approx(0.175));
}

TEST_CASE("leave one domain out") {
    auto corpus = load_dataset(testing::data("synthetic_corpus.jsonl"));
    auto mock = make_synthetic_mock();
    auto prompts = PromptRegistry::defaults();
    Services services{*mock, prompts};
    auto config = small_config();
    auto result = leave_one_domain_out(corpus, corpus_reports(), config, services);
    REQUIRE(result.rows.size() == 3);
    CHECK(result.rows[0].domain == "health");
    CHECK(result.rows[2].domain == "science");
    double sum = 0;
    for (const auto& row : result.rows) {
        sum += row.metrics.accuracy;
        CHECK(row.metrics.n == 10);
        CHECK_FALSE(row.rules.empty());
        CHECK(row.rules.size() <= 3);
    }
    CHECK(result.avg_accuracy == doctest::Approx(sum / 3));

    auto table = format_results_table(result);
    CHECK(table.find("science") != std::string::npos);
    auto j = results_to_json(result, make_provenance(config, prompts));
    CHECK(j.at("rows").size() == 3);

    Dataset one("one", {item("a", "x", F), item("b", "x", R)});
    CHECK(code_of([&] { leave_one_domain_out(one, corpus_reports(), config, services); }) == Errc::SingleDomain);
}

TEST_CASE("leave one domain out writes and reuses per-domain artifacts") {
    testing::TempDir tmp;
    auto corpus = load_dataset(testing::data("synthetic_corpus.jsonl"));
    auto prompts = PromptRegistry::defaults();
    auto config = small_config();
    auto prov = make_provenance(config, prompts);

    auto first_mock = make_synthetic_mock();
    Services first{*first_mock, prompts};
    auto a = leave_one_domain_out(corpus, corpus_reports(), config, first, tmp.path(), prov);
    for (const char* d : {"health", "politics", "science"}) {
        CHECK(std::filesystem::exists(tmp / d / "metrics.json"));
        CHECK(std::filesystem::exists(tmp / d / "predictions.jsonl"));
        CHECK(std::filesystem::exists(tmp / d / "rules.json"));
    }
    CHECK(std::filesystem::exists(tmp / "results.json"));

    auto second_mock = make_synthetic_mock();
    Services second{*second_mock, prompts};
    auto b = leave_one_domain_out(corpus, corpus_reports(), config, second, tmp.path(), prov);
    CHECK(second_mock->calls() == 0);
    CHECK(results_to_json(a, prov) == results_to_json(b, prov));
}

}  // TEST_SUITE
