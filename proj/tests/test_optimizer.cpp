#include <algorithm>

#include "doctest.h"
#include "maro/optimizer.hpp"
#include "support.hpp"

using namespace maro;
using testing::code_of;
using testing::TempDir;

namespace {

/// Scorer replaying a fixed accuracy sequence: r0 first, then one value per
/// scored proposal; `tail` once the sequence runs out.
struct SequenceScorer {
    std::vector<double> values;
    double tail = 0.0;
    std::size_t calls = 0;

    double operator()(const DecisionRule&) {
        double v = calls < values.size() ? values[calls] : tail;
        ++calls;
        return v;
    }
};

/// Proposer numbering its rules by iteration and attempt.
std::string numbered_proposal(const ProposalRequest& req) {
    return "rule from iteration " + std::to_string(req.iteration);
}

DecisionRule r0() { return {0, "Initial rule. judgment: 1 or 0", RuleOrigin::Manual}; }

LedgerEntry entry(std::uint64_t id, double acc) {
    return {{id, "rule " + std::to_string(id), id == 0 ? RuleOrigin::Manual : RuleOrigin::Optimized}, acc, id};
}

std::vector<double> accuracies(const std::vector<LedgerEntry>& es) {
    std::vector<double> out;
    for (const auto& e : es) out.push_back(e.accuracy);
    return out;
}

std::vector<std::size_t> att_trace(const OptimizerState& s) {
    std::vector<std::size_t> out;
    for (const auto& r : s.history) out.push_back(r.n_att);
    return out;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("hand-simulated run") {
    SequenceScorer scorer{{0.50, 0.40, 0.60, 0.55, 0.70}, 0.0};
    OptimizerConfig cfg;
    cfg.n_att_max = 2;
    cfg.n_iter_max = 10;
    cfg.k = 3;
    auto result = optimize(r0(), std::ref(scorer), numbered_proposal, cfg);
    CHECK(accuracies(result.state.ledger.entries()) == std::vector<double>{0.50, 0.60, 0.70});
    auto trace = att_trace(result.state);
    REQUIRE(trace.size() >= 4);
    CHECK(std::vector<std::size_t>(trace.begin(), trace.begin() + 4) == std::vector<std::size_t>{1, 0, 1, 0});
    // two more non-improving proposals exhaust N_att
    CHECK(trace == std::vector<std::size_t>{1, 0, 1, 0, 1, 2});
    CHECK(result.top.front().accuracy == 0.70);
    CHECK(result.top.front().rule.text == "rule from iteration 4");
    CHECK(accuracies(result.top) == std::vector<double>{0.70, 0.60, 0.50});

    SequenceScorer exact{{0.50, 0.40, 0.60, 0.55, 0.70}, 0.0};
    cfg.n_iter_max = 4;
    auto bounded = optimize(r0(), std::ref(exact), numbered_proposal, cfg);
    CHECK(att_trace(bounded.state) == std::vector<std::size_t>{1, 0, 1, 0});
    CHECK(exact.calls == 5);
}

TEST_CASE("no iterations returns the initial rule") {
    SequenceScorer scorer{{0.5}, 0.9};
    OptimizerConfig cfg;
    cfg.n_iter_max = 0;
    int proposals = 0;
    auto result = optimize(r0(), std::ref(scorer), [&](const ProposalRequest& r) {
        ++proposals;
        return numbered_proposal(r);
    }, cfg);
    CHECK(proposals == 0);
    REQUIRE(result.top.size() == 1);
    CHECK(result.top[0].rule.text == r0().text);
    CHECK(result.top[0].accuracy == 0.5);
}

TEST_CASE("never improving stops after N_att proposals") {
    SequenceScorer scorer{{0.5}, 0.5};
    OptimizerConfig cfg;
    cfg.n_att_max = 3;
    int proposals = 0;
    auto result = optimize(r0(), std::ref(scorer), [&](const ProposalRequest& r) {
        ++proposals;
        return numbered_proposal(r);
    }, cfg);
    CHECK(proposals == 3);
    CHECK(result.state.ledger.size() == 1);  // ties do not insert
    CHECK(result.top.size() == 1);
}

TEST_CASE("trajectory ordering") {
    const std::vector<double> ledger_acc{55.31, 62.52, 65.46, 65.68, 68.39};
    RuleLedger ledger;
    for (std::size_t i = 0; i < ledger_acc.size(); ++i) REQUIRE(ledger.insert(entry(i, ledger_acc[i] / 100.0)));
    auto traj = build_trajectory(ledger, 10);
    REQUIRE(traj.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(traj[i].accuracy * 100.0 == doctest::Approx(ledger_acc[i]));

    std::vector<LedgerEntry> twelve;
    for (std::uint64_t i = 0; i < 12; ++i) twelve.push_back(entry(i, 0.1 + 0.05 * static_cast<double>((i * 7) % 12)));
    auto cut = build_trajectory(twelve, 10);
    REQUIRE(cut.size() == 10);
    auto sorted = accuracies(twelve);
    std::sort(sorted.begin(), sorted.end());
    CHECK(accuracies(cut) == std::vector<double>(sorted.begin() + 2, sorted.end()));

    CHECK(build_trajectory({entry(0, 0.3)}, 10).size() == 1);
    CHECK(code_of([] { build_trajectory(std::vector<LedgerEntry>{}, 10); }) == Errc::EmptyLedger);

    // equal accuracies: the later insert ranks higher
    auto tied = build_trajectory({entry(1, 0.5), entry(2, 0.5), entry(3, 0.4)}, 2);
    CHECK(tied[0].rule.id == 1);
    CHECK(tied[1].rule.id == 2);
}

TEST_CASE("top_k with a short ledger returns every pair") {
    RuleLedger ledger;
    ledger.insert(entry(0, 0.4));
    ledger.insert(entry(1, 0.6));
    auto top = top_k(ledger, 3);
    REQUIRE(top.size() == 2);
    CHECK(top[0].accuracy == 0.6);
    CHECK(top[1].accuracy == 0.4);
    CHECK(top_k(ledger, 1).size() == 1);
}

TEST_CASE("duplicates are re-requested, then counted as an attempt") {
    SequenceScorer scorer{{0.5, 0.6}, 0.0};
    OptimizerConfig cfg;
    cfg.n_iter_max = 1;
    std::vector<int> attempts;
    auto result = optimize(r0(), std::ref(scorer), [&](const ProposalRequest& r) {
        attempts.push_back(r.attempt);
        return r.attempt < 2 ? r0().text : std::string("fresh rule");
    }, cfg);
    CHECK(attempts == std::vector<int>{0, 1, 2});
    CHECK(result.state.ledger.size() == 2);
    CHECK(result.state.n_att == 0);

    SequenceScorer never{{0.5}, 0.9};
    int calls = 0;
    auto stuck = optimize(r0(), std::ref(never), [&](const ProposalRequest&) {
        ++calls;
        return "\"" + r0().text + "\"";
    }, cfg);
    CHECK(calls == 1 + cfg.duplicate_retries);
    CHECK(never.calls == 1);
    CHECK(stuck.state.n_att == 1);
    CHECK(stuck.state.history.back().note == "duplicate");
}

TEST_CASE("empty proposals count as a non-improving attempt") {
    SequenceScorer scorer{{0.5}, 0.9};
    OptimizerConfig cfg;
    cfg.n_att_max = 2;
    auto result = optimize(r0(), std::ref(scorer), [](const ProposalRequest&) -> std::string {
        throw Error(Errc::EmptyProposal, "blank");
    }, cfg);
    CHECK(result.state.n_iter == 2);
    CHECK(result.state.history[0].note == "empty");
    CHECK(scorer.calls == 1);

    CHECK(code_of([&] {
              optimize(r0(), std::ref(scorer), [](const ProposalRequest&) -> std::string {
                  throw Error(Errc::Upstream5xx, "down");
              }, cfg);
          }) == Errc::Upstream5xx);
}

TEST_CASE("checkpoint and resume reproduce an uninterrupted run") {
    const std::vector<double> seq{0.5, 0.55, 0.52, 0.61, 0.6, 0.7, 0.65, 0.66, 0.64};
    OptimizerConfig cfg;
    cfg.n_iter_max = 8;
    cfg.n_att_max = 3;

    SequenceScorer full_scorer{seq, 0.0};
    auto full = optimize(r0(), std::ref(full_scorer), numbered_proposal, cfg);

    TempDir tmp;
    auto ckpt = tmp / "checkpoint.json";
    SequenceScorer first_scorer{seq, 0.0};
    OptimizerConfig two = cfg;
    two.n_iter_max = 2;
    optimize(r0(), std::ref(first_scorer), numbered_proposal, two, {},
             [&](const OptimizerState& s) { checkpoint(s, ckpt); });

    auto state = resume(ckpt);
    CHECK(state.n_iter == 2);
    SequenceScorer rest{std::vector<double>(seq.begin() + 3, seq.end()), 0.0};
    auto resumed = optimize(r0(), std::ref(rest), numbered_proposal, cfg, state);

    CHECK(state_to_json(resumed.state) == state_to_json(full.state));
    CHECK(accuracies(resumed.top) == accuracies(full.top));

    tmp.write("torn.json", read_file(ckpt).substr(0, 40));
    CHECK(code_of([&] { resume(tmp / "torn.json"); }) == Errc::CorruptCheckpoint);
    CHECK(code_of([&] { resume(tmp / "absent.json"); }) == Errc::CorruptCheckpoint);

    checkpoint(OptimizerState{}, tmp / "fresh.json");
    auto fresh = resume(tmp / "fresh.json");
    CHECK_FALSE(fresh.started());
    CHECK(state_to_json(fresh) == state_to_json(OptimizerState{}));
}

TEST_CASE("random runs are monotone and terminate") {
    Rng rng(2024);
    for (int round = 0; round < 200; ++round) {
        OptimizerConfig cfg;
        cfg.n_iter_max = rng.below(30);
        cfg.n_att_max = 1 + rng.below(5);
        cfg.k = 1 + rng.below(4);
        std::vector<double> all;
        auto scorer = [&](const DecisionRule&) {
            double v = static_cast<double>(rng.below(101)) / 100.0;
            all.push_back(v);
            return v;
        };
        std::size_t proposals = 0;
        auto result = optimize(r0(), scorer, [&](const ProposalRequest& r) {
            ++proposals;
            for (std::size_t i = 1; i < r.trajectory.size(); ++i) REQUIRE(r.trajectory[i - 1].accuracy <= r.trajectory[i].accuracy);
            return "rule " + std::to_string(proposals);
        }, cfg);
        const auto& entries = result.state.ledger.entries();
        for (std::size_t i = 1; i < entries.size(); ++i) REQUIRE(entries[i - 1].accuracy < entries[i].accuracy);
        REQUIRE(proposals <= cfg.n_iter_max);
        REQUIRE(result.state.n_att <= cfg.n_att_max);
        REQUIRE(all.size() <= cfg.n_iter_max + 1);
        REQUIRE(result.top.size() == std::min(cfg.k, entries.size()));
        REQUIRE(result.top.front().accuracy == *std::max_element(all.begin(), all.end()));
        for (std::size_t i = 1; i < result.top.size(); ++i) REQUIRE(result.top[i - 1].accuracy >= result.top[i].accuracy);
        std::size_t tail = 0;
        for (auto it = result.state.history.rbegin(); it != result.state.history.rend() && !it->improved; ++it) ++tail;
        if (result.state.n_iter < cfg.n_iter_max) REQUIRE(tail == cfg.n_att_max);
    }
}

TEST_CASE("rule text cleanup") {
    CHECK(clean_rule_text("  \"Check the source.\"  ") == "Check the source.");
    CHECK(clean_rule_text("Decision rule: Check the source.") == "Check the source.");
    CHECK(clean_rule_text("```\nCheck the source.\n```") == "Check the source.");
    CHECK(clean_rule_text("```text\n<Check the source.>\n```") == "Check the source.");
    CHECK(clean_rule_text("New decision rule: keep") == "keep");
    CHECK(clean_rule_text("Check \"quoted\" words.") == "Check \"quoted\" words.");
    CHECK(clean_rule_text("   ").empty());
}

TEST_CASE("optimizer prompt rendering") {
    std::vector<LedgerEntry> traj{entry(0, 0.5531), entry(1, 0.6252)};
    auto text = render_trajectory(traj);
    CHECK(text == "<decision rule: rule 0, accuracy: 55.31>\n<decision rule: rule 1, accuracy: 62.52>");

    ValidationTask t;
    t.query = testing::item("q", "d", Verdict::Fake, "Query body.");
    t.gold = Verdict::Fake;
    auto ex = render_exemplars({t});
    CHECK(ex.find("Input: Query body.") == 0);
    CHECK(ex.find("Output: ") != std::string::npos);

    auto prompt = build_optimizer_prompt("A\n{{trajectory}}\nB\n{{examples}}\nC", traj, {t});
    CHECK(prompt == "A\n" + text + "\nB\n" + ex + "\nC");

    auto def = build_optimizer_prompt(PromptRegistry::defaults().optimizer_template(), traj, {t});
    CHECK(def.find("{{") == std::string::npos);
    CHECK(def.find("accuracy: 62.52") != std::string::npos);
}

TEST_CASE("optimizer agent requests") {
    ScriptedMock mock({{Role::Optimizer, MatchKind::Any, "", std::string("\"Prefer named sources.\"")}});
    auto prompts = PromptRegistry::defaults();
    OptimizerAgent agent{mock, prompts};
    RuleLedger ledger;
    ledger.insert(entry(0, 0.5));
    ProposalRequest req{build_trajectory(ledger, 10), 3, 0};
    auto p = propose_rule(req, {}, ledger, 9, agent);
    CHECK(p.rule.text == "Prefer named sources.");
    CHECK(p.rule.origin == RuleOrigin::Optimized);
    CHECK(p.rule.id == 9);
    CHECK_FALSE(p.duplicate);
    auto sent = mock.captured().at(0);
    CHECK(sent.temperature == 1.0);
    CHECK(sent.sample_tag == "iter=3;attempt=0");

    ledger.insert(LedgerEntry{{1, "Prefer named sources.", RuleOrigin::Optimized}, 0.6, 1});
    CHECK(propose_rule(req, {}, ledger, 10, agent).duplicate);

    ScriptedMock blank({{Role::Optimizer, MatchKind::Any, "", std::string("  ")}});
    OptimizerAgent blank_agent{blank, prompts};
    CHECK(code_of([&] { propose_rule(req, {}, ledger, 11, blank_agent); }) == Errc::EmptyProposal);
}

}  // TEST_SUITE
