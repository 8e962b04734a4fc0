#include "maro/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>

#include <spdlog/spdlog.h>

#include "maro/error.hpp"
#include "maro/util.hpp"

namespace maro {

namespace fs = std::filesystem;
using nlohmann::json;

json Provenance::to_json() const {
    return json{{"config_hash", config_hash}, {"seed", seed}, {"prompt_hashes", prompt_hashes}};
}

json config_fingerprint(const PipelineConfig& c) {
    const auto& a = c.analysis;
    const auto& e = c.evidence;
    return json{
        {"seed", c.seed},
        {"tasks", to_json(c.tasks)},
        {"optimizer", to_json(c.optimizer)},
        {"optimize", c.optimize},
        {"judge", {{"temperature", c.judge.temperature},
                   {"max_tokens", c.judge.max_tokens},
                   {"tie_break", c.judge.tie_break == TieBreak::Fake ? "fake" : "real"},
                   {"keywords_fake", c.judge.keywords.fake},
                   {"keywords_real", c.judge.keywords.real}}},
        {"analysis", {{"max_comments", a.max_comments},
                      {"max_fact_questions", a.max_fact_questions},
                      {"max_reflection_questions", a.max_reflection_questions},
                      {"reflection_rounds", a.reflection_rounds},
                      {"max_tokens", a.max_tokens},
                      {"temperatures", {{"analysis", a.temperatures.analysis},
                                        {"optimizer", a.temperatures.optimizer},
                                        {"judge", a.temperatures.judge}}}}},
        {"evidence", {{"results_per_query", e.results_per_query},
                      {"encyclopedia_articles", e.encyclopedia_articles},
                      {"char_budget", e.char_budget},
                      {"max_entities", e.max_entities}}},
    };
}

Provenance make_provenance(const PipelineConfig& config, const PromptRegistry& prompts) {
    Provenance p;
    p.config_hash = sha256_hex(config_fingerprint(config).dump());
    p.seed = config.seed;
    p.prompt_hashes = prompts.hashes();
    return p;
}

JudgeContext judge_context(const PipelineConfig& config, const Services& services) {
    JudgeConfig jc = config.judge;
    jc.temperature = config.analysis.temperatures.judge;
    return JudgeContext{services.provider, services.prompts, jc};
}

AgentContext agent_context(const PipelineConfig& config, const Services& services) {
    return AgentContext{services.provider, services.prompts, config.analysis};
}

namespace {

std::map<std::string, Dataset> cap_all(const std::map<std::string, Dataset>& sources, const PipelineConfig& config) {
    std::map<std::string, Dataset> capped;
    for (const auto& [name, part] : sources) {
        capped.emplace(name, cap_domain(part, config.tasks.per_domain_cap, substream_seed(config.seed, "cap/" + name)));
    }
    return capped;
}

}  // namespace

std::vector<ValidationTask> cap_and_build_tasks(const std::map<std::string, Dataset>& sources,
                                                const std::map<std::string, MultiDimReport>& reports,
                                                const PipelineConfig& config, std::vector<std::string>* warnings) {
    TaskSetConfig tc = config.tasks;
    tc.seed = config.seed;
    return build_tasks(cap_all(sources, config), reports, tc, warnings);
}

Dataset capped_pool(const std::map<std::string, Dataset>& sources, const PipelineConfig& config) {
    auto capped = cap_all(sources, config);
    std::vector<const Dataset*> parts;
    for (const auto& [_, part] : capped) parts.push_back(&part);
    return merge("sources", parts);
}

namespace {

json entry_json(const LedgerEntry& e) {
    return json{{"id", e.rule.id},
                {"text", e.rule.text},
                {"origin", origin_name(e.rule.origin)},
                {"accuracy", e.accuracy},
                {"iteration", e.iteration}};
}

json record_json(const IterationRecord& r) {
    return json{{"iteration", r.iteration},
                {"rule_id", r.rule_id ? json(*r.rule_id) : json(nullptr)},
                {"text", r.text},
                {"accuracy", r.accuracy ? json(*r.accuracy) : json(nullptr)},
                {"improved", r.improved},
                {"note", r.note},
                {"n_att", r.n_att}};
}

std::string jsonl(const std::vector<json>& lines) {
    std::string out;
    for (const auto& l : lines) out += l.dump() + "\n";
    return out;
}

/// Drops judgement lines from an iteration that never reached a checkpoint.
void trim_judgement_log(const fs::path& path, std::uint64_t next_rule_id) {
    if (!fs::exists(path)) return;
    std::string kept;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            if (j.at("rule_id").get<std::uint64_t>() < next_rule_id) kept += line + "\n";
        } catch (const json::exception&) {
            // torn trailing write
        }
    }
    write_file_atomic(path, kept);
}

}  // namespace

json rules_artifact(const std::vector<LedgerEntry>& top, const OptimizerState& state, const Provenance& provenance) {
    json rules = json::array();
    for (std::size_t i = 0; i < top.size(); ++i) {
        auto e = entry_json(top[i]);
        e["rank"] = i + 1;
        rules.push_back(e);
    }
    json ledger = json::array();
    for (const auto& e : state.ledger.entries()) ledger.push_back(entry_json(e));
    return json{{"provenance", provenance.to_json()},
                {"iterations", state.n_iter},
                {"rules", rules},
                {"ledger", ledger}};
}

std::vector<DecisionRule> load_rules_artifact(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::BadRecord, path.string() + ": " + e.what());
    }
    std::vector<DecisionRule> rules;
    try {
        for (const auto& r : j.at("rules")) {
            DecisionRule rule;
            rule.id = r.at("id").get<std::uint64_t>();
            rule.text = r.at("text").get<std::string>();
            rule.origin = r.value("origin", "optimized") == "manual" ? RuleOrigin::Manual : RuleOrigin::Optimized;
            rules.push_back(std::move(rule));
        }
    } catch (const json::exception& e) {
        throw Error(Errc::MissingField, path.string() + ": " + e.what());
    }
    if (rules.empty()) throw Error(Errc::EmptyLedger, path.string() + " holds no rules");
    return rules;
}

std::string format_ledger_table(const RuleLedger& ledger) {
    std::string out = "| Rule | Accuracy |\n|---|---|\n";
    for (const auto& e : ledger.entries()) {
        std::string text = e.rule.text;
        for (auto& ch : text) {
            if (ch == '\n' || ch == '|') ch = ' ';
        }
        char acc[32];
        std::snprintf(acc, sizeof acc, "%.2f", e.accuracy * 100.0);
        out += "| " + text + " | " + acc + " |\n";
    }
    return out;
}

OptimizationOutcome run_optimization(const std::vector<ValidationTask>& tasks, const PipelineConfig& config,
                                     const Services& services, const std::optional<fs::path>& run_dir,
                                     const Provenance& provenance) {
    if (tasks.empty()) throw Error(Errc::EmptyTaskSet, "no validation tasks to optimize on");
    const auto judge = judge_context(config, services);
    const DecisionRule r0{0, services.prompts.initial_rule(), RuleOrigin::Manual};

    OptimizerConfig oc = config.optimizer;
    if (!config.optimize) {
        oc.n_iter_max = 0;
        oc.k = 1;
    }

    std::vector<ValidationTask> exemplars(tasks.begin(),
                                          tasks.begin() + static_cast<long>(std::min(oc.exemplar_count, tasks.size())));
    OptimizerAgent agent{services.provider, services.prompts, config.analysis.temperatures.optimizer,
                         config.analysis.max_tokens};

    fs::path checkpoint_path, judgements_path;
    OptimizerState state;
    if (run_dir) {
        fs::create_directories(*run_dir);
        checkpoint_path = *run_dir / "checkpoint.json";
        judgements_path = *run_dir / "judgements.jsonl";
        if (fs::exists(checkpoint_path)) {
            state = resume(checkpoint_path);
            spdlog::info("resuming optimization at iteration {}", state.n_iter);
            trim_judgement_log(judgements_path, state.next_rule_id);
        } else if (fs::exists(judgements_path)) {
            fs::remove(judgements_path);
        }
    }

    std::vector<json> pending;
    Scorer scorer = [&](const DecisionRule& rule) {
        auto score = score_rule(rule, tasks, judge, config.workers);
        for (const auto& t : score.log) pending.push_back(to_json(t));
        return score.accuracy;
    };
    Proposer proposer = [&](const ProposalRequest& request) { return request_rule_text(request, exemplars, agent); };

    StateHook hook = [&](const OptimizerState& s) {
        if (!run_dir) {
            pending.clear();
            return;
        }
        if (!pending.empty()) {
            std::ofstream out(judgements_path, std::ios::app | std::ios::binary);
            out << jsonl(pending);
            if (!out) throw Error(Errc::Io, "cannot append " + judgements_path.string());
            pending.clear();
        }
        std::vector<json> ledger, proposals;
        for (const auto& e : s.ledger.entries()) ledger.push_back(entry_json(e));
        for (const auto& r : s.history) proposals.push_back(record_json(r));
        write_file_atomic(*run_dir / "ledger.jsonl", jsonl(ledger));
        write_file_atomic(*run_dir / "proposals.jsonl", jsonl(proposals));
        checkpoint(s, checkpoint_path);
    };

    auto result = optimize(r0, scorer, proposer, oc, std::move(state), hook);
    if (result.state.ledger.size() < oc.k) {
        spdlog::warn("ledger holds {} rule(s), fewer than k = {}; returning all of them", result.state.ledger.size(),
                     oc.k);
    }
    if (run_dir) {
        write_file_atomic(*run_dir / "rules.json", rules_artifact(result.top, result.state, provenance).dump(2) + "\n");
    }
    return OptimizationOutcome{std::move(result.top), std::move(result.state)};
}

}  // namespace maro
