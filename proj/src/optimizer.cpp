#include "maro/optimizer.hpp"

#include <algorithm>
#include <cstdio>

#include "maro/error.hpp"
#include "maro/util.hpp"

namespace maro {

using nlohmann::json;

bool RuleLedger::insert(LedgerEntry entry) {
    if (!entries_.empty() && !(entry.accuracy > best().accuracy)) return false;
    entries_.push_back(std::move(entry));
    return true;
}

const LedgerEntry& RuleLedger::best() const {
    if (entries_.empty()) throw Error(Errc::EmptyLedger, "ledger is empty");
    const LedgerEntry* best = &entries_.front();
    for (const auto& e : entries_) {
        if (e.accuracy >= best->accuracy) best = &e;
    }
    return *best;
}

bool RuleLedger::contains_text(std::string_view text) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const LedgerEntry& e) { return e.rule.text == text; });
}

namespace {

/// Ascending by accuracy; among equals, earlier insertion first.
std::vector<LedgerEntry> ranked_ascending(const std::vector<LedgerEntry>& pairs) {
    std::vector<std::size_t> idx(pairs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return pairs[a].accuracy < pairs[b].accuracy; });
    std::vector<LedgerEntry> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(pairs[i]);
    return out;
}

}  // namespace

std::vector<LedgerEntry> build_trajectory(const std::vector<LedgerEntry>& pairs, std::size_t size) {
    if (pairs.empty()) throw Error(Errc::EmptyLedger, "cannot build a trajectory from an empty ledger");
    if (size == 0) throw Error(Errc::BadConfig, "trajectory size must be >= 1");
    auto ranked = ranked_ascending(pairs);
    if (ranked.size() > size) ranked.erase(ranked.begin(), ranked.end() - static_cast<long>(size));
    return ranked;
}

std::vector<LedgerEntry> build_trajectory(const RuleLedger& ledger, std::size_t size) {
    return build_trajectory(ledger.entries(), size);
}

std::vector<LedgerEntry> top_k(const RuleLedger& ledger, std::size_t k) {
    auto ranked = ranked_ascending(ledger.entries());
    std::reverse(ranked.begin(), ranked.end());
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

json to_json(const OptimizerConfig& c) {
    return json{{"n_iter_max", c.n_iter_max},
                {"n_att_max", c.n_att_max},
                {"k", c.k},
                {"trajectory_size", c.trajectory_size},
                {"exemplar_count", c.exemplar_count},
                {"duplicate_retries", c.duplicate_retries}};
}

// ---- checkpointing -----------------------------------------------------------

namespace {

json entry_to_json(const LedgerEntry& e) {
    return json{{"id", e.rule.id},
                {"text", e.rule.text},
                {"origin", origin_name(e.rule.origin)},
                {"accuracy", e.accuracy},
                {"iteration", e.iteration}};
}

LedgerEntry entry_from_json(const json& j) {
    LedgerEntry e;
    e.rule.id = j.at("id").get<std::uint64_t>();
    e.rule.text = j.at("text").get<std::string>();
    e.rule.origin = j.at("origin").get<std::string>() == "manual" ? RuleOrigin::Manual : RuleOrigin::Optimized;
    e.accuracy = j.at("accuracy").get<double>();
    e.iteration = j.at("iteration").get<std::size_t>();
    return e;
}

json record_to_json(const IterationRecord& r) {
    return json{{"iteration", r.iteration},
                {"rule_id", r.rule_id ? json(*r.rule_id) : json(nullptr)},
                {"text", r.text},
                {"accuracy", r.accuracy ? json(*r.accuracy) : json(nullptr)},
                {"improved", r.improved},
                {"note", r.note},
                {"n_att", r.n_att}};
}

IterationRecord record_from_json(const json& j) {
    IterationRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    if (!j.at("rule_id").is_null()) r.rule_id = j.at("rule_id").get<std::uint64_t>();
    r.text = j.at("text").get<std::string>();
    if (!j.at("accuracy").is_null()) r.accuracy = j.at("accuracy").get<double>();
    r.improved = j.at("improved").get<bool>();
    r.note = j.at("note").get<std::string>();
    r.n_att = j.at("n_att").get<std::size_t>();
    return r;
}

}  // namespace

json state_to_json(const OptimizerState& state) {
    json ledger = json::array();
    for (const auto& e : state.ledger.entries()) ledger.push_back(entry_to_json(e));
    json history = json::array();
    for (const auto& r : state.history) history.push_back(record_to_json(r));
    return json{{"version", 1},
                {"n_iter", state.n_iter},
                {"n_att", state.n_att},
                {"next_rule_id", state.next_rule_id},
                {"ledger", ledger},
                {"history", history}};
}

OptimizerState state_from_json(const json& j) {
    OptimizerState s;
    s.n_iter = j.at("n_iter").get<std::size_t>();
    s.n_att = j.at("n_att").get<std::size_t>();
    s.next_rule_id = j.at("next_rule_id").get<std::uint64_t>();
    for (const auto& e : j.at("ledger")) s.ledger.restore(entry_from_json(e));
    for (const auto& r : j.at("history")) s.history.push_back(record_from_json(r));
    return s;
}

void checkpoint(const OptimizerState& state, const std::filesystem::path& path) {
    write_file_atomic(path, state_to_json(state).dump(2) + "\n");
}

OptimizerState resume(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw Error(Errc::CorruptCheckpoint, e.what());
    }
    try {
        auto j = json::parse(text);
        if (j.value("version", 0) != 1) throw Error(Errc::CorruptCheckpoint, "unsupported checkpoint version");
        return state_from_json(j);
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptCheckpoint, path.string() + ": " + e.what());
    }
}

// ---- the optimization loop ---------------------------------------------------

OptimizeResult optimize(const DecisionRule& r0, const Scorer& scorer, const Proposer& proposer,
                        const OptimizerConfig& config, OptimizerState state, const StateHook& on_state) {
    if (trim(r0.text).empty()) throw Error(Errc::BadConfig, "initial decision rule is empty");
    if (config.k == 0) throw Error(Errc::BadConfig, "k must be >= 1");

    if (!state.started()) {
        state.ledger.insert({r0, scorer(r0), 0});
        state.next_rule_id = std::max<std::uint64_t>(state.next_rule_id, r0.id + 1);
        if (on_state) on_state(state);
    }

    while (state.n_iter < config.n_iter_max && state.n_att < config.n_att_max) {
        ++state.n_iter;
        IterationRecord record;
        record.iteration = state.n_iter;

        ProposalRequest request;
        request.trajectory = build_trajectory(state.ledger, config.trajectory_size);
        request.iteration = state.n_iter;

        std::optional<std::string> text;
        for (int attempt = 0; attempt <= config.duplicate_retries; ++attempt) {
            request.attempt = attempt;
            std::string candidate;
            try {
                candidate = clean_rule_text(proposer(request));
            } catch (const Error& e) {
                if (e.code() != Errc::EmptyProposal) throw;
            }
            if (candidate.empty()) {
                record.note = "empty";
                break;
            }
            if (state.ledger.contains_text(candidate)) {
                record.note = "duplicate";
                record.text = candidate;
                continue;
            }
            record.note.clear();
            text = std::move(candidate);
            break;
        }

        if (!text) {
            ++state.n_att;
        } else {
            DecisionRule rule{state.next_rule_id++, *text, RuleOrigin::Optimized};
            double accuracy = scorer(rule);
            record.rule_id = rule.id;
            record.text = rule.text;
            record.accuracy = accuracy;
            record.improved = state.ledger.insert({rule, accuracy, state.n_iter});
            state.n_att = record.improved ? 0 : state.n_att + 1;
        }
        record.n_att = state.n_att;
        state.history.push_back(std::move(record));
        if (on_state) on_state(state);
    }

    OptimizeResult result;
    result.top = top_k(state.ledger, config.k);
    result.state = std::move(state);
    return result;
}

// ---- optimizer agent ---------------------------------------------------------

namespace {

std::string percent(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", accuracy * 100.0);
    return buf;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

}  // namespace

std::string render_trajectory(const std::vector<LedgerEntry>& trajectory) {
    std::string out;
    for (const auto& e : trajectory) {
        out += "<decision rule: " + e.rule.text + ", accuracy: " + percent(e.accuracy) + ">\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string render_exemplars(const std::vector<ValidationTask>& exemplars) {
    std::string out;
    for (const auto& t : exemplars) {
        out += "Input: " + t.query.content + "\n<DECISION RULE>\nOutput: " + std::string(verdict_word(t.gold)) + "\n\n";
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

std::string build_optimizer_prompt(const std::string& prompt_template, const std::vector<LedgerEntry>& trajectory,
                                   const std::vector<ValidationTask>& exemplars) {
    std::string out = prompt_template;
    replace_all(out, "{{trajectory}}", render_trajectory(trajectory));
    replace_all(out, "{{examples}}", render_exemplars(exemplars));
    return out;
}

std::string clean_rule_text(const std::string& raw) {
    std::string s = trim(raw);
    if (s.rfind("```", 0) == 0) {
        auto nl = s.find('\n');
        s = nl == std::string::npos ? std::string() : s.substr(nl + 1);
        auto fence = s.rfind("```");
        if (fence != std::string::npos) s = s.substr(0, fence);
        s = trim(s);
    }
    for (std::string_view label : {"new decision rule:", "decision rule:", "rule:"}) {
        if (to_lower_ascii(s.substr(0, label.size())) == label) {
            s = trim(s.substr(label.size()));
            break;
        }
    }
    auto strip_pair = [&](std::string_view open, std::string_view close) {
        if (s.size() >= open.size() + close.size() && s.compare(0, open.size(), open) == 0 &&
            s.compare(s.size() - close.size(), close.size(), close) == 0) {
            s = trim(s.substr(open.size(), s.size() - open.size() - close.size()));
            return true;
        }
        return false;
    };
    while (strip_pair("\"", "\"") || strip_pair("'", "'") || strip_pair("\xE2\x80\x9C", "\xE2\x80\x9D") ||
           strip_pair("**", "**") || strip_pair("<", ">")) {
    }
    return s;
}

std::string request_rule_text(const ProposalRequest& request, const std::vector<ValidationTask>& exemplars,
                              const OptimizerAgent& agent) {
    ChatRequest req;
    req.role = Role::Optimizer;
    req.system_prompt = agent.prompts.system_prompt(Role::Optimizer);
    req.user_content = build_optimizer_prompt(agent.prompts.optimizer_template(), request.trajectory, exemplars);
    if (request.attempt > 0) {
        req.user_content += "\n\nYour previous proposal repeated an existing rule. Propose a different one.";
    }
    req.temperature = agent.temperature;
    req.max_tokens = agent.max_tokens;
    req.sample_tag = "iter=" + std::to_string(request.iteration) + ";attempt=" + std::to_string(request.attempt);
    auto text = agent.provider.complete(req).text;
    if (trim(text).empty()) throw Error(Errc::EmptyProposal, "optimizer returned a blank rule");
    return text;
}

Proposal propose_rule(const ProposalRequest& request, const std::vector<ValidationTask>& exemplars,
                      const RuleLedger& ledger, std::uint64_t rule_id, const OptimizerAgent& agent) {
    auto text = clean_rule_text(request_rule_text(request, exemplars, agent));
    if (text.empty()) throw Error(Errc::EmptyProposal, "optimizer returned a blank rule");
    Proposal p;
    p.rule = DecisionRule{rule_id, text, RuleOrigin::Optimized};
    p.duplicate = ledger.contains_text(text);
    return p;
}

}  // namespace maro
