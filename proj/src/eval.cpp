#include "maro/eval.hpp"

#include <cstdio>
#include <exception>

#include <spdlog/spdlog.h>

#include "maro/error.hpp"
#include "maro/util.hpp"

namespace maro {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace

EvalMetrics compute_metrics(const std::vector<Verdict>& preds, const std::vector<Verdict>& golds) {
    if (preds.size() != golds.size()) {
        throw Error(Errc::LengthMismatch, "predictions (" + std::to_string(preds.size()) + ") and golds (" +
                                              std::to_string(golds.size()) + ") differ in length");
    }
    if (preds.empty()) throw Error(Errc::Empty, "no predictions to score");
    EvalMetrics m;
    auto& c = m.confusion;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        bool p = preds[i] == Verdict::Fake;
        bool g = golds[i] == Verdict::Fake;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    m.n = preds.size();
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(m.n);
    m.f1_fake = f1(c.tp, c.fp, c.fn);
    m.f1_real = f1(c.tn, c.fn, c.fp);
    m.f1_macro = (m.f1_fake + m.f1_real) / 2.0;
    return m;
}

json to_json(const EvalMetrics& m) {
    return json{{"accuracy", m.accuracy},
                {"f1_fake", m.f1_fake},
                {"f1_real", m.f1_real},
                {"f1_macro", m.f1_macro},
                {"n", m.n},
                {"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn},
                               {"tn", m.confusion.tn}}}};
}

json to_json(const ItemPrediction& p) {
    json judgements = json::array();
    for (const auto& j : p.judgements) {
        judgements.push_back({{"raw", j.raw},
                              {"parsed", j.verdict ? json(to_int(*j.verdict)) : json(nullptr)},
                              {"status", parse_status_name(j.status)}});
    }
    return json{{"item_id", p.item_id},
                {"gold", to_int(p.gold)},
                {"predicted", to_int(p.predicted)},
                {"resolved", p.resolved},
                {"judgements", judgements}};
}

TargetEvaluation evaluate_target(const Dataset& target, const std::map<std::string, MultiDimReport>& reports,
                                 const Dataset& demo_pool, const std::vector<DecisionRule>& rules,
                                 const JudgeContext& ctx, std::size_t demos_per_item, std::uint64_t seed,
                                 int workers) {
    if (target.empty()) throw Error(Errc::Empty, "target dataset is empty");
    if (rules.empty()) throw Error(Errc::BadConfig, "evaluation needs at least one rule");
    const auto target_domains = target.domains();
    std::vector<const NewsItem*> pool;
    for (const auto& item : demo_pool.items()) {
        if (target_domains.count(item.domain)) {
            throw Error(Errc::CrossDomainLeak, "demonstration " + item.id + " comes from target domain " + item.domain);
        }
        pool.push_back(&item);
    }
    if (demos_per_item > 0 && pool.size() < demos_per_item) {
        throw Error(Errc::NotEnoughDemos, "demonstration pool has " + std::to_string(pool.size()) + " items, need " +
                                              std::to_string(demos_per_item));
    }
    for (const auto& item : target.items()) {
        if (!reports.count(item.id)) throw Error(Errc::MissingReport, "no analysis report for " + item.id);
    }

    const auto& items = target.items();
    TargetEvaluation out;
    out.log.resize(items.size());
    std::vector<std::exception_ptr> errors(items.size());
    const auto n = static_cast<long>(items.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (long i = 0; i < n; ++i) {
        try {
            const auto& item = items[i];
            // per-item stream: the draw does not depend on scheduling order
            Rng rng(substream_seed(seed, "eval-demos/" + item.id));
            auto demos = demos_per_item > 0 ? sample_demonstrations(pool, demos_per_item, rng)
                                            : std::vector<Demonstration>{};
            auto& p = out.log[i];
            p.item_id = item.id;
            p.gold = item.label;
            Inference inference;
            try {
                inference = infer(item, reports.at(item.id), demos, rules, ctx, 1);
                p.predicted = inference.verdict;
            } catch (const Error& e) {
                if (e.code() != Errc::NoUsableVerdicts) throw;
                // every rule failed to parse: fall back to the tie-break class
                p.resolved = false;
                p.predicted = ctx.config.tie_break == TieBreak::Fake ? Verdict::Fake : Verdict::Real;
                inference.judgements.clear();
            }
            p.judgements = std::move(inference.judgements);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<Verdict> preds, golds;
    for (const auto& p : out.log) {
        preds.push_back(p.predicted);
        golds.push_back(p.gold);
    }
    out.metrics = compute_metrics(preds, golds);
    return out;
}

void compute_averages(CrossDomainResult& result) {
    result.avg_accuracy = result.avg_f1_fake = result.avg_f1_macro = 0.0;
    if (result.rows.empty()) return;
    for (const auto& r : result.rows) {
        result.avg_accuracy += r.metrics.accuracy;
        result.avg_f1_fake += r.metrics.f1_fake;
        result.avg_f1_macro += r.metrics.f1_macro;
    }
    const double n = static_cast<double>(result.rows.size());
    result.avg_accuracy /= n;
    result.avg_f1_fake /= n;
    result.avg_f1_macro /= n;
}

namespace {

json ledger_entries_json(const std::vector<LedgerEntry>& entries) {
    json out = json::array();
    for (const auto& e : entries) {
        out.push_back({{"id", e.rule.id}, {"text", e.rule.text}, {"accuracy", e.accuracy}, {"iteration", e.iteration}});
    }
    return out;
}

std::vector<LedgerEntry> ledger_entries_from_json(const json& j) {
    std::vector<LedgerEntry> out;
    for (const auto& e : j) {
        LedgerEntry entry;
        entry.rule.id = e.at("id").get<std::uint64_t>();
        entry.rule.text = e.at("text").get<std::string>();
        entry.rule.origin = entry.rule.id == 0 ? RuleOrigin::Manual : RuleOrigin::Optimized;
        entry.accuracy = e.at("accuracy").get<double>();
        entry.iteration = e.at("iteration").get<std::size_t>();
        out.push_back(std::move(entry));
    }
    return out;
}

EvalMetrics metrics_from_json(const json& j) {
    EvalMetrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.f1_fake = j.at("f1_fake").get<double>();
    m.f1_real = j.at("f1_real").get<double>();
    m.f1_macro = j.at("f1_macro").get<double>();
    m.n = j.at("n").get<std::size_t>();
    const auto& c = j.at("confusion");
    m.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>(),
                   c.at("tn").get<std::size_t>()};
    return m;
}

/// One fold: optimize on `sources`, evaluate on `target`.
DomainResult run_fold(const std::string& domain, const Dataset& target, const std::map<std::string, Dataset>& sources,
                      const std::map<std::string, MultiDimReport>& reports, const PipelineConfig& config,
                      const Services& services, const std::optional<fs::path>& dir, const Provenance& provenance) {
    if (dir) {
        auto done = *dir / "metrics.json";
        if (fs::exists(done)) {
            try {
                auto j = json::parse(read_file(done));
                if (j.at("provenance") == provenance.to_json()) {
                    spdlog::info("domain {} already evaluated; reusing {}", domain, done.string());
                    return DomainResult{domain, metrics_from_json(j.at("metrics")),
                                        ledger_entries_from_json(j.at("rules"))};
                }
            } catch (const json::exception&) {
                // stale or torn file: recompute
            }
        }
    }

    TaskSetConfig tc = config.tasks;
    tc.seed = config.seed;
    std::vector<std::string> warnings;
    auto tasks = cap_and_build_tasks(sources, reports, config, &warnings);
    for (const auto& w : warnings) spdlog::warn("[{}] {}", domain, w);
    if (dir) {
        fs::create_directories(*dir);
        write_file_atomic(*dir / "tasks.jsonl", serialize_tasks(tasks, tc, provenance.to_json()));
    }

    auto outcome = run_optimization(tasks, config, services, dir, provenance);
    std::vector<DecisionRule> rules;
    for (const auto& e : outcome.top) rules.push_back(e.rule);

    auto pool = capped_pool(sources, config);
    auto eval = evaluate_target(target, reports, pool, rules, judge_context(config, services),
                                config.tasks.demos_per_task, config.seed, config.workers);

    if (dir) {
        std::string log;
        for (const auto& p : eval.log) log += to_json(p).dump() + "\n";
        write_file_atomic(*dir / "predictions.jsonl", log);
        json done{{"provenance", provenance.to_json()},
                  {"domain", domain},
                  {"metrics", to_json(eval.metrics)},
                  {"rules", ledger_entries_json(outcome.top)},
                  {"rules_artifact", "rules.json"}};
        write_file_atomic(*dir / "metrics.json", done.dump(2) + "\n");
    }
    return DomainResult{domain, eval.metrics, outcome.top};
}

CrossDomainResult hold_out_each(const std::map<std::string, Dataset>& parts,
                                const std::map<std::string, MultiDimReport>& reports, const PipelineConfig& config,
                                const Services& services, const std::optional<fs::path>& run_dir,
                                const Provenance& provenance) {
    if (parts.size() < 2) {
        throw Error(Errc::SingleDomain, "leave-one-domain-out needs at least 2 domains, got " +
                                            std::to_string(parts.size()));
    }
    CrossDomainResult result;
    for (const auto& [domain, target] : parts) {
        std::map<std::string, Dataset> sources;
        for (const auto& [name, part] : parts) {
            if (name != domain) sources.emplace(name, part);
        }
        std::optional<fs::path> dir;
        if (run_dir) dir = *run_dir / fixture_stem(domain);
        spdlog::info("target domain {}: {} items, {} source domains", domain, target.size(), sources.size());
        result.rows.push_back(run_fold(domain, target, sources, reports, config, services, dir, provenance));
    }
    compute_averages(result);
    return result;
}

}  // namespace

CrossDomainResult leave_one_domain_out(const Dataset& corpus, const std::map<std::string, MultiDimReport>& reports,
                                       const PipelineConfig& config, const Services& services,
                                       const std::optional<fs::path>& run_dir, const Provenance& provenance) {
    auto parts = split_by_domain(corpus);
    auto result = hold_out_each(parts, reports, config, services, run_dir, provenance);
    if (run_dir) write_file_atomic(*run_dir / "results.json", results_to_json(result, provenance).dump(2) + "\n");
    return result;
}

json results_to_json(const CrossDomainResult& result, const Provenance& provenance) {
    json rows = json::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"domain", r.domain},
                        {"metrics", to_json(r.metrics)},
                        {"rules_artifact", fixture_stem(r.domain) + "/rules.json"}});
    }
    return json{{"provenance", provenance.to_json()},
                {"rows", rows},
                {"average", {{"accuracy", result.avg_accuracy},
                             {"f1_fake", result.avg_f1_fake},
                             {"f1_macro", result.avg_f1_macro}}}};
}

std::string format_results_table(const CrossDomainResult& result) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %6s %8s %8s %8s\n", "domain", "n", "acc", "f1_fake", "f1_macro");
    out += line;
    for (const auto& r : result.rows) {
        std::snprintf(line, sizeof line, "%-20s %6zu %8.2f %8.2f %8.2f\n", r.domain.c_str(), r.metrics.n,
                      r.metrics.accuracy * 100.0, r.metrics.f1_fake * 100.0, r.metrics.f1_macro * 100.0);
        out += line;
    }
    std::snprintf(line, sizeof line, "%-20s %6s %8.2f %8.2f %8.2f\n", "avg", "", result.avg_accuracy * 100.0,
                  result.avg_f1_fake * 100.0, result.avg_f1_macro * 100.0);
    out += line;
    return out;
}

std::vector<SweepRow> sweep_n_tasks(const Dataset& sources, const std::map<std::string, MultiDimReport>& reports,
                                    const std::vector<std::size_t>& grid, const PipelineConfig& config,
                                    const Services& services) {
    if (grid.empty()) throw Error(Errc::BadConfig, "n_tasks grid is empty");
    auto parts = split_by_domain(sources);
    std::vector<SweepRow> rows;
    for (auto n : grid) {
        if (n == 0) throw Error(Errc::BadConfig, "n_tasks must be positive");
        PipelineConfig c = config;
        c.tasks.n_tasks = n;
        spdlog::info("sweep: n_tasks = {}", n);
        rows.push_back(SweepRow{n, hold_out_each(parts, reports, c, services, std::nullopt, {})});
    }
    return rows;
}

}  // namespace maro
