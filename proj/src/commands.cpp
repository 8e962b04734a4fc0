#include "maro/commands.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

#include "maro/error.hpp"
#include "maro/util.hpp"

namespace maro {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorClass c) noexcept {
    switch (c) {
        case ErrorClass::Usage: return 1;
        case ErrorClass::Data: return 2;
        case ErrorClass::Provider: return 3;
    }
    return 2;
}

Session Session::open(RunConfig config, bool resume, std::shared_ptr<Provider> backend) {
    Session s;
    s.prompts = config.prompts_dir ? PromptRegistry::load(*config.prompts_dir) : PromptRegistry::defaults();
    if (backend) {
        std::shared_ptr<Provider> p = backend;
        if (config.record_transcript) p = std::make_shared<RecordingProvider>(p, *config.record_transcript);
        if (config.cache_dir) {
            fs::create_directories(*config.cache_dir);
            auto cache = std::make_shared<ResponseCache>(*config.cache_dir / "responses.jsonl");
            p = std::make_shared<CachingProvider>(p, cache, config.optimizer_cache_nonce);
        }
        s.meter = std::make_shared<UsageMeter>(p);
        s.provider = s.meter;
    } else {
        auto stack = make_provider(config);
        s.provider = stack.provider;
        s.meter = stack.meter;
    }
    s.retriever = make_retriever(config);
    s.provenance = make_provenance(config.pipeline, s.prompts);
    s.resume = resume;
    s.config = std::move(config);
    return s;
}

namespace {

std::string archive_text(const Dataset& ds, const std::map<std::string, MultiDimReport>& reports,
                         const Provenance& provenance) {
    json header = provenance.to_json();
    header["kind"] = "provenance";
    std::string out = header.dump() + "\n";
    std::set<std::string> written;
    for (const auto& item : ds.items()) {
        auto it = reports.find(item.id);
        if (it == reports.end()) continue;
        out += report_to_json(it->second).dump() + "\n";
        written.insert(item.id);
    }
    // reports for items of other datasets sharing this archive are kept
    for (const auto& [id, report] : reports) {
        if (!written.count(id)) out += report_to_json(report).dump() + "\n";
    }
    return out;
}

std::map<std::string, MultiDimReport> load_reports(const fs::path& path) {
    if (!fs::exists(path)) throw Error(Errc::Io, "report archive not found: " + path.string());
    return load_report_archive(path);
}

}  // namespace

AnalyzeSummary cmd_analyze(Session& session, const fs::path& input, const fs::path& out) {
    auto ds = load_dataset(input);
    auto reports = load_report_archive(out);
    AnalyzeSummary summary;
    summary.requested = ds.size();

    std::vector<NewsItem> todo;
    for (const auto& item : ds.items()) {
        if (reports.count(item.id)) ++summary.reused;
        else todo.push_back(item);
    }
    if (summary.reused > 0) spdlog::info("{} of {} items already in {}", summary.reused, ds.size(), out.string());

    const auto ctx = agent_context(session.config.pipeline, session.services());
    const int workers = session.config.pipeline.workers;
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, workers)) * 8;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());

    for (std::size_t start = 0; start < todo.size(); start += chunk) {
        std::vector<NewsItem> batch(todo.begin() + static_cast<long>(start),
                                    todo.begin() + static_cast<long>(std::min(todo.size(), start + chunk)));
        auto outcomes = analyze_batch(batch, session.retriever.get(), ctx, workers);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            auto& o = outcomes[i];
            if (o.report) {
                for (const auto& w : o.report->warnings) spdlog::warn("[{}] {}", batch[i].id, w);
                reports[batch[i].id] = std::move(*o.report);
                ++summary.produced;
            } else {
                spdlog::error("[{}] {}", batch[i].id, o.error);
                summary.failures.emplace_back(batch[i].id, o.error);
                if (!summary.first_error) summary.first_error = o.code.value_or(Errc::Transport);
            }
        }
        write_file_atomic(out, archive_text(ds, reports, session.provenance));
    }
    if (todo.empty()) write_file_atomic(out, archive_text(ds, reports, session.provenance));
    return summary;
}

std::vector<ValidationTask> cmd_tasks(Session& session, const fs::path& sources, const fs::path& reports_path,
                                      const fs::path& out) {
    auto ds = load_dataset(sources);
    auto reports = load_reports(reports_path);
    std::vector<std::string> warnings;
    auto tasks = cap_and_build_tasks(split_by_domain(ds), reports, session.config.pipeline, &warnings);
    for (const auto& w : warnings) spdlog::warn("{}", w);
    TaskSetConfig tc = session.config.pipeline.tasks;
    tc.seed = session.config.pipeline.seed;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file_atomic(out, serialize_tasks(tasks, tc, session.provenance.to_json()));
    return tasks;
}

OptimizationOutcome cmd_optimize(Session& session, const fs::path& sources, const fs::path& reports_path,
                                 const fs::path& run_dir, const std::optional<fs::path>& tasks_path,
                                 std::ostream& log) {
    auto ds = load_dataset(sources);
    auto reports = load_reports(reports_path);
    std::vector<ValidationTask> tasks;
    if (tasks_path) {
        tasks = load_tasks(read_file(*tasks_path), ds, reports);
    } else {
        std::vector<std::string> warnings;
        tasks = cap_and_build_tasks(split_by_domain(ds), reports, session.config.pipeline, &warnings);
        for (const auto& w : warnings) spdlog::warn("{}", w);
    }
    fs::create_directories(run_dir);
    if (!session.resume && fs::exists(run_dir / "checkpoint.json")) {
        spdlog::info("discarding previous checkpoint in {} (pass --resume to continue it)", run_dir.string());
        fs::remove(run_dir / "checkpoint.json");
    }
    TaskSetConfig tc = session.config.pipeline.tasks;
    tc.seed = session.config.pipeline.seed;
    write_file_atomic(run_dir / "tasks.jsonl", serialize_tasks(tasks, tc, session.provenance.to_json()));

    auto outcome = run_optimization(tasks, session.config.pipeline, session.services(), run_dir, session.provenance);
    log << format_ledger_table(outcome.state.ledger);
    return outcome;
}

TargetEvaluation cmd_eval(Session& session, const fs::path& target, const fs::path& sources,
                          const fs::path& reports_path, const fs::path& rules_path, const fs::path& out_dir,
                          std::ostream& log) {
    if (!fs::exists(rules_path)) throw Error(Errc::Io, "rules artifact not found: " + rules_path.string());
    auto rules = load_rules_artifact(rules_path);
    auto target_ds = load_dataset(target);
    auto source_ds = load_dataset(sources);
    auto reports = load_reports(reports_path);
    const auto& cfg = session.config.pipeline;
    auto pool = capped_pool(split_by_domain(source_ds), cfg);
    auto eval = evaluate_target(target_ds, reports, pool, rules, judge_context(cfg, session.services()),
                                cfg.tasks.demos_per_task, cfg.seed, cfg.workers);

    fs::create_directories(out_dir);
    std::string predictions;
    for (const auto& p : eval.log) predictions += to_json(p).dump() + "\n";
    write_file_atomic(out_dir / "predictions.jsonl", predictions);
    json metrics{{"provenance", session.provenance.to_json()},
                 {"target", target.filename().string()},
                 {"rules_artifact", rules_path.string()},
                 {"metrics", to_json(eval.metrics)}};
    write_file_atomic(out_dir / "metrics.json", metrics.dump(2) + "\n");

    CrossDomainResult single;
    single.rows.push_back({target_ds.domains().size() == 1 ? *target_ds.domains().begin() : target_ds.name(),
                           eval.metrics, {}});
    compute_averages(single);
    log << format_results_table(single);
    return eval;
}

CrossDomainResult cmd_eval_lodo(Session& session, const fs::path& corpus, const fs::path& reports_path,
                                const fs::path& run_dir, std::ostream& log) {
    auto ds = load_dataset(corpus);
    auto reports = load_reports(reports_path);
    fs::create_directories(run_dir);
    if (!session.resume) {
        // stale per-domain state would otherwise be picked up
        for (const auto& entry : fs::directory_iterator(run_dir)) {
            if (!entry.is_directory()) continue;
            fs::remove(entry.path() / "checkpoint.json");
            fs::remove(entry.path() / "metrics.json");
        }
    }
    auto result = leave_one_domain_out(ds, reports, session.config.pipeline, session.services(), run_dir,
                                       session.provenance);
    log << format_results_table(result);
    return result;
}

std::vector<SweepRow> cmd_sweep(Session& session, const fs::path& sources, const fs::path& reports_path,
                                const std::vector<std::size_t>& grid, const fs::path& out, std::ostream& log) {
    auto ds = load_dataset(sources);
    auto reports = load_reports(reports_path);
    auto rows = sweep_n_tasks(ds, reports, grid, session.config.pipeline, session.services());
    json table = json::array();
    std::size_t best = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        table.push_back({{"n_tasks", r.n_tasks}, {"folds", results_to_json(r.folds, session.provenance)["rows"]},
                         {"avg_accuracy", r.folds.avg_accuracy}, {"avg_f1_fake", r.folds.avg_f1_fake},
                         {"avg_f1_macro", r.folds.avg_f1_macro}});
        if (r.folds.avg_accuracy > rows[best].folds.avg_accuracy) best = i;
        char line[128];
        std::snprintf(line, sizeof line, "n_tasks %6zu  avg acc %6.2f  avg f1 %6.2f\n", r.n_tasks,
                      r.folds.avg_accuracy * 100.0, r.folds.avg_f1_fake * 100.0);
        log << line;
    }
    log << "best n_tasks: " << rows[best].n_tasks << "\n";
    json doc{{"provenance", session.provenance.to_json()}, {"grid", table}, {"best_n_tasks", rows[best].n_tasks}};
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file_atomic(out, doc.dump(2) + "\n");
    return rows;
}

}  // namespace maro
