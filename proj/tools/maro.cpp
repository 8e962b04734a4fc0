// maro: staged command-line driver (analyze, tasks, optimize, eval, sweep).

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "maro/commands.hpp"
#include "maro/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalFlags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> cache_dir;
    bool resume = false;
    std::optional<std::string> provider;
    std::optional<std::size_t> k;
    std::optional<std::size_t> n_tasks;
    std::optional<std::size_t> n_iter;
    std::optional<std::size_t> n_att;
    std::optional<std::string> record;
    std::optional<std::string> prompts;
    std::optional<int> reflection_rounds;
    bool no_optimize = false;
    std::string log_level = "info";
};

maro::RunConfig build_config(const GlobalFlags& g) {
    maro::RunConfig c = g.config ? maro::load_run_config(*g.config) : maro::RunConfig{};
    auto& p = c.pipeline;
    if (g.seed) p.seed = p.tasks.seed = *g.seed;
    if (g.workers) p.workers = *g.workers;
    if (g.cache_dir) c.cache_dir = fs::path(*g.cache_dir);
    if (g.provider) c.provider = *g.provider;
    if (g.k) p.optimizer.k = *g.k;
    if (g.n_tasks) p.tasks.n_tasks = *g.n_tasks;
    if (g.n_iter) p.optimizer.n_iter_max = *g.n_iter;
    if (g.n_att) p.optimizer.n_att_max = *g.n_att;
    if (g.record) c.record_transcript = fs::path(*g.record);
    if (g.prompts) c.prompts_dir = fs::path(*g.prompts);
    if (g.reflection_rounds) p.analysis.reflection_rounds = *g.reflection_rounds;
    if (g.no_optimize) p.optimize = false;
    if (p.workers < 1) throw maro::Error(maro::Errc::BadConfig, "--workers must be >= 1");
    if (p.optimizer.k == 0) throw maro::Error(maro::Errc::BadConfig, "--k must be >= 1");
    return c;
}

/// Command-line path, else the config's named dataset, else a usage error.
fs::path pick(const std::string& flag, const maro::RunConfig& c, const char* name) {
    if (!flag.empty()) return flag;
    auto it = c.datasets.find(name);
    if (it != c.datasets.end()) return it->second;
    throw maro::Error(maro::Errc::BadConfig, std::string("no ") + name + " path given (flag or datasets." + name + ")");
}

void print_error(const std::string& code, const std::string& cls, const std::string& message, const json& extra = {}) {
    json j{{"error", code}, {"class", cls}, {"message", message}};
    if (!extra.is_null()) j["details"] = extra;
    std::cerr << j.dump() << "\n";
}

const char* class_name(maro::ErrorClass c) {
    switch (c) {
        case maro::ErrorClass::Usage: return "usage";
        case maro::ErrorClass::Data: return "data";
        case maro::ErrorClass::Provider: return "provider";
    }
    return "data";
}

std::vector<std::size_t> parse_grid(const std::string& s) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(',', start);
        auto tok = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!tok.empty()) {
            try {
                out.push_back(std::stoul(tok));
            } catch (const std::exception&) {
                throw maro::Error(maro::Errc::BadConfig, "bad grid value '" + tok + "'");
            }
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent misinformation detection with optimized decision rules"};
    app.require_subcommand(1);
    GlobalFlags g;
    app.add_option("--config", g.config, "Run configuration (JSON)");
    app.add_option("--seed", g.seed, "Seed for all sampling");
    app.add_option("--workers", g.workers, "Concurrent provider calls");
    app.add_option("--cache-dir", g.cache_dir, "Response cache directory");
    app.add_flag("--resume", g.resume, "Continue from existing checkpoints");
    app.add_option("--provider", g.provider, "live | mock:synthetic | mock:<script.json|transcript.jsonl>");
    app.add_option("--k", g.k, "Rules kept for inference");
    app.add_option("--n-tasks", g.n_tasks, "Validation tasks");
    app.add_option("--n-iter", g.n_iter, "Maximum optimizer iterations");
    app.add_option("--n-att", g.n_att, "Consecutive non-improving iterations before stopping");
    app.add_option("--record", g.record, "Append every provider call to this transcript");
    app.add_option("--prompts", g.prompts, "Prompt directory (defaults to the built-in prompts)");
    app.add_option("--reflection-rounds", g.reflection_rounds, "Question-reflection rounds (0 disables)");
    app.add_flag("--no-optimize", g.no_optimize, "Use the initial rule only (k = 1)");
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");

    std::string input, out, sources, reports, run_dir, tasks_file, target, rules, corpus, grid = "50,100,200,500";
    bool lodo = false;

    auto* analyze = app.add_subcommand("analyze", "Write a multi-dimensional report for every item");
    analyze->add_option("--input", input, "Dataset (JSONL)");
    analyze->add_option("--out", out, "Report archive")->required();

    auto* tasks = app.add_subcommand("tasks", "Build the cross-domain validation task set");
    tasks->add_option("--sources", sources, "Source-domain dataset");
    tasks->add_option("--reports", reports, "Report archive");
    tasks->add_option("--out", out, "Task archive")->required();

    auto* optimize = app.add_subcommand("optimize", "Optimize decision rules on the source domains");
    optimize->add_option("--sources", sources, "Source-domain dataset");
    optimize->add_option("--reports", reports, "Report archive");
    optimize->add_option("--run-dir", run_dir, "Run directory")->required();
    optimize->add_option("--tasks", tasks_file, "Reuse a task archive instead of sampling");

    auto* eval = app.add_subcommand("eval", "Evaluate rules on a target domain");
    eval->add_option("--target", target, "Target-domain dataset");
    eval->add_option("--sources", sources, "Source dataset supplying demonstrations");
    eval->add_option("--reports", reports, "Report archive");
    eval->add_option("--rules", rules, "rules.json from an optimize run");
    eval->add_option("--out", out, "Output directory")->required();
    eval->add_flag("--leave-one-domain-out", lodo, "Hold out each domain of --corpus in turn");
    eval->add_option("--corpus", corpus, "Multi-domain dataset for --leave-one-domain-out");

    auto* sweep = app.add_subcommand("sweep", "Grid-search the number of validation tasks");
    sweep->add_option("--sources", sources, "Source-domain dataset");
    sweep->add_option("--reports", reports, "Report archive");
    sweep->add_option("--grid", grid, "Comma-separated task counts");
    sweep->add_option("--out", out, "Results file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    auto logger = spdlog::stderr_color_mt("maro");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        auto config = build_config(g);
        auto session = maro::Session::open(std::move(config), g.resume);
        const auto& c = session.config;
        int rc = 0;

        if (*analyze) {
            auto summary = maro::cmd_analyze(session, pick(input, c, "corpus"), out);
            std::cout << "analyzed " << summary.produced << ", reused " << summary.reused << ", failed "
                      << summary.failures.size() << " of " << summary.requested << " items\n";
            if (!summary.failures.empty()) {
                json failed = json::array();
                for (const auto& [id, msg] : summary.failures) failed.push_back({{"item_id", id}, {"message", msg}});
                auto code = *summary.first_error;
                print_error(std::string(maro::errc_name(code)), class_name(maro::errc_class(code)),
                            std::to_string(summary.failures.size()) + " item(s) produced no report", failed);
                rc = maro::exit_code_for(maro::errc_class(code));
            }
        } else if (*tasks) {
            auto t = maro::cmd_tasks(session, pick(sources, c, "sources"), pick(reports, c, "reports"), out);
            std::cout << "wrote " << t.size() << " tasks to " << out << "\n";
        } else if (*optimize) {
            std::optional<fs::path> tf;
            if (!tasks_file.empty()) tf = tasks_file;
            auto outcome = maro::cmd_optimize(session, pick(sources, c, "sources"), pick(reports, c, "reports"),
                                              run_dir, tf, std::cout);
            std::cout << "kept " << outcome.top.size() << " rule(s) after " << outcome.state.n_iter
                      << " iteration(s); rules written to " << (fs::path(run_dir) / "rules.json").string() << "\n";
        } else if (*eval) {
            if (lodo) {
                maro::cmd_eval_lodo(session, pick(corpus, c, "corpus"), pick(reports, c, "reports"), out, std::cout);
            } else {
                maro::cmd_eval(session, pick(target, c, "target"), pick(sources, c, "sources"),
                               pick(reports, c, "reports"), pick(rules, c, "rules"), out, std::cout);
            }
        } else if (*sweep) {
            maro::cmd_sweep(session, pick(sources, c, "sources"), pick(reports, c, "reports"), parse_grid(grid), out,
                            std::cout);
        }
        spdlog::info("provider calls: {} ({} cached), tokens in/out: {}/{}", session.meter->calls(),
                     session.meter->cache_hits(), session.meter->prompt_tokens(), session.meter->completion_tokens());
        return rc;
    } catch (const maro::Error& e) {
        auto cls = maro::errc_class(e.code());
        print_error(std::string(maro::errc_name(e.code())), class_name(cls), e.what());
        return maro::exit_code_for(cls);
    } catch (const std::exception& e) {
        print_error("Internal", "data", e.what());
        return 2;
    }
}
