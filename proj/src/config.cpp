#include "maro/config.hpp"

#include <initializer_list>

#include "maro/error.hpp"
#include "maro/synthetic.hpp"
#include "maro/util.hpp"

namespace maro {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw Error(Errc::BadConfig, std::string(where) + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw Error(Errc::BadConfig, "unknown key '" + key + "' in " + std::string(where));
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::BadConfig, std::string("bad value for '") + key + "': " + e.what());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

/// Rewrites "<kind>:<path>" so the path part resolves against `base`.
std::string resolve_spec(const fs::path& base, const std::string& spec, std::string_view kind) {
    std::string prefix = std::string(kind) + ":";
    if (spec.rfind(prefix, 0) != 0) return spec;
    auto rest = spec.substr(prefix.size());
    if (kind == "mock" && rest == "synthetic") return spec;
    return prefix + resolve(base, rest).string();
}

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base) {
    check_keys(j, "config",
               {"seed", "workers", "datasets", "provider", "endpoint", "prompts_dir", "cache_dir", "record_transcript",
                "optimizer_cache_nonce", "search", "search_key_env", "encyclopedia", "temperatures", "analysis",
                "evidence", "tasks", "optimizer", "optimize", "judge"});
    RunConfig c;
    auto& p = c.pipeline;
    read(j, "seed", p.seed);
    read(j, "workers", p.workers);
    read(j, "optimize", p.optimize);
    read(j, "provider", c.provider);
    read(j, "search", c.search);
    read(j, "search_key_env", c.search_key_env);
    read(j, "encyclopedia", c.encyclopedia);
    c.provider = resolve_spec(base, c.provider, "mock");
    c.search = resolve_spec(base, c.search, "fixture");
    c.encyclopedia = resolve_spec(base, c.encyclopedia, "fixture");

    if (j.contains("datasets")) {
        check_keys(j["datasets"], "datasets", {"corpus", "sources", "target", "reports", "tasks", "rules"});
        for (const auto& [name, value] : j["datasets"].items()) {
            if (!value.is_string()) throw Error(Errc::BadConfig, "datasets." + name + " must be a path");
            c.datasets[name] = resolve(base, value.get<std::string>());
        }
    }
    for (auto [key, slot] : {std::pair{"prompts_dir", &c.prompts_dir}, std::pair{"cache_dir", &c.cache_dir},
                             std::pair{"record_transcript", &c.record_transcript}}) {
        if (j.contains(key)) {
            std::string s;
            read(j, key, s);
            *slot = resolve(base, s);
        }
    }
    if (j.contains("optimizer_cache_nonce")) {
        std::string nonce;
        read(j, "optimizer_cache_nonce", nonce);
        c.optimizer_cache_nonce = nonce;
    }

    if (j.contains("endpoint")) {
        const auto& e = j["endpoint"];
        check_keys(e, "endpoint", {"base_url", "model", "api_key_env", "timeout_s", "retry"});
        read(e, "base_url", c.endpoint.base_url);
        read(e, "model", c.endpoint.model);
        read(e, "api_key_env", c.endpoint.api_key_env);
        long long timeout = c.endpoint.timeout.count();
        read(e, "timeout_s", timeout);
        c.endpoint.timeout = std::chrono::seconds(timeout);
        if (e.contains("retry")) {
            const auto& r = e["retry"];
            check_keys(r, "endpoint.retry", {"max_attempts", "base_delay_ms", "multiplier", "jitter"});
            read(r, "max_attempts", c.endpoint.retry.max_attempts);
            long long delay = c.endpoint.retry.base_delay.count();
            read(r, "base_delay_ms", delay);
            c.endpoint.retry.base_delay = std::chrono::milliseconds(delay);
            read(r, "multiplier", c.endpoint.retry.multiplier);
            read(r, "jitter", c.endpoint.retry.jitter);
        }
    }
    if (j.contains("temperatures")) {
        const auto& t = j["temperatures"];
        check_keys(t, "temperatures", {"analysis", "optimizer", "judge"});
        read(t, "analysis", p.analysis.temperatures.analysis);
        read(t, "optimizer", p.analysis.temperatures.optimizer);
        read(t, "judge", p.analysis.temperatures.judge);
    }
    if (j.contains("analysis")) {
        const auto& a = j["analysis"];
        check_keys(a, "analysis",
                   {"max_comments", "max_fact_questions", "max_reflection_questions", "reflection_rounds", "max_tokens"});
        read(a, "max_comments", p.analysis.max_comments);
        read(a, "max_fact_questions", p.analysis.max_fact_questions);
        read(a, "max_reflection_questions", p.analysis.max_reflection_questions);
        read(a, "reflection_rounds", p.analysis.reflection_rounds);
        read(a, "max_tokens", p.analysis.max_tokens);
    }
    if (j.contains("evidence")) {
        const auto& e = j["evidence"];
        check_keys(e, "evidence",
                   {"results_per_query", "encyclopedia_articles", "char_budget", "max_entities", "max_in_flight"});
        read(e, "results_per_query", p.evidence.results_per_query);
        read(e, "encyclopedia_articles", p.evidence.encyclopedia_articles);
        read(e, "char_budget", p.evidence.char_budget);
        read(e, "max_entities", p.evidence.max_entities);
        read(e, "max_in_flight", p.evidence.max_in_flight);
    }
    if (j.contains("tasks")) {
        const auto& t = j["tasks"];
        check_keys(t, "tasks", {"n_tasks", "demos_per_task", "per_domain_cap"});
        read(t, "n_tasks", p.tasks.n_tasks);
        read(t, "demos_per_task", p.tasks.demos_per_task);
        read(t, "per_domain_cap", p.tasks.per_domain_cap);
    }
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        check_keys(o, "optimizer",
                   {"n_iter_max", "n_att_max", "k", "trajectory_size", "exemplar_count", "duplicate_retries"});
        read(o, "n_iter_max", p.optimizer.n_iter_max);
        read(o, "n_att_max", p.optimizer.n_att_max);
        read(o, "k", p.optimizer.k);
        read(o, "trajectory_size", p.optimizer.trajectory_size);
        read(o, "exemplar_count", p.optimizer.exemplar_count);
        read(o, "duplicate_retries", p.optimizer.duplicate_retries);
    }
    if (j.contains("judge")) {
        const auto& g = j["judge"];
        check_keys(g, "judge", {"max_tokens", "tie_break"});
        read(g, "max_tokens", p.judge.max_tokens);
        std::string tie = "fake";
        read(g, "tie_break", tie);
        if (tie != "fake" && tie != "real") throw Error(Errc::BadConfig, "judge.tie_break must be fake or real");
        p.judge.tie_break = tie == "fake" ? TieBreak::Fake : TieBreak::Real;
    }
    p.tasks.seed = p.seed;
    if (p.workers < 1) throw Error(Errc::BadConfig, "workers must be >= 1");
    if (p.optimizer.k == 0) throw Error(Errc::BadConfig, "optimizer.k must be >= 1");
    if (p.tasks.per_domain_cap == 0) throw Error(Errc::BadConfig, "tasks.per_domain_cap must be >= 1");
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::BadConfig, path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw Error(Errc::BadConfig, e.what());
    }
    auto c = parse_run_config(j, path.parent_path());
    for (const auto& [name, p] : c.datasets) {
        if (!fs::exists(p)) throw Error(Errc::BadConfig, "datasets." + name + " does not exist: " + p.string());
    }
    if (c.prompts_dir && !fs::is_directory(*c.prompts_dir)) {
        throw Error(Errc::BadConfig, "prompts_dir does not exist: " + c.prompts_dir->string());
    }
    return c;
}

ProviderStack make_provider(const RunConfig& config) {
    std::shared_ptr<Provider> base;
    const auto& spec = config.provider;
    if (spec == "live") {
        if (config.endpoint.base_url.empty() || config.endpoint.model.empty()) {
            throw Error(Errc::BadConfig, "live provider needs endpoint.base_url and endpoint.model");
        }
        base = std::make_shared<HttpChatProvider>(config.endpoint);
    } else if (spec == "mock:synthetic") {
        base = make_synthetic_mock();
    } else if (spec.rfind("mock:", 0) == 0) {
        fs::path script = spec.substr(5);
        if (!fs::exists(script)) throw Error(Errc::BadConfig, "mock script not found: " + script.string());
        auto entries = script.extension() == ".jsonl" ? load_transcript_script(script) : load_script(script);
        base = std::make_shared<ScriptedMock>(std::move(entries), "mock:" + script.filename().string());
    } else {
        throw Error(Errc::BadConfig, "unknown provider '" + spec + "' (expected live or mock:<script>)");
    }
    if (config.record_transcript) {
        if (config.record_transcript->has_parent_path()) fs::create_directories(config.record_transcript->parent_path());
        base = std::make_shared<RecordingProvider>(base, *config.record_transcript);
    }
    if (config.cache_dir) {
        fs::create_directories(*config.cache_dir);
        auto cache = std::make_shared<ResponseCache>(*config.cache_dir / "responses.jsonl");
        base = std::make_shared<CachingProvider>(base, cache, config.optimizer_cache_nonce);
    }
    auto meter = std::make_shared<UsageMeter>(base);
    return ProviderStack{meter, meter};
}

std::unique_ptr<Retriever> make_retriever(const RunConfig& config) {
    auto r = std::make_unique<Retriever>();
    r->config = config.pipeline.evidence;
    const auto& s = config.search;
    if (s.rfind("fixture:", 0) == 0) {
        fs::path dir = s.substr(8);
        if (!fs::is_directory(dir)) throw Error(Errc::BadConfig, "search fixture directory not found: " + dir.string());
        r->search = std::make_shared<FixtureSearch>(dir);
    } else if (s.rfind("http:", 0) == 0) {
        r->search = std::make_shared<HttpSearch>(s.substr(5), config.search_key_env);
    } else if (s != "none") {
        throw Error(Errc::BadConfig, "unknown search backend '" + s + "'");
    }
    const auto& e = config.encyclopedia;
    if (e.rfind("fixture:", 0) == 0) {
        fs::path dir = e.substr(8);
        if (!fs::is_directory(dir)) {
            throw Error(Errc::BadConfig, "encyclopedia fixture directory not found: " + dir.string());
        }
        r->encyclopedia = std::make_shared<FixtureEncyclopedia>(dir);
    } else if (e.rfind("http:", 0) == 0) {
        r->encyclopedia = std::make_shared<HttpEncyclopedia>(e.substr(5));
    } else if (e != "none") {
        throw Error(Errc::BadConfig, "unknown encyclopedia backend '" + e + "'");
    }
    if (!r->search && !r->encyclopedia) return nullptr;
    return r;
}

}  // namespace maro
