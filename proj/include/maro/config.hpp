#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "maro/evidence.hpp"
#include "maro/pipeline.hpp"
#include "maro/provider.hpp"

namespace maro {

/// Run configuration file. Every field is optional; see README for the
/// layout. Relative paths resolve against the config file's directory.
struct RunConfig {
    PipelineConfig pipeline;

    /// Named dataset paths ("corpus", "sources", "target", ...) that CLI
    /// commands fall back to when no path is given on the command line.
    std::map<std::string, std::filesystem::path> datasets;

    /// "live", "mock:synthetic", "mock:<script.json>" or "mock:<transcript.jsonl>".
    std::string provider = "mock:synthetic";
    EndpointConfig endpoint;

    std::optional<std::filesystem::path> prompts_dir;
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::filesystem::path> record_transcript;
    /// Lets optimizer replies be cached; without it they are always fresh.
    std::optional<std::string> optimizer_cache_nonce;

    /// "none", "fixture:<dir>" or "http:<endpoint>"
    std::string search = "none";
    std::string search_key_env = "MARO_SEARCH_KEY";
    /// "none", "fixture:<dir>" or "http:<base url>"
    std::string encyclopedia = "none";
};

/// Parses the JSON config. BadConfig on unknown keys or wrong types.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Provider stack: backend, then optional recording, then optional cache.
struct ProviderStack {
    std::shared_ptr<Provider> provider;
    std::shared_ptr<UsageMeter> meter;  ///< outermost layer; same object as provider
};

ProviderStack make_provider(const RunConfig& config);

/// nullptr when neither search nor encyclopedia is configured.
std::unique_ptr<Retriever> make_retriever(const RunConfig& config);

}  // namespace maro
