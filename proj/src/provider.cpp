#include "maro/provider.hpp"

#include <thread>

#include "maro/util.hpp"

namespace maro {

using nlohmann::json;

std::string_view role_name(Role role) noexcept {
    switch (role) {
        case Role::Linguistic: return "Linguistic";
        case Role::Comment: return "Comment";
        case Role::FactQuestion: return "FactQuestion";
        case Role::FactCheck: return "FactCheck";
        case Role::Questioning: return "Questioning";
        case Role::Optimizer: return "Optimizer";
        case Role::Judge: return "Judge";
    }
    return "Unknown";
}

std::optional<Role> role_from_name(std::string_view name) noexcept {
    for (Role r : {Role::Linguistic, Role::Comment, Role::FactQuestion, Role::FactCheck, Role::Questioning,
                   Role::Optimizer, Role::Judge}) {
        if (role_name(r) == name) return r;
    }
    return std::nullopt;
}

double TemperatureTable::for_role(Role role) const noexcept {
    switch (role) {
        case Role::Optimizer: return optimizer;
        case Role::Judge: return judge;
        default: return analysis;
    }
}

namespace {

std::string format_temperature(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", t);
    return buf;
}

}  // namespace

std::string request_digest(const ChatRequest& r) {
    auto temp = format_temperature(r.temperature);
    auto tokens = std::to_string(r.max_tokens);
    return hash_fields({role_name(r.role), r.system_prompt, r.user_content, temp, tokens, r.sample_tag});
}

std::string cache_key(std::string_view endpoint_id, const ChatRequest& request, std::string_view nonce) {
    auto digest = request_digest(request);
    return hash_fields({endpoint_id, digest, nonce});
}

json request_to_json(const ChatRequest& r) {
    return json{{"role", role_name(r.role)},
                {"system_prompt", r.system_prompt},
                {"user_content", r.user_content},
                {"temperature", r.temperature},
                {"max_tokens", r.max_tokens},
                {"sample_tag", r.sample_tag}};
}

ChatRequest request_from_json(const json& j) {
    ChatRequest r;
    auto role = role_from_name(j.at("role").get<std::string>());
    if (!role) throw Error(Errc::BadRecord, "unknown role " + j.at("role").dump());
    r.role = *role;
    r.system_prompt = j.at("system_prompt").get<std::string>();
    r.user_content = j.at("user_content").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.max_tokens = j.at("max_tokens").get<int>();
    r.sample_tag = j.value("sample_tag", "");
    return r;
}

// ---- ScriptedMock ---------------------------------------------------------

ScriptedMock::ScriptedMock(std::vector<ScriptEntry> script, std::string endpoint)
    : script_(std::move(script)), endpoint_(std::move(endpoint)) {}

ChatResponse ScriptedMock::complete(const ChatRequest& request) {
    calls_.fetch_add(1);
    {
        std::lock_guard lock(mu_);
        captured_.push_back(request);
        for (const auto& [needle, code] : failures_) {
            if (request.user_content.find(needle) != std::string::npos) {
                throw Error(code, "scripted failure for '" + needle + "'");
            }
        }
    }
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

    std::string digest;
    for (const auto& entry : script_) {
        if (entry.role && *entry.role != request.role) continue;
        bool hit = false;
        switch (entry.kind) {
            case MatchKind::Exact: hit = request.user_content == entry.pattern; break;
            case MatchKind::Contains: hit = request.user_content.find(entry.pattern) != std::string::npos; break;
            case MatchKind::Any: hit = true; break;
            case MatchKind::Digest:
                if (digest.empty()) digest = request_digest(request);
                hit = digest == entry.pattern;
                break;
        }
        if (!hit) continue;
        ChatResponse resp;
        if (const auto* text = std::get_if<std::string>(&entry.response)) {
            resp.text = *text;
        } else {
            resp.text = std::get<Responder>(entry.response)(request);
        }
        resp.usage.prompt_tokens = static_cast<long long>((request.system_prompt.size() + request.user_content.size()) / 4);
        resp.usage.completion_tokens = static_cast<long long>(resp.text.size() / 4);
        return resp;
    }
    throw Error(Errc::NotScripted, std::string("no script entry for role ") + std::string(role_name(request.role)));
}

std::vector<ChatRequest> ScriptedMock::captured() const {
    std::lock_guard lock(mu_);
    return captured_;
}

void ScriptedMock::reset_counters() {
    std::lock_guard lock(mu_);
    captured_.clear();
    calls_.store(0);
}

void ScriptedMock::fail_when(std::string needle, Errc code) {
    std::lock_guard lock(mu_);
    failures_.emplace_back(std::move(needle), code);
}

std::vector<ScriptEntry> load_script(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(Errc::BadConfig, path.string() + ": " + e.what());
    }
    std::vector<ScriptEntry> entries;
    for (const auto& e : doc.at("entries")) {
        ScriptEntry entry;
        if (auto r = e.find("role"); r != e.end() && !r->is_null()) {
            entry.role = role_from_name(r->get<std::string>());
            if (!entry.role) throw Error(Errc::BadConfig, "unknown role " + r->dump());
        }
        std::string match = e.value("match", "contains");
        if (match == "exact") entry.kind = MatchKind::Exact;
        else if (match == "contains") entry.kind = MatchKind::Contains;
        else if (match == "any") entry.kind = MatchKind::Any;
        else if (match == "digest") entry.kind = MatchKind::Digest;
        else throw Error(Errc::BadConfig, "unknown match kind " + match);
        entry.pattern = e.value("pattern", "");
        entry.response = e.at("response").get<std::string>();
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<ScriptEntry> load_transcript_script(const std::filesystem::path& path) {
    std::vector<ScriptEntry> entries;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(Errc::BadRecord, path.string() + ": " + e.what());
        }
        ScriptEntry entry;
        entry.kind = MatchKind::Digest;
        entry.pattern = rec.at("digest").get<std::string>();
        entry.response = rec.at("response").get<std::string>();
        entries.push_back(std::move(entry));
    }
    return entries;
}

// ---- ResponseCache --------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
    if (!std::filesystem::exists(*file_)) return;
    for (const auto& line : split_lines(read_file(*file_))) {
        if (trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error&) {
            // a torn final line from an interrupted append is dropped
            continue;
        }
        ChatResponse resp;
        resp.text = rec.at("text").get<std::string>();
        resp.usage.prompt_tokens = rec.value("prompt_tokens", 0LL);
        resp.usage.completion_tokens = rec.value("completion_tokens", 0LL);
        entries_[rec.at("key").get<std::string>()] = std::move(resp);
    }
}

std::optional<ChatResponse> ResponseCache::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::put(const std::string& key, const ChatResponse& response) {
    std::lock_guard lock(mu_);
    entries_[key] = response;
    if (!file_) return;
    if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
    std::ofstream out(*file_, std::ios::app | std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot append to " + file_->string());
    out << json{{"key", key},
                {"text", response.text},
                {"prompt_tokens", response.usage.prompt_tokens},
                {"completion_tokens", response.usage.completion_tokens}}
               .dump()
        << '\n';
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

CachingProvider::CachingProvider(std::shared_ptr<Provider> inner, std::shared_ptr<ResponseCache> cache,
                                 std::optional<std::string> optimizer_nonce)
    : inner_(std::move(inner)), cache_(std::move(cache)), nonce_(std::move(optimizer_nonce)) {}

ChatResponse CachingProvider::complete(const ChatRequest& request) {
    std::string_view nonce;
    if (request.role == Role::Optimizer) {
        if (!nonce_) return inner_->complete(request);
        nonce = *nonce_;
    }
    auto key = cache_key(inner_->endpoint_id(), request, nonce);
    if (auto hit = cache_->get(key)) {
        hit->from_cache = true;
        return *hit;
    }
    auto resp = inner_->complete(request);
    cache_->put(key, resp);
    return resp;
}

// ---- RecordingProvider ----------------------------------------------------

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner, const std::filesystem::path& transcript)
    : inner_(std::move(inner)) {
    if (transcript.has_parent_path()) std::filesystem::create_directories(transcript.parent_path());
    out_.open(transcript, std::ios::app | std::ios::binary);
    if (!out_) throw Error(Errc::Io, "cannot open transcript " + transcript.string());
}

ChatResponse RecordingProvider::complete(const ChatRequest& request) {
    auto resp = inner_->complete(request);
    json rec{{"key", cache_key(inner_->endpoint_id(), request)},
             {"digest", request_digest(request)},
             {"endpoint", inner_->endpoint_id()},
             {"request", request_to_json(request)},
             {"response", resp.text},
             {"usage", {{"prompt_tokens", resp.usage.prompt_tokens}, {"completion_tokens", resp.usage.completion_tokens}}}};
    std::lock_guard lock(mu_);
    out_ << rec.dump() << '\n';
    out_.flush();
    return resp;
}

ChatResponse UsageMeter::complete(const ChatRequest& request) {
    auto resp = inner_->complete(request);
    calls_.fetch_add(1);
    if (resp.from_cache) hits_.fetch_add(1);
    prompt_.fetch_add(resp.usage.prompt_tokens);
    completion_.fetch_add(resp.usage.completion_tokens);
    return resp;
}

}  // namespace maro
