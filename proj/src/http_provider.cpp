#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "maro/provider.hpp"

namespace maro {

using nlohmann::json;

std::pair<std::string, std::string> split_base_url(const std::string& url) {
    auto scheme_end = url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto slash = url.find('/', host_start);
    if (slash == std::string::npos) return {url, ""};
    std::string prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, slash), prefix};
}

HttpChatProvider::HttpChatProvider(EndpointConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw Error(Errc::BadConfig, "endpoint base_url is empty");
    std::tie(scheme_host_, path_prefix_) = split_base_url(config_.base_url);
}

json HttpChatProvider::request_body(const ChatRequest& request) const {
    return json{{"model", config_.model},
                {"temperature", request.temperature},
                {"max_tokens", request.max_tokens},
                {"messages",
                 json::array({json{{"role", "system"}, {"content", request.system_prompt}},
                              json{{"role", "user"}, {"content", request.user_content}}})}};
}

ChatResponse HttpChatProvider::parse_response_body(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(Errc::Upstream5xx, std::string("malformed response body: ") + e.what());
    }
    ChatResponse resp;
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        resp.text = content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
        throw Error(Errc::Upstream5xx, std::string("response lacks choices[0].message.content: ") + e.what());
    }
    if (auto u = doc.find("usage"); u != doc.end() && u->is_object()) {
        resp.usage.prompt_tokens = u->value("prompt_tokens", 0LL);
        resp.usage.completion_tokens = u->value("completion_tokens", 0LL);
    }
    return resp;
}

ChatResponse HttpChatProvider::attempt(const ChatRequest& request) const {
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    auto result = client.Post(path_prefix_ + "/chat/completions", headers, request_body(request).dump(),
                              "application/json");
    if (!result) {
        auto err = result.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write) {
            throw Error(Errc::Timeout, "request to " + scheme_host_ + " timed out: " + httplib::to_string(err));
        }
        throw Error(Errc::Transport, "request to " + scheme_host_ + " failed: " + httplib::to_string(err));
    }
    int status = result->status;
    if (status >= 500) throw Error(Errc::Upstream5xx, "HTTP " + std::to_string(status) + ": " + result->body);
    if (status >= 400) throw Error(Errc::Upstream4xx, "HTTP " + std::to_string(status) + ": " + result->body);
    return parse_response_body(result->body);
}

ChatResponse HttpChatProvider::complete(const ChatRequest& request) {
    return with_retries(config_.retry, [&] { return attempt(request); });
}

}  // namespace maro
