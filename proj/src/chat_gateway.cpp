#include "impactkit/chat_gateway.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "impactkit/errors.hpp"

namespace impactkit {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string chat_fixture_key(const std::vector<ChatMessage>& messages) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& m : messages) {
        h = fnv1a(m.role, h);
        h = fnv1a("\x1f", h);
        h = fnv1a(m.content, h);
        h = fnv1a("\x1e", h);
    }
    return hex64(h);
}

HttpChatGateway::HttpChatGateway(ChatConfig config, std::shared_ptr<HttpClient> http)
    : config_(std::move(config)),
      http_(http ? std::move(http) : make_httplib_client()) {}

std::string HttpChatGateway::complete(const std::vector<ChatMessage>& messages) {
    json payload;
    payload["model"] = config_.model;
    payload["temperature"] = config_.temperature;
    auto& msgs = payload["messages"] = json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }

    HttpHeaders headers;
    if (config_.api_key) headers.emplace_back("Authorization", "Bearer " + *config_.api_key);

    const std::string url = config_.base_url + "/chat/completions";
    const std::string body = payload.dump();

    HttpResponse response;
    for (std::size_t attempt = 0;; ++attempt) {
        response = http_->post_json(url, body, headers);
        const bool retryable = response.status == 429 || response.status >= 500;
        if (!retryable) break;
        if (attempt >= config_.retry_budget) {
            throw GatewayError("chat endpoint kept failing (HTTP " +
                               std::to_string(response.status) + ") after " +
                               std::to_string(attempt) + " retries");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100u << attempt));
    }
    if (response.status != 200) {
        throw GatewayError("chat endpoint returned HTTP " +
                           std::to_string(response.status));
    }

    json parsed = json::parse(response.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") ||
        !parsed["choices"].is_array() || parsed["choices"].empty()) {
        throw GatewayError("chat reply is not a completion object");
    }
    const auto& choice = parsed["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
        throw GatewayError("chat reply carries no message content");
    }
    std::string content = choice["message"]["content"].get<std::string>();

    if (config_.record_fixture) {
        std::scoped_lock lock(record_mu_);
        std::ofstream out(*config_.record_fixture, std::ios::app);
        if (out) {
            json entry;
            entry["key"] = chat_fixture_key(messages);
            entry["prompt_preview"] =
                messages.empty() ? "" : messages.back().content.substr(0, 120);
            entry["response"] = content;
            out << entry.dump() << "\n";
        }
    }
    return content;
}

ReplayChatGateway ReplayChatGateway::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open chat fixture " + path.string());
    ReplayChatGateway gateway;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json entry = json::parse(line, nullptr, false);
        if (entry.is_discarded() || !entry.contains("key") ||
            !entry.contains("response")) {
            throw SchemaViolationError("chat fixture " + path.string() + " line " +
                                       std::to_string(lineno) + " is malformed");
        }
        gateway.replies_[entry["key"].get<std::string>()] =
            entry["response"].get<std::string>();
    }
    return gateway;
}

std::string ReplayChatGateway::complete(const std::vector<ChatMessage>& messages) {
    const std::string key = chat_fixture_key(messages);
    const auto it = replies_.find(key);
    if (it == replies_.end()) {
        const std::string preview =
            messages.empty() ? "" : messages.back().content.substr(0, 80);
        throw GatewayError("no recorded reply for prompt (key " + key + "): " +
                           preview);
    }
    return it->second;
}

void ReplayChatGateway::add(const std::vector<ChatMessage>& messages,
                            std::string response) {
    replies_[chat_fixture_key(messages)] = std::move(response);
}

ScriptedChatGateway::ScriptedChatGateway(std::vector<std::string> replies)
    : replies_(replies.begin(), replies.end()) {}

void ScriptedChatGateway::push(std::string reply) {
    std::scoped_lock lock(mu_);
    replies_.push_back(std::move(reply));
}

std::string ScriptedChatGateway::complete(const std::vector<ChatMessage>& messages) {
    std::scoped_lock lock(mu_);
    requests_.push_back(messages);
    if (replies_.empty()) {
        throw GatewayError("scripted gateway ran out of replies");
    }
    std::string reply = std::move(replies_.front());
    replies_.pop_front();
    return reply;
}

std::vector<std::vector<ChatMessage>> ScriptedChatGateway::requests() const {
    std::scoped_lock lock(mu_);
    return requests_;
}

}  // namespace impactkit
