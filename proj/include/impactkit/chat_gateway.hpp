#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "impactkit/http_client.hpp"

namespace impactkit {

struct ChatMessage {
    std::string role;
    std::string content;
};

/// A chat-completion backend: takes the message list, returns the assistant
/// reply content. Implementations must be safe for concurrent calls.
class ChatGateway {
public:
    virtual ~ChatGateway() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct ChatConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-3.5-turbo-0125";
    std::optional<std::string> api_key;
    double temperature = 0.0;
    std::size_t retry_budget = 2;
    // When set, every (request, reply) pair is appended here so later runs
    // can replay offline.
    std::optional<std::filesystem::path> record_fixture;
};

/// Stable key for a message list; fixture files index replies by it.
std::string chat_fixture_key(const std::vector<ChatMessage>& messages);

/// OpenAI-compatible wire client: POST {model, messages, temperature} to
/// {base_url}/chat/completions, reply parsed from
/// choices[0].message.content. Retries 429/5xx up to retry_budget, then
/// throws GatewayError; malformed replies also throw GatewayError.
class HttpChatGateway : public ChatGateway {
public:
    HttpChatGateway(ChatConfig config, std::shared_ptr<HttpClient> http = nullptr);
    std::string complete(const std::vector<ChatMessage>& messages) override;

private:
    ChatConfig config_;
    std::shared_ptr<HttpClient> http_;
    std::mutex record_mu_;
};

/// Replays recorded replies from a JSON-lines fixture
/// ({"key": ..., "prompt_preview": ..., "response": ...} per line).
/// Unknown prompts throw GatewayError.
class ReplayChatGateway : public ChatGateway {
public:
    static ReplayChatGateway from_file(const std::filesystem::path& path);
    std::string complete(const std::vector<ChatMessage>& messages) override;

    void add(const std::vector<ChatMessage>& messages, std::string response);
    std::size_t size() const { return replies_.size(); }

private:
    std::map<std::string, std::string> replies_;
};

/// Test double that pops canned replies in order (thread-safe).
class ScriptedChatGateway : public ChatGateway {
public:
    explicit ScriptedChatGateway(std::vector<std::string> replies = {});
    void push(std::string reply);
    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::vector<std::vector<ChatMessage>> requests() const;

private:
    mutable std::mutex mu_;
    std::deque<std::string> replies_;
    std::vector<std::vector<ChatMessage>> requests_;
};

}  // namespace impactkit
