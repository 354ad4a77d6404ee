#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "impactkit/chat_gateway.hpp"
#include "impactkit/errors.hpp"
#include "test_helpers.hpp"

using namespace impactkit;
using nlohmann::json;

namespace {

/// OpenAI-shaped completion endpoint that records request bodies and can
/// fail a configurable number of times before answering.
class ChatServer {
public:
    ChatServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            {
                std::scoped_lock lock(mu_);
                bodies_.push_back(req.body);
            }
            if (fail_budget_ > 0) {
                --fail_budget_;
                res.status = 429;
                return;
            }
            if (malformed_) {
                res.set_content("{\"choices\": []}", "application/json");
                return;
            }
            json reply;
            reply["choices"] = json::array(
                {{{"message", {{"role", "assistant"}, {"content", reply_}}}}});
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~ChatServer() {
        server_.stop();
        thread_.join();
    }

    ChatConfig config() const {
        ChatConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
        cfg.model = "test-model";
        cfg.api_key = "sk-test";
        cfg.retry_budget = 2;
        return cfg;
    }

    void set_reply(std::string reply) { reply_ = std::move(reply); }
    void fail_next(int n) { fail_budget_ = n; }
    void set_malformed(bool on) { malformed_ = on; }
    std::vector<std::string> bodies() const {
        std::scoped_lock lock(mu_);
        return bodies_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::string reply_ = "ok";
    std::atomic<int> fail_budget_{0};
    std::atomic<bool> malformed_{false};
    mutable std::mutex mu_;
    std::vector<std::string> bodies_;
};

}  // namespace

TEST_CASE("http chat gateway speaks the completion wire shape") {
    ChatServer server;
    server.set_reply("text-to-sql");
    HttpChatGateway gateway(server.config());

    const std::string reply = gateway.complete(
        {{"system", "You are terse."}, {"user", "Name the field."}});
    CHECK(reply == "text-to-sql");

    const auto bodies = server.bodies();
    REQUIRE(bodies.size() == 1);
    const json payload = json::parse(bodies[0]);
    CHECK(payload["model"] == "test-model");
    CHECK(payload["temperature"] == 0.0);
    REQUIRE(payload["messages"].size() == 2);
    CHECK(payload["messages"][0]["role"] == "system");
    CHECK(payload["messages"][0]["content"] == "You are terse.");
    CHECK(payload["messages"][1]["role"] == "user");
    CHECK(payload["messages"][1]["content"] == "Name the field.");
}

TEST_CASE("http chat gateway retries 429 within budget, then gives up") {
    ChatServer server;
    server.set_reply("eventually");
    server.fail_next(2);
    HttpChatGateway gateway(server.config());
    CHECK(gateway.complete({{"user", "q"}}) == "eventually");
    CHECK(server.bodies().size() == 3);  // two throttled tries, one success

    server.fail_next(10);  // beyond the retry budget of 2
    CHECK_THROWS_AS(gateway.complete({{"user", "q"}}), GatewayError);
}

TEST_CASE("http chat gateway rejects replies without content") {
    ChatServer server;
    server.set_malformed(true);
    HttpChatGateway gateway(server.config());
    CHECK_THROWS_AS(gateway.complete({{"user", "q"}}), GatewayError);
}

TEST_CASE("http chat gateway records replay fixtures") {
    const auto dir = testutil::scratch_dir("chat-record");
    ChatServer server;
    server.set_reply("recorded phrase");
    auto cfg = server.config();
    cfg.record_fixture = dir / "recorded.jsonl";
    HttpChatGateway gateway(cfg);

    const std::vector<ChatMessage> messages{{"user", "What field?"}};
    CHECK(gateway.complete(messages) == "recorded phrase");

    // The recorded fixture replays offline.
    auto replay = ReplayChatGateway::from_file(*cfg.record_fixture);
    CHECK(replay.complete(messages) == "recorded phrase");
}
