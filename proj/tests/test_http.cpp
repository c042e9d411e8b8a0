// Talks to a real local HTTP server through the default transport.

#include <atomic>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "crowdvote/backend.hpp"
#include "crowdvote/cache.hpp"
#include "crowdvote/error.hpp"

using namespace crowdvote;

namespace {

class LocalServer : public ::testing::Test {
protected:
    void SetUp() override {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++hits_;
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            if (n <= fail_first_) {
                res.status = 503;
                res.set_content("busy", "text/plain");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            const std::string user = body["messages"].back()["content"];
            const nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "re: " + user}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
            std::this_thread::sleep_for(std::chrono::milliseconds(600));
            res.set_content("{}", "application/json");
        });
        server_.Post("/denied", [](const httplib::Request&, httplib::Response& res) {
            res.status = 403;
            res.set_content("no", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    void TearDown() override {
        server_.stop();
        thread_.join();
        ::unsetenv("CROWDVOTE_TEST_KEY");
    }

    BackendDescriptor descriptor(const std::string& path) const {
        BackendDescriptor d;
        d.backend_id = "local";
        d.kind = BackendKind::kHttp;
        d.endpoint = "http://127.0.0.1:" + std::to_string(port_) + path;
        d.model_name = "test-model";
        d.params.timeout = std::chrono::milliseconds(2000);
        d.api_key_env = "CROWDVOTE_TEST_KEY";
        return d;
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    int fail_first_ = 0;
    std::string last_body_;
    std::string last_auth_;
};

}  // namespace

TEST_F(LocalServer, CompletesAChat) {
    ::setenv("CROWDVOTE_TEST_KEY", "secret-token", 1);
    auto backend = make_http_backend(descriptor("/v1/chat/completions"));
    EXPECT_EQ(backend->generate(ChatTranscript::single_turn("be brief", "hello", "q1")), "re: hello");
    const auto body = nlohmann::json::parse(last_body_);
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["messages"][0]["content"], "be brief");
    EXPECT_EQ(last_auth_, "Bearer secret-token");
}

TEST_F(LocalServer, NoCredentialHeaderWithoutEnvironment) {
    auto backend = make_http_backend(descriptor("/v1/chat/completions"));
    backend->generate(ChatTranscript::single_turn("", "hello", "q1"));
    EXPECT_TRUE(last_auth_.empty());
}

TEST_F(LocalServer, RetriesServerErrors) {
    fail_first_ = 2;
    auto backend = make_http_backend(descriptor("/v1/chat/completions"), nullptr, [](auto) {});
    EXPECT_EQ(backend->generate(ChatTranscript::single_turn("", "x", "q")), "re: x");
    EXPECT_EQ(hits_.load(), 3);
}

TEST_F(LocalServer, GivesUpAfterMaxRetries) {
    fail_first_ = 100;
    BackendDescriptor d = descriptor("/v1/chat/completions");
    d.params.max_retries = 1;
    auto backend = make_http_backend(d, nullptr, [](auto) {});
    EXPECT_THROW(backend->generate(ChatTranscript::single_turn("", "x", "q")), RemoteError);
    EXPECT_EQ(hits_.load(), 2);
}

TEST_F(LocalServer, ForbiddenIsImmediate) {
    auto backend = make_http_backend(descriptor("/denied"), nullptr, [](auto) {});
    try {
        backend->generate(ChatTranscript::single_turn("", "x", "q"));
        FAIL();
    } catch (const RemoteError& e) {
        EXPECT_EQ(e.status(), 403);
    }
}

TEST_F(LocalServer, SlowServerTimesOut) {
    BackendDescriptor d = descriptor("/slow");
    d.params.timeout = std::chrono::milliseconds(150);
    d.params.max_retries = 1;
    auto backend = make_http_backend(d, nullptr, [](auto) {});
    EXPECT_THROW(backend->generate(ChatTranscript::single_turn("", "x", "q")), Timeout);
}

TEST_F(LocalServer, WarmCacheMakesNoRequests) {
    BackendPool pool;
    ResponseCache cache;
    Backend& backend = pool.get(descriptor("/v1/chat/completions"));
    const auto t = ChatTranscript::single_turn("", "hello", "q1");
    EXPECT_EQ(cached_generate(backend, t, cache), "re: hello");
    EXPECT_EQ(cached_generate(backend, t, cache), "re: hello");
    EXPECT_EQ(hits_.load(), 1);
    EXPECT_EQ(pool.network_invocations(), 1u);
}

TEST(HttpUnreachable, ConnectionRefusedIsARemoteError) {
    BackendDescriptor d;
    d.backend_id = "nowhere";
    d.kind = BackendKind::kHttp;
    d.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    d.params.max_retries = 1;
    d.params.timeout = std::chrono::milliseconds(300);
    auto backend = make_http_backend(d, nullptr, [](auto) {});
    EXPECT_THROW(backend->generate(ChatTranscript::single_turn("", "x", "q")), BackendError);
}
