#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "crowdvote/backend.hpp"
#include "crowdvote/error.hpp"

namespace crowdvote {
namespace {

using namespace std::chrono_literals;

constexpr auto kInitialBackoff = 250ms;

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
public:
    HttpResult post_json(const std::string& url, const std::string& body,
                         const std::map<std::string, std::string>& headers,
                         std::chrono::milliseconds timeout) override {
        const SplitUrl parts = split_url(url);
        httplib::Client client(parts.origin);
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());

        httplib::Headers request_headers;
        for (const auto& [name, value] : headers) {
            request_headers.emplace(name, value);
        }

        HttpResult result;
        auto response = client.Post(parts.path, request_headers, body, "application/json");
        if (!response) {
            const auto error = response.error();
            result.timed_out = error == httplib::Error::Read || error == httplib::Error::ConnectionTimeout;
            result.error = httplib::to_string(error);
            return result;
        }
        result.transport_ok = true;
        result.status = response->status;
        result.body = response->body;
        return result;
    }
};

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

class HttpBackend final : public Backend {
public:
    HttpBackend(BackendDescriptor descriptor, std::unique_ptr<HttpTransport> transport, Sleeper sleeper)
        : Backend(std::move(descriptor)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {}

protected:
    std::string do_generate(const ChatTranscript& transcript) override {
        const auto& d = descriptor();
        const std::string body = build_chat_request(d, transcript).dump();

        std::map<std::string, std::string> headers;
        if (const char* key = std::getenv(d.api_key_env.c_str()); key != nullptr && *key != '\0') {
            headers["Authorization"] = std::string("Bearer ") + key;
        }

        const int attempts = 1 + d.params.max_retries;
        auto backoff = std::chrono::duration_cast<std::chrono::milliseconds>(kInitialBackoff);
        HttpResult last;
        for (int attempt = 1; attempt <= attempts; ++attempt) {
            last = transport_->post_json(*d.endpoint, body, headers, d.params.timeout);
            if (last.transport_ok && last.status >= 200 && last.status < 300) {
                return parse_chat_response(d.backend_id, last.status, last.body);
            }
            if (last.transport_ok && !retryable_status(last.status)) {
                throw RemoteError(d.backend_id, last.status, last.body.substr(0, 512));
            }
            if (attempt < attempts) {
                sleeper_(std::min(backoff, d.params.timeout));
                backoff *= 2;
            }
        }
        if (!last.transport_ok && last.timed_out) {
            throw Timeout(d.backend_id, attempts);
        }
        if (!last.transport_ok) {
            throw RemoteError(d.backend_id, 0, "transport failure: " + last.error);
        }
        throw RemoteError(d.backend_id, last.status, last.body.substr(0, 512));
    }

private:
    std::unique_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_default_transport() { return std::make_unique<HttplibTransport>(); }

nlohmann::json build_chat_request(const BackendDescriptor& descriptor, const ChatTranscript& transcript) {
    nlohmann::json messages = nlohmann::json::array();
    if (!transcript.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", transcript.system_prompt}});
    }
    for (const auto& turn : transcript.turns) {
        messages.push_back({{"role", turn.speaker == Speaker::kUser ? "user" : "assistant"}, {"content", turn.text}});
    }
    nlohmann::json body{{"messages", std::move(messages)},
                        {"temperature", descriptor.params.temperature},
                        {"max_tokens", descriptor.params.max_output_tokens}};
    if (descriptor.model_name) {
        body["model"] = *descriptor.model_name;
    }
    return body;
}

std::string parse_chat_response(const std::string& backend_id, int status, const std::string& body) {
    nlohmann::json json;
    try {
        json = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        throw RemoteError(backend_id, status, "response is not JSON");
    }
    const auto choices = json.find("choices");
    if (choices == json.end() || !choices->is_array() || choices->empty()) {
        throw RemoteError(backend_id, status, "response has no choices");
    }
    const auto& choice = (*choices)[0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
        throw RemoteError(backend_id, status, "response has no message content");
    }
    return choice["message"]["content"].get<std::string>();
}

std::unique_ptr<Backend> make_http_backend(BackendDescriptor descriptor, std::unique_ptr<HttpTransport> transport,
                                           Sleeper sleeper) {
    if (auto problems = validate_descriptor(descriptor); !problems.empty() || descriptor.kind != BackendKind::kHttp) {
        throw InvalidDescriptor("invalid http backend descriptor '" + descriptor.backend_id + "'");
    }
    if (!transport) transport = make_default_transport();
    if (!sleeper) sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    return std::make_unique<HttpBackend>(std::move(descriptor), std::move(transport), std::move(sleeper));
}

}  // namespace crowdvote
