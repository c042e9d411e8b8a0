#pragma once

#include <atomic>
#include <chrono>
#include <compare>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace crowdvote {

struct GenerationParams {
    double temperature = 0.7;
    int max_output_tokens = 512;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 2;

    bool operator==(const GenerationParams&) const = default;
};

enum class BackendKind { kHttp, kFixture, kScripted };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

/// Describes one response source. Kind-specific fields:
///   http     - endpoint (required), model_name, api_key_env
///   fixture  - fixture_path + fixture_persona, or inline fixture_answers
///   scripted - script_id
struct BackendDescriptor {
    std::string backend_id;
    BackendKind kind = BackendKind::kScripted;
    std::optional<std::string> endpoint;
    std::optional<std::string> model_name;
    GenerationParams params;
    std::optional<std::filesystem::path> fixture_path;
    std::optional<std::string> fixture_persona;
    std::optional<std::map<std::string, std::string>> fixture_answers;  // question_id -> answer
    std::optional<std::string> script_id;
    std::string api_key_env = "CROWDVOTE_API_KEY";

    bool operator==(const BackendDescriptor&) const = default;
};

/// Empty when the descriptor is usable for its kind.
std::vector<std::string> validate_descriptor(const BackendDescriptor& descriptor);

void to_json(nlohmann::json& j, const BackendDescriptor& d);
/// Relative fixture paths are resolved against `base_dir` by the caller.
void from_json(const nlohmann::json& j, BackendDescriptor& d);

enum class Speaker { kUser, kAssistant };

struct Turn {
    Speaker speaker;
    std::string text;
};

/// Conversation sent to a backend. `question_id` is routing metadata: fixture
/// backends answer by it and the cache keys on it. It is never sent remotely.
struct ChatTranscript {
    std::string system_prompt;
    std::vector<Turn> turns;
    std::string question_id;

    static ChatTranscript single_turn(std::string system_prompt, std::string user_text, std::string question_id);

    /// Text of the final user turn; empty if there is none.
    const std::string& last_user_turn() const;

    /// sha256 over a length-prefixed serialization of system prompt and turns.
    std::string content_hash() const;
};

/// Turns must alternate starting with the user and carry non-empty text.
/// The system prompt may be empty (zero-shot candidates).
std::vector<std::string> validate_transcript(const ChatTranscript& transcript);

struct CacheKey {
    std::string backend_id;
    std::string prompt_hash;
    std::string question_id;
    std::string params_digest;

    auto operator<=>(const CacheKey&) const = default;
};

/// Digest of everything that changes what a backend produces: model name,
/// temperature and output budget. Timeout and retry count are excluded.
std::string params_digest(const BackendDescriptor& descriptor);

CacheKey make_cache_key(const BackendDescriptor& descriptor, const ChatTranscript& transcript);

class Backend {
public:
    explicit Backend(BackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {}
    virtual ~Backend() = default;

    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    const BackendDescriptor& descriptor() const noexcept { return descriptor_; }

    /// Validates the transcript, invokes the backend and rejects empty output.
    std::string generate(const ChatTranscript& transcript);

    /// Number of generate() calls that reached the backend.
    std::size_t invocations() const noexcept { return invocations_.load(); }

protected:
    virtual std::string do_generate(const ChatTranscript& transcript) = 0;

private:
    BackendDescriptor descriptor_;
    std::atomic<std::size_t> invocations_{0};
};

/// Deterministic text generator used by scripted backends.
using ScriptFn = std::function<std::string(const ChatTranscript&)>;

/// Named scripts. `resolve` accepts "name" or "name:argument"; built-ins:
///   echo            last user turn
///   constant:<t>    always <t>
///   vote:<X>        "VOTE: <X>"
///   longest         judge: votes for the longest response (ties by text)
///   shortest        judge: votes for the shortest response (ties by text)
///   mixed           judge: hash-driven mix of choices, abstentions, junk
///   garbage         judge: free text without a vote line
///   fail            throws RemoteError(500)
class ScriptRegistry {
public:
    ScriptRegistry();

    void add(const std::string& name, std::function<std::string(const ChatTranscript&, const std::string& arg)> fn);
    bool contains(const std::string& script_id) const;
    ScriptFn resolve(const std::string& script_id) const;

private:
    std::map<std::string, std::function<std::string(const ChatTranscript&, const std::string&)>> scripts_;
};

/// Result of one HTTP exchange as seen by the retry loop.
struct HttpResult {
    bool transport_ok = false;
    bool timed_out = false;
    int status = 0;
    std::string body;
    std::string error;
};

/// Minimal POST transport so tests can substitute the network.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResult post_json(const std::string& url, const std::string& body,
                                 const std::map<std::string, std::string>& headers,
                                 std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<HttpTransport> make_default_transport();

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Chat-completion JSON body for a transcript.
nlohmann::json build_chat_request(const BackendDescriptor& descriptor, const ChatTranscript& transcript);
/// Extracts choices[0].message.content; throws RemoteError on other shapes.
std::string parse_chat_response(const std::string& backend_id, int status, const std::string& body);

std::unique_ptr<Backend> make_http_backend(BackendDescriptor descriptor,
                                           std::unique_ptr<HttpTransport> transport = nullptr,
                                           Sleeper sleeper = nullptr);
std::unique_ptr<Backend> make_fixture_backend(BackendDescriptor descriptor);
std::unique_ptr<Backend> make_scripted_backend(BackendDescriptor descriptor, const ScriptRegistry& scripts);

/// Builds the backend for any descriptor kind; throws InvalidDescriptor.
std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor, const ScriptRegistry& scripts);

/// One-shot generation without a pool or cache.
std::string generate(const BackendDescriptor& descriptor, const ChatTranscript& transcript);

/// Owns live backends keyed by backend_id for the duration of a run.
class BackendPool {
public:
    BackendPool() = default;

    ScriptRegistry& scripts() noexcept { return scripts_; }

    /// Returns the backend for `descriptor.backend_id`, creating it on first
    /// use. Re-registering an id with a different descriptor is an error.
    Backend& get(const BackendDescriptor& descriptor);

    /// Installs a pre-built backend (tests, custom transports).
    Backend& install(std::unique_ptr<Backend> backend);

    std::size_t total_invocations() const;
    /// Invocations of http backends only.
    std::size_t network_invocations() const;

private:
    mutable std::mutex mutex_;
    ScriptRegistry scripts_;
    std::map<std::string, std::unique_ptr<Backend>> backends_;
};

class ResponseCache;

/// Returns the cached response for the transcript's key, or generates,
/// stores and returns it.
std::string cached_generate(Backend& backend, const ChatTranscript& transcript, ResponseCache& cache);

}  // namespace crowdvote
