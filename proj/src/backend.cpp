#include "crowdvote/backend.hpp"

#include <cmath>

#include <fmt/format.h>

#include "crowdvote/cache.hpp"
#include "crowdvote/dataset.hpp"
#include "crowdvote/error.hpp"
#include "crowdvote/hash.hpp"

namespace crowdvote {

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::kHttp: return "http";
        case BackendKind::kFixture: return "fixture";
        case BackendKind::kScripted: return "scripted";
    }
    return "unknown";
}

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "http") return BackendKind::kHttp;
    if (name == "fixture") return BackendKind::kFixture;
    if (name == "scripted") return BackendKind::kScripted;
    throw InvalidDescriptor("unknown backend kind '" + name + "'");
}

std::vector<std::string> validate_descriptor(const BackendDescriptor& d) {
    std::vector<std::string> problems;
    const std::string who = d.backend_id.empty() ? std::string("<unnamed>") : d.backend_id;
    auto problem = [&](const std::string& text) { problems.push_back(who + ": " + text); };

    if (d.backend_id.empty()) problem("backend_id is empty");
    if (!std::isfinite(d.params.temperature) || d.params.temperature < 0) problem("temperature must be >= 0");
    if (d.params.max_output_tokens <= 0) problem("max_output_tokens must be > 0");
    if (d.params.timeout.count() <= 0) problem("timeout must be > 0");
    if (d.params.max_retries < 0) problem("max_retries must be >= 0");

    const bool has_fixture = d.fixture_path || d.fixture_persona || d.fixture_answers;
    switch (d.kind) {
        case BackendKind::kHttp:
            if (!d.endpoint || !(d.endpoint->starts_with("http://") || d.endpoint->starts_with("https://"))) {
                problem("http backend needs an http:// or https:// endpoint");
            }
            if (has_fixture) problem("fixture fields are only valid for fixture backends");
            if (d.script_id) problem("script_id is only valid for scripted backends");
            break;
        case BackendKind::kFixture: {
            const bool from_file = d.fixture_path && d.fixture_persona;
            const bool partial_file = static_cast<bool>(d.fixture_path) != static_cast<bool>(d.fixture_persona);
            if (partial_file) problem("fixture_path and fixture_persona must be given together");
            if (from_file == static_cast<bool>(d.fixture_answers)) {
                problem("fixture backend needs exactly one of fixture_path+fixture_persona or fixture_answers");
            }
            if (d.endpoint) problem("endpoint is only valid for http backends");
            if (d.script_id) problem("script_id is only valid for scripted backends");
            break;
        }
        case BackendKind::kScripted:
            if (!d.script_id || d.script_id->empty()) problem("scripted backend needs a script_id");
            if (d.endpoint) problem("endpoint is only valid for http backends");
            if (has_fixture) problem("fixture fields are only valid for fixture backends");
            break;
    }
    return problems;
}

void to_json(nlohmann::json& j, const BackendDescriptor& d) {
    j = nlohmann::json{{"backend_id", d.backend_id},
                       {"kind", to_string(d.kind)},
                       {"params",
                        {{"temperature", d.params.temperature},
                         {"max_output_tokens", d.params.max_output_tokens},
                         {"timeout_ms", d.params.timeout.count()},
                         {"max_retries", d.params.max_retries}}}};
    if (d.endpoint) j["endpoint"] = *d.endpoint;
    if (d.model_name) j["model_name"] = *d.model_name;
    if (d.fixture_path) j["fixture_path"] = d.fixture_path->generic_string();
    if (d.fixture_persona) j["fixture_persona"] = *d.fixture_persona;
    if (d.fixture_answers) j["fixture_answers"] = *d.fixture_answers;
    if (d.script_id) j["script_id"] = *d.script_id;
    if (d.kind == BackendKind::kHttp) j["api_key_env"] = d.api_key_env;
}

void from_json(const nlohmann::json& j, BackendDescriptor& d) {
    d = BackendDescriptor{};
    d.backend_id = j.at("backend_id").get<std::string>();
    d.kind = backend_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("params")) {
        const auto& p = j.at("params");
        d.params.temperature = p.value("temperature", d.params.temperature);
        d.params.max_output_tokens = p.value("max_output_tokens", d.params.max_output_tokens);
        d.params.timeout = std::chrono::milliseconds(p.value("timeout_ms", d.params.timeout.count()));
        d.params.max_retries = p.value("max_retries", d.params.max_retries);
    }
    if (j.contains("endpoint")) d.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("model_name")) d.model_name = j.at("model_name").get<std::string>();
    if (j.contains("fixture_path")) d.fixture_path = j.at("fixture_path").get<std::string>();
    if (j.contains("fixture_persona")) d.fixture_persona = j.at("fixture_persona").get<std::string>();
    if (j.contains("fixture_answers")) {
        d.fixture_answers = j.at("fixture_answers").get<std::map<std::string, std::string>>();
    }
    if (j.contains("script_id")) d.script_id = j.at("script_id").get<std::string>();
    d.api_key_env = j.value("api_key_env", d.api_key_env);
}

ChatTranscript ChatTranscript::single_turn(std::string system_prompt, std::string user_text, std::string question_id) {
    ChatTranscript transcript;
    transcript.system_prompt = std::move(system_prompt);
    transcript.turns.push_back({Speaker::kUser, std::move(user_text)});
    transcript.question_id = std::move(question_id);
    return transcript;
}

const std::string& ChatTranscript::last_user_turn() const {
    static const std::string kEmpty;
    for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
        if (it->speaker == Speaker::kUser) return it->text;
    }
    return kEmpty;
}

std::string ChatTranscript::content_hash() const {
    std::string material = fmt::format("system {}:{}\n", system_prompt.size(), system_prompt);
    for (const auto& turn : turns) {
        material += fmt::format("{} {}:{}\n", turn.speaker == Speaker::kUser ? "user" : "assistant",
                                turn.text.size(), turn.text);
    }
    return sha256_hex(material);
}

std::vector<std::string> validate_transcript(const ChatTranscript& transcript) {
    std::vector<std::string> problems;
    if (transcript.turns.empty()) {
        problems.emplace_back("transcript has no turns");
    }
    for (std::size_t i = 0; i < transcript.turns.size(); ++i) {
        const Speaker expected = i % 2 == 0 ? Speaker::kUser : Speaker::kAssistant;
        if (transcript.turns[i].speaker != expected) {
            problems.push_back(fmt::format("turn {} breaks user/assistant alternation", i));
        }
        if (transcript.turns[i].text.empty()) {
            problems.push_back(fmt::format("turn {} is empty", i));
        }
    }
    return problems;
}

std::string params_digest(const BackendDescriptor& descriptor) {
    const nlohmann::json material{{"model_name", descriptor.model_name.value_or("")},
                                  {"temperature", descriptor.params.temperature},
                                  {"max_output_tokens", descriptor.params.max_output_tokens}};
    return sha256_hex(material.dump());
}

CacheKey make_cache_key(const BackendDescriptor& descriptor, const ChatTranscript& transcript) {
    return CacheKey{descriptor.backend_id, transcript.content_hash(), transcript.question_id,
                    params_digest(descriptor)};
}

std::string Backend::generate(const ChatTranscript& transcript) {
    if (auto problems = validate_transcript(transcript); !problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    invocations_.fetch_add(1);
    std::string text = do_generate(transcript);
    if (text.empty()) {
        throw BackendError("backend '" + descriptor_.backend_id + "' produced an empty response");
    }
    return text;
}

namespace {

class FixtureBackend final : public Backend {
public:
    FixtureBackend(BackendDescriptor descriptor, std::map<std::string, std::string> answers)
        : Backend(std::move(descriptor)), answers_(std::move(answers)) {}

protected:
    std::string do_generate(const ChatTranscript& transcript) override {
        auto it = answers_.find(transcript.question_id);
        if (it == answers_.end() || it->second.empty()) {
            throw MissingFixture(descriptor().backend_id, transcript.question_id);
        }
        return it->second;
    }

private:
    std::map<std::string, std::string> answers_;
};

void require_valid(const BackendDescriptor& descriptor) {
    if (auto problems = validate_descriptor(descriptor); !problems.empty()) {
        std::string message = "invalid backend descriptor";
        for (const auto& p : problems) message += "\n  - " + p;
        throw InvalidDescriptor(message);
    }
}

}  // namespace

std::unique_ptr<Backend> make_fixture_backend(BackendDescriptor descriptor) {
    require_valid(descriptor);
    if (descriptor.kind != BackendKind::kFixture) {
        throw InvalidDescriptor(descriptor.backend_id + ": not a fixture descriptor");
    }
    std::map<std::string, std::string> answers;
    if (descriptor.fixture_answers) {
        answers = *descriptor.fixture_answers;
    } else {
        const QuestionSet set = load_question_set(*descriptor.fixture_path);
        answers = recorded_answers(set, *descriptor.fixture_persona);
    }
    return std::make_unique<FixtureBackend>(std::move(descriptor), std::move(answers));
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor, const ScriptRegistry& scripts) {
    require_valid(descriptor);
    switch (descriptor.kind) {
        case BackendKind::kHttp: return make_http_backend(descriptor);
        case BackendKind::kFixture: return make_fixture_backend(descriptor);
        case BackendKind::kScripted: return make_scripted_backend(descriptor, scripts);
    }
    throw InvalidDescriptor("unhandled backend kind");
}

std::string generate(const BackendDescriptor& descriptor, const ChatTranscript& transcript) {
    const ScriptRegistry scripts;
    return make_backend(descriptor, scripts)->generate(transcript);
}

Backend& BackendPool::get(const BackendDescriptor& descriptor) {
    std::lock_guard lock(mutex_);
    if (auto it = backends_.find(descriptor.backend_id); it != backends_.end()) {
        if (!(it->second->descriptor() == descriptor)) {
            throw InvalidDescriptor("backend id '" + descriptor.backend_id + "' registered with two descriptors");
        }
        return *it->second;
    }
    auto backend = make_backend(descriptor, scripts_);
    Backend& ref = *backend;
    backends_.emplace(descriptor.backend_id, std::move(backend));
    return ref;
}

Backend& BackendPool::install(std::unique_ptr<Backend> backend) {
    std::lock_guard lock(mutex_);
    const std::string id = backend->descriptor().backend_id;
    if (backends_.contains(id)) {
        throw InvalidDescriptor("backend id '" + id + "' already installed");
    }
    Backend& ref = *backend;
    backends_.emplace(id, std::move(backend));
    return ref;
}

std::size_t BackendPool::total_invocations() const {
    std::lock_guard lock(mutex_);
    std::size_t total = 0;
    for (const auto& [id, backend] : backends_) total += backend->invocations();
    return total;
}

std::size_t BackendPool::network_invocations() const {
    std::lock_guard lock(mutex_);
    std::size_t total = 0;
    for (const auto& [id, backend] : backends_) {
        if (backend->descriptor().kind == BackendKind::kHttp) total += backend->invocations();
    }
    return total;
}

std::string cached_generate(Backend& backend, const ChatTranscript& transcript, ResponseCache& cache) {
    const CacheKey key = make_cache_key(backend.descriptor(), transcript);
    if (auto hit = cache.lookup(key)) {
        return *hit;
    }
    std::string text = backend.generate(transcript);
    cache.store(key, text);
    return text;
}

}  // namespace crowdvote
