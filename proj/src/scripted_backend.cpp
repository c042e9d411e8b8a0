#include <algorithm>

#include "crowdvote/backend.hpp"
#include "crowdvote/conditions.hpp"
#include "crowdvote/error.hpp"
#include "crowdvote/hash.hpp"

namespace crowdvote {
namespace {

using ScriptImpl = std::function<std::string(const ChatTranscript&, const std::string&)>;

/// Order-insensitive: the winner depends only on the multiset of responses.
std::string vote_by_length(const ChatTranscript& transcript, bool longest) {
    const auto responses = extract_ballot_responses(transcript.last_user_turn());
    if (responses.empty()) return "VOTE: ABSTAIN";
    auto better = [longest](const LabeledResponse& a, const LabeledResponse& b) {
        if (a.text.size() != b.text.size()) {
            return longest ? a.text.size() > b.text.size() : a.text.size() < b.text.size();
        }
        return a.text < b.text;
    };
    const auto best = std::min_element(responses.begin(), responses.end(), better);
    return "I compared every response.\nVOTE: " + best->label;
}

std::string mixed_vote(const ChatTranscript& transcript, const std::string& backend_id) {
    const auto responses = extract_ballot_responses(transcript.last_user_turn());
    const std::uint64_t h = derive_seed(0, {transcript.content_hash()});
    const std::size_t outcome = static_cast<std::size_t>(h % (responses.size() + 3));
    if (outcome < responses.size()) return "Clear winner.\nVOTE: " + responses[outcome].label;
    if (outcome == responses.size()) return "None of these work for me.\nVOTE: ABSTAIN";
    if (outcome == responses.size() + 1) return "They are all equally fine, I suppose.";
    throw RemoteError(backend_id, 503, "scripted judge outage");
}

class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(BackendDescriptor descriptor, ScriptFn script)
        : Backend(std::move(descriptor)), script_(std::move(script)) {}

protected:
    std::string do_generate(const ChatTranscript& transcript) override { return script_(transcript); }

private:
    ScriptFn script_;
};

}  // namespace

ScriptRegistry::ScriptRegistry() {
    add("echo", [](const ChatTranscript& t, const std::string&) { return t.last_user_turn(); });
    add("constant", [](const ChatTranscript&, const std::string& arg) { return arg; });
    add("vote", [](const ChatTranscript&, const std::string& arg) { return "VOTE: " + arg; });
    add("longest", [](const ChatTranscript& t, const std::string&) { return vote_by_length(t, true); });
    add("shortest", [](const ChatTranscript& t, const std::string&) { return vote_by_length(t, false); });
    add("mixed", [](const ChatTranscript& t, const std::string& arg) { return mixed_vote(t, arg); });
    add("garbage", [](const ChatTranscript&, const std::string&) { return std::string("I would rather not say."); });
    add("fail", [](const ChatTranscript&, const std::string& arg) -> std::string {
        throw RemoteError(arg.empty() ? "scripted" : arg, 500, "scripted failure");
    });
}

void ScriptRegistry::add(const std::string& name, ScriptImpl fn) { scripts_[name] = std::move(fn); }

bool ScriptRegistry::contains(const std::string& script_id) const {
    return scripts_.contains(script_id.substr(0, script_id.find(':')));
}

ScriptFn ScriptRegistry::resolve(const std::string& script_id) const {
    const auto colon = script_id.find(':');
    const std::string name = script_id.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string{} : script_id.substr(colon + 1);
    auto it = scripts_.find(name);
    if (it == scripts_.end()) {
        throw InvalidDescriptor("unknown script '" + name + "'");
    }
    return [fn = it->second, arg](const ChatTranscript& t) { return fn(t, arg); };
}

std::unique_ptr<Backend> make_scripted_backend(BackendDescriptor descriptor, const ScriptRegistry& scripts) {
    if (auto problems = validate_descriptor(descriptor); !problems.empty() || descriptor.kind != BackendKind::kScripted) {
        throw InvalidDescriptor("invalid scripted backend descriptor '" + descriptor.backend_id + "'");
    }
    ScriptFn script = scripts.resolve(*descriptor.script_id);
    return std::make_unique<ScriptedBackend>(std::move(descriptor), std::move(script));
}

}  // namespace crowdvote
