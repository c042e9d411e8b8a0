#include "crowdvote/persona.hpp"

#include <set>

#include "crowdvote/error.hpp"
#include "crowdvote/hash.hpp"
#include "crowdvote/util.hpp"

namespace crowdvote {
namespace {

bool blank(std::string_view text) { return trim(text).empty(); }

}  // namespace

std::vector<PersonaViolation> validate_persona(const PersonaSpec& spec) {
    using Kind = PersonaViolation::Kind;
    std::vector<PersonaViolation> violations;

    if (blank(spec.role_description)) {
        violations.push_back({Kind::kEmptyRole, "", "role_description is empty"});
    }

    std::set<std::string> seen;
    std::set<std::string> reported;
    for (std::size_t i = 0; i < spec.exemplars.size(); ++i) {
        const auto& exemplar = spec.exemplars[i];
        const std::string where = exemplar.id.empty() ? "#" + std::to_string(i) : exemplar.id;
        if (exemplar.id.empty()) {
            violations.push_back({Kind::kEmptyExemplarId, where, "exemplar " + where + " has an empty id"});
        } else if (!seen.insert(exemplar.id).second && reported.insert(exemplar.id).second) {
            violations.push_back(
                {Kind::kDuplicateExemplarId, exemplar.id, "duplicate exemplar id '" + exemplar.id + "'"});
        }
        if (blank(exemplar.question)) {
            violations.push_back({Kind::kEmptyQuestion, where, "exemplar " + where + " has an empty question"});
        }
        if (blank(exemplar.response)) {
            violations.push_back({Kind::kEmptyResponse, where, "exemplar " + where + " has an empty response"});
        }
    }
    return violations;
}

CompiledPrompt compile_prompt(const PersonaSpec& spec) {
    if (auto violations = validate_persona(spec); !violations.empty()) {
        std::vector<std::string> messages;
        for (const auto& v : violations) {
            messages.push_back(v.message);
        }
        throw InvalidPersona(std::move(messages));
    }

    std::string text = spec.role_description;
    text += "\n";
    if (spec.style_notes && !blank(*spec.style_notes)) {
        text += "\nStyle notes:\n";
        text += *spec.style_notes;
        text += "\n";
    }
    if (!spec.exemplars.empty()) {
        text += "\nExamples of how you respond:\n";
        for (const auto& exemplar : spec.exemplars) {
            text += "\nQ: ";
            text += exemplar.question;
            text += "\nA: ";
            text += exemplar.response;
            text += "\n";
        }
    }

    CompiledPrompt prompt;
    prompt.content_hash = sha256_hex(text);
    prompt.text = std::move(text);
    prompt.exemplar_count = spec.exemplars.size();
    return prompt;
}

std::size_t estimate_size(std::string_view text) { return (text.size() + 3) / 4; }

void to_json(nlohmann::json& j, const ExemplarEntry& e) {
    j = nlohmann::json{{"id", e.id}, {"scenario_tag", e.scenario_tag}, {"question", e.question}, {"response", e.response}};
}

void from_json(const nlohmann::json& j, ExemplarEntry& e) {
    e.id = j.at("id").get<std::string>();
    e.scenario_tag = j.value("scenario_tag", std::string{});
    e.question = j.at("question").get<std::string>();
    e.response = j.at("response").get<std::string>();
}

void to_json(nlohmann::json& j, const PersonaSpec& spec) {
    j = nlohmann::json{{"persona_id", spec.persona_id},
                       {"display_name", spec.display_name},
                       {"role_description", spec.role_description},
                       {"exemplars", spec.exemplars}};
    if (spec.style_notes) {
        j["style_notes"] = *spec.style_notes;
    }
}

void from_json(const nlohmann::json& j, PersonaSpec& spec) {
    spec.persona_id = j.value("persona_id", std::string{});
    spec.display_name = j.value("display_name", spec.persona_id);
    spec.role_description = j.at("role_description").get<std::string>();
    spec.exemplars = j.value("exemplars", std::vector<ExemplarEntry>{});
    if (j.contains("style_notes") && !j.at("style_notes").is_null()) {
        spec.style_notes = j.at("style_notes").get<std::string>();
    } else {
        spec.style_notes.reset();
    }
}

PersonaSpec load_persona(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    try {
        return nlohmann::json::parse(content).get<PersonaSpec>();
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), 1, e.byte, e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationFailure(path.string() + ": " + e.what());
    }
}

}  // namespace crowdvote
