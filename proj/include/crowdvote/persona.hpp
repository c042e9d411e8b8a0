#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace crowdvote {

/// One characteristic question/response pair of a real-world persona.
/// `scenario_tag` is free-form; suggested values are "challenged-by-reporter",
/// "pointed-question" and "comedic".
struct ExemplarEntry {
    std::string id;
    std::string scenario_tag;
    std::string question;
    std::string response;

    bool operator==(const ExemplarEntry&) const = default;
};

struct PersonaSpec {
    std::string persona_id;
    std::string display_name;
    std::string role_description;
    std::vector<ExemplarEntry> exemplars;  // order is significant
    std::optional<std::string> style_notes;

    bool operator==(const PersonaSpec&) const = default;
};

struct CompiledPrompt {
    std::string text;
    std::size_t exemplar_count = 0;
    std::string content_hash;  // sha256 of text, lowercase hex
};

struct PersonaViolation {
    enum class Kind { kEmptyRole, kDuplicateExemplarId, kEmptyExemplarId, kEmptyQuestion, kEmptyResponse };

    Kind kind;
    std::string subject;  // exemplar id where applicable
    std::string message;
};

/// Violations are data: an empty list means the spec is valid.
std::vector<PersonaViolation> validate_persona(const PersonaSpec& spec);

/// Renders the role block, optional style notes, then every exemplar as a
/// "Q:"/"A:" pair in input order. Byte-identical for identical specs.
/// Throws InvalidPersona when validate_persona reports anything.
CompiledPrompt compile_prompt(const PersonaSpec& spec);

/// ceil(characters / 4); a tokenizer-free budget heuristic.
std::size_t estimate_size(std::string_view text);
inline std::size_t estimate_size(const CompiledPrompt& prompt) { return estimate_size(prompt.text); }

void to_json(nlohmann::json& j, const ExemplarEntry& e);
void from_json(const nlohmann::json& j, ExemplarEntry& e);
void to_json(nlohmann::json& j, const PersonaSpec& spec);
void from_json(const nlohmann::json& j, PersonaSpec& spec);

/// Loads a PersonaSpec JSON document. Structural problems (bad JSON, wrong
/// field types) throw; semantic problems are left to validate_persona.
PersonaSpec load_persona(const std::filesystem::path& path);

}  // namespace crowdvote
