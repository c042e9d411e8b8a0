#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace crowdvote {

/// A judge identity. `persona_text` may contain the placeholder "{persona}",
/// replaced by the evaluated avatar's name when the condition is resolved.
struct JudgePersona {
    std::string judge_id;
    std::string persona_text;

    bool operator==(const JudgePersona&) const = default;
};

struct ConditionSpec {
    std::string condition_name;
    std::vector<JudgePersona> judges;
    std::string ballot_instruction;  // must offer abstention

    bool operator==(const ConditionSpec&) const = default;
};

inline constexpr std::string_view kPersonaPlaceholder = "{persona}";

std::vector<std::string> validate_condition(const ConditionSpec& condition);

/// Substitutes the avatar name into judge texts and the instruction.
ConditionSpec resolve_placeholders(ConditionSpec condition, const std::string& avatar_persona_name);

/// Parses a conditions document: {"conditions": [ConditionSpec...]}.
std::vector<ConditionSpec> parse_conditions(std::string_view json_text, const std::string& source_name);
std::vector<ConditionSpec> load_conditions(const std::filesystem::path& path);

/// The panels shipped with the library (humor, authenticity, favorability),
/// unresolved.
const std::vector<ConditionSpec>& builtin_conditions();

/// Resolved built-in panel; throws UnknownCondition.
ConditionSpec builtin_condition(const std::string& name, const std::string& avatar_persona_name);

/// Resolved condition from an arbitrary list; throws UnknownCondition.
ConditionSpec find_condition(const std::vector<ConditionSpec>& conditions, const std::string& name,
                             const std::string& avatar_persona_name);

struct LabeledResponse {
    std::string label;
    std::string text;

    bool operator==(const LabeledResponse&) const = default;
};

/// "A", "B", ... "Z" for index 0..25.
std::string ballot_label(std::size_t index);

/// Judge persona, instruction, question, the labeled responses in the given
/// order, and the closing "VOTE: <LABEL>" / "VOTE: ABSTAIN" directive.
/// Throws TooFewCandidates (< 2 responses) or DuplicateLabel.
std::string render_ballot_prompt(const ConditionSpec& condition, const JudgePersona& judge,
                                 const std::string& question, const std::vector<LabeledResponse>& responses);

/// Inverse of the response section of render_ballot_prompt, for scripted judges.
std::vector<LabeledResponse> extract_ballot_responses(std::string_view prompt);

void to_json(nlohmann::json& j, const JudgePersona& judge);
void from_json(const nlohmann::json& j, JudgePersona& judge);
void to_json(nlohmann::json& j, const ConditionSpec& condition);
void from_json(const nlohmann::json& j, ConditionSpec& condition);

}  // namespace crowdvote
