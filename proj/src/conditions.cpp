#include "crowdvote/conditions.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "crowdvote/error.hpp"
#include "crowdvote/util.hpp"

namespace crowdvote {

namespace detail {
extern const std::string_view kBundledConditionsJson;
}

namespace {

constexpr std::string_view kResponseHeaderPrefix = "=== Response ";
constexpr std::string_view kHeaderSuffix = " ===";
constexpr std::string_view kEndOfResponses = "=== End of responses ===";

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
}

/// Placeholders other than {persona} are never resolvable.
void check_placeholders(const std::string& where, const std::string& text, std::vector<std::string>& problems) {
    for (std::size_t open = text.find('{'); open != std::string::npos; open = text.find('{', open + 1)) {
        const std::size_t close = text.find('}', open);
        if (close == std::string::npos) break;
        const std::string_view token(text.data() + open, close - open + 1);
        const bool identifier = std::all_of(token.begin() + 1, token.end() - 1, [](unsigned char c) {
            return std::isalnum(c) || c == '_';
        });
        if (identifier && token.size() > 2 && token != kPersonaPlaceholder) {
            problems.push_back(where + " uses unknown placeholder " + std::string(token));
        }
    }
}

bool valid_label(const std::string& label) { return label.size() == 1 && label[0] >= 'A' && label[0] <= 'Z'; }

}  // namespace

std::vector<std::string> validate_condition(const ConditionSpec& condition) {
    std::vector<std::string> problems;
    const std::string who = "condition '" + condition.condition_name + "'";
    if (trim(condition.condition_name).empty()) problems.emplace_back("condition_name is empty");
    if (condition.judges.empty()) problems.push_back(who + " has no judges");
    if (lowercase(condition.ballot_instruction).find("abstain") == std::string::npos) {
        problems.push_back(who + " ballot_instruction does not offer abstention");
    }
    check_placeholders(who + " ballot_instruction", condition.ballot_instruction, problems);

    std::set<std::string> ids;
    for (const auto& judge : condition.judges) {
        if (trim(judge.judge_id).empty()) {
            problems.push_back(who + " has a judge with an empty id");
        } else if (!ids.insert(judge.judge_id).second) {
            problems.push_back(who + " repeats judge id '" + judge.judge_id + "'");
        }
        if (trim(judge.persona_text).empty()) {
            problems.push_back(who + " judge '" + judge.judge_id + "' has empty persona_text");
        }
        check_placeholders(who + " judge '" + judge.judge_id + "'", judge.persona_text, problems);
    }
    return problems;
}

ConditionSpec resolve_placeholders(ConditionSpec condition, const std::string& avatar_persona_name) {
    replace_all(condition.ballot_instruction, kPersonaPlaceholder, avatar_persona_name);
    for (auto& judge : condition.judges) {
        replace_all(judge.persona_text, kPersonaPlaceholder, avatar_persona_name);
    }
    return condition;
}

std::vector<ConditionSpec> parse_conditions(std::string_view json_text, const std::string& source_name) {
    std::vector<ConditionSpec> conditions;
    try {
        const auto json = nlohmann::json::parse(json_text);
        conditions = json.at("conditions").get<std::vector<ConditionSpec>>();
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source_name, 1, e.byte, e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationFailure(source_name + ": " + e.what());
    }
    std::vector<std::string> problems;
    std::set<std::string> names;
    for (const auto& condition : conditions) {
        auto more = validate_condition(condition);
        problems.insert(problems.end(), more.begin(), more.end());
        if (!names.insert(condition.condition_name).second) {
            problems.push_back("duplicate condition '" + condition.condition_name + "'");
        }
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return conditions;
}

std::vector<ConditionSpec> load_conditions(const std::filesystem::path& path) {
    return parse_conditions(read_text_file(path), path.string());
}

const std::vector<ConditionSpec>& builtin_conditions() {
    static const std::vector<ConditionSpec> conditions =
        parse_conditions(detail::kBundledConditionsJson, "<bundled conditions.json>");
    return conditions;
}

ConditionSpec find_condition(const std::vector<ConditionSpec>& conditions, const std::string& name,
                             const std::string& avatar_persona_name) {
    for (const auto& condition : conditions) {
        if (condition.condition_name == name) {
            return resolve_placeholders(condition, avatar_persona_name);
        }
    }
    throw UnknownCondition(name);
}

ConditionSpec builtin_condition(const std::string& name, const std::string& avatar_persona_name) {
    return find_condition(builtin_conditions(), name, avatar_persona_name);
}

std::string ballot_label(std::size_t index) {
    if (index >= 26) throw ValidationFailure("at most 26 candidates can share a ballot");
    return std::string(1, static_cast<char>('A' + index));
}

std::string render_ballot_prompt(const ConditionSpec& condition, const JudgePersona& judge,
                                 const std::string& question, const std::vector<LabeledResponse>& responses) {
    if (responses.size() < 2) throw TooFewCandidates(responses.size());
    std::set<std::string> labels;
    for (const auto& response : responses) {
        if (!valid_label(response.label) || !labels.insert(response.label).second) {
            throw DuplicateLabel(response.label);
        }
    }

    std::string prompt;
    prompt += judge.persona_text;
    prompt += "\n\n";
    prompt += condition.ballot_instruction;
    prompt += "\n\nQuestion:\n";
    prompt += question;
    prompt += "\n";
    for (const auto& response : responses) {
        prompt += "\n";
        prompt += kResponseHeaderPrefix;
        prompt += response.label;
        prompt += kHeaderSuffix;
        prompt += "\n";
        prompt += response.text;
        prompt += "\n";
    }
    prompt += "\n";
    prompt += kEndOfResponses;
    prompt += "\nYou may explain your choice first. Then finish with exactly one line of the form \"VOTE: <LABEL>\" where <LABEL> is one of ";
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (i > 0) prompt += ", ";
        prompt += responses[i].label;
    }
    prompt += ", or with the line \"VOTE: ABSTAIN\" to abstain.\n";
    return prompt;
}

std::vector<LabeledResponse> extract_ballot_responses(std::string_view prompt) {
    std::vector<LabeledResponse> responses;
    const std::string first_marker = "\n" + std::string(kResponseHeaderPrefix);
    std::size_t pos = prompt.find(first_marker);
    const std::size_t end_pos = prompt.rfind("\n\n" + std::string(kEndOfResponses));
    if (pos == std::string_view::npos || end_pos == std::string_view::npos) {
        return responses;
    }
    pos += 1;
    while (pos < end_pos && prompt.substr(pos).starts_with(kResponseHeaderPrefix)) {
        const std::size_t label_start = pos + kResponseHeaderPrefix.size();
        const std::size_t label_end = prompt.find(kHeaderSuffix, label_start);
        if (label_end == std::string_view::npos) break;
        const std::size_t text_start = label_end + kHeaderSuffix.size() + 1;
        // The body ends where the next header (or the end marker) begins.
        std::size_t next = prompt.find("\n\n" + std::string(kResponseHeaderPrefix), text_start);
        if (next == std::string_view::npos || next > end_pos) next = end_pos;
        if (text_start > next) break;
        responses.push_back({std::string(prompt.substr(label_start, label_end - label_start)),
                             std::string(prompt.substr(text_start, next - text_start))});
        pos = next + 2;
    }
    return responses;
}

void to_json(nlohmann::json& j, const JudgePersona& judge) {
    j = nlohmann::json{{"judge_id", judge.judge_id}, {"persona_text", judge.persona_text}};
}

void from_json(const nlohmann::json& j, JudgePersona& judge) {
    judge.judge_id = j.at("judge_id").get<std::string>();
    judge.persona_text = j.at("persona_text").get<std::string>();
}

void to_json(nlohmann::json& j, const ConditionSpec& condition) {
    j = nlohmann::json{{"condition_name", condition.condition_name},
                       {"ballot_instruction", condition.ballot_instruction},
                       {"judges", condition.judges}};
}

void from_json(const nlohmann::json& j, ConditionSpec& condition) {
    condition.condition_name = j.at("condition_name").get<std::string>();
    condition.ballot_instruction = j.at("ballot_instruction").get<std::string>();
    condition.judges = j.at("judges").get<std::vector<JudgePersona>>();
}

}  // namespace crowdvote
