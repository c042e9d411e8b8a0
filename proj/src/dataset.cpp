#include "crowdvote/dataset.hpp"

#include <set>

#include "crowdvote/error.hpp"
#include "crowdvote/util.hpp"

namespace crowdvote {

std::string CandidateEntry::resolved_system_prompt() const {
    if (persona) return compile_prompt(*persona).text;
    return system_prompt.value_or("");
}

const QuestionRecord* QuestionSet::find(const std::string& question_id) const {
    for (const auto& q : questions) {
        if (q.question_id == question_id) return &q;
    }
    return nullptr;
}

std::vector<std::string> validate_question_set(const QuestionSet& set) {
    std::vector<std::string> problems;
    if (set.questions.empty()) {
        problems.push_back("question set '" + set.set_id + "' is empty");
    }
    std::set<std::string> ids;
    std::set<std::string> reported;
    for (std::size_t i = 0; i < set.questions.size(); ++i) {
        const auto& q = set.questions[i];
        if (trim(q.question_id).empty()) {
            problems.push_back("question #" + std::to_string(i + 1) + " has an empty question_id");
        } else if (!ids.insert(q.question_id).second && reported.insert(q.question_id).second) {
            problems.push_back("duplicate question_id '" + q.question_id + "'");
        }
        if (trim(q.text).empty()) {
            problems.push_back("question '" + q.question_id + "' has empty text");
        }
    }
    return problems;
}

QuestionSet parse_question_set(std::string_view jsonl, const std::string& set_id, const std::string& source_name) {
    QuestionSet set;
    set.set_id = set_id;

    std::size_t line_number = 0;
    std::size_t start = 0;
    while (start <= jsonl.size()) {
        std::size_t end = jsonl.find('\n', start);
        if (end == std::string_view::npos) end = jsonl.size();
        const std::string_view line = jsonl.substr(start, end - start);
        ++line_number;
        start = end + 1;
        if (trim(line).empty()) {
            if (end == jsonl.size()) break;
            continue;
        }

        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source_name, line_number, e.byte, "invalid JSON");
        }
        if (!record.is_object()) {
            throw ParseError(source_name, line_number, 1, "expected a JSON object");
        }
        try {
            QuestionRecord q;
            q.question_id = record.at("question_id").get<std::string>();
            q.text = record.at("text").get<std::string>();
            if (record.contains("topic") && !record["topic"].is_null()) {
                q.topic = record["topic"].get<std::string>();
            }
            if (record.contains("real_answers") && !record["real_answers"].is_null()) {
                q.real_answers = record["real_answers"].get<std::map<std::string, std::string>>();
            }
            set.questions.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source_name, line_number, 1, e.what());
        }
        if (end == jsonl.size()) break;
    }

    if (auto problems = validate_question_set(set); !problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    return set;
}

QuestionSet load_question_set(const std::filesystem::path& path) {
    QuestionSet set = parse_question_set(read_text_file(path), path.stem().string(), path.string());
    set.source_path = path;
    return set;
}

std::string serialize_question_set(const QuestionSet& set) {
    std::string out;
    for (const auto& q : set.questions) {
        nlohmann::ordered_json record;
        record["question_id"] = q.question_id;
        record["text"] = q.text;
        if (q.topic) record["topic"] = *q.topic;
        if (!q.real_answers.empty()) {
            nlohmann::ordered_json answers = nlohmann::ordered_json::object();
            for (const auto& [persona, answer] : q.real_answers) answers[persona] = answer;
            record["real_answers"] = std::move(answers);
        }
        out += record.dump();
        out += '\n';
    }
    return out;
}

QuestionSet select_questions(const QuestionSet& set, const std::vector<std::string>& question_ids) {
    QuestionSet subset;
    subset.set_id = set.set_id;
    subset.source_path = set.source_path;
    std::vector<std::string> problems;
    for (const auto& id : question_ids) {
        if (const auto* q = set.find(id)) {
            subset.questions.push_back(*q);
        } else {
            problems.push_back("question set '" + set.set_id + "' has no question '" + id + "'");
        }
    }
    if (auto more = validate_question_set(subset); problems.empty() && !more.empty()) {
        problems = std::move(more);
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return subset;
}

std::map<std::string, std::string> recorded_answers(const QuestionSet& set, const std::string& persona_id) {
    std::map<std::string, std::string> answers;
    for (const auto& q : set.questions) {
        if (auto it = q.real_answers.find(persona_id); it != q.real_answers.end() && !it->second.empty()) {
            answers.emplace(q.question_id, it->second);
        }
    }
    return answers;
}

CandidateEntry as_fixture_candidate(const QuestionSet& set, const std::string& persona_id,
                                    std::optional<std::string> display_name) {
    auto answers = recorded_answers(set, persona_id);
    if (answers.empty()) throw NoAnswers(persona_id);

    CandidateEntry candidate;
    candidate.candidate_id = "real-" + persona_id;
    candidate.display_name = display_name.value_or(persona_id);
    candidate.backend.backend_id = "fixture-" + set.set_id + "-" + persona_id;
    candidate.backend.kind = BackendKind::kFixture;
    candidate.backend.fixture_answers = std::move(answers);
    return candidate;
}

}  // namespace crowdvote
