#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdvote/candidate.hpp"

namespace crowdvote {

struct QuestionRecord {
    std::string question_id;
    std::string text;
    std::optional<std::string> topic;
    std::map<std::string, std::string> real_answers;  // persona_id -> recorded answer (may be empty)

    bool operator==(const QuestionRecord&) const = default;
};

struct QuestionSet {
    std::string set_id;
    std::vector<QuestionRecord> questions;
    std::optional<std::filesystem::path> source_path;

    const QuestionRecord* find(const std::string& question_id) const;

    /// Equality ignores source_path.
    bool operator==(const QuestionSet& other) const {
        return set_id == other.set_id && questions == other.questions;
    }
};

/// Empty set, duplicate ids, empty ids or texts.
std::vector<std::string> validate_question_set(const QuestionSet& set);

/// Parses JSONL, one QuestionRecord per line; blank lines are skipped.
/// Throws ParseError (with line and column) or ValidationError (all problems).
QuestionSet parse_question_set(std::string_view jsonl, const std::string& set_id, const std::string& source_name);

/// set_id defaults to the file stem.
QuestionSet load_question_set(const std::filesystem::path& path);

/// JSONL with keys in a fixed order; parse_question_set(serialize(s)) == s.
std::string serialize_question_set(const QuestionSet& set);

/// Subset in the order of `question_ids`; throws ValidationError on unknown ids.
QuestionSet select_questions(const QuestionSet& set, const std::vector<std::string>& question_ids);

/// question_id -> non-empty recorded answer of `persona_id`.
std::map<std::string, std::string> recorded_answers(const QuestionSet& set, const std::string& persona_id);

/// Candidate replaying the recorded answers of `persona_id`. Questions the
/// persona did not answer raise MissingFixture when asked.
/// Throws NoAnswers when the persona answered nothing.
CandidateEntry as_fixture_candidate(const QuestionSet& set, const std::string& persona_id,
                                    std::optional<std::string> display_name = std::nullopt);

}  // namespace crowdvote
