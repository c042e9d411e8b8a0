#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crowdvote {

/// Base of every error raised by the library. `category()` lets callers
/// (the CLI in particular) map failures onto exit codes without RTTI chains.
class Error : public std::runtime_error {
public:
    enum class Category { kValidation, kRuntime };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

class ValidationFailure : public Error {
public:
    explicit ValidationFailure(const std::string& what) : Error(Category::kValidation, what) {}
};

class RuntimeFailure : public Error {
public:
    explicit RuntimeFailure(const std::string& what) : Error(Category::kRuntime, what) {}
};

// persona

class InvalidPersona : public ValidationFailure {
public:
    explicit InvalidPersona(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

// backend

class BackendError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

class Timeout : public BackendError {
public:
    Timeout(const std::string& backend_id, int attempts);
};

class RemoteError : public BackendError {
public:
    RemoteError(const std::string& backend_id, int status, const std::string& detail);
    int status() const noexcept { return status_; }

private:
    int status_;
};

class MissingFixture : public BackendError {
public:
    MissingFixture(const std::string& backend_id, const std::string& question_id);
    const std::string& question_id() const noexcept { return question_id_; }

private:
    std::string question_id_;
};

class CacheIO : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

/// Malformed backend descriptor or generation params.
class InvalidDescriptor : public ValidationFailure {
public:
    using ValidationFailure::ValidationFailure;
};

// conditions

class UnknownCondition : public ValidationFailure {
public:
    explicit UnknownCondition(const std::string& name)
        : ValidationFailure("unknown condition '" + name + "'") {}
};

class DuplicateLabel : public ValidationFailure {
public:
    explicit DuplicateLabel(const std::string& label)
        : ValidationFailure("duplicate or invalid ballot label '" + label + "'") {}
};

class TooFewCandidates : public ValidationFailure {
public:
    explicit TooFewCandidates(std::size_t count)
        : ValidationFailure("a ballot needs at least 2 candidates, got " + std::to_string(count)) {}
};

// election

class ForeignBallot : public ValidationFailure {
public:
    using ValidationFailure::ValidationFailure;
};

class EmptyRound : public ValidationFailure {
public:
    EmptyRound() : ValidationFailure("cannot decide a winner of a round with no ballots") {}
};

class UnresolvedTie : public ValidationFailure {
public:
    using ValidationFailure::ValidationFailure;
};

/// A candidate failed to produce a response; the round cannot be judged.
class RoundAborted : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

class ConfigError : public ValidationFailure {
public:
    using ValidationFailure::ValidationFailure;
};

// dataset

class ParseError : public ValidationFailure {
public:
    ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& detail);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class ValidationError : public ValidationFailure {
public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class NoAnswers : public ValidationFailure {
public:
    explicit NoAnswers(const std::string& persona_id)
        : ValidationFailure("no recorded answers for persona '" + persona_id + "'") {}
};

// timeline

class InvalidMark : public ValidationFailure {
public:
    using ValidationFailure::ValidationFailure;
};

class InvalidOrder : public ValidationFailure {
public:
    using ValidationFailure::ValidationFailure;
};

// report

class EmptyTally : public ValidationFailure {
public:
    EmptyTally() : ValidationFailure("cannot compute vote shares of an empty tally") {}
};

class UnsupportedFormat : public ValidationFailure {
public:
    explicit UnsupportedFormat(const std::string& format)
        : ValidationFailure("unsupported report format '" + format + "'") {}
};

}  // namespace crowdvote
