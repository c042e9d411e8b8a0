#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdvote/election.hpp"

namespace crowdvote {

/// One round of an election. Exactly one of `candidate_ids` (a primary) or
/// `advance_from` (a later round fed by earlier winners) is non-empty.
struct RoundDefinition {
    std::string round_id;
    std::vector<std::string> candidate_ids;
    std::vector<std::string> advance_from;
    std::string condition;
    std::string avatar_name = "the avatar";
    std::string question_set;
    std::vector<std::string> question_ids;  // empty: whole set
    std::optional<std::string> judge_backend;
    std::map<std::string, std::string> judge_backends;  // judge_id -> backend_id
};

/// Parsed election config. Relative paths in the JSON document are resolved
/// against the document's directory; personas and question sets are loaded
/// eagerly so that problems surface before any ballot is cast.
struct ElectionConfig {
    std::uint64_t seed = 0;
    std::map<std::string, BackendDescriptor> backends;
    std::vector<CandidateEntry> candidates;
    std::map<std::string, QuestionSet> question_sets;
    std::vector<ConditionSpec> conditions;  // built-ins plus any custom file
    std::optional<std::string> judge_backend;
    std::vector<RoundDefinition> rounds;
    AdvancementRule advancement_rule;

    const CandidateEntry* find_candidate(const std::string& candidate_id) const;
};

/// Throws ConfigError listing every problem found.
ElectionConfig parse_election_config(const nlohmann::json& json, const std::filesystem::path& base_dir);
ElectionConfig load_election_config(const std::filesystem::path& path);

struct ElectionRunOptions {
    std::optional<std::uint64_t> seed_override;
    std::size_t jobs = 1;
    /// Called after each round completes, before the next one starts.
    std::function<void(const RoundResult&)> on_round_complete;
};

/// Instantiates every referenced backend up front, then runs rounds in
/// order. Round n+1 starts only after round n completes.
ElectionResults run_election(const ElectionConfig& config, BackendPool& pool, ResponseCache& cache,
                             const ElectionRunOptions& options = {});

}  // namespace crowdvote
