#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdvote/backend.hpp"
#include "crowdvote/cache.hpp"
#include "crowdvote/candidate.hpp"
#include "crowdvote/conditions.hpp"
#include "crowdvote/dataset.hpp"

namespace crowdvote {

enum class VoteKind { kChoice, kAbstain, kUnparseable };

std::string to_string(VoteKind kind);

/// A vote as read off the judge's text, before labels are resolved.
struct LabelVote {
    VoteKind kind = VoteKind::kUnparseable;
    std::optional<std::string> label;  // canonical label iff kind == kChoice

    bool operator==(const LabelVote&) const = default;
};

/// Classifies judge output. The last line of the form `VOTE: <token>`
/// (case-insensitive, surrounding whitespace tolerated) decides: a known label
/// is a choice, ABSTAIN an abstention. No vote line, an unknown token, or a
/// trailing run of vote lines that disagree is unparseable. Never throws.
LabelVote parse_vote(std::string_view raw_output, const std::vector<std::string>& labels);

struct ParsedVote {
    VoteKind kind = VoteKind::kUnparseable;
    std::optional<std::string> candidate_id;  // present iff kind == kChoice

    bool operator==(const ParsedVote&) const = default;
};

struct BallotRecord {
    std::string round_id;
    std::string question_id;
    std::string judge_id;
    std::map<std::string, std::string> permutation;  // label -> candidate_id
    std::string raw_output;
    ParsedVote vote;
    std::optional<std::string> error;  // judge call failure, if any

    bool operator==(const BallotRecord&) const = default;
};

struct RoundTally {
    std::map<std::string, std::int64_t> counts;  // every candidate on the ballots, zero included
    std::int64_t abstentions = 0;
    std::int64_t unparseable = 0;
    std::int64_t total_ballots = 0;

    bool operator==(const RoundTally&) const = default;
};

/// Resolves each choice through its own ballot's permutation.
/// Throws ForeignBallot when ballots come from more than one round.
RoundTally tally(const std::vector<BallotRecord>& ballots);

struct Decision {
    std::optional<std::string> winner;
    std::vector<std::string> tied;  // every maximizer when there is no unique winner

    bool is_tie() const { return !winner.has_value(); }
};

/// Unique maximum count wins; otherwise all maximizers tie. Abstentions and
/// unparseable ballots never win. Throws EmptyRound when total_ballots == 0.
Decision decide_winner(const RoundTally& tally);

struct RoundSpec {
    std::string round_id;
    std::vector<CandidateEntry> candidates;
    ConditionSpec condition;  // placeholders already resolved
    QuestionSet questions;
};

/// Shared machinery for running rounds. Judges use `judge_backend` unless
/// `judge_overrides` names a backend for their judge_id.
struct RoundContext {
    BackendPool& pool;
    ResponseCache& cache;
    BackendDescriptor judge_backend;
    std::map<std::string, BackendDescriptor> judge_overrides = {};
    std::size_t jobs = 1;
};

struct RoundOutcome {
    std::vector<BallotRecord> ballots;  // sorted by (question_id, judge_id)
    RoundTally tally;
};

/// One ballot per (question, judge). Candidate responses are generated once
/// per (candidate, question) through the cache and shared by all judges of
/// that question. Presentation order per ballot is a seeded shuffle keyed by
/// (seed, question_id, judge_id). A failing candidate aborts the round
/// (RoundAborted); a failing judge yields an unparseable ballot.
RoundOutcome run_round(const RoundSpec& spec, std::uint64_t seed, RoundContext& context);

/// Label -> candidate index order used for one ballot.
std::vector<std::size_t> ballot_order(std::uint64_t seed, const std::string& question_id,
                                      const std::string& judge_id, std::size_t candidate_count);

struct AdvancementRule {
    enum class TiePolicy { kNone, kAdvanceAll };

    std::size_t winners_per_round = 1;
    TiePolicy tie_policy = TiePolicy::kNone;
};

struct FeedingRound {
    std::string round_id;
    std::vector<CandidateEntry> candidates;
    RoundTally tally;
};

/// Winners of each feeding round, in round order, keeping their backends and
/// personas. Throws UnresolvedTie when a cutoff is tied and the rule has no
/// tie policy.
std::vector<CandidateEntry> advance(const std::vector<FeedingRound>& rounds, const AdvancementRule& rule);

struct CandidateSummary {
    std::string candidate_id;
    std::string display_name;

    bool operator==(const CandidateSummary&) const = default;
};

struct RoundResult {
    std::string round_id;
    std::string condition_name;
    std::vector<CandidateSummary> candidates;
    std::vector<std::string> question_ids;
    std::vector<std::string> judge_ids;
    std::vector<BallotRecord> ballots;  // may be empty when loaded from a tallies file
    RoundTally tally;
};

struct ElectionResults {
    std::uint64_t seed = 0;
    std::vector<RoundResult> rounds;
};

void to_json(nlohmann::json& j, const ParsedVote& vote);
void from_json(const nlohmann::json& j, ParsedVote& vote);
void to_json(nlohmann::json& j, const BallotRecord& ballot);
void from_json(const nlohmann::json& j, BallotRecord& ballot);
void to_json(nlohmann::json& j, const RoundTally& tally);
void from_json(const nlohmann::json& j, RoundTally& tally);

/// One compact JSON object per line.
std::string ballots_to_jsonl(const std::vector<BallotRecord>& ballots);
std::vector<BallotRecord> ballots_from_jsonl(std::string_view jsonl);

/// Everything except ballots (those live in the per-round JSONL files).
nlohmann::json results_to_json(const ElectionResults& results);
ElectionResults results_from_json(const nlohmann::json& json);

}  // namespace crowdvote
