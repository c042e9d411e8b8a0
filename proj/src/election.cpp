#include "crowdvote/election.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "crowdvote/error.hpp"
#include "crowdvote/hash.hpp"
#include "crowdvote/util.hpp"

namespace crowdvote {
namespace {

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string uppercase(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
    return out;
}

/// Token after "VOTE:" if `line` is a vote line.
std::optional<std::string> vote_token(std::string_view line) {
    const std::string t = trim(line);
    if (t.size() < 5 || uppercase(std::string_view(t).substr(0, 4)) != "VOTE") return std::nullopt;
    std::size_t i = 4;
    while (i < t.size() && is_ascii_space(t[i])) ++i;
    if (i >= t.size() || t[i] != ':') return std::nullopt;
    return trim(std::string_view(t).substr(i + 1));
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            return lines;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
}

void require_single_round(const std::vector<BallotRecord>& ballots) {
    for (const auto& ballot : ballots) {
        if (ballot.round_id != ballots.front().round_id) {
            throw ForeignBallot(fmt::format("ballot for round '{}' mixed into round '{}'", ballot.round_id,
                                            ballots.front().round_id));
        }
    }
}

}  // namespace

std::string to_string(VoteKind kind) {
    switch (kind) {
        case VoteKind::kChoice: return "choice";
        case VoteKind::kAbstain: return "abstain";
        case VoteKind::kUnparseable: return "unparseable";
    }
    return "unparseable";
}

LabelVote parse_vote(std::string_view raw_output, const std::vector<std::string>& labels) {
    const auto lines = split_lines(raw_output);

    std::optional<std::size_t> last;
    for (std::size_t i = lines.size(); i-- > 0;) {
        if (vote_token(lines[i])) {
            last = i;
            break;
        }
    }
    if (!last) return {};

    const std::string token = uppercase(*vote_token(lines[*last]));
    // Vote lines separated from the last one only by blank lines form the
    // final block; disagreement inside it is ambiguous.
    for (std::size_t i = *last; i-- > 0;) {
        if (trim(lines[i]).empty()) continue;
        auto other = vote_token(lines[i]);
        if (!other) break;
        if (uppercase(*other) != token) return {};
    }

    if (token == "ABSTAIN") return {VoteKind::kAbstain, std::nullopt};
    for (const auto& label : labels) {
        if (uppercase(label) == token) return {VoteKind::kChoice, label};
    }
    return {};
}

RoundTally tally(const std::vector<BallotRecord>& ballots) {
    RoundTally result;
    if (ballots.empty()) return result;
    require_single_round(ballots);

    for (const auto& ballot : ballots) {
        for (const auto& [label, candidate] : ballot.permutation) {
            result.counts.try_emplace(candidate, 0);
        }
    }
    for (const auto& ballot : ballots) {
        ++result.total_ballots;
        switch (ballot.vote.kind) {
            case VoteKind::kChoice: {
                const bool on_ballot =
                    ballot.vote.candidate_id &&
                    std::any_of(ballot.permutation.begin(), ballot.permutation.end(),
                                [&](const auto& entry) { return entry.second == *ballot.vote.candidate_id; });
                if (on_ballot) {
                    ++result.counts[*ballot.vote.candidate_id];
                } else {
                    ++result.unparseable;
                }
                break;
            }
            case VoteKind::kAbstain: ++result.abstentions; break;
            case VoteKind::kUnparseable: ++result.unparseable; break;
        }
    }
    return result;
}

Decision decide_winner(const RoundTally& tally) {
    if (tally.total_ballots == 0) throw EmptyRound();
    Decision decision;
    std::int64_t best = -1;
    for (const auto& [candidate, count] : tally.counts) best = std::max(best, count);
    for (const auto& [candidate, count] : tally.counts) {
        if (count == best) decision.tied.push_back(candidate);
    }
    if (decision.tied.size() == 1) {
        decision.winner = decision.tied.front();
        decision.tied.clear();
    }
    return decision;
}

std::vector<std::size_t> ballot_order(std::uint64_t seed, const std::string& question_id,
                                      const std::string& judge_id, std::size_t candidate_count) {
    std::vector<std::size_t> order(candidate_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, {question_id, judge_id}));
    portable_shuffle(order, rng);
    return order;
}

RoundOutcome run_round(const RoundSpec& spec, std::uint64_t seed, RoundContext& context) {
    const auto& candidates = spec.candidates;
    const auto& judges = spec.condition.judges;
    const auto& questions = spec.questions.questions;

    if (candidates.size() < 2) throw TooFewCandidates(candidates.size());
    if (candidates.size() > 26) throw ValidationFailure("at most 26 candidates per round");
    {
        std::set<std::string> ids;
        for (const auto& c : candidates) {
            if (!ids.insert(c.candidate_id).second) {
                throw ValidationFailure("round '" + spec.round_id + "' repeats candidate '" + c.candidate_id + "'");
            }
        }
    }
    if (auto problems = validate_condition(spec.condition); !problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    if (questions.empty()) throw ValidationFailure("round '" + spec.round_id + "' has no questions");

    std::vector<std::string> system_prompts;
    system_prompts.reserve(candidates.size());
    for (const auto& c : candidates) system_prompts.push_back(c.resolved_system_prompt());

    const std::size_t n_candidates = candidates.size();
    std::vector<std::vector<std::string>> responses(questions.size(), std::vector<std::string>(n_candidates));
    parallel_for(questions.size() * n_candidates, context.jobs, [&](std::size_t i) {
        const std::size_t q = i / n_candidates;
        const std::size_t c = i % n_candidates;
        const auto& question = questions[q];
        try {
            Backend& backend = context.pool.get(candidates[c].backend);
            const auto transcript =
                ChatTranscript::single_turn(system_prompts[c], question.text, question.question_id);
            responses[q][c] = cached_generate(backend, transcript, context.cache);
        } catch (const BackendError& e) {
            throw RoundAborted(fmt::format("round '{}': candidate '{}' failed on question '{}': {}", spec.round_id,
                                           candidates[c].candidate_id, question.question_id, e.what()));
        }
    });

    const std::size_t n_judges = judges.size();
    std::vector<BallotRecord> ballots(questions.size() * n_judges);
    parallel_for(ballots.size(), context.jobs, [&](std::size_t i) {
        const auto& question = questions[i / n_judges];
        const auto& judge = judges[i % n_judges];
        const auto& row = responses[i / n_judges];

        BallotRecord& ballot = ballots[i];
        ballot.round_id = spec.round_id;
        ballot.question_id = question.question_id;
        ballot.judge_id = judge.judge_id;

        const auto order = ballot_order(seed, question.question_id, judge.judge_id, n_candidates);
        std::vector<LabeledResponse> labeled;
        std::vector<std::string> labels;
        for (std::size_t slot = 0; slot < order.size(); ++slot) {
            const std::string label = ballot_label(slot);
            ballot.permutation[label] = candidates[order[slot]].candidate_id;
            labeled.push_back({label, row[order[slot]]});
            labels.push_back(label);
        }

        const std::string prompt = render_ballot_prompt(spec.condition, judge, question.text, labeled);
        auto override_it = context.judge_overrides.find(judge.judge_id);
        const BackendDescriptor& judge_descriptor =
            override_it == context.judge_overrides.end() ? context.judge_backend : override_it->second;
        try {
            Backend& backend = context.pool.get(judge_descriptor);
            ballot.raw_output = cached_generate(
                backend, ChatTranscript::single_turn(judge.persona_text, prompt, question.question_id), context.cache);
        } catch (const BackendError& e) {
            ballot.raw_output.clear();
            ballot.error = e.what();
            ballot.vote = {VoteKind::kUnparseable, std::nullopt};
            return;
        }

        const LabelVote vote = parse_vote(ballot.raw_output, labels);
        ballot.vote.kind = vote.kind;
        if (vote.kind == VoteKind::kChoice) ballot.vote.candidate_id = ballot.permutation.at(*vote.label);
    });

    std::sort(ballots.begin(), ballots.end(), [](const BallotRecord& a, const BallotRecord& b) {
        return std::tie(a.question_id, a.judge_id) < std::tie(b.question_id, b.judge_id);
    });

    RoundOutcome outcome;
    outcome.tally = tally(ballots);
    outcome.ballots = std::move(ballots);
    return outcome;
}

std::vector<CandidateEntry> advance(const std::vector<FeedingRound>& rounds, const AdvancementRule& rule) {
    if (rule.winners_per_round == 0) throw ValidationFailure("winners_per_round must be at least 1");

    std::vector<CandidateEntry> next;
    std::set<std::string> seen;
    for (const auto& round : rounds) {
        if (round.tally.total_ballots == 0) throw EmptyRound();

        std::vector<std::pair<std::string, std::int64_t>> ranked(round.tally.counts.begin(), round.tally.counts.end());
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

        std::size_t take = std::min(rule.winners_per_round, ranked.size());
        if (take < ranked.size() && ranked[take - 1].second == ranked[take].second) {
            if (rule.tie_policy == AdvancementRule::TiePolicy::kNone) {
                throw UnresolvedTie(fmt::format("round '{}' is tied at {} vote(s) for its advancing slot(s)",
                                                round.round_id, ranked[take].second));
            }
            const std::int64_t cutoff = ranked[take - 1].second;
            while (take < ranked.size() && ranked[take].second == cutoff) ++take;
        }

        for (std::size_t i = 0; i < take; ++i) {
            const auto& id = ranked[i].first;
            auto it = std::find_if(round.candidates.begin(), round.candidates.end(),
                                   [&](const CandidateEntry& c) { return c.candidate_id == id; });
            if (it == round.candidates.end()) {
                throw ValidationFailure("round '" + round.round_id + "' tallies unknown candidate '" + id + "'");
            }
            if (seen.insert(id).second) next.push_back(*it);
        }
    }
    return next;
}

void to_json(nlohmann::json& j, const ParsedVote& vote) {
    j = nlohmann::json{{"kind", to_string(vote.kind)}};
    if (vote.candidate_id) j["candidate_id"] = *vote.candidate_id;
}

void from_json(const nlohmann::json& j, ParsedVote& vote) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "choice") {
        vote.kind = VoteKind::kChoice;
        vote.candidate_id = j.at("candidate_id").get<std::string>();
    } else if (kind == "abstain") {
        vote = {VoteKind::kAbstain, std::nullopt};
    } else if (kind == "unparseable") {
        vote = {VoteKind::kUnparseable, std::nullopt};
    } else {
        throw ValidationFailure("unknown vote kind '" + kind + "'");
    }
}

void to_json(nlohmann::json& j, const BallotRecord& ballot) {
    j = nlohmann::json{{"round_id", ballot.round_id},       {"question_id", ballot.question_id},
                       {"judge_id", ballot.judge_id},       {"permutation", ballot.permutation},
                       {"raw_output", ballot.raw_output},   {"vote", ballot.vote}};
    if (ballot.error) j["error"] = *ballot.error;
}

void from_json(const nlohmann::json& j, BallotRecord& ballot) {
    ballot.round_id = j.at("round_id").get<std::string>();
    ballot.question_id = j.at("question_id").get<std::string>();
    ballot.judge_id = j.at("judge_id").get<std::string>();
    ballot.permutation = j.at("permutation").get<std::map<std::string, std::string>>();
    ballot.raw_output = j.at("raw_output").get<std::string>();
    ballot.vote = j.at("vote").get<ParsedVote>();
    if (j.contains("error")) ballot.error = j.at("error").get<std::string>();
}

void to_json(nlohmann::json& j, const RoundTally& tally) {
    j = nlohmann::json{{"counts", tally.counts},
                       {"abstentions", tally.abstentions},
                       {"unparseable", tally.unparseable},
                       {"total_ballots", tally.total_ballots}};
}

void from_json(const nlohmann::json& j, RoundTally& tally) {
    tally.counts = j.at("counts").get<std::map<std::string, std::int64_t>>();
    tally.abstentions = j.at("abstentions").get<std::int64_t>();
    tally.unparseable = j.at("unparseable").get<std::int64_t>();
    tally.total_ballots = j.at("total_ballots").get<std::int64_t>();
}

std::string ballots_to_jsonl(const std::vector<BallotRecord>& ballots) {
    std::string out;
    for (const auto& ballot : ballots) {
        out += nlohmann::json(ballot).dump();
        out += '\n';
    }
    return out;
}

std::vector<BallotRecord> ballots_from_jsonl(std::string_view jsonl) {
    std::vector<BallotRecord> ballots;
    for (std::string_view line : split_lines(jsonl)) {
        if (trim(line).empty()) continue;
        ballots.push_back(nlohmann::json::parse(line).get<BallotRecord>());
    }
    return ballots;
}

nlohmann::json results_to_json(const ElectionResults& results) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& round : results.rounds) {
        nlohmann::json candidates = nlohmann::json::array();
        for (const auto& c : round.candidates) {
            candidates.push_back({{"candidate_id", c.candidate_id}, {"display_name", c.display_name}});
        }
        nlohmann::json entry{{"round_id", round.round_id},
                             {"condition", round.condition_name},
                             {"candidates", std::move(candidates)},
                             {"question_ids", round.question_ids},
                             {"judge_ids", round.judge_ids},
                             {"tally", round.tally}};
        if (round.tally.total_ballots > 0) {
            const Decision decision = decide_winner(round.tally);
            if (decision.winner) {
                entry["winner"] = *decision.winner;
            } else {
                entry["tie"] = decision.tied;
            }
        }
        rounds.push_back(std::move(entry));
    }
    return nlohmann::json{{"seed", results.seed}, {"rounds", std::move(rounds)}};
}

ElectionResults results_from_json(const nlohmann::json& json) {
    ElectionResults results;
    results.seed = json.at("seed").get<std::uint64_t>();
    for (const auto& entry : json.at("rounds")) {
        RoundResult round;
        round.round_id = entry.at("round_id").get<std::string>();
        round.condition_name = entry.at("condition").get<std::string>();
        for (const auto& c : entry.at("candidates")) {
            round.candidates.push_back({c.at("candidate_id").get<std::string>(), c.at("display_name").get<std::string>()});
        }
        round.question_ids = entry.value("question_ids", std::vector<std::string>{});
        round.judge_ids = entry.value("judge_ids", std::vector<std::string>{});
        round.tally = entry.at("tally").get<RoundTally>();
        results.rounds.push_back(std::move(round));
    }
    return results;
}

}  // namespace crowdvote
