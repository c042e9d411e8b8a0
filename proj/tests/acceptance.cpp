// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crowdvote/backend.hpp"
#include "crowdvote/cache.hpp"
#include "crowdvote/conditions.hpp"
#include "crowdvote/dataset.hpp"
#include "crowdvote/election.hpp"
#include "crowdvote/election_config.hpp"
#include "crowdvote/persona.hpp"
#include "crowdvote/report.hpp"
#include "crowdvote/timeline.hpp"

namespace fs = std::filesystem;
using namespace crowdvote;

namespace {

const fs::path kDataDir = CROWDVOTE_DATA_DIR;
const fs::path kConfigDir = CROWDVOTE_CONFIG_DIR;

/// Collects failure messages for one criterion.
struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        ++total;
        if (!ok && failures.size() < 5) failures.push_back(what);
        if (!ok) ++failed;
    }
    std::size_t failed = 0;
    std::size_t total = 0;
};

struct ScratchDir {
    fs::path path;
    ScratchDir() {
        std::random_device device;
        path = fs::temp_directory_path() / ("crowdvote-acceptance-" + std::to_string(device()));
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ignored;
        fs::remove_all(path, ignored);
    }
};

BackendDescriptor scripted(const std::string& id, const std::string& script) {
    BackendDescriptor d;
    d.backend_id = id;
    d.kind = BackendKind::kScripted;
    d.script_id = script;
    return d;
}

CandidateEntry scripted_candidate(const std::string& id, const std::string& script) {
    CandidateEntry c;
    c.candidate_id = id;
    c.display_name = "Candidate " + id;
    c.backend = scripted("cand-" + id, script);
    return c;
}

RoundSpec random_round(std::mt19937_64& rng, std::size_t judges, std::size_t questions, std::size_t candidates) {
    RoundSpec spec;
    spec.round_id = "r";
    spec.condition.condition_name = "synthetic";
    spec.condition.ballot_instruction = "Pick one response or abstain.";
    for (std::size_t j = 0; j < judges; ++j) {
        spec.condition.judges.push_back({"j" + std::to_string(j), "You are judge " + std::to_string(j) + "."});
    }
    spec.questions.set_id = "qs";
    for (std::size_t q = 0; q < questions; ++q) {
        spec.questions.questions.push_back({"q" + std::to_string(q), "Question " + std::to_string(q) + "?", std::nullopt, {}});
    }
    for (std::size_t c = 0; c < candidates; ++c) {
        spec.candidates.push_back(scripted_candidate("c" + std::to_string(c), "constant:" + std::string(1 + rng() % 40, 'a' + c)));
    }
    return spec;
}

std::int64_t tally_sum(const RoundTally& t) {
    std::int64_t sum = t.abstentions + t.unparseable;
    for (const auto& [id, count] : t.counts) sum += count;
    return sum;
}

RoundTally make_tally(std::map<std::string, std::int64_t> counts, std::int64_t abstain, std::int64_t unparseable) {
    RoundTally t;
    t.counts = std::move(counts);
    t.abstentions = abstain;
    t.unparseable = unparseable;
    t.total_ballots = tally_sum(t);
    return t;
}

double oracle_share(std::int64_t count, std::int64_t total) {
    return static_cast<double>(std::lround(1000.0L * count / total)) / 10.0;
}

// 1
void share_arithmetic(Check& check) {
    const VoteShares humor = percentages(make_tally({{"ours", 14}, {"baseline", 3}, {"other", 2}}, 5, 0));
    check.expect(humor.display_share("ours") == 58.3, "14/24 -> 58.3");
    check.expect(humor.display_share("baseline") == 12.5, "3/24 -> 12.5");
    check.expect(humor.display_share("other") == 8.3, "2/24 -> 8.3");
    check.expect(humor.abstain.display == 20.8, "abstain 5/24 -> 20.8");

    const VoteShares general = percentages(make_tally({{"biden", 18}, {"trump", 15}}, 7, 0));
    check.expect(general.display_share("biden") == 45.0, "18/40 -> 45.0");
    check.expect(general.display_share("trump") == 37.5, "15/40 -> 37.5");
    check.expect(general.abstain.display == 17.5, "abstain 7/40 -> 17.5");

    for (std::int64_t total = 1; total <= 200; ++total) {
        for (std::int64_t count = 0; count <= total; ++count) {
            check.expect(round_share(count, total) == oracle_share(count, total),
                         "round_share(" + std::to_string(count) + "," + std::to_string(total) + ")");
        }
    }
}

// 2
void conservation(Check& check) {
    std::mt19937_64 rng(2);
    const std::vector<std::string> judge_scripts = {"longest", "shortest", "mixed", "garbage", "vote:A", "vote:ABSTAIN"};
    const auto start = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t judges = 1 + rng() % 8;
        const std::size_t questions = 1 + rng() % 20;
        const std::size_t candidates = 2 + rng() % 4;
        const RoundSpec spec = random_round(rng, judges, questions, candidates);
        ResponseCache cache;
        BackendPool pool;
        RoundContext context{pool, cache, scripted("judge", judge_scripts[rng() % judge_scripts.size()]), {}, 1};
        const RoundOutcome out = run_round(spec, rng(), context);
        const auto expected = static_cast<std::int64_t>(judges * questions);
        check.expect(out.tally.total_ballots == expected && tally_sum(out.tally) == expected &&
                         out.ballots.size() == judges * questions,
                     "trial " + std::to_string(trial) + " lost or invented ballots");
        check.expect(out.tally.counts.size() == candidates, "trial " + std::to_string(trial) + " missing zero counts");
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.expect(seconds < 10.0, "1000 rounds took " + std::to_string(seconds) + " s");
}

// 3
void warm_cache_replay(Check& check) {
    ScratchDir scratch;
    const ElectionConfig config = load_election_config(kConfigDir / "sunglasses_humor.json");
    const auto run = [&](std::size_t& invocations) {
        ResponseCache cache(scratch.path / "cache.jsonl");
        BackendPool pool;
        const ElectionResults results = run_election(config, pool, cache);
        invocations = pool.total_invocations();
        std::string ballots;
        for (const auto& round : results.rounds) ballots += ballots_to_jsonl(round.ballots);
        return std::pair{ballots, emit_report(results, ReportFormat::kJson)};
    };
    std::size_t cold_calls = 0;
    std::size_t warm_calls = 0;
    const auto cold = run(cold_calls);
    const auto warm = run(warm_calls);
    check.expect(cold_calls > 0, "cold run made no backend calls");
    check.expect(warm_calls == 0, "warm run made " + std::to_string(warm_calls) + " backend calls");
    check.expect(!cold.first.empty() && cold.first == warm.first, "ballots JSONL differs between runs");
    check.expect(cold.second == warm.second, "JSON report differs between runs");
}

// 4
void position_bias(Check& check) {
    std::mt19937_64 rng(4);
    const RoundSpec spec = random_round(rng, 5, 6, 3);
    std::optional<RoundTally> reference;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ResponseCache cache;
        BackendPool pool;
        RoundContext context{pool, cache, scripted("judge", "longest")};
        const RoundOutcome out = run_round(spec, seed, context);
        if (!reference) reference = out.tally;
        check.expect(out.tally == *reference, "order-insensitive judge changed with seed " + std::to_string(seed));
    }

    const RoundSpec big = random_round(rng, 10, 100, 3);
    ResponseCache cache;
    BackendPool pool;
    RoundContext context{pool, cache, scripted("judge", "vote:A"), {}, 4};
    const RoundOutcome out = run_round(big, 99, context);
    const double n = static_cast<double>(out.tally.total_ballots);
    const double p = 1.0 / 3.0;
    const double sigma = std::sqrt(n * p * (1 - p));
    check.expect(out.tally.total_ballots == 1000, "expected 1000 ballots");
    for (const auto& [id, count] : out.tally.counts) {
        check.expect(std::abs(static_cast<double>(count) - n * p) <= 3 * sigma,
                     id + " got " + std::to_string(count) + " first-position votes");
    }
}

// 5
void vote_parsing(Check& check) {
    const std::vector<std::string> labels = {"A", "B", "C", "D", "E"};
    std::mt19937_64 rng(5);
    const std::vector<std::string> fragments = {"VOTE:", "vote : ", "A", "b", "ABSTAIN", "\n", "\n\n", " ", "\t", "Vote:E"};
    for (int i = 0; i < 100000; ++i) {
        std::string raw;
        const std::size_t length = rng() % 64;
        for (std::size_t k = 0; k < length; ++k) {
            if (rng() % 4 == 0) {
                raw += fragments[rng() % fragments.size()];
            } else {
                raw.push_back(static_cast<char>(rng() % 256));
            }
        }
        try {
            const LabelVote vote = parse_vote(raw, labels);
            const bool consistent = vote.kind == VoteKind::kChoice
                                        ? vote.label && std::count(labels.begin(), labels.end(), *vote.label) == 1
                                        : !vote.label.has_value();
            check.expect(consistent, "inconsistent vote for random input");
        } catch (...) {
            check.expect(false, "parse_vote threw on random input");
        }
    }

    const std::vector<std::string> keywords = {"VOTE", "vote", "Vote", "vOtE"};
    const std::vector<std::string> gaps = {"", " ", "\t", "  "};
    const std::vector<std::string> preambles = {"", "Response B made me laugh.\n", "Thinking...\n\nVOTE: ABSTAIN\nOn reflection:\n"};
    for (const auto& label : labels) {
        for (const std::string token : {label, std::string(1, static_cast<char>(std::tolower(label[0])))}) {
            for (const auto& keyword : keywords) {
                for (const auto& before : gaps) {
                    for (const auto& after : gaps) {
                        for (const auto& preamble : preambles) {
                            for (const std::string trailer : {"", "\n", "  \n\n"}) {
                                const std::string raw = preamble + before + keyword + before + ":" + after + token + after + trailer;
                                const LabelVote vote = parse_vote(raw, labels);
                                check.expect(vote.kind == VoteKind::kChoice && vote.label == label, "choice: " + raw);
                                const std::string abstain = preamble + keyword + before + ":" + after + "abstain" + trailer;
                                check.expect(parse_vote(abstain, labels).kind == VoteKind::kAbstain, "abstain: " + abstain);
                            }
                        }
                    }
                }
            }
            for (const auto& other : labels) {
                const LabelVote agree_or_not = parse_vote("VOTE: " + other + "\n\nVOTE: " + token, labels);
                if (other == label) {
                    check.expect(agree_or_not.label == label, "repeated agreeing vote lines");
                } else {
                    check.expect(agree_or_not.kind == VoteKind::kUnparseable, "conflicting final vote lines");
                }
            }
        }
    }
    for (const std::string bad : {"VOTE: F", "VOTE: AB", "VOTE:", "I pick A", "VOTES: A", "VOTE A", ""}) {
        check.expect(parse_vote(bad, labels).kind == VoteKind::kUnparseable, "should be unparseable: " + bad);
    }
}

// 6
void judge_panels(Check& check) {
    const std::map<std::string, std::set<std::string>> expected = {
        {"humor", {"affiliative", "self-enhancing", "aggressive", "self-defeating"}},
        {"authenticity", {"psychologist", "political-commentator", "american-voter", "family-member", "adversary"}},
        {"favorability", {"far-right", "conservative", "centrist", "liberal", "far-left"}},
    };
    for (const auto& [name, roles] : expected) {
        const ConditionSpec c = builtin_condition(name, "Joe Biden");
        std::set<std::string> ids;
        for (const auto& j : c.judges) ids.insert(j.judge_id);
        check.expect(c.judges.size() == roles.size() && ids == roles, name + " panel roles");
        check.expect(validate_condition(c).empty(), name + " panel invalid");
    }
}

// 7
void debate_fixtures(Check& check) {
    const QuestionSet set = load_question_set(kDataDir / "debate_2020.jsonl");
    check.expect(set.questions.size() == 17, "expected 17 debate questions");
    for (const std::string persona : {"joe_biden", "donald_trump"}) {
        const CandidateEntry candidate = as_fixture_candidate(set, persona);
        auto first = make_fixture_backend(candidate.backend);
        auto second = make_fixture_backend(candidate.backend);
        for (const auto& q : set.questions) {
            const auto transcript = ChatTranscript::single_turn("", q.text, q.question_id);
            const std::string a = first->generate(transcript);
            const std::string b = second->generate(transcript);
            check.expect(a == b && a == q.real_answers.at(persona), persona + " replay differs on " + q.question_id);
        }
    }
    check.expect(parse_question_set(serialize_question_set(set), set.set_id, "memory") == set,
                 "debate set does not round-trip");
}

/// Millisecond step simulation of ping-pong listening playback.
struct PingPongOracle {
    std::vector<std::pair<std::int64_t, std::int64_t>> segments;  // (start_ms, end_ms)
    std::int64_t final_ms = 0;
};

PingPongOracle simulate_listening(std::int64_t mark_ms, std::int64_t duration_ms) {
    PingPongOracle oracle;
    std::int64_t pos = mark_ms;
    int dir = -1;
    std::int64_t seg_start = pos;
    for (std::int64_t t = 0; t < duration_ms; ++t) {
        if ((dir < 0 && pos == 0) || (dir > 0 && pos == mark_ms)) {
            oracle.segments.emplace_back(seg_start, pos);
            seg_start = pos;
            dir = -dir;
        }
        pos += dir;
    }
    if (duration_ms > 0) oracle.segments.emplace_back(seg_start, pos);
    oracle.final_ms = pos;
    return oracle;
}

// 8
void timeline_sync(Check& check) {
    using namespace crowdvote::timeline;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double fps_choices[] = {24.0, 30.0, 60.0};
    for (int i = 0; i < 10000; ++i) {
        const double fps = fps_choices[rng() % 3];
        const double mark = 0.5 + 59.5 * unit(rng);
        const double processing = 0.2 + 9.8 * unit(rng);
        const double rate = 0.25 + 3.75 * unit(rng);
        const double current = std::max(0.0, mark - rate * processing);
        if ((mark - current) / processing < 0.25) continue;
        const SourceVideoMeta meta{fps, 60.0, {mark}};
        const PlaybackSegment s = plan_thinking(current, mark, processing, meta);
        if (s.clamp != RateClamp::kNone) continue;
        const auto frames = frame_schedule(s, fps);
        const double last = frames.empty() ? -1.0 : static_cast<double>(frames.back()) / fps;
        const double displayed = static_cast<double>(frames.size()) / fps;
        check.expect(std::abs(last - mark) <= 1.0 / fps + 1e-9, "last frame off mark");
        check.expect(std::abs(displayed - processing) <= 1.0 / fps + 1e-9, "displayed duration off");
    }

    for (int i = 0; i < 2000; ++i) {
        const std::int64_t mark_ms = 1 + static_cast<std::int64_t>(rng() % 8000);
        const std::int64_t duration_ms = static_cast<std::int64_t>(rng() % 30000);
        const SourceVideoMeta meta{30.0, 60.0, {mark_ms / 1000.0}};
        const ListeningPlan plan = plan_listening(meta, mark_ms / 1000.0, duration_ms / 1000.0);
        const PingPongOracle oracle = simulate_listening(mark_ms, duration_ms);
        bool same = plan.segments.size() == oracle.segments.size() &&
                    std::llround(plan.final_position * 1000) == oracle.final_ms;
        for (std::size_t k = 0; same && k < plan.segments.size(); ++k) {
            same = std::llround(plan.segments[k].source_start * 1000) == oracle.segments[k].first &&
                   std::llround(plan.segments[k].source_end * 1000) == oracle.segments[k].second;
        }
        check.expect(same, "ping-pong mismatch mark=" + std::to_string(mark_ms) + "ms duration=" +
                               std::to_string(duration_ms) + "ms");
        check.expect(validate_plan({plan.segments}).empty(), "listening plan not continuous");
    }
}

// 9
void report_round_trip(Check& check) {
    std::mt19937_64 rng(9);
    const std::regex angle_re("data-angle=\"([0-9.]+)\"");
    for (int i = 0; i < 500; ++i) {
        ElectionResults results;
        const std::size_t rounds = 1 + rng() % 3;
        for (std::size_t r = 0; r < rounds; ++r) {
            RoundResult round;
            round.round_id = "round-" + std::to_string(r) + (r == 1 ? ",\"odd\"" : "");
            round.condition_name = "favorability";
            std::map<std::string, std::int64_t> counts;
            const std::size_t n = 2 + rng() % 4;
            for (std::size_t c = 0; c < n; ++c) {
                const std::string id = "cand" + std::to_string(c);
                counts[id] = static_cast<std::int64_t>(rng() % 50);
                round.candidates.push_back({id, "Candidate " + std::to_string(c)});
            }
            round.tally = make_tally(counts, static_cast<std::int64_t>(rng() % 10), static_cast<std::int64_t>(rng() % 4));
            if (round.tally.total_ballots == 0) round.tally = make_tally(counts, 1, 0);
            results.rounds.push_back(round);

            const std::string svg = render_pie_svg(round);
            double sum = 0;
            for (auto it = std::sregex_iterator(svg.begin(), svg.end(), angle_re); it != std::sregex_iterator(); ++it) {
                sum += std::stod((*it)[1]);
            }
            check.expect(std::abs(sum - 360.0) <= 0.01, "pie angles sum to " + std::to_string(sum));
        }
        const auto back = tallies_from_csv(emit_report(results, ReportFormat::kCsv));
        bool same = back.size() == results.rounds.size();
        for (const auto& round : results.rounds) same = same && back.count(round.round_id) && back.at(round.round_id) == round.tally;
        check.expect(same, "CSV did not round-trip");
    }
}

std::string random_token(std::mt19937_64& rng, const std::string& prefix) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz ,.'!?";
    std::string out = prefix + "-" + std::to_string(rng()) + "-";
    const std::size_t n = 1 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) out += alphabet[rng() % alphabet.size()];
    return out;
}

std::size_t occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t at = haystack.find(needle); at != std::string::npos; at = haystack.find(needle, at + 1)) ++n;
    return n;
}

// 10
void persona_compilation(Check& check) {
    std::mt19937_64 rng(10);
    for (int i = 0; i < 1000; ++i) {
        PersonaSpec spec;
        spec.persona_id = "p" + std::to_string(i);
        spec.display_name = "Persona " + std::to_string(i);
        spec.role_description = random_token(rng, "ROLE");
        if (rng() % 2) spec.style_notes = random_token(rng, "STYLE");
        const std::size_t n = rng() % 8;
        for (std::size_t e = 0; e < n; ++e) {
            spec.exemplars.push_back({"e" + std::to_string(e), "tag", random_token(rng, "Q"), random_token(rng, "R")});
        }
        const CompiledPrompt first = compile_prompt(spec);
        const CompiledPrompt again = compile_prompt(nlohmann::json(spec).get<PersonaSpec>());
        check.expect(first.text == again.text && first.content_hash == again.content_hash, "compilation not idempotent");
        check.expect(first.exemplar_count == n, "exemplar count");
        std::size_t cursor = first.text.find(spec.role_description);
        check.expect(cursor == 0, "role description does not lead the prompt");
        for (const auto& exemplar : spec.exemplars) {
            check.expect(occurrences(first.text, exemplar.question) == 1 && occurrences(first.text, exemplar.response) == 1,
                         "exemplar " + exemplar.id + " not present exactly once");
            const std::size_t q = first.text.find(exemplar.question);
            const std::size_t r = first.text.find(exemplar.response);
            check.expect(q != std::string::npos && q > cursor && r > q, "exemplar " + exemplar.id + " out of order");
            cursor = r;
        }
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
        {"share arithmetic", share_arithmetic},
        {"ballot conservation over 1000 random rounds", conservation},
        {"warm-cache replay is byte-identical", warm_cache_replay},
        {"position bias neutralized", position_bias},
        {"vote parsing total and exact", vote_parsing},
        {"judge panels", judge_panels},
        {"debate fixtures replay", debate_fixtures},
        {"timeline sync and ping-pong", timeline_sync},
        {"report angles and CSV round-trip", report_round_trip},
        {"persona compilation", persona_compilation},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool ok = check.failed == 0;
        failed += ok ? 0 : 1;
        std::printf("%s %2zu  %s (%zu checks, %.2f s)\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    check.total, seconds);
        for (const auto& message : check.failures) std::printf("       %s\n", message.c_str());
        if (check.failed > check.failures.size()) {
            std::printf("       ... %zu failures in total\n", check.failed);
        }
    }
    return failed == 0 ? 0 : 1;
}
