#include "crowdvote/election_config.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "crowdvote/error.hpp"
#include "crowdvote/util.hpp"

namespace crowdvote {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& path) {
    std::filesystem::path p(path);
    return p.is_absolute() ? p : base_dir / p;
}

template <typename T>
std::vector<T> optional_list(const nlohmann::json& j, const char* key) {
    return j.contains(key) ? j.at(key).get<std::vector<T>>() : std::vector<T>{};
}

}  // namespace

const CandidateEntry* ElectionConfig::find_candidate(const std::string& candidate_id) const {
    for (const auto& c : candidates) {
        if (c.candidate_id == candidate_id) return &c;
    }
    return nullptr;
}

ElectionConfig parse_election_config(const nlohmann::json& json, const std::filesystem::path& base_dir) {
    ElectionConfig config;
    std::vector<std::string> problems;
    auto note = [&](std::string text) { problems.push_back(std::move(text)); };

    try {
        config.seed = json.value("seed", std::uint64_t{0});

        for (const auto& entry : optional_list<nlohmann::json>(json, "backends")) {
            BackendDescriptor d = entry.get<BackendDescriptor>();
            if (d.fixture_path) d.fixture_path = resolve(base_dir, d.fixture_path->string());
            for (auto& p : validate_descriptor(d)) note(std::move(p));
            if (!config.backends.emplace(d.backend_id, d).second) note("duplicate backend '" + d.backend_id + "'");
        }

        if (json.contains("question_sets")) {
            for (const auto& [name, path] : json.at("question_sets").items()) {
                try {
                    QuestionSet set = load_question_set(resolve(base_dir, path.get<std::string>()));
                    set.set_id = name;
                    config.question_sets.emplace(name, std::move(set));
                } catch (const ValidationFailure& e) {
                    note(fmt::format("question set '{}': {}", name, e.what()));
                }
            }
        }

        config.conditions = builtin_conditions();
        if (json.contains("conditions_file")) {
            try {
                for (auto& custom : load_conditions(resolve(base_dir, json.at("conditions_file").get<std::string>()))) {
                    std::erase_if(config.conditions, [&](const ConditionSpec& c) {
                        return c.condition_name == custom.condition_name;
                    });
                    config.conditions.push_back(std::move(custom));
                }
            } catch (const ValidationFailure& e) {
                note(std::string("conditions_file: ") + e.what());
            }
        }

        for (const auto& entry : optional_list<nlohmann::json>(json, "candidates")) {
            CandidateEntry c;
            c.candidate_id = entry.at("candidate_id").get<std::string>();
            c.display_name = entry.value("display_name", c.candidate_id);
            const std::string backend_id = entry.at("backend").get<std::string>();
            if (auto it = config.backends.find(backend_id); it != config.backends.end()) {
                c.backend = it->second;
            } else {
                note(fmt::format("candidate '{}' references unknown backend '{}'", c.candidate_id, backend_id));
            }
            if (entry.contains("persona")) {
                try {
                    c.persona = load_persona(resolve(base_dir, entry.at("persona").get<std::string>()));
                    for (const auto& v : validate_persona(*c.persona)) {
                        note(fmt::format("candidate '{}' persona: {}", c.candidate_id, v.message));
                    }
                } catch (const ValidationFailure& e) {
                    note(fmt::format("candidate '{}' persona: {}", c.candidate_id, e.what()));
                }
            }
            if (entry.contains("system_prompt")) c.system_prompt = entry.at("system_prompt").get<std::string>();
            if (config.find_candidate(c.candidate_id) != nullptr) note("duplicate candidate '" + c.candidate_id + "'");
            if (c.candidate_id.starts_with("__")) note("candidate ids may not start with '__': " + c.candidate_id);
            config.candidates.push_back(std::move(c));
        }

        if (json.contains("judge_backend")) config.judge_backend = json.at("judge_backend").get<std::string>();

        if (json.contains("advancement_rule")) {
            const auto& rule = json.at("advancement_rule");
            config.advancement_rule.winners_per_round = rule.value("winners_per_round", std::size_t{1});
            const std::string policy = rule.value("tie_policy", std::string("none"));
            if (policy == "none") {
                config.advancement_rule.tie_policy = AdvancementRule::TiePolicy::kNone;
            } else if (policy == "advance_all") {
                config.advancement_rule.tie_policy = AdvancementRule::TiePolicy::kAdvanceAll;
            } else {
                note("unknown tie_policy '" + policy + "'");
            }
            if (config.advancement_rule.winners_per_round == 0) note("winners_per_round must be at least 1");
        }

        std::set<std::string> earlier_rounds;
        for (const auto& entry : optional_list<nlohmann::json>(json, "rounds")) {
            RoundDefinition r;
            r.round_id = entry.at("round_id").get<std::string>();
            r.candidate_ids = optional_list<std::string>(entry, "candidates");
            r.advance_from = optional_list<std::string>(entry, "advance_from");
            r.condition = entry.at("condition").get<std::string>();
            r.avatar_name = entry.value("avatar_name", r.avatar_name);
            r.question_set = entry.at("questions").get<std::string>();
            r.question_ids = optional_list<std::string>(entry, "question_ids");
            if (entry.contains("judge_backend")) r.judge_backend = entry.at("judge_backend").get<std::string>();
            if (entry.contains("judge_backends")) {
                r.judge_backends = entry.at("judge_backends").get<std::map<std::string, std::string>>();
            }

            const std::string who = "round '" + r.round_id + "'";
            if (!earlier_rounds.insert(r.round_id).second) note("duplicate " + who);
            if (r.candidate_ids.empty() == r.advance_from.empty()) {
                note(who + " needs exactly one of 'candidates' or 'advance_from'");
            }
            for (const auto& id : r.candidate_ids) {
                if (!config.find_candidate(id)) note(who + " references unknown candidate '" + id + "'");
            }
            for (const auto& id : r.advance_from) {
                if (id == r.round_id || !earlier_rounds.contains(id)) {
                    note(who + " advances from '" + id + "', which is not an earlier round");
                }
            }
            const ConditionSpec* condition = nullptr;
            for (const auto& c : config.conditions) {
                if (c.condition_name == r.condition) condition = &c;
            }
            if (!condition) note(who + ": " + UnknownCondition(r.condition).what());
            if (auto it = config.question_sets.find(r.question_set); it == config.question_sets.end()) {
                note(who + " references unknown question set '" + r.question_set + "'");
            } else {
                for (const auto& qid : r.question_ids) {
                    if (!it->second.find(qid)) note(who + " references unknown question '" + qid + "'");
                }
            }
            const auto judge_backend = r.judge_backend ? r.judge_backend : config.judge_backend;
            if (!judge_backend) {
                note(who + " has no judge_backend");
            } else if (!config.backends.contains(*judge_backend)) {
                note(who + " references unknown judge backend '" + *judge_backend + "'");
            }
            for (const auto& [judge_id, backend_id] : r.judge_backends) {
                if (!config.backends.contains(backend_id)) {
                    note(who + " maps judge '" + judge_id + "' to unknown backend '" + backend_id + "'");
                }
                if (condition && std::none_of(condition->judges.begin(), condition->judges.end(),
                                              [&](const JudgePersona& j) { return j.judge_id == judge_id; })) {
                    note(who + " maps unknown judge '" + judge_id + "'");
                }
            }
            config.rounds.push_back(std::move(r));
        }
        if (config.rounds.empty()) note("config defines no rounds");
    } catch (const nlohmann::json::exception& e) {
        note(std::string("malformed election config: ") + e.what());
    } catch (const InvalidDescriptor& e) {
        note(e.what());
    }

    if (!problems.empty()) {
        std::string message = "invalid election config:";
        for (const auto& p : problems) message += "\n  - " + p;
        throw ConfigError(message);
    }
    return config;
}

ElectionConfig load_election_config(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    nlohmann::json json;
    try {
        json = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("{}: invalid JSON at byte {}", path.string(), e.byte));
    }
    return parse_election_config(json, path.parent_path());
}

ElectionResults run_election(const ElectionConfig& config, BackendPool& pool, ResponseCache& cache,
                             const ElectionRunOptions& options) {
    for (const auto& [id, descriptor] : config.backends) {
        pool.get(descriptor);
    }

    ElectionResults results;
    results.seed = options.seed_override.value_or(config.seed);
    std::map<std::string, FeedingRound> finished;

    for (const auto& definition : config.rounds) {
        RoundSpec spec;
        spec.round_id = definition.round_id;
        if (!definition.candidate_ids.empty()) {
            for (const auto& id : definition.candidate_ids) spec.candidates.push_back(*config.find_candidate(id));
        } else {
            std::vector<FeedingRound> feeding;
            for (const auto& id : definition.advance_from) feeding.push_back(finished.at(id));
            spec.candidates = crowdvote::advance(feeding, config.advancement_rule);
        }
        spec.condition = find_condition(config.conditions, definition.condition, definition.avatar_name);
        const QuestionSet& set = config.question_sets.at(definition.question_set);
        spec.questions = definition.question_ids.empty() ? set : select_questions(set, definition.question_ids);

        const std::string judge_backend_id = definition.judge_backend.value_or(config.judge_backend.value_or(""));
        RoundContext context{pool, cache, config.backends.at(judge_backend_id)};
        for (const auto& [judge_id, backend_id] : definition.judge_backends) {
            context.judge_overrides.emplace(judge_id, config.backends.at(backend_id));
        }
        context.jobs = options.jobs;

        RoundOutcome outcome = run_round(spec, results.seed, context);

        RoundResult result;
        result.round_id = spec.round_id;
        result.condition_name = spec.condition.condition_name;
        for (const auto& c : spec.candidates) result.candidates.push_back({c.candidate_id, c.display_name});
        for (const auto& q : spec.questions.questions) result.question_ids.push_back(q.question_id);
        for (const auto& j : spec.condition.judges) result.judge_ids.push_back(j.judge_id);
        result.ballots = std::move(outcome.ballots);
        result.tally = outcome.tally;

        finished[spec.round_id] = FeedingRound{spec.round_id, spec.candidates, result.tally};
        if (options.on_round_complete) options.on_round_complete(result);
        results.rounds.push_back(std::move(result));
    }
    return results;
}

}  // namespace crowdvote
