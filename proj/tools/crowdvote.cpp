// crowdvote: command-line front end.
//
//   crowdvote persona compile <spec.json> --out <prompt.txt>
//   crowdvote election run <config.json> [--seed N] [--cache F] [--out DIR] [--jobs N] [--run-id ID]
//   crowdvote report emit <run_dir> --format json|csv|svg-pie|text [--out PATH]
//   crowdvote timeline plan <meta.json> --mark S --process S [--listen S] [--preset pingpong|cut]
//                                       [--out plan.json] [--frames frames.txt]
//   crowdvote cache stats|clear <cache.jsonl>
//
// Exit codes: 0 success, 2 configuration/validation error, 3 runtime/backend failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "crowdvote/cache.hpp"
#include "crowdvote/election_config.hpp"
#include "crowdvote/error.hpp"
#include "crowdvote/persona.hpp"
#include "crowdvote/report.hpp"
#include "crowdvote/timeline.hpp"
#include "crowdvote/util.hpp"

namespace fs = std::filesystem;
using namespace crowdvote;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::string new_run_id() {
    std::string stamp;
    for (char c : utc_timestamp()) {
        if (c != '-' && c != ':') stamp += c;
    }
    std::random_device device;
    return fmt::format("{}-{:08x}", stamp, device());
}

int cmd_persona_compile(const std::string& spec_path, const std::string& out_path) {
    const PersonaSpec spec = load_persona(spec_path);
    const CompiledPrompt prompt = compile_prompt(spec);
    write_text_file(out_path, prompt.text);
    const nlohmann::ordered_json meta = {{"persona_id", spec.persona_id},
                                         {"content_hash", prompt.content_hash},
                                         {"exemplar_count", prompt.exemplar_count},
                                         {"estimated_tokens", estimate_size(prompt)}};
    write_text_file(out_path + ".meta.json", meta.dump(2) + "\n");
    std::cout << prompt.content_hash << "\n";
    return kExitOk;
}

struct ElectionRunArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string cache_path;
    std::string out_dir = "out";
    std::size_t jobs = 4;
    std::string run_id;
};

int cmd_election_run(const ElectionRunArgs& args) {
    const ElectionConfig config = load_election_config(args.config_path);

    const std::string run_id = args.run_id.empty() ? new_run_id() : args.run_id;
    const fs::path run_dir = fs::path(args.out_dir) / run_id;
    const fs::path cache_path = args.cache_path.empty() ? fs::path(args.out_dir) / "cache.jsonl" : fs::path(args.cache_path);
    fs::create_directories(run_dir);
    fs::remove(run_dir / "FAILED");

    ResponseCache cache(cache_path);
    BackendPool pool;

    nlohmann::ordered_json manifest = {{"run_id", run_id},
                                       {"config", fs::absolute(args.config_path).lexically_normal().string()},
                                       {"seed", args.seed.value_or(config.seed)},
                                       {"cache", fs::absolute(cache_path).lexically_normal().string()},
                                       {"out_dir", fs::absolute(run_dir).lexically_normal().string()},
                                       {"jobs", args.jobs},
                                       {"started_at", utc_timestamp()},
                                       {"status", "running"}};
    write_text_file(run_dir / "manifest.json", manifest.dump(2) + "\n");

    ElectionResults partial;
    partial.seed = args.seed.value_or(config.seed);
    ElectionRunOptions options;
    options.seed_override = args.seed;
    options.jobs = args.jobs;
    options.on_round_complete = [&](const RoundResult& round) {
        write_text_file(run_dir / (round.round_id + ".ballots.jsonl"), ballots_to_jsonl(round.ballots));
        partial.rounds.push_back(round);
        write_text_file(run_dir / "tallies.json", results_to_json(partial).dump(2) + "\n");
    };

    auto finish_manifest = [&](const std::string& status) {
        manifest["status"] = status;
        manifest["finished_at"] = utc_timestamp();
        manifest["rounds_completed"] = partial.rounds.size();
        manifest["backend_invocations"] = pool.total_invocations();
        manifest["network_invocations"] = pool.network_invocations();
        write_text_file(run_dir / "manifest.json", manifest.dump(2) + "\n");
    };

    try {
        const ElectionResults results = run_election(config, pool, cache, options);
        write_text_file(run_dir / "tallies.json", results_to_json(results).dump(2) + "\n");
        finish_manifest("complete");
        std::cout << emit_report(results, ReportFormat::kText);
    } catch (const std::exception& e) {
        write_text_file(run_dir / "FAILED", std::string(e.what()) + "\n");
        finish_manifest("failed");
        std::cerr << "run directory: " << run_dir.string() << " (partial outputs kept)\n";
        throw;
    }
    std::cout << fmt::format("backend calls: {} (network: {})\n", pool.total_invocations(), pool.network_invocations());
    std::cout << "run directory: " << run_dir.string() << "\n";
    return kExitOk;
}

ElectionResults load_run(const fs::path& run_dir) {
    const fs::path tallies = run_dir / "tallies.json";
    if (!fs::exists(tallies)) throw ValidationFailure("no tallies.json in " + run_dir.string());
    try {
        return results_from_json(nlohmann::json::parse(read_text_file(tallies)));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationFailure(tallies.string() + " is corrupt: " + e.what());
    }
}

int cmd_report_emit(const std::string& run_dir, const std::string& format_name, const std::string& out) {
    const ReportFormat format = parse_report_format(format_name);
    const ElectionResults results = load_run(run_dir);

    if (format == ReportFormat::kSvgPie) {
        const fs::path dir = out.empty() ? fs::path(run_dir) : fs::path(out);
        for (const auto& round : results.rounds) {
            if (round.tally.total_ballots == 0) continue;
            const fs::path path = dir / (round.round_id + ".svg");
            write_text_file(path, render_pie_svg(round));
            std::cout << path.string() << "\n";
        }
        return kExitOk;
    }

    const std::string document = emit_report(results, format);
    if (format == ReportFormat::kText && out.empty()) {
        std::cout << document;
        return kExitOk;
    }
    const fs::path path = out.empty() ? fs::path(run_dir) / ("report." + format_name) : fs::path(out);
    write_text_file(path, document);
    std::cout << path.string() << "\n";
    return kExitOk;
}

struct TimelineArgs {
    std::string meta_path;
    double mark = 0.0;
    double listen = 0.0;
    double process = 0.0;
    std::string preset = "pingpong";
    std::string out;
    std::string frames;
};

int cmd_timeline_plan(const TimelineArgs& args) {
    const timeline::SourceVideoMeta meta = timeline::load_meta(args.meta_path);
    const timeline::PlaybackPlan plan =
        args.preset == "cut" ? timeline::plan_cut_session(meta, args.mark, args.listen, args.process)
                             : timeline::plan_session(meta, args.mark, args.listen, args.process);
    const auto frames = timeline::plan_frames(plan, meta.fps);
    const double residual = timeline::sync_residual(plan, meta.fps, args.mark);

    nlohmann::json document = plan;
    document["meta"] = meta;
    document["mark"] = args.mark;
    document["preset"] = args.preset;
    document["frame_count"] = frames.size();
    document["sync_residual"] = residual;
    if (args.out.empty()) {
        std::cout << document.dump(2) << "\n";
    } else {
        write_text_file(args.out, document.dump(2) + "\n");
    }
    if (!args.frames.empty()) write_text_file(args.frames, timeline::frames_to_text(frames));

    for (const auto& segment : plan.segments) {
        if (segment.clamp != timeline::RateClamp::kNone) {
            std::cout << fmt::format("note: requested rate {:.3f} clamped {} to {:.3f}", segment.requested_rate,
                                     timeline::to_string(segment.clamp), segment.rate);
            if (segment.hold_seconds > 0) std::cout << fmt::format(", holding final frame {:.3f} s", segment.hold_seconds);
            std::cout << "\n";
        }
    }
    std::cout << fmt::format("sync residual: {:.3f} s\n", residual);
    return kExitOk;
}

int cmd_cache(const std::string& action, const std::string& path) {
    ResponseCache cache{fs::path(path)};
    if (action == "clear") {
        const std::size_t dropped = cache.size();
        cache.clear();
        std::cout << fmt::format("cleared {} entries from {}\n", dropped, path);
        return kExitOk;
    }
    std::cout << fmt::format("{}: {} entries\n", path, cache.size());
    for (const auto& [backend_id, count] : cache.entries_by_backend()) {
        std::cout << fmt::format("  {:<32} {:>8}\n", backend_id, count);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crowd Vote election harness, persona prompt compiler and playback planner"};
    app.require_subcommand(1);
    int exit_code = kExitOk;
    std::function<int()> action;

    auto* persona = app.add_subcommand("persona", "Persona prompt tools")->require_subcommand(1);
    auto* compile = persona->add_subcommand("compile", "Compile a persona spec into a prompt");
    std::string persona_spec;
    std::string persona_out;
    compile->add_option("spec", persona_spec, "Persona spec JSON")->required();
    compile->add_option("--out", persona_out, "Where to write the prompt text")->required();
    compile->callback([&] { action = [&] { return cmd_persona_compile(persona_spec, persona_out); }; });

    auto* election = app.add_subcommand("election", "Run elections")->require_subcommand(1);
    auto* run = election->add_subcommand("run", "Run every round of an election config");
    ElectionRunArgs run_args;
    std::uint64_t seed = 0;
    run->add_option("config", run_args.config_path, "Election config JSON")->required();
    auto* seed_option = run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--cache", run_args.cache_path, "Response cache file (default <out>/cache.jsonl)");
    run->add_option("--out", run_args.out_dir, "Output root")->capture_default_str();
    run->add_option("--jobs", run_args.jobs, "Concurrent backend requests")->capture_default_str()->check(CLI::PositiveNumber);
    run->add_option("--run-id", run_args.run_id, "Run directory name (default: timestamp)");
    run->callback([&] {
        if (*seed_option) run_args.seed = seed;
        action = [&] { return cmd_election_run(run_args); };
    });

    auto* report = app.add_subcommand("report", "Render reports")->require_subcommand(1);
    auto* emit = report->add_subcommand("emit", "Render a completed run");
    std::string report_dir;
    std::string report_format = "text";
    std::string report_out;
    emit->add_option("run_dir", report_dir, "Run directory containing tallies.json")->required();
    emit->add_option("--format", report_format, "json, csv, svg-pie or text")->capture_default_str();
    emit->add_option("--out", report_out, "Output file (directory for svg-pie)");
    emit->callback([&] { action = [&] { return cmd_report_emit(report_dir, report_format, report_out); }; });

    auto* timeline_cmd = app.add_subcommand("timeline", "Playback planning")->require_subcommand(1);
    auto* plan = timeline_cmd->add_subcommand("plan", "Plan listening and thinking playback for one exchange");
    TimelineArgs timeline_args;
    plan->add_option("meta", timeline_args.meta_path, "Video sidecar JSON")->required();
    plan->add_option("--mark", timeline_args.mark, "Transition mark to land on (seconds)")->required();
    plan->add_option("--process", timeline_args.process, "Response processing time (seconds)")->required();
    plan->add_option("--listen", timeline_args.listen, "Question duration (seconds)")->capture_default_str();
    plan->add_option("--preset", timeline_args.preset, "pingpong or cut")
        ->capture_default_str()
        ->check(CLI::IsMember({"pingpong", "cut"}));
    plan->add_option("--out", timeline_args.out, "Plan JSON (default: standard output)");
    plan->add_option("--frames", timeline_args.frames, "Frame index list");
    plan->callback([&] { action = [&] { return cmd_timeline_plan(timeline_args); }; });

    auto* cache = app.add_subcommand("cache", "Inspect the response cache")->require_subcommand(1);
    std::string cache_path;
    std::string cache_action;
    for (const char* name : {"stats", "clear"}) {
        auto* sub = cache->add_subcommand(name, std::string(name) + " a cache file");
        sub->add_option("path", cache_path, "Cache JSONL file")->required();
        sub->callback([&, name] {
            cache_action = name;
            action = [&] { return cmd_cache(cache_action, cache_path); };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        exit_code = action();
    } catch (const InvalidPersona& e) {
        std::cerr << "error: invalid persona spec\n";
        for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.category() == Error::Category::kValidation ? kExitValidation : kExitRuntime;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return exit_code;
}
