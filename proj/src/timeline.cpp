#include "crowdvote/timeline.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "crowdvote/error.hpp"
#include "crowdvote/util.hpp"

namespace crowdvote::timeline {
namespace {

constexpr double kTimeEpsilon = 1e-9;
// Ping-pong plans longer than this are almost certainly a units mistake.
constexpr std::size_t kMaxListeningSegments = 100'000;

bool is_labeled_mark(const SourceVideoMeta& meta, double mark) {
    return std::any_of(meta.transition_marks.begin(), meta.transition_marks.end(),
                       [mark](double m) { return std::abs(m - mark) <= kTimeEpsilon; });
}

PlaybackSegment moving(double from, double to, Direction direction, Purpose purpose) {
    PlaybackSegment segment;
    segment.source_start = from;
    segment.source_end = to;
    segment.direction = direction;
    segment.purpose = purpose;
    return segment;
}

PlaybackSegment hold_at(double position, double seconds, Purpose purpose) {
    PlaybackSegment segment = moving(position, position, Direction::kForward, purpose);
    segment.hold_seconds = seconds;
    return segment;
}

void require_valid(const SourceVideoMeta& meta) {
    if (auto problems = validate_meta(meta); !problems.empty()) {
        std::string message = "invalid video metadata";
        for (const auto& p : problems) message += "\n  - " + p;
        throw InvalidMark(message);
    }
}

}  // namespace

std::vector<std::string> validate_meta(const SourceVideoMeta& meta) {
    std::vector<std::string> problems;
    if (!(std::isfinite(meta.fps) && meta.fps > 0)) problems.emplace_back("fps must be positive");
    if (!(std::isfinite(meta.duration) && meta.duration >= 0)) problems.emplace_back("duration must be >= 0");
    for (std::size_t i = 0; i < meta.transition_marks.size(); ++i) {
        const double mark = meta.transition_marks[i];
        if (!(std::isfinite(mark) && mark >= 0 && mark <= meta.duration)) {
            problems.push_back(fmt::format("mark {} ({}) lies outside [0, {}]", i, mark, meta.duration));
        }
        if (i > 0 && !(mark > meta.transition_marks[i - 1])) {
            problems.push_back(fmt::format("mark {} ({}) is not after the previous mark", i, mark));
        }
    }
    return problems;
}

double PlaybackSegment::moving_duration() const { return std::abs(source_end - source_start) / rate; }

double PlaybackSegment::displayed_duration() const { return moving_duration() + hold_seconds; }

std::vector<std::string> validate_plan(const PlaybackPlan& plan) {
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < plan.segments.size(); ++i) {
        const auto& s = plan.segments[i];
        if (!(std::isfinite(s.rate) && s.rate > 0)) problems.push_back(fmt::format("segment {} has rate {}", i, s.rate));
        if (s.hold_seconds < 0) problems.push_back(fmt::format("segment {} has a negative hold", i));
        const bool forward_ok = s.direction == Direction::kForward ? s.source_end >= s.source_start
                                                                    : s.source_end <= s.source_start;
        if (!forward_ok) problems.push_back(fmt::format("segment {} runs against its direction", i));
        if (i > 0 && std::abs(plan.segments[i - 1].source_end - s.source_start) > kTimeEpsilon) {
            problems.push_back(fmt::format("segment {} starts at {} but segment {} ended at {}", i, s.source_start,
                                           i - 1, plan.segments[i - 1].source_end));
        }
    }
    return problems;
}

ListeningPlan plan_listening(const SourceVideoMeta& meta, double mark, double question_duration) {
    require_valid(meta);
    if (!is_labeled_mark(meta, mark)) throw InvalidMark(fmt::format("{} s is not a labeled transition mark", mark));
    if (!(std::isfinite(question_duration) && question_duration >= 0)) {
        throw ValidationFailure("question_duration must be >= 0");
    }

    ListeningPlan plan;
    plan.final_position = mark;
    if (question_duration <= kTimeEpsilon) return plan;

    if (mark <= kTimeEpsilon) {
        // Nothing precedes the mark: hold the first frame.
        plan.segments.push_back(hold_at(mark, question_duration, Purpose::kListening));
        return plan;
    }

    double remaining = question_duration;
    double position = mark;
    Direction direction = Direction::kReverse;
    while (remaining > kTimeEpsilon) {
        if (plan.segments.size() >= kMaxListeningSegments) {
            throw ValidationFailure("listening plan would need more than 100000 ping-pong segments");
        }
        const double available = direction == Direction::kReverse ? position : mark - position;
        const double step = std::min(available, remaining);
        const double end = direction == Direction::kReverse ? position - step : position + step;
        plan.segments.push_back(moving(position, end, direction, Purpose::kListening));
        remaining -= step;
        position = end;
        direction = direction == Direction::kReverse ? Direction::kForward : Direction::kReverse;
    }
    plan.final_position = position;
    return plan;
}

PlaybackSegment plan_thinking(double current_pos, double mark, double processing_duration,
                              const SourceVideoMeta& meta, RateLimits limits) {
    require_valid(meta);
    if (!(std::isfinite(mark) && mark >= 0 && mark <= meta.duration + kTimeEpsilon)) {
        throw InvalidMark(fmt::format("mark {} s lies outside the video (duration {} s)", mark, meta.duration));
    }
    if (!(std::isfinite(processing_duration) && processing_duration > 0)) {
        throw ValidationFailure("processing_duration must be > 0");
    }
    if (!(current_pos >= 0) || current_pos > mark + kTimeEpsilon) {
        throw InvalidOrder(fmt::format("current position {} s is past the mark {} s", current_pos, mark));
    }
    current_pos = std::min(current_pos, mark);

    PlaybackSegment segment = moving(current_pos, mark, Direction::kForward, Purpose::kThinking);
    segment.snap_final_frame = true;
    segment.requested_rate = (mark - current_pos) / processing_duration;
    if (segment.requested_rate < limits.min) {
        segment.rate = limits.min;
        segment.clamp = RateClamp::kLow;
        segment.hold_seconds = std::max(0.0, processing_duration - segment.moving_duration());
    } else if (segment.requested_rate > limits.max) {
        segment.rate = limits.max;
        segment.clamp = RateClamp::kHigh;
    } else {
        segment.rate = segment.requested_rate;
    }
    return segment;
}

std::vector<std::int64_t> frame_schedule(const PlaybackSegment& segment, double fps) {
    std::vector<std::int64_t> frames;
    if (!(fps > 0) || !(segment.rate > 0)) return frames;

    const double displayed = segment.displayed_duration();
    const auto count = static_cast<std::int64_t>(std::ceil(displayed * fps - kTimeEpsilon));
    if (count <= 0) return frames;

    const auto start_frame = static_cast<std::int64_t>(std::llround(segment.source_start * fps));
    const auto end_frame = static_cast<std::int64_t>(std::llround(segment.source_end * fps));
    const std::int64_t lo = std::min(start_frame, end_frame);
    const std::int64_t hi = std::max(start_frame, end_frame);
    const std::int64_t sign = segment.direction == Direction::kForward ? 1 : -1;
    const double moving_time = segment.moving_duration();

    frames.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) {
        std::int64_t index = end_frame;
        if (static_cast<double>(k) / fps < moving_time - kTimeEpsilon) {
            const auto offset = static_cast<std::int64_t>(std::floor(static_cast<double>(k) * segment.rate + kTimeEpsilon));
            index = start_frame + sign * offset;
        }
        frames.push_back(std::clamp(index, lo, hi));
    }
    if (segment.snap_final_frame) frames.back() = end_frame;
    return frames;
}

std::vector<std::int64_t> plan_frames(const PlaybackPlan& plan, double fps) {
    std::vector<std::int64_t> frames;
    for (const auto& segment : plan.segments) {
        auto more = frame_schedule(segment, fps);
        frames.insert(frames.end(), more.begin(), more.end());
    }
    return frames;
}

PlaybackPlan plan_session(const SourceVideoMeta& meta, double mark, double question_duration,
                          double processing_duration, RateLimits limits) {
    ListeningPlan listening = plan_listening(meta, mark, question_duration);
    PlaybackPlan plan;
    plan.segments = std::move(listening.segments);
    plan.segments.push_back(plan_thinking(listening.final_position, mark, processing_duration, meta, limits));
    return plan;
}

PlaybackPlan plan_cut_session(const SourceVideoMeta& meta, double mark, double question_duration,
                              double processing_duration) {
    require_valid(meta);
    if (!is_labeled_mark(meta, mark)) throw InvalidMark(fmt::format("{} s is not a labeled transition mark", mark));
    if (!(question_duration >= 0) || !(processing_duration > 0)) {
        throw ValidationFailure("durations must be non-negative (processing positive)");
    }
    PlaybackPlan plan;
    if (question_duration > 0) plan.segments.push_back(hold_at(mark, question_duration, Purpose::kListening));
    PlaybackSegment thinking = hold_at(mark, processing_duration, Purpose::kThinking);
    thinking.snap_final_frame = true;
    plan.segments.push_back(thinking);
    return plan;
}

double sync_residual(const PlaybackPlan& plan, double fps, double mark) {
    const auto frames = plan_frames(plan, fps);
    if (frames.empty()) return std::abs(mark);
    return std::abs(static_cast<double>(frames.back()) / fps - mark);
}

std::string to_string(Direction direction) { return direction == Direction::kForward ? "forward" : "reverse"; }

std::string to_string(Purpose purpose) {
    switch (purpose) {
        case Purpose::kListening: return "listening";
        case Purpose::kThinking: return "thinking";
        case Purpose::kAnswering: return "answering";
    }
    return "listening";
}

std::string to_string(RateClamp clamp) {
    switch (clamp) {
        case RateClamp::kNone: return "none";
        case RateClamp::kLow: return "low";
        case RateClamp::kHigh: return "high";
    }
    return "none";
}

void to_json(nlohmann::json& j, const SourceVideoMeta& meta) {
    j = nlohmann::json{{"fps", meta.fps}, {"duration", meta.duration}, {"marks", meta.transition_marks}};
}

void from_json(const nlohmann::json& j, SourceVideoMeta& meta) {
    meta.fps = j.at("fps").get<double>();
    meta.duration = j.at("duration").get<double>();
    meta.transition_marks = j.at("marks").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const PlaybackSegment& s) {
    j = nlohmann::json{{"source_start", s.source_start},
                       {"source_end", s.source_end},
                       {"direction", to_string(s.direction)},
                       {"rate", s.rate},
                       {"purpose", to_string(s.purpose)},
                       {"hold_seconds", s.hold_seconds},
                       {"displayed_duration", s.displayed_duration()},
                       {"clamp", to_string(s.clamp)}};
    if (s.purpose == Purpose::kThinking) j["requested_rate"] = s.requested_rate;
}

void to_json(nlohmann::json& j, const PlaybackPlan& plan) { j = nlohmann::json{{"segments", plan.segments}}; }

SourceVideoMeta load_meta(const std::filesystem::path& path) {
    SourceVideoMeta meta;
    try {
        meta = nlohmann::json::parse(read_text_file(path)).get<SourceVideoMeta>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidMark(path.string() + ": " + e.what());
    }
    require_valid(meta);
    return meta;
}

std::string frames_to_text(const std::vector<std::int64_t>& frames) {
    std::string out;
    for (auto f : frames) {
        out += std::to_string(f);
        out += '\n';
    }
    return out;
}

}  // namespace crowdvote::timeline
