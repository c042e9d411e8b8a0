#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace crowdvote::timeline {

/// Sidecar metadata of a labeled source video. `transition_marks` are the
/// timestamps (seconds) where the persona switches from listening to talking.
struct SourceVideoMeta {
    double fps = 30.0;
    double duration = 0.0;
    std::vector<double> transition_marks;
};

std::vector<std::string> validate_meta(const SourceVideoMeta& meta);

enum class Direction { kForward, kReverse };
enum class Purpose { kListening, kThinking, kAnswering };
/// Which bound of the playback-rate range, if any, replaced the requested rate.
enum class RateClamp { kNone, kLow, kHigh };

struct RateLimits {
    double min = 0.25;
    double max = 4.0;
};

/// Plays source [source_start, source_end] in `direction` at `rate` source
/// seconds per displayed second, then holds the final frame for
/// `hold_seconds`. A segment with source_start == source_end is a pure hold.
struct PlaybackSegment {
    double source_start = 0.0;
    double source_end = 0.0;
    Direction direction = Direction::kForward;
    double rate = 1.0;
    Purpose purpose = Purpose::kListening;
    double hold_seconds = 0.0;
    RateClamp clamp = RateClamp::kNone;
    double requested_rate = 1.0;
    /// Pin the last displayed frame to source_end (used to land on a mark).
    bool snap_final_frame = false;

    double moving_duration() const;
    double displayed_duration() const;
};

struct PlaybackPlan {
    std::vector<PlaybackSegment> segments;
};

/// Consecutive segments must be source-continuous; rates finite and positive.
std::vector<std::string> validate_plan(const PlaybackPlan& plan);

struct ListeningPlan {
    std::vector<PlaybackSegment> segments;
    double final_position = 0.0;
};

/// Reverse playback at rate 1 from `mark` while the user speaks. When the
/// question outlasts the footage before the mark, playback ping-pongs between
/// 0 and the mark. Throws InvalidMark when `mark` is not a labeled mark.
ListeningPlan plan_listening(const SourceVideoMeta& meta, double mark, double question_duration);

/// Forward playback from `current_pos` to `mark` stretched over
/// `processing_duration`. Rates outside `limits` are clamped: a low clamp
/// arrives early and holds the final frame, a high clamp arrives late.
/// Throws InvalidOrder when current_pos > mark.
PlaybackSegment plan_thinking(double current_pos, double mark, double processing_duration,
                              const SourceVideoMeta& meta, RateLimits limits = {});

/// Source frame index for each displayed frame of the segment.
std::vector<std::int64_t> frame_schedule(const PlaybackSegment& segment, double fps);

/// Concatenated frame schedules of every segment.
std::vector<std::int64_t> plan_frames(const PlaybackPlan& plan, double fps);

/// Listening followed by thinking.
PlaybackPlan plan_session(const SourceVideoMeta& meta, double mark, double question_duration,
                          double processing_duration, RateLimits limits = {});

/// Two-camera cut preset: the listening and thinking phases are static holds.
PlaybackPlan plan_cut_session(const SourceVideoMeta& meta, double mark, double question_duration,
                              double processing_duration);

/// Seconds between the plan's final displayed frame and `mark`.
double sync_residual(const PlaybackPlan& plan, double fps, double mark);

std::string to_string(Direction direction);
std::string to_string(Purpose purpose);
std::string to_string(RateClamp clamp);

void to_json(nlohmann::json& j, const SourceVideoMeta& meta);
void from_json(const nlohmann::json& j, SourceVideoMeta& meta);
void to_json(nlohmann::json& j, const PlaybackSegment& segment);
void to_json(nlohmann::json& j, const PlaybackPlan& plan);

/// Reads and validates a sidecar file {fps, duration, marks}; throws InvalidMark.
SourceVideoMeta load_meta(const std::filesystem::path& path);

/// One integer per line.
std::string frames_to_text(const std::vector<std::int64_t>& frames);

}  // namespace crowdvote::timeline
