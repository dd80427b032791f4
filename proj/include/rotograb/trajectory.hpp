#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "rotograb/actuation.hpp"
#include "rotograb/hand_geometry.hpp"

namespace rotograb {

struct TrajectorySample {
    double t = 0.0;  // s
    JointAngles angles{};  // rad, not yet checked against limits
};

/// Recorded joint-angle sequence for feedforward playback.
struct Trajectory {
    std::string name;
    std::string source;
    double nominal_rate = 0.0;  // Hz, 0 when unknown
    /// Any other `# key: value` header lines, kept verbatim.
    std::map<std::string, std::string> metadata;
    std::vector<TrajectorySample> samples;
};

/// CSV with header `t,thumb_j1,thumb_j2,...,pinkie_j2,plate`; angles in
/// degrees, time in seconds. Leading `# key: value` lines carry metadata
/// (name, source, nominal_rate_hz, anything else). Throws TrajectoryError
/// on a bad header, malformed number or non-increasing time.
Trajectory parse_trajectory_csv(std::string_view text);
Trajectory load_trajectory(const std::filesystem::path& path);
std::string trajectory_to_csv(const Trajectory& trajectory);

/// The CSV header line, without newline.
std::string trajectory_csv_header();

struct PlaybackReport {
    std::size_t samples_commanded = 0;
    /// |actual send time - scheduled time| over commanded samples, s.
    double mean_abs_lateness = 0.0;
    double max_abs_lateness = 0.0;
    /// Mean over consecutive samples of |actual interval - scheduled interval|
    /// divided by the scheduled interval.
    double mean_period_deviation = 0.0;
    /// Per degree of freedom, the extreme angles commanded (rad).
    std::array<Interval, kDofCount> reached{};
    bool stopped = false;
};

struct PlaybackOptions {
    /// Playback speed factor: sample times are divided by this.
    double rate_scale = 1.0;
    std::stop_token stop;
    /// Called after each sample's commands were sent.
    std::function<void(std::size_t index, const JointState& state)> on_sample;
};

/// Sends joint_to_motor(sample) for every sample at its scaled time,
/// scheduled against the start instant on the steady clock. Throws
/// PlaybackError with the sample index when a sample is out of limits
/// (before any of its commands go out) or the bus rejects a command.
PlaybackReport play_trajectory(const Trajectory& trajectory, const HandGeometry& geometry,
                               BusSession& session, const PlaybackOptions& options = {});

}  // namespace rotograb
