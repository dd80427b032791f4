#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rotograb/hand_geometry.hpp"
#include "rotograb/thumb_rotation.hpp"

namespace rotograb::teleop {

using thumb::PlateMode;

/// Standard 21-point hand landmark layout: wrist = 0, then four points per
/// digit from the base outwards (thumb 1-4, index 5-8, middle 9-12,
/// ring 13-16, pinkie 17-20).
inline constexpr std::size_t kLandmarkCount = 21;
inline constexpr std::size_t kWrist = 0;
inline constexpr std::size_t kThumbTip = 4;
inline constexpr std::size_t kIndexBase = 5;
inline constexpr std::size_t kPinkieBase = 17;

/// First landmark of a digit (thumb 1, index 5, ...).
constexpr std::size_t digit_base(Finger f) { return 1 + 4 * index_of(f); }

struct LandmarkFrame {
    double t = 0.0;           // s
    double confidence = 1.0;  // [0, 1]
    std::array<Eigen::Vector3d, kLandmarkCount> points{};
};

/// One wire record: `{"t": s, "conf": c, "pts": [[x, y, z] x 21]}`. Extra
/// keys are ignored. Throws FrameError for a malformed record.
LandmarkFrame parse_landmark_json(std::string_view line);
std::string landmark_json(const LandmarkFrame& frame);

/// Throws FrameError unless the frame has finite coordinates and a finite
/// confidence in [0, 1].
void validate_frame(const LandmarkFrame& frame);

/// Interior-angle flexion at the middle landmark of `a, b, c`: 0 for a
/// straight segment pair, pi/2 for a right angle. Throws FrameError for a
/// zero-length segment.
double flexion_at(const LandmarkFrame& frame, const std::array<std::size_t, 3>& triple);

struct DigitFlexion {
    double proximal = 0.0;  // drives joint 1
    double distal = 0.0;    // drives the coupled joints 2-3
};

/// Fingers: proximal = MCP flexion (wrist -> base -> next), distal = mean of
/// the PIP and DIP flexions. Thumb: MCP flexion and IP flexion.
std::array<DigitFlexion, kFingerCount> extract_human_angles(const LandmarkFrame& frame);

/// Thumb tip offset along the image x axis from the midpoint of the index
/// and pinkie bases, in units of that base-to-base distance. Positive means
/// towards image +x.
double thumb_lateral_offset(const LandmarkFrame& frame);

/// Right when the offset exceeds +threshold, Left below -threshold,
/// otherwise the previous mode holds.
PlateMode detect_thumb_mode(const LandmarkFrame& frame, PlateMode previous, double threshold = 0.15,
                            double min_confidence = 0.5);

/// Mode detection with a hold timer: inside the hysteresis band a Left or
/// Right mode holds for `hold_s` seconds of frame time, then falls back to
/// Middle.
struct ThumbModeTracker {
    PlateMode mode = PlateMode::Middle;
    std::optional<double> band_entered_at;

    ThumbModeTracker update(const LandmarkFrame& frame, double threshold, double hold_s,
                            double min_confidence = 0.5) const;
};

/// Affine map from a human angle range onto a robot joint range.
struct JointMapping {
    /// Landmark triples whose flexions are averaged into the input angle.
    std::vector<std::array<std::size_t, 3>> sources;
    Interval input;
    Interval output;
    double alpha = 0.35;  // smoothing factor in (0, 1]
};

struct RetargetProfile {
    /// Indexed like JointAngles for the ten finger joints.
    std::array<JointMapping, kDofCount - 1> joints;
    double plate_alpha = 0.35;
    double confidence_threshold = 0.5;
    double hysteresis = 0.15;  // fraction of palm width
    double mode_hold_s = 0.5;
    /// Drive the plate continuously from the lateral offset instead of the
    /// discrete modes.
    bool continuous_plate = false;
    Interval plate_input{-0.6, 0.6};

    static RetargetProfile defaults(const HandGeometry& geometry);

    /// Throws std::invalid_argument on empty input ranges, output ranges
    /// outside the joint limits or alpha outside (0, 1].
    void validate(const HandGeometry& geometry) const;
};

struct RetargetResult {
    JointState state;
    PlateMode mode = PlateMode::Middle;
    /// True when the frame was rejected and `state` is the previous state.
    bool held = false;
    std::string reason;
};

/// One retargeting step. The output is always a limit-valid JointState:
/// low-confidence or malformed frames return `previous` unchanged.
RetargetResult retarget(const LandmarkFrame& frame, const RetargetProfile& profile, const HandGeometry& geometry,
                        const JointState& previous, PlateMode previous_mode);

inline RetargetResult retarget(const LandmarkFrame& frame, const RetargetProfile& profile,
                               const HandGeometry& geometry, const JointState& previous) {
    return retarget(frame, profile, geometry, previous, thumb::nearest_mode(previous.plate(), geometry));
}

/// Stateful retargeting session: keeps the last pose and the mode tracker.
class Retargeter {
public:
    Retargeter(HandGeometry geometry, RetargetProfile profile, JointState start);

    RetargetResult push(const LandmarkFrame& frame);
    const JointState& state() const { return state_; }
    PlateMode mode() const { return tracker_.mode; }

private:
    HandGeometry geometry_;
    RetargetProfile profile_;
    JointState state_;
    ThumbModeTracker tracker_;
};

}  // namespace rotograb::teleop
