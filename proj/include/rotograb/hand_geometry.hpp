#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace rotograb {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

enum class Finger : std::size_t { Thumb = 0, Index, Middle, Ring, Pinkie };

inline constexpr std::size_t kFingerCount = 5;
inline constexpr std::array<Finger, kFingerCount> kAllFingers{
    Finger::Thumb, Finger::Index, Finger::Middle, Finger::Ring, Finger::Pinkie};

constexpr std::size_t index_of(Finger f) { return static_cast<std::size_t>(f); }

std::string_view finger_name(Finger finger);

/// Accepts "thumb", "index", "middle", "ring", "pinkie" (also "pinky").
std::optional<Finger> parse_finger(std::string_view name);

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x >= lo && x <= hi; }
    double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool operator==(const Interval&) const = default;
};

/// Where a finger's joint-1 fixed rotation center sits and which way the
/// finger points, in the palm frame (thumb: in the rotating plate frame).
/// `yaw` is the in-plane direction of the finger's outward axis.
struct FingerMount {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double yaw = 0.0;

    bool operator==(const FingerMount&) const = default;
};

/// Four finger bases spread evenly across the palm width along the front
/// edge; the thumb base sits on the plate opposite them.
std::array<FingerMount, 5> default_finger_mounts();

/// Calibration angles: tendon deltas are zero here.
inline constexpr double kJoint1Calibration = deg_to_rad(-45.0);
inline constexpr double kJoint23Calibration = 0.0;
inline constexpr double kPlateCalibration = 0.0;

/// Parametric description of the hand. Lengths in meters, angles in radians.
///
/// The palm frame has x across the palm width (towards the index side),
/// y towards the row of finger bases and z along the palm normal on the
/// grasping side. The world frame has z along the actuation tower axis;
/// the palm is tilted from it by `palm_tilt` about the palm y axis.
struct HandGeometry {
    double joint_radius = 0.006;
    std::array<double, 3> link_lengths{0.028, 0.024, 0.008};
    double finger_length = 0.096;
    double palm_width = 0.094;

    double base_mount_angle = deg_to_rad(45.0);
    double palm_tilt = deg_to_rad(10.0);
    std::array<FingerMount, kFingerCount> finger_mounts = default_finger_mounts();

    double r_palm = 0.045;
    double r_plate = 0.020;
    double gamma = deg_to_rad(15.0);
    /// Radial distance of the thumb tendon guide from the plate axis.
    double thumb_routing_offset = 0.0;

    Interval plate_limits{deg_to_rad(-65.0), deg_to_rad(65.0)};
    Interval joint1_limits{deg_to_rad(-45.0), deg_to_rad(90.0)};
    Interval joint23_limits{deg_to_rad(0.0), deg_to_rad(90.0)};

    double spool_radius_j1 = 0.005;
    double spool_radius_j23_flexor = 0.005;
    double spool_radius_j23_extensor = 0.010;
    double plate_spool_radius = 0.010;

    /// 3 rolling-joint spans of 2r plus the three link lengths.
    double kinematic_length() const;

    /// Throws GeometryError naming the first violated constraint.
    void validate() const;

    bool operator==(const HandGeometry&) const = default;
};

/// Built-in parameter set (9.6 cm fingers on a 9.4 cm palm).
HandGeometry default_geometry();

/// Reads the JSON configuration (millimeters and degrees). Missing keys take
/// the defaults. Throws GeometryError on parse failure or invariant violation.
HandGeometry load_geometry(const std::filesystem::path& path);
HandGeometry parse_geometry(std::string_view text);

/// Writes every key in the documented schema.
std::string serialize_geometry(const HandGeometry& geometry);

// ---------------------------------------------------------------------------
// Joint space
// ---------------------------------------------------------------------------

/// 11 actuated degrees of freedom: (joint 1, joint 2) per finger in the order
/// thumb, index, middle, ring, pinkie, then the plate.
inline constexpr std::size_t kDofCount = 11;
inline constexpr std::size_t kPlateDof = 10;

using JointAngles = std::array<double, kDofCount>;

constexpr std::size_t dof_index(Finger f, int joint) {
    return 2 * index_of(f) + (joint == 1 ? 0 : 1);
}

/// "thumb_j1", "thumb_j2", ..., "pinkie_j2", "plate".
std::string_view dof_name(std::size_t dof);

const Interval& dof_limits(const HandGeometry& geometry, std::size_t dof);

/// First degree of freedom outside its limits, if any.
std::optional<std::size_t> first_limit_violation(const JointAngles& angles,
                                                 const HandGeometry& geometry);

enum class LimitMode { Strict, Clamp };

/// A pose with every angle inside the geometry's limits. Joint 3 is not stored;
/// it always equals joint 2.
class JointState {
public:
    /// Every joint at its calibration angle.
    static JointState calibration();

    /// Strict mode throws LimitError on any out-of-range or non-finite angle;
    /// clamp mode saturates at the limit (non-finite angles still throw).
    static JointState from_angles(const JointAngles& angles, const HandGeometry& geometry,
                                  LimitMode mode = LimitMode::Strict);

    double theta1(Finger f) const { return angles_[dof_index(f, 1)]; }
    double theta2(Finger f) const { return angles_[dof_index(f, 2)]; }
    double theta3(Finger f) const { return theta2(f); }
    double plate() const { return angles_[kPlateDof]; }

    const JointAngles& angles() const { return angles_; }

    /// Copy with one finger's two angles replaced.
    JointState with_finger(Finger f, double theta1, double theta2, const HandGeometry& geometry,
                           LimitMode mode = LimitMode::Strict) const;
    JointState with_plate(double plate, const HandGeometry& geometry,
                          LimitMode mode = LimitMode::Strict) const;

    bool operator==(const JointState&) const = default;

private:
    explicit JointState(const JointAngles& angles) : angles_(angles) {}
    JointAngles angles_{};
};

}  // namespace rotograb
