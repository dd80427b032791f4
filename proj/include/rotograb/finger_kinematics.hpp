#pragma once

#include <array>

#include <Eigen/Geometry>

#include "rotograb/hand_geometry.hpp"

namespace rotograb::kinematics {

// All planar quantities live in the finger plane: x along the fixed link,
// y towards flexion. Positive angles flex the finger inwards; the extensor
// runs along the -y side of each joint.

/// Vector from the extensor exit point P to the entry point P' of one
/// rolling-contact joint, expressed in the fixed-link frame:
/// [r sin t + 2r cos(t/2), r (1 - cos t) + 2r sin(t/2)].
Eigen::Vector2d tendon_vector(double theta, double r);

/// Same, rejecting angles outside `limits` with LimitError.
Eigen::Vector2d tendon_vector(double theta, double r, const Interval& limits);

/// |tendon_vector(theta)| - |tendon_vector(theta_init)|. Positive values
/// lengthen the extensor; the flexor changes by the negative amount.
double tendon_delta(double theta, double theta_init, double r);
double tendon_delta(double theta, double theta_init, double r, const Interval& limits);

/// Pose of the moving link relative to the fixed link: a half rotation about
/// the fixed center, a 2r step along the rotated link axis, then the second
/// half rotation about the moving center.
Eigen::Isometry2d joint_transform(double theta, double r);

/// Rotation centers and tendon attachment points of one joint, in the
/// fixed-link frame with the fixed center at the origin.
struct JointFrame2D {
    Eigen::Vector2d fixed_center;   // O
    Eigen::Vector2d moving_center;  // O'
    Eigen::Vector2d exit_point;     // P, on the fixed link
    Eigen::Vector2d entry_point;    // P', on the moving link
    double theta = 0.0;
};

/// Built by composing joint_transform, independent of tendon_vector.
JointFrame2D joint_frame(double theta, double r);

/// Numerical inverse of tendon_delta on `limits` by bisection. Throws
/// RangeError when `delta` is not achievable inside the interval.
double invert_tendon_delta(double delta, double theta_init, double r, const Interval& limits);

/// Signed length changes from calibration for one joint.
struct TendonPair {
    double flexor = 0.0;
    double extensor = 0.0;
};

struct FingerTendons {
    TendonPair joint1;
    TendonPair joint2;
    TendonPair joint3;

    /// Joints 2 and 3 share one extensor tendon.
    double coupled_extensor() const { return joint2.extensor + joint3.extensor; }
};

/// Tendon deltas for one finger. Each joint is evaluated in the frame of the
/// link it is mounted on (joint 2 in the frame of link 1, and so on), so the
/// joint-2 and joint-3 values never see theta1.
FingerTendons finger_tendon_deltas(const HandGeometry& geometry, double theta1, double theta2);

/// Length of the joint-2 extensor between O1 and P2', measured along its
/// route through the joint-1 rotation centers (O1 -> O1' -> P2 -> P2') with
/// every point placed by the composed chain in the finger-base frame.
double routed_joint2_extensor_length(const HandGeometry& geometry, double theta1, double theta2);

/// Planar chain of one finger with theta3 = theta2.
struct PlanarChain {
    std::array<Eigen::Isometry2d, 3> fixed_frames;   // frame of the link carrying joint i, at O_i
    std::array<Eigen::Isometry2d, 3> moving_frames;  // frame of the link after joint i, at O_i'
    Eigen::Vector2d tip;
};

PlanarChain planar_chain(const HandGeometry& geometry, double theta1, double theta2);

/// Base (joint-1 fixed center), the three joint contact points and the tip.
struct FingerPoints {
    std::array<Eigen::Vector3d, 5> points;

    const Eigen::Vector3d& base() const { return points.front(); }
    const Eigen::Vector3d& tip() const { return points.back(); }
};

/// World pose of a finger's planar frame (x: outward link axis at zero
/// joint angle, y: flexion direction, z: plane normal). The plate angle only
/// affects the thumb.
Eigen::Isometry3d finger_base_pose(const HandGeometry& geometry, Finger finger, double plate);

/// Pose of the palm in the world frame (tower axis = world z).
Eigen::Isometry3d palm_pose(const HandGeometry& geometry);

/// World-frame forward kinematics. Strict mode throws LimitError for
/// angles outside the joint limits; clamp mode saturates them.
FingerPoints finger_fk(const HandGeometry& geometry, Finger finger, double theta1, double theta2,
                       double plate = 0.0, LimitMode mode = LimitMode::Strict);

/// FK for every finger of a validated pose.
std::array<FingerPoints, kFingerCount> hand_fk(const HandGeometry& geometry, const JointState& state);

}  // namespace rotograb::kinematics
