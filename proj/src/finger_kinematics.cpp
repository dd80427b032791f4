#include "rotograb/finger_kinematics.hpp"

#include <cmath>
#include <sstream>

#include "rotograb/errors.hpp"

namespace rotograb::kinematics {

namespace {

void check_range(double theta, const Interval& limits, const char* what) {
    if (std::isfinite(theta) && limits.contains(theta)) return;
    std::ostringstream msg;
    msg << what << " " << rad_to_deg(theta) << " deg outside [" << rad_to_deg(limits.lo) << ", "
        << rad_to_deg(limits.hi) << "] deg";
    throw LimitError(msg.str());
}

double settle(double theta, const Interval& limits, LimitMode mode, const char* what) {
    if (mode == LimitMode::Clamp && std::isfinite(theta)) return limits.clamp(theta);
    check_range(theta, limits, what);
    return theta;
}

Eigen::Vector3d embed(const Eigen::Isometry3d& frame, const Eigen::Vector2d& p) {
    return frame * Eigen::Vector3d(p.x(), p.y(), 0.0);
}

// Finger plane inside the mount frame: the outward axis is tilted by the
// mount angle towards the palm normal (local z).
Eigen::Matrix3d plane_axes(double mount_angle) {
    const double c = std::cos(mount_angle);
    const double s = std::sin(mount_angle);
    const Eigen::Vector3d u(c, 0.0, s);
    const Eigen::Vector3d v(-s, 0.0, c);
    Eigen::Matrix3d axes;
    axes.col(0) = u;
    axes.col(1) = v;
    axes.col(2) = u.cross(v);
    return axes;
}

}  // namespace

Eigen::Vector2d tendon_vector(double theta, double r) {
    return {r * std::sin(theta) + 2.0 * r * std::cos(theta / 2.0),
            r * (1.0 - std::cos(theta)) + 2.0 * r * std::sin(theta / 2.0)};
}

Eigen::Vector2d tendon_vector(double theta, double r, const Interval& limits) {
    check_range(theta, limits, "joint angle");
    return tendon_vector(theta, r);
}

double tendon_delta(double theta, double theta_init, double r) {
    return tendon_vector(theta, r).norm() - tendon_vector(theta_init, r).norm();
}

double tendon_delta(double theta, double theta_init, double r, const Interval& limits) {
    check_range(theta, limits, "joint angle");
    check_range(theta_init, limits, "calibration angle");
    return tendon_delta(theta, theta_init, r);
}

Eigen::Isometry2d joint_transform(double theta, double r) {
    const Eigen::Rotation2Dd half(theta / 2.0);
    Eigen::Isometry2d t = Eigen::Isometry2d::Identity();
    t.rotate(half);
    t.translate(Eigen::Vector2d(2.0 * r, 0.0));
    t.rotate(half);
    return t;
}

JointFrame2D joint_frame(double theta, double r) {
    const Eigen::Isometry2d moving = joint_transform(theta, r);
    const Eigen::Vector2d back_side(0.0, -r);
    return {Eigen::Vector2d::Zero(), moving.translation(), back_side, moving * back_side, theta};
}

double invert_tendon_delta(double delta, double theta_init, double r, const Interval& limits) {
    double lo = limits.lo;
    double hi = limits.hi;
    const double f_lo = tendon_delta(lo, theta_init, r);
    const double f_hi = tendon_delta(hi, theta_init, r);
    constexpr double slack = 1e-15;
    if (!std::isfinite(delta) || delta < f_lo - slack || delta > f_hi + slack) {
        std::ostringstream msg;
        msg << "tendon delta " << delta << " m outside achievable range [" << f_lo << ", " << f_hi
            << "] m";
        throw RangeError(msg.str(), f_lo, f_hi);
    }
    if (delta <= f_lo) return lo;
    if (delta >= f_hi) return hi;

    // Monotone increasing map: plain bisection.
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (tendon_delta(mid, theta_init, r) < delta)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

FingerTendons finger_tendon_deltas(const HandGeometry& geometry, double theta1, double theta2) {
    const double r = geometry.joint_radius;
    // Each joint only ever sees its own angle in its own fixed-link frame.
    const auto pair = [](double d) { return TendonPair{0.0 - d, d}; };
    FingerTendons out;
    out.joint1 = pair(tendon_delta(theta1, kJoint1Calibration, r));
    out.joint2 = pair(tendon_delta(theta2, kJoint23Calibration, r));
    const double theta3 = theta2;
    out.joint3 = pair(tendon_delta(theta3, kJoint23Calibration, r));
    return out;
}

double routed_joint2_extensor_length(const HandGeometry& geometry, double theta1, double theta2) {
    const double r = geometry.joint_radius;
    const PlanarChain chain = planar_chain(geometry, theta1, theta2);
    const Eigen::Vector2d back_side(0.0, -r);
    const Eigen::Vector2d o1 = chain.fixed_frames[0].translation();
    const Eigen::Vector2d o1_moving = chain.moving_frames[0].translation();
    const Eigen::Vector2d p2 = chain.fixed_frames[1] * back_side;
    const Eigen::Vector2d p2_moving = chain.moving_frames[1] * back_side;
    return (o1_moving - o1).norm() + (p2 - o1_moving).norm() + (p2_moving - p2).norm();
}

PlanarChain planar_chain(const HandGeometry& geometry, double theta1, double theta2) {
    const double r = geometry.joint_radius;
    const std::array<double, 3> thetas{theta1, theta2, theta2};
    PlanarChain chain;
    Eigen::Isometry2d frame = Eigen::Isometry2d::Identity();
    for (std::size_t i = 0; i < 3; ++i) {
        chain.fixed_frames[i] = frame;
        frame = frame * joint_transform(thetas[i], r);
        chain.moving_frames[i] = frame;
        frame.translate(Eigen::Vector2d(geometry.link_lengths[i], 0.0));
    }
    chain.tip = frame.translation();
    return chain;
}

Eigen::Isometry3d palm_pose(const HandGeometry& geometry) {
    Eigen::Isometry3d palm = Eigen::Isometry3d::Identity();
    palm.rotate(Eigen::AngleAxisd(geometry.palm_tilt, Eigen::Vector3d::UnitY()));
    return palm;
}

Eigen::Isometry3d finger_base_pose(const HandGeometry& geometry, Finger finger, double plate) {
    const FingerMount& mount = geometry.finger_mounts[index_of(finger)];
    Eigen::Isometry3d pose = palm_pose(geometry);
    if (finger == Finger::Thumb) pose.rotate(Eigen::AngleAxisd(plate, Eigen::Vector3d::UnitZ()));
    pose.translate(mount.position);
    pose.rotate(Eigen::AngleAxisd(mount.yaw, Eigen::Vector3d::UnitZ()));
    pose.rotate(plane_axes(geometry.base_mount_angle));
    return pose;
}

FingerPoints finger_fk(const HandGeometry& geometry, Finger finger, double theta1, double theta2,
                       double plate, LimitMode mode) {
    theta1 = settle(theta1, geometry.joint1_limits, mode, "theta1");
    theta2 = settle(theta2, geometry.joint23_limits, mode, "theta2");
    plate = settle(plate, geometry.plate_limits, mode, "plate angle");

    const PlanarChain chain = planar_chain(geometry, theta1, theta2);
    const Eigen::Isometry3d base = finger_base_pose(geometry, finger, plate);
    FingerPoints out;
    out.points[0] = embed(base, chain.fixed_frames[0].translation());
    for (std::size_t i = 0; i < 3; ++i) {
        const Eigen::Vector2d contact =
            0.5 * (chain.fixed_frames[i].translation() + chain.moving_frames[i].translation());
        out.points[i + 1] = embed(base, contact);
    }
    out.points[4] = embed(base, chain.tip);
    return out;
}

std::array<FingerPoints, kFingerCount> hand_fk(const HandGeometry& geometry, const JointState& state) {
    std::array<FingerPoints, kFingerCount> out;
    for (Finger f : kAllFingers)
        out[index_of(f)] = finger_fk(geometry, f, state.theta1(f), state.theta2(f), state.plate());
    return out;
}

}  // namespace rotograb::kinematics
