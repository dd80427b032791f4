#include "rotograb/thumb_rotation.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Core>

#include "rotograb/errors.hpp"
#include "rotograb/finger_kinematics.hpp"

namespace rotograb::thumb {

namespace {

constexpr double kPresetMagnitude = deg_to_rad(65.0);

void check_plate(double theta, const HandGeometry& geometry) {
    if (std::isfinite(theta) && geometry.plate_limits.contains(theta)) return;
    std::ostringstream msg;
    msg << "plate angle " << rad_to_deg(theta) << " deg outside [" << rad_to_deg(geometry.plate_limits.lo)
        << ", " << rad_to_deg(geometry.plate_limits.hi) << "] deg";
    throw LimitError(msg.str());
}

double unchecked_length(double theta, const HandGeometry& g) {
    return std::sqrt(g.r_palm * g.r_palm + g.r_plate * g.r_plate -
                     2.0 * g.r_palm * g.r_plate * std::cos(kPi / 2.0 - (theta + g.gamma)));
}

}  // namespace

std::string_view mode_name(PlateMode mode) {
    switch (mode) {
        case PlateMode::Left: return "L";
        case PlateMode::Middle: return "M";
        case PlateMode::Right: return "R";
    }
    return "M";
}

std::optional<PlateMode> parse_mode(std::string_view text) {
    if (text == "L" || text == "left" || text == "Left") return PlateMode::Left;
    if (text == "M" || text == "middle" || text == "Middle") return PlateMode::Middle;
    if (text == "R" || text == "right" || text == "Right") return PlateMode::Right;
    return std::nullopt;
}

double preset_angle(PlateMode mode, const HandGeometry& geometry) {
    switch (mode) {
        case PlateMode::Left: return geometry.plate_limits.clamp(-kPresetMagnitude);
        case PlateMode::Middle: return geometry.plate_limits.clamp(0.0);
        case PlateMode::Right: return geometry.plate_limits.clamp(kPresetMagnitude);
    }
    return 0.0;
}

PlateMode nearest_mode(double theta, const HandGeometry& geometry) {
    PlateMode best = PlateMode::Middle;
    double best_distance = std::abs(theta - preset_angle(PlateMode::Middle, geometry));
    for (PlateMode m : {PlateMode::Left, PlateMode::Right}) {
        const double d = std::abs(theta - preset_angle(m, geometry));
        if (d < best_distance) {
            best = m;
            best_distance = d;
        }
    }
    return best;
}

PlateState PlateState::preset(PlateMode mode, const HandGeometry& geometry) {
    return {preset_angle(mode, geometry), mode, true};
}

PlateState PlateState::free(double theta, const HandGeometry& geometry) {
    check_plate(theta, geometry);
    return {theta, nearest_mode(theta, geometry), false};
}

double plate_tendon_length(double theta, const HandGeometry& geometry) {
    check_plate(theta, geometry);
    return unchecked_length(theta, geometry);
}

PlateDeltas plate_tendon_delta(double theta, const HandGeometry& geometry) {
    const double right = plate_tendon_length(theta, geometry) - unchecked_length(kPlateCalibration, geometry);
    return {0.0 - right, right};
}

double invert_plate_delta(double right_delta, const HandGeometry& geometry) {
    const Interval& limits = geometry.plate_limits;
    const double base = unchecked_length(kPlateCalibration, geometry);
    const auto f = [&](double theta) { return unchecked_length(theta, geometry) - base; };

    double lo = limits.lo;
    double hi = limits.hi;
    double f_lo = f(lo);
    double f_hi = f(hi);
    const bool decreasing = f_hi < f_lo;
    const double low_value = decreasing ? f_hi : f_lo;
    const double high_value = decreasing ? f_lo : f_hi;
    constexpr double slack = 1e-15;
    if (!std::isfinite(right_delta) || right_delta < low_value - slack || right_delta > high_value + slack) {
        std::ostringstream msg;
        msg << "plate tendon delta " << right_delta << " m outside achievable range [" << low_value << ", "
            << high_value << "] m";
        throw RangeError(msg.str(), low_value, high_value);
    }
    if (right_delta == f_lo) return lo;
    if (right_delta == f_hi) return hi;

    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const bool below = f(mid) < right_delta;
        // For a decreasing map the root lies left of mid when f(mid) is too small.
        if (below != decreasing)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double thumb_route_length(double plate, const HandGeometry& geometry) {
    // Fixed guide in the palm, off the axis towards the thumb and below the
    // plate; the plate guide turns with the plate at the routing offset.
    const Eigen::Vector3d palm_guide(0.0, -geometry.r_plate, -geometry.r_palm);
    const double offset = geometry.thumb_routing_offset;
    const Eigen::Vector3d plate_guide(offset * std::sin(plate), -offset * std::cos(plate), 0.0);
    return (palm_guide - plate_guide).norm();
}

bool thumb_decoupling_check(double plate_a, double plate_b, double theta1, double theta2,
                            const HandGeometry& geometry) {
    check_plate(plate_a, geometry);
    check_plate(plate_b, geometry);
    const auto thumb_deltas = [&](double plate) {
        kinematics::FingerTendons t = kinematics::finger_tendon_deltas(geometry, theta1, theta2);
        const double route = thumb_route_length(plate, geometry) - thumb_route_length(kPlateCalibration, geometry);
        for (auto* pair : {&t.joint1, &t.joint2, &t.joint3}) {
            pair->flexor += route;
            pair->extensor += route;
        }
        return t;
    };
    const auto a = thumb_deltas(plate_a);
    const auto b = thumb_deltas(plate_b);
    const auto same = [](const kinematics::TendonPair& x, const kinematics::TendonPair& y) {
        return x.flexor == y.flexor && x.extensor == y.extensor;
    };
    return same(a.joint1, b.joint1) && same(a.joint2, b.joint2) && same(a.joint3, b.joint3);
}

}  // namespace rotograb::thumb
