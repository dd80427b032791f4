#include "rotograb/teleop.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

#include "json.hpp"
#include "rotograb/errors.hpp"

namespace rotograb::teleop {

using nlohmann::json;

namespace {

constexpr double kMinSegment = 1e-9;

struct JointTargets {
    JointAngles angles{};
};

double map_affine(double x, const Interval& in, const Interval& out) {
    const double u = (x - in.lo) / in.width();
    return out.clamp(out.lo + u * out.width());
}

double smooth(double previous, double target, double alpha, const Interval& limits) {
    return limits.clamp(previous + alpha * (target - previous));
}

RetargetResult apply(const LandmarkFrame& frame, const RetargetProfile& profile, const HandGeometry& geometry,
                     const JointState& previous, PlateMode mode) {
    JointAngles next = previous.angles();
    for (std::size_t dof = 0; dof + 1 < kDofCount; ++dof) {
        const JointMapping& m = profile.joints[dof];
        double input = 0.0;
        for (const auto& triple : m.sources) input += flexion_at(frame, triple);
        input /= static_cast<double>(m.sources.size());
        const double target = map_affine(input, m.input, m.output);
        next[dof] = smooth(previous.angles()[dof], target, m.alpha, dof_limits(geometry, dof));
    }

    double plate_target = thumb::preset_angle(mode, geometry);
    if (profile.continuous_plate)
        plate_target = map_affine(thumb_lateral_offset(frame), profile.plate_input, geometry.plate_limits);
    next[kPlateDof] = smooth(previous.plate(), plate_target, profile.plate_alpha, geometry.plate_limits);

    return {JointState::from_angles(next, geometry), mode, false, {}};
}

std::optional<std::string> rejection(const LandmarkFrame& frame, double threshold) {
    try {
        validate_frame(frame);
    } catch (const FrameError& e) {
        return e.what();
    }
    if (frame.confidence < threshold) return "low confidence";
    return std::nullopt;
}

}  // namespace

LandmarkFrame parse_landmark_json(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw FrameError(std::string("landmark record is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw FrameError("landmark record must be an object");
    LandmarkFrame frame;
    if (!j.contains("t") || !j["t"].is_number()) throw FrameError("landmark record needs numeric 't'");
    frame.t = j["t"].get<double>();
    if (j.contains("conf")) {
        if (!j["conf"].is_number()) throw FrameError("'conf' must be a number");
        frame.confidence = j["conf"].get<double>();
    }
    if (!j.contains("pts") || !j["pts"].is_array() || j["pts"].size() != kLandmarkCount)
        throw FrameError("'pts' must hold exactly 21 points");
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
        const auto& p = j["pts"][i];
        if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
            throw FrameError("landmark " + std::to_string(i) + " must be [x, y, z]");
        frame.points[i] = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    }
    validate_frame(frame);
    return frame;
}

std::string landmark_json(const LandmarkFrame& frame) {
    json pts = json::array();
    for (const auto& p : frame.points) pts.push_back({p.x(), p.y(), p.z()});
    return json{{"t", frame.t}, {"conf", frame.confidence}, {"pts", pts}}.dump();
}

void validate_frame(const LandmarkFrame& frame) {
    if (!std::isfinite(frame.t)) throw FrameError("timestamp is not finite");
    if (!std::isfinite(frame.confidence) || frame.confidence < 0.0 || frame.confidence > 1.0)
        throw FrameError("confidence must lie in [0, 1]");
    for (std::size_t i = 0; i < kLandmarkCount; ++i)
        if (!frame.points[i].allFinite()) throw FrameError("landmark " + std::to_string(i) + " is not finite");
}

double flexion_at(const LandmarkFrame& frame, const std::array<std::size_t, 3>& triple) {
    for (auto i : triple)
        if (i >= kLandmarkCount) throw FrameError("landmark index out of range");
    const Eigen::Vector3d incoming = frame.points[triple[1]] - frame.points[triple[0]];
    const Eigen::Vector3d outgoing = frame.points[triple[2]] - frame.points[triple[1]];
    if (!(incoming.norm() > kMinSegment) || !(outgoing.norm() > kMinSegment))
        throw FrameError("zero-length landmark segment");
    return std::atan2(incoming.cross(outgoing).norm(), incoming.dot(outgoing));
}

std::array<DigitFlexion, kFingerCount> extract_human_angles(const LandmarkFrame& frame) {
    validate_frame(frame);
    std::array<DigitFlexion, kFingerCount> out{};
    // Thumb: CMC(1) MCP(2) IP(3) TIP(4).
    out[index_of(Finger::Thumb)] = {flexion_at(frame, {1, 2, 3}), flexion_at(frame, {2, 3, 4})};
    for (Finger f : kAllFingers) {
        if (f == Finger::Thumb) continue;
        const std::size_t b = digit_base(f);
        const double mcp = flexion_at(frame, {kWrist, b, b + 1});
        const double pip = flexion_at(frame, {b, b + 1, b + 2});
        const double dip = flexion_at(frame, {b + 1, b + 2, b + 3});
        out[index_of(f)] = {mcp, 0.5 * (pip + dip)};
    }
    return out;
}

double thumb_lateral_offset(const LandmarkFrame& frame) {
    const Eigen::Vector2d index = frame.points[kIndexBase].head<2>();
    const Eigen::Vector2d pinkie = frame.points[kPinkieBase].head<2>();
    const double width = (index - pinkie).norm();
    if (!(width > kMinSegment)) throw FrameError("index and pinkie bases coincide");
    const double center_x = 0.5 * (index.x() + pinkie.x());
    return (frame.points[kThumbTip].x() - center_x) / width;
}

PlateMode detect_thumb_mode(const LandmarkFrame& frame, PlateMode previous, double threshold, double min_confidence) {
    if (rejection(frame, min_confidence)) return previous;
    double offset = 0.0;
    try {
        offset = thumb_lateral_offset(frame);
    } catch (const FrameError&) {
        return previous;
    }
    if (offset > threshold) return PlateMode::Right;
    if (offset < -threshold) return PlateMode::Left;
    return previous;
}

ThumbModeTracker ThumbModeTracker::update(const LandmarkFrame& frame, double threshold, double hold_s,
                                          double min_confidence) const {
    if (rejection(frame, min_confidence)) return *this;
    double offset = 0.0;
    try {
        offset = thumb_lateral_offset(frame);
    } catch (const FrameError&) {
        return *this;
    }
    if (offset > threshold) return {PlateMode::Right, std::nullopt};
    if (offset < -threshold) return {PlateMode::Left, std::nullopt};
    if (mode == PlateMode::Middle) return {PlateMode::Middle, std::nullopt};
    const double since = band_entered_at.value_or(frame.t);
    if (frame.t - since >= hold_s) return {PlateMode::Middle, std::nullopt};
    return {mode, since};
}

RetargetProfile RetargetProfile::defaults(const HandGeometry& geometry) {
    RetargetProfile p;
    const Interval j1 = geometry.joint1_limits;
    const Interval j23 = geometry.joint23_limits;
    for (Finger f : kAllFingers) {
        auto& proximal = p.joints[dof_index(f, 1)];
        auto& distal = p.joints[dof_index(f, 2)];
        const std::size_t b = digit_base(f);
        if (f == Finger::Thumb) {
            proximal = {{{1, 2, 3}}, {0.0, deg_to_rad(60.0)}, j1, 0.35};
            distal = {{{2, 3, 4}}, {0.0, deg_to_rad(80.0)}, j23, 0.35};
        } else {
            proximal = {{{kWrist, b, b + 1}}, {0.0, deg_to_rad(90.0)}, j1, 0.35};
            distal = {{{b, b + 1, b + 2}, {b + 1, b + 2, b + 3}}, {0.0, deg_to_rad(90.0)}, j23, 0.35};
        }
    }
    return p;
}

void RetargetProfile::validate(const HandGeometry& geometry) const {
    const auto check_alpha = [](double a) {
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("smoothing factor must lie in (0, 1]");
    };
    for (std::size_t dof = 0; dof + 1 < kDofCount; ++dof) {
        const auto& m = joints[dof];
        const Interval& lim = dof_limits(geometry, dof);
        const std::string name(dof_name(dof));
        if (m.sources.empty()) throw std::invalid_argument(name + ": no source landmarks");
        for (const auto& t : m.sources)
            for (auto i : t)
                if (i >= kLandmarkCount) throw std::invalid_argument(name + ": landmark index out of range");
        if (!(m.input.width() > 0.0)) throw std::invalid_argument(name + ": empty input range");
        if (!(m.output.lo >= lim.lo && m.output.hi <= lim.hi && m.output.lo <= m.output.hi))
            throw std::invalid_argument(name + ": output range must lie within the joint limits");
        check_alpha(m.alpha);
    }
    check_alpha(plate_alpha);
    if (!(plate_input.width() > 0.0)) throw std::invalid_argument("plate: empty input range");
    if (!(hysteresis >= 0.0)) throw std::invalid_argument("hysteresis must be >= 0");
    if (!(mode_hold_s >= 0.0)) throw std::invalid_argument("mode hold must be >= 0");
}

RetargetResult retarget(const LandmarkFrame& frame, const RetargetProfile& profile, const HandGeometry& geometry,
                        const JointState& previous, PlateMode previous_mode) {
    if (auto why = rejection(frame, profile.confidence_threshold)) return {previous, previous_mode, true, *why};
    const PlateMode mode =
        detect_thumb_mode(frame, previous_mode, profile.hysteresis, profile.confidence_threshold);
    try {
        return apply(frame, profile, geometry, previous, mode);
    } catch (const FrameError& e) {
        return {previous, previous_mode, true, e.what()};
    }
}

Retargeter::Retargeter(HandGeometry geometry, RetargetProfile profile, JointState start)
    : geometry_(std::move(geometry)), profile_(std::move(profile)), state_(start) {
    profile_.validate(geometry_);
    tracker_.mode = thumb::nearest_mode(state_.plate(), geometry_);
}

RetargetResult Retargeter::push(const LandmarkFrame& frame) {
    if (auto why = rejection(frame, profile_.confidence_threshold)) return {state_, tracker_.mode, true, *why};
    const ThumbModeTracker next =
        tracker_.update(frame, profile_.hysteresis, profile_.mode_hold_s, profile_.confidence_threshold);
    try {
        RetargetResult r = apply(frame, profile_, geometry_, state_, next.mode);
        tracker_ = next;
        state_ = r.state;
        return r;
    } catch (const FrameError& e) {
        return {state_, tracker_.mode, true, e.what()};
    }
}

}  // namespace rotograb::teleop
