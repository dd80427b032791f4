#include "rotograb/hand_geometry.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rotograb/errors.hpp"

namespace rotograb {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kFingerCount> kFingerNames{
    "thumb", "index", "middle", "ring", "pinkie"};

constexpr std::array<std::string_view, kDofCount> kDofNames{
    "thumb_j1",  "thumb_j2", "index_j1",  "index_j2",  "middle_j1", "middle_j2",
    "ring_j1",   "ring_j2",  "pinkie_j1", "pinkie_j2", "plate"};

double mm_to_m(double mm) { return mm / 1000.0; }

// File values are written with 12 significant digits so that unit conversion
// noise (e.g. -45.00000000000001 deg) does not leak into the file.
double tidy(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

double m_to_mm(double m) { return tidy(m * 1000.0); }
double file_deg(double rad) { return tidy(rad_to_deg(rad)); }

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw GeometryError(field, what);
}

void check_limits(const Interval& limits, double calibration, const char* field) {
    require(std::isfinite(limits.lo) && std::isfinite(limits.hi), field, "limits must be finite");
    require(limits.lo < limits.hi, field, "limit interval is empty");
    require(limits.contains(calibration), field, "limits must contain the calibration angle");
}

// Typed accessors that report the key on a type mismatch.
double number_at(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw GeometryError(key, "expected a number");
    return v.get<double>();
}

Interval degree_interval_at(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw GeometryError(key, "expected [low, high] in degrees");
    return {deg_to_rad(v[0].get<double>()), deg_to_rad(v[1].get<double>())};
}

json degree_interval(const Interval& i) { return json::array({file_deg(i.lo), file_deg(i.hi)}); }

}  // namespace

std::string_view finger_name(Finger finger) { return kFingerNames.at(index_of(finger)); }

std::optional<Finger> parse_finger(std::string_view name) {
    if (name == "pinky") return Finger::Pinkie;
    for (Finger f : kAllFingers)
        if (kFingerNames[index_of(f)] == name) return f;
    return std::nullopt;
}

std::array<FingerMount, 5> default_finger_mounts() {
    // Worked in mm so the values survive a trip through the config file.
    constexpr double pitch_mm = 94.0 / 4.0;
    const double front_edge = mm_to_m(35.0);
    std::array<FingerMount, 5> mounts;
    mounts[index_of(Finger::Thumb)] = {Eigen::Vector3d(0.0, -front_edge, 0.0), deg_to_rad(-90.0)};
    // Index on +x, pinkie on -x, bases at the centers of four equal slots.
    const std::array<Finger, 4> row{Finger::Index, Finger::Middle, Finger::Ring, Finger::Pinkie};
    for (std::size_t i = 0; i < row.size(); ++i) {
        const double x = mm_to_m(1.5 * pitch_mm - static_cast<double>(i) * pitch_mm);
        mounts[index_of(row[i])] = {Eigen::Vector3d(x, front_edge, 0.0), deg_to_rad(90.0)};
    }
    return mounts;
}

double HandGeometry::kinematic_length() const {
    return 3.0 * 2.0 * joint_radius + link_lengths[0] + link_lengths[1] + link_lengths[2];
}

void HandGeometry::validate() const {
    require(std::isfinite(joint_radius) && joint_radius > 0.0, "joint_radius_mm", "must be > 0");
    for (double l : link_lengths)
        require(std::isfinite(l) && l > 0.0, "link_lengths_mm", "every link length must be > 0");
    require(std::isfinite(palm_width) && palm_width > 0.0, "palm_width_mm", "must be > 0");
    require(std::isfinite(r_plate) && r_plate > 0.0, "r_plate_mm", "must be > 0");
    require(std::isfinite(r_palm) && r_palm > r_plate, "r_palm_mm", "must exceed r_plate");
    require(std::isfinite(gamma), "gamma_deg", "must be finite");
    require(std::isfinite(thumb_routing_offset) && thumb_routing_offset >= 0.0,
            "thumb_routing_offset_mm", "must be >= 0");
    require(std::isfinite(base_mount_angle), "base_mount_angle_deg", "must be finite");
    require(std::isfinite(palm_tilt), "palm_tilt_deg", "must be finite");
    for (const auto& m : finger_mounts)
        require(m.position.allFinite() && std::isfinite(m.yaw), "finger_base_positions",
                "positions and yaw must be finite");

    require(spool_radius_j1 > 0.0, "spool_radius_j1_mm", "must be > 0");
    require(spool_radius_j23_flexor > 0.0, "spool_radius_j23_flexor_mm", "must be > 0");
    require(plate_spool_radius > 0.0, "plate_spool_radius_mm", "must be > 0");
    require(spool_radius_j23_extensor == 2.0 * spool_radius_j23_flexor, "spool_radius_j23_extensor_mm",
            "spool ratio violated: extensor spool radius must be exactly twice the flexor spool radius");

    require(std::abs(kinematic_length() - finger_length) < 1e-9, "finger_length_mm",
            "3 joint spans (2r each) plus the link lengths must equal the finger length");

    check_limits(joint1_limits, kJoint1Calibration, "joint1_limits_deg");
    check_limits(joint23_limits, kJoint23Calibration, "joint23_limits_deg");
    check_limits(plate_limits, kPlateCalibration, "plate_limits_deg");
}

HandGeometry default_geometry() { return HandGeometry{}; }

HandGeometry parse_geometry(std::string_view text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw GeometryError("<file>", std::string("parse failure: ") + e.what());
    }
    if (!j.is_object()) throw GeometryError("<file>", "top level must be an object");

    static const std::set<std::string> known{
        "joint_radius_mm",   "link_lengths_mm",      "finger_length_mm",
        "palm_width_mm",     "base_mount_angle_deg", "palm_tilt_deg",
        "finger_base_positions", "r_palm_mm",        "r_plate_mm",
        "gamma_deg",         "thumb_routing_offset_mm", "plate_limits_deg",
        "joint1_limits_deg", "joint23_limits_deg",   "spool_radius_j1_mm",
        "spool_radius_j23_flexor_mm", "spool_radius_j23_extensor_mm", "plate_spool_radius_mm"};
    for (const auto& item : j.items())
        if (!known.contains(item.key())) throw GeometryError(item.key(), "unknown key");

    HandGeometry g = default_geometry();
    const auto length = [&](const char* key, double& out) {
        if (j.contains(key)) out = mm_to_m(number_at(j, key));
    };
    const auto angle = [&](const char* key, double& out) {
        if (j.contains(key)) out = deg_to_rad(number_at(j, key));
    };
    const auto interval = [&](const char* key, Interval& out) {
        if (j.contains(key)) out = degree_interval_at(j, key);
    };

    length("joint_radius_mm", g.joint_radius);
    length("finger_length_mm", g.finger_length);
    length("palm_width_mm", g.palm_width);
    length("r_palm_mm", g.r_palm);
    length("r_plate_mm", g.r_plate);
    length("thumb_routing_offset_mm", g.thumb_routing_offset);
    length("spool_radius_j1_mm", g.spool_radius_j1);
    length("spool_radius_j23_flexor_mm", g.spool_radius_j23_flexor);
    length("spool_radius_j23_extensor_mm", g.spool_radius_j23_extensor);
    length("plate_spool_radius_mm", g.plate_spool_radius);
    angle("base_mount_angle_deg", g.base_mount_angle);
    angle("palm_tilt_deg", g.palm_tilt);
    angle("gamma_deg", g.gamma);
    interval("plate_limits_deg", g.plate_limits);
    interval("joint1_limits_deg", g.joint1_limits);
    interval("joint23_limits_deg", g.joint23_limits);

    if (j.contains("link_lengths_mm")) {
        const auto& v = j["link_lengths_mm"];
        if (!v.is_array() || v.size() != 3)
            throw GeometryError("link_lengths_mm", "expected 3 lengths");
        for (std::size_t i = 0; i < 3; ++i) {
            if (!v[i].is_number()) throw GeometryError("link_lengths_mm", "expected numbers");
            g.link_lengths[i] = mm_to_m(v[i].get<double>());
        }
    }

    if (j.contains("finger_base_positions")) {
        const auto& bases = j["finger_base_positions"];
        if (!bases.is_object()) throw GeometryError("finger_base_positions", "expected an object");
        for (const auto& item : bases.items()) {
            const auto finger = parse_finger(item.key());
            if (!finger) throw GeometryError("finger_base_positions." + item.key(), "unknown finger");
            auto& mount = g.finger_mounts[index_of(*finger)];
            const auto& entry = item.value();
            const std::string field = "finger_base_positions." + item.key();
            if (!entry.is_object()) throw GeometryError(field, "expected an object");
            if (entry.contains("position_mm")) {
                const auto& p = entry["position_mm"];
                if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
                    !p[2].is_number())
                    throw GeometryError(field + ".position_mm", "expected [x, y, z]");
                mount.position = Eigen::Vector3d(mm_to_m(p[0].get<double>()), mm_to_m(p[1].get<double>()),
                                                 mm_to_m(p[2].get<double>()));
            }
            if (entry.contains("yaw_deg")) {
                if (!entry["yaw_deg"].is_number())
                    throw GeometryError(field + ".yaw_deg", "expected a number");
                mount.yaw = deg_to_rad(entry["yaw_deg"].get<double>());
            }
        }
    }

    g.validate();
    return g;
}

HandGeometry load_geometry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_geometry(buffer.str());
}

std::string serialize_geometry(const HandGeometry& g) {
    json bases = json::object();
    for (Finger f : kAllFingers) {
        const auto& m = g.finger_mounts[index_of(f)];
        bases[std::string(finger_name(f))] = {
            {"position_mm", {m_to_mm(m.position.x()), m_to_mm(m.position.y()), m_to_mm(m.position.z())}},
            {"yaw_deg", file_deg(m.yaw)}};
    }
    // nlohmann keeps keys sorted, which gives a stable file layout.
    json j = {
        {"joint_radius_mm", m_to_mm(g.joint_radius)},
        {"link_lengths_mm", {m_to_mm(g.link_lengths[0]), m_to_mm(g.link_lengths[1]), m_to_mm(g.link_lengths[2])}},
        {"finger_length_mm", m_to_mm(g.finger_length)},
        {"palm_width_mm", m_to_mm(g.palm_width)},
        {"base_mount_angle_deg", file_deg(g.base_mount_angle)},
        {"palm_tilt_deg", file_deg(g.palm_tilt)},
        {"finger_base_positions", bases},
        {"r_palm_mm", m_to_mm(g.r_palm)},
        {"r_plate_mm", m_to_mm(g.r_plate)},
        {"gamma_deg", file_deg(g.gamma)},
        {"thumb_routing_offset_mm", m_to_mm(g.thumb_routing_offset)},
        {"plate_limits_deg", degree_interval(g.plate_limits)},
        {"joint1_limits_deg", degree_interval(g.joint1_limits)},
        {"joint23_limits_deg", degree_interval(g.joint23_limits)},
        {"spool_radius_j1_mm", m_to_mm(g.spool_radius_j1)},
        {"spool_radius_j23_flexor_mm", m_to_mm(g.spool_radius_j23_flexor)},
        {"spool_radius_j23_extensor_mm", m_to_mm(g.spool_radius_j23_extensor)},
        {"plate_spool_radius_mm", m_to_mm(g.plate_spool_radius)},
    };
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::string_view dof_name(std::size_t dof) { return kDofNames.at(dof); }

const Interval& dof_limits(const HandGeometry& geometry, std::size_t dof) {
    if (dof == kPlateDof) return geometry.plate_limits;
    return dof % 2 == 0 ? geometry.joint1_limits : geometry.joint23_limits;
}

std::optional<std::size_t> first_limit_violation(const JointAngles& angles,
                                                 const HandGeometry& geometry) {
    for (std::size_t i = 0; i < kDofCount; ++i)
        if (!std::isfinite(angles[i]) || !dof_limits(geometry, i).contains(angles[i])) return i;
    return std::nullopt;
}

JointState JointState::calibration() {
    JointAngles a{};
    for (Finger f : kAllFingers) {
        a[dof_index(f, 1)] = kJoint1Calibration;
        a[dof_index(f, 2)] = kJoint23Calibration;
    }
    a[kPlateDof] = kPlateCalibration;
    return JointState(a);
}

JointState JointState::from_angles(const JointAngles& angles, const HandGeometry& geometry,
                                   LimitMode mode) {
    JointAngles out = angles;
    for (std::size_t i = 0; i < kDofCount; ++i) {
        const Interval& lim = dof_limits(geometry, i);
        if (!std::isfinite(out[i]))
            throw LimitError(std::string(dof_name(i)) + ": angle is not finite");
        if (lim.contains(out[i])) continue;
        if (mode == LimitMode::Clamp) {
            out[i] = lim.clamp(out[i]);
            continue;
        }
        std::ostringstream msg;
        msg << dof_name(i) << ": " << rad_to_deg(out[i]) << " deg outside [" << rad_to_deg(lim.lo)
            << ", " << rad_to_deg(lim.hi) << "] deg";
        throw LimitError(msg.str());
    }
    return JointState(out);
}

JointState JointState::with_finger(Finger f, double theta1, double theta2,
                                   const HandGeometry& geometry, LimitMode mode) const {
    JointAngles a = angles_;
    a[dof_index(f, 1)] = theta1;
    a[dof_index(f, 2)] = theta2;
    return from_angles(a, geometry, mode);
}

JointState JointState::with_plate(double plate, const HandGeometry& geometry, LimitMode mode) const {
    JointAngles a = angles_;
    a[kPlateDof] = plate;
    return from_angles(a, geometry, mode);
}

}  // namespace rotograb
