#include "rotograb/protocol.hpp"

#include <exception>

#include "json.hpp"
#include "rotograb/errors.hpp"

namespace rotograb::protocol {

using nlohmann::json;
using service::Status;

namespace {

json vec3(const Eigen::Vector3d& p) { return json::array({p.x(), p.y(), p.z()}); }

void attach_id(json& j, const std::optional<std::string>& id) {
    if (id) j["id"] = *id;
}

std::optional<std::size_t> dof_by_name(std::string_view name) {
    for (std::size_t i = 0; i < kDofCount; ++i)
        if (dof_name(i) == name) return i;
    return std::nullopt;
}

struct BadRequest {
    std::string message;
};

const json& field(const json& msg, const char* key) {
    if (!msg.contains(key)) throw BadRequest{std::string("missing field '") + key + "'"};
    return msg[key];
}

double number(const json& value, std::string_view what) {
    if (!value.is_number()) throw BadRequest{std::string(what) + " must be a number"};
    return value.get<double>();
}

Status dispatch(service::HandService& svc, const std::string& client, const std::string& type, const json& msg,
                std::string_view raw) {
    if (type == "get") return Status::success();
    if (type == "cmd") {
        const json& joints = field(msg, "joints");
        if (!joints.is_object()) throw BadRequest{"'joints' must be an object of degrees by name"};
        std::vector<std::pair<std::size_t, double>> targets;
        for (const auto& [name, value] : joints.items()) {
            const auto dof = dof_by_name(name);
            if (!dof) throw BadRequest{"unknown joint '" + name + "'"};
            targets.emplace_back(*dof, deg_to_rad(number(value, name)));
        }
        return svc.set_joints(client, targets);
    }
    if (type == "mode") {
        const json& m = field(msg, "mode");
        const auto mode = m.is_string() ? thumb::parse_mode(m.get<std::string>()) : std::nullopt;
        if (!mode) throw BadRequest{"'mode' must be one of L, M, R"};
        return svc.set_mode(client, *mode);
    }
    if (type == "play") {
        Trajectory traj;
        try {
            if (msg.contains("csv") && msg["csv"].is_string())
                traj = parse_trajectory_csv(msg["csv"].get<std::string>());
            else if (msg.contains("file") && msg["file"].is_string())
                traj = load_trajectory(msg["file"].get<std::string>());
            else
                throw BadRequest{"'play' needs a 'file' or 'csv' string"};
        } catch (const TrajectoryError& e) {
            throw BadRequest{e.what()};
        } catch (const IoError& e) {
            return {Status::Code::Io, e.what()};
        }
        return svc.play(client, std::move(traj));
    }
    if (type == "landmarks") {
        teleop::LandmarkFrame frame;
        try {
            frame = teleop::parse_landmark_json(raw);
        } catch (const FrameError& e) {
            throw BadRequest{e.what()};
        }
        return svc.landmarks(client, frame);
    }
    if (type == "reset") return svc.reset(client);
    if (type == "stop" || type == "release") return svc.stop(client);
    throw BadRequest{"unknown message type '" + type + "'"};
}

}  // namespace

std::string state_message(const service::Snapshot& s, const HandGeometry& geometry,
                          const std::optional<std::string>& id) {
    json joints = json::object();
    json limits = json::object();
    for (std::size_t i = 0; i < kDofCount; ++i) {
        const std::string name(dof_name(i));
        joints[name] = rad_to_deg(s.state.angles()[i]);
        const Interval& lim = dof_limits(geometry, i);
        limits[name] = json::array({rad_to_deg(lim.lo), rad_to_deg(lim.hi)});
    }
    json motors = json::array();
    for (const auto& m : s.motors) motors.push_back(m.rotation);
    json tendons = json::object();
    json fk = json::object();
    for (Finger f : kAllFingers) {
        const auto& t = s.tendons[index_of(f)];
        tendons[std::string(finger_name(f))] = {
            {"j1", t.joint1.extensor}, {"j2", t.joint2.extensor}, {"j3", t.joint3.extensor},
            {"coupled_extensor", t.coupled_extensor()}};
        json pts = json::array();
        for (const auto& p : s.fk[index_of(f)].points) pts.push_back(vec3(p));
        fk[std::string(finger_name(f))] = pts;
    }
    json j = {{"v", kVersion},
              {"type", "state"},
              {"seq", s.seq},
              {"t", s.t},
              {"source", service::source_name(s.source)},
              {"owner", s.owner},
              {"mode", thumb::mode_name(s.mode)},
              {"joints_deg", joints},
              {"limits_deg", limits},
              {"motors_rad", motors},
              {"tendons_m", tendons},
              {"plate_m", {{"left", s.plate.left}, {"right", s.plate.right}}},
              {"fk_m", fk}};
    attach_id(j, id);
    return j.dump();
}

std::string error_message(std::string_view code, std::string_view message, const std::optional<std::string>& id) {
    json j = {{"v", kVersion}, {"type", "err"}, {"code", code}, {"message", message}};
    attach_id(j, id);
    return j.dump();
}

std::string handle_line(service::HandService& svc, const std::string& client, std::string_view line) {
    json msg;
    try {
        msg = json::parse(line);
    } catch (const json::parse_error&) {
        return error_message("bad_request", "message is not valid JSON");
    }
    if (!msg.is_object()) return error_message("bad_request", "message must be a JSON object");

    std::optional<std::string> id;
    if (msg.contains("id")) id = msg["id"].is_string() ? msg["id"].get<std::string>() : msg["id"].dump();
    if (!msg.contains("v") || msg["v"] != kVersion)
        return error_message("version", "field 'v' must be 1", id);
    if (!msg.contains("type") || !msg["type"].is_string())
        return error_message("bad_request", "missing string field 'type'", id);

    Status status;
    try {
        status = dispatch(svc, client, msg["type"].get<std::string>(), msg, line);
    } catch (const BadRequest& e) {
        return error_message("bad_request", e.message, id);
    } catch (const std::exception& e) {
        return error_message("internal", e.what(), id);
    }
    if (!status.ok()) return error_message(service::code_name(status.code), status.message, id);

    std::string reply = state_message(*svc.snapshot(), svc.geometry(), id);
    if (!status.message.empty()) {
        json j = json::parse(reply);
        j["note"] = status.message;
        reply = j.dump();
    }
    return reply;
}

}  // namespace rotograb::protocol
