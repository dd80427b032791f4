// rotograb: command-line front end. Angles in degrees, lengths in metres.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rotograb/actuation.hpp"
#include "rotograb/errors.hpp"
#include "rotograb/finger_kinematics.hpp"
#include "rotograb/hand_geometry.hpp"
#include "rotograb/hand_service.hpp"
#include "rotograb/number_format.hpp"
#include "rotograb/policy.hpp"
#include "rotograb/server.hpp"
#include "rotograb/thumb_rotation.hpp"
#include "rotograb/trajectory.hpp"
#include "rotograb/workspace.hpp"

using namespace rotograb;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kDomain = 3, kIo = 4 };

struct Output {
    json meta = json::object();
    json rows = json::array();
};

std::string cell(const json& v) {
    if (v.is_number_float()) return format_exact(v.get<double>() + 0.0);  // no "-0"
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

void print(const Output& out, const std::string& format) {
    if (format == "json") {
        json doc = out.meta;
        doc["rows"] = out.rows;
        std::cout << doc.dump(2) << '\n';
        return;
    }
    for (const auto& [k, v] : out.meta.items()) std::cout << "# " << k << ": " << cell(v) << '\n';
    if (out.rows.empty()) return;
    bool first = true;
    for (const auto& [k, v] : out.rows.front().items()) {
        std::cout << (first ? "" : ",") << k;
        first = false;
    }
    std::cout << '\n';
    for (const auto& row : out.rows) {
        first = true;
        for (const auto& [k, v] : row.items()) {
            std::cout << (first ? "" : ",") << cell(v);
            first = false;
        }
        std::cout << '\n';
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << text;
    if (!f) throw IoError("write failed for " + path);
}

Finger finger_arg(const std::string& name) {
    const auto f = parse_finger(name);
    if (!f) throw CLI::ValidationError("--finger", "unknown finger '" + name + "'");
    return *f;
}

std::vector<Finger> fingers_arg(const std::string& name) {
    if (name == "all") return {kAllFingers.begin(), kAllFingers.end()};
    return {finger_arg(name)};
}

constexpr std::array<const char*, 5> kPointNames{"base", "joint1", "joint2", "joint3", "tip"};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotograb hand engine: kinematics, actuation, workspace, playback and control service"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string format = "csv";
    app.add_option("--config", config_path, "Hand geometry JSON file");
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    // fk
    auto* fk = app.add_subcommand("fk", "Joint angles to finger point chain");
    std::string fk_finger = "all";
    double fk_t1 = 0.0, fk_t2 = 0.0, fk_plate = 0.0;
    bool fk_clamp = false;
    fk->add_option("--finger", fk_finger, "thumb|index|middle|ring|pinkie|all");
    fk->add_option("--theta1", fk_t1, "Joint 1 angle, deg");
    fk->add_option("--theta2", fk_t2, "Joint 2 (= joint 3) angle, deg");
    fk->add_option("--plate", fk_plate, "Thumb plate angle, deg");
    fk->add_flag("--clamp", fk_clamp, "Saturate angles at the limits instead of failing");

    // tendon
    auto* tendon = app.add_subcommand("tendon", "Joint angles to tendon deltas and motor rotations");
    std::string td_finger;
    double td_t1 = 0.0, td_t2 = 0.0;
    std::optional<double> td_plate;
    tendon->add_option("--finger", td_finger, "Finger")->required();
    tendon->add_option("--theta1", td_t1, "Joint 1 angle, deg")->required();
    tendon->add_option("--theta2", td_t2, "Joint 2 (= joint 3) angle, deg")->required();
    tendon->add_option("--plate", td_plate, "Also report the plate tendons at this angle, deg");

    // invert
    auto* invert = app.add_subcommand("invert", "Tendon delta to joint angle");
    std::string inv_joint = "1";
    double inv_delta = 0.0;
    invert->add_option("--joint", inv_joint, "1, 2, 3 or plate")->check(CLI::IsMember({"1", "2", "3", "plate"}));
    invert->add_option("--delta", inv_delta, "Extensor (or right plate tendon) length change, m")->required();

    // workspace
    auto* ws = app.add_subcommand("workspace", "Projected fingertip workspace report");
    std::size_t ws_res = 25, ws_plate = 27;
    std::string ws_cloud;
    ws->add_option("--resolution", ws_res, "Grid points per joint")->check(CLI::Range(2, 2000));
    ws->add_option("--plate-samples", ws_plate, "Plate angles in the thumb sweep")->check(CLI::Range(1, 2000));
    ws->add_option("--cloud", ws_cloud, "Write every sampled point to this CSV");

    // play
    auto* play = app.add_subcommand("play", "Replay a trajectory on the mock bus");
    std::string pl_traj, pl_log;
    double pl_rate = 1.0;
    bool pl_timing = false;
    play->add_option("trajectory", pl_traj, "Trajectory CSV")->required();
    play->add_option("--log", pl_log, "Write the bus command log here");
    play->add_option("--rate-scale", pl_rate, "Speed factor")->check(CLI::PositiveNumber);
    play->add_flag("--timing", pl_timing, "Also report scheduling error (varies run to run)");

    // reward
    auto* reward = app.add_subcommand("reward", "Ball-rotation reward for angular velocities");
    std::vector<double> rw_omega;
    policy::RewardSpec rw_spec;
    reward->add_option("--omega", rw_omega, "Angular velocity about x, rad/s")->required();
    reward->add_option("--sign", rw_spec.direction_sign, "Desired direction, +1 or -1")
        ->check(CLI::IsMember({1, -1}));
    reward->add_option("--falloff", rw_spec.falloff_width, "Linear decay width, rad/s");
    reward->add_option("--band-lo", rw_spec.band.lo, "Band lower edge, rad/s");
    reward->add_option("--band-hi", rw_spec.band.hi, "Band upper edge, rad/s");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the control service");
    server::ServerOptions sv_opts;
    std::optional<std::uint16_t> sv_port, sv_tcp;
    double sv_rate = 1.0;
    serve->add_option("--bind", sv_opts.bind, "Listen address");
    serve->add_option("--port", sv_port, "WebSocket port (overrides ROTOGRAB_PORT)");
    serve->add_option("--tcp-port", sv_tcp, "Plain TCP port");
    serve->add_option("--tick-hz", sv_opts.tick_hz, "State broadcast rate")->check(CLI::PositiveNumber);
    serve->add_option("--rate-scale", sv_rate, "Playback speed factor")->check(CLI::PositiveNumber);

    // validate
    auto* validate = app.add_subcommand("validate", "Check a trajectory against the hand");
    std::string va_traj;
    validate->add_option("trajectory", va_traj, "Trajectory CSV")->required();

    auto* config = app.add_subcommand("config", "Print the effective geometry as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const HandGeometry g = config_path.empty() ? default_geometry() : load_geometry(config_path);
        Output out;

        if (*fk) {
            const LimitMode mode = fk_clamp ? LimitMode::Clamp : LimitMode::Strict;
            for (Finger f : fingers_arg(fk_finger)) {
                const auto pts = kinematics::finger_fk(g, f, deg_to_rad(fk_t1), deg_to_rad(fk_t2),
                                                       f == Finger::Thumb ? deg_to_rad(fk_plate) : 0.0, mode);
                for (std::size_t i = 0; i < pts.points.size(); ++i)
                    out.rows.push_back({{"finger", finger_name(f)},
                                        {"point", kPointNames[i]},
                                        {"x", pts.points[i].x()},
                                        {"y", pts.points[i].y()},
                                        {"z", pts.points[i].z()}});
            }
        } else if (*tendon) {
            const Finger f = finger_arg(td_finger);
            JointState state = JointState::calibration().with_finger(f, deg_to_rad(td_t1), deg_to_rad(td_t2), g);
            if (td_plate) state = state.with_plate(deg_to_rad(*td_plate), g);
            const auto t = kinematics::finger_tendon_deltas(g, state.theta1(f), state.theta2(f));
            const auto spools = coupled_spools(state, f, g);
            const auto motors = joint_to_motor(state, g);
            const auto add = [&](const char* name, double v) { out.rows.push_back({{"quantity", name}, {"value", v}}); };
            out.meta["finger"] = finger_name(f);
            add("joint1_flexor_m", t.joint1.flexor);
            add("joint1_extensor_m", t.joint1.extensor);
            add("joint2_flexor_m", t.joint2.flexor);
            add("joint2_extensor_m", t.joint2.extensor);
            add("joint3_flexor_m", t.joint3.flexor);
            add("joint3_extensor_m", t.joint3.extensor);
            add("coupled_extensor_m", t.coupled_extensor());
            add("motor_a_rad", motors[motor_id(f, 1)].rotation);
            add("motor_b_rad", motors[motor_id(f, 2)].rotation);
            add("flexor_spool_rad", spools.flexor_spool_rotation);
            add("extensor_spool_rad", spools.extensor_spool_rotation);
            if (td_plate) {
                const auto p = thumb::plate_tendon_delta(state.plate(), g);
                add("plate_left_m", p.left);
                add("plate_right_m", p.right);
                add("plate_motor_rad", motors[kPlateMotor].rotation);
            }
        } else if (*invert) {
            double angle = 0.0;
            if (inv_joint == "plate")
                angle = thumb::invert_plate_delta(inv_delta, g);
            else if (inv_joint == "1")
                angle = kinematics::invert_tendon_delta(inv_delta, kJoint1Calibration, g.joint_radius, g.joint1_limits);
            else
                angle = kinematics::invert_tendon_delta(inv_delta, kJoint23Calibration, g.joint_radius,
                                                        g.joint23_limits);
            out.rows.push_back({{"joint", inv_joint}, {"delta_m", inv_delta}, {"angle_deg", rad_to_deg(angle)}});
        } else if (*ws) {
            const auto report = workspace::workspace_report(g, ws_res, ws_plate);
            if (!ws_cloud.empty()) {
                std::vector<workspace::WorkspaceCloud> clouds;
                for (Finger f : kAllFingers)
                    clouds.push_back(workspace::sample_workspace(g, f, ws_res, f == Finger::Thumb ? ws_plate : 1));
                write_file(ws_cloud, workspace::cloud_to_csv(clouds));
            }
            if (format == "csv") {
                std::cout << workspace::report_to_csv(report);
                return kOk;
            }
            out.meta["resolution"] = report.resolution;
            out.meta["plate_samples"] = report.plate_samples;
            out.meta["thumb_exceeds_all"] = report.thumb_exceeds_all();
            for (const auto& m : report.fingers)
                out.rows.push_back({{"finger", finger_name(m.finger)},
                                    {"points", m.points},
                                    {"projected_area_m2", m.projected_area},
                                    {"degenerate", m.degenerate},
                                    {"bbox_volume_m3", m.bbox_volume},
                                    {"thumb_exceeds", report.thumb_exceeds[index_of(m.finger)]}});
        } else if (*play) {
            const Trajectory traj = load_trajectory(pl_traj);
            MockServoBus bus;
            auto session = bus.try_acquire("cli");
            PlaybackOptions opts;
            opts.rate_scale = pl_rate;
            const PlaybackReport r = play_trajectory(traj, g, *session, opts);
            session->release();
            if (!pl_log.empty()) write_file(pl_log, bus.log().serialize());
            const auto add = [&](const char* name, const json& v) { out.rows.push_back({{"quantity", name}, {"value", v}}); };
            out.meta["name"] = traj.name;
            add("samples", r.samples_commanded);
            add("commands", bus.command_count());
            if (pl_timing) {
                add("mean_period_deviation", r.mean_period_deviation);
                add("mean_abs_lateness_s", r.mean_abs_lateness);
                add("max_abs_lateness_s", r.max_abs_lateness);
            }
        } else if (*reward) {
            rw_spec.validate();
            for (double w : rw_omega)
                out.rows.push_back({{"omega", w}, {"reward", policy::rotation_reward(w, rw_spec)}});
        } else if (*serve) {
            server::apply_environment(sv_opts);
            if (sv_port) {
                sv_opts.ws_port = *sv_port;
                sv_opts.tcp_port = static_cast<std::uint16_t>(*sv_port + 1);
            }
            if (sv_tcp) sv_opts.tcp_port = *sv_tcp;
            service::ServiceOptions svc_opts;
            svc_opts.rate_scale = sv_rate;
            service::HandService svc(g, std::make_shared<MockServoBus>(), svc_opts);
            server::Server srv(svc, sv_opts);
            srv.start();
            std::cout << "ws " << srv.ws_port() << "\ntcp " << srv.tcp_port() << std::endl;
            srv.run_until_signal();
            return kOk;
        } else if (*validate) {
            const Trajectory traj = load_trajectory(va_traj);
            const auto report = policy::validate_trajectory_fixture(traj, g);
            out.meta["status"] = report.passed() ? "pass" : "fail";
            out.meta["samples"] = report.sample_count;
            if (!report.passed()) {
                for (const auto& i : report.issues)
                    out.rows.push_back(
                        {{"sample", i.sample}, {"kind", policy::issue_kind_name(i.kind)}, {"message", i.message}});
                print(out, format);
                return kDomain;
            }
            if (report.ranges)
                for (std::size_t d = 0; d < kDofCount; ++d)
                    out.rows.push_back({{"dof", dof_name(d)},
                                        {"min_deg", rad_to_deg((*report.ranges)[d].lo)},
                                        {"max_deg", rad_to_deg((*report.ranges)[d].hi)}});
        } else if (*config) {
            std::cout << serialize_geometry(g);
            return kOk;
        }
        print(out, format);
        return kOk;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
}
