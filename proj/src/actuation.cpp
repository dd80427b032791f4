#include "rotograb/actuation.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <utility>

#include "rotograb/errors.hpp"
#include "rotograb/number_format.hpp"

namespace rotograb {

MotorCommands joint_to_motor(const JointState& state, const HandGeometry& geometry, double timestamp) {
    MotorCommands out{};
    for (Finger f : kAllFingers) {
        const auto tendons = kinematics::finger_tendon_deltas(geometry, state.theta1(f), state.theta2(f));
        out[motor_id(f, 1)] = {motor_id(f, 1), tendons.joint1.extensor / geometry.spool_radius_j1, timestamp};
        out[motor_id(f, 2)] = {motor_id(f, 2), tendons.joint2.extensor / geometry.spool_radius_j23_flexor,
                               timestamp};
    }
    const auto plate = thumb::plate_tendon_delta(state.plate(), geometry);
    out[kPlateMotor] = {kPlateMotor, plate.right / geometry.plate_spool_radius, timestamp};
    return out;
}

JointState motor_to_joint(std::span<const double, kMotorCount> rotations, const HandGeometry& geometry) {
    JointAngles angles{};
    const double r = geometry.joint_radius;
    for (Finger f : kAllFingers) {
        angles[dof_index(f, 1)] = kinematics::invert_tendon_delta(
            rotations[motor_id(f, 1)] * geometry.spool_radius_j1, kJoint1Calibration, r, geometry.joint1_limits);
        angles[dof_index(f, 2)] = kinematics::invert_tendon_delta(
            rotations[motor_id(f, 2)] * geometry.spool_radius_j23_flexor, kJoint23Calibration, r,
            geometry.joint23_limits);
    }
    angles[kPlateDof] = thumb::invert_plate_delta(rotations[kPlateMotor] * geometry.plate_spool_radius, geometry);
    return JointState::from_angles(angles, geometry);
}

CoupledSpools coupled_spools(const JointState& state, Finger finger, const HandGeometry& geometry) {
    const auto tendons = kinematics::finger_tendon_deltas(geometry, state.theta1(finger), state.theta2(finger));
    const auto commands = joint_to_motor(state, geometry);
    CoupledSpools out;
    out.motor_rotation = commands[motor_id(finger, 2)].rotation;
    out.flexor_length_change = tendons.joint2.flexor;
    out.extensor_length_change = tendons.coupled_extensor();
    // Pulling in the flexor is positive spool rotation on that side.
    out.flexor_spool_rotation = -out.flexor_length_change / geometry.spool_radius_j23_flexor;
    out.extensor_spool_rotation = out.extensor_length_change / geometry.spool_radius_j23_extensor;
    return out;
}

// ---------------------------------------------------------------------------

BusSession::BusSession(BusSession&& other) noexcept
    : bus_(std::exchange(other.bus_, nullptr)), owner_(std::move(other.owner_)) {}

BusSession& BusSession::operator=(BusSession&& other) noexcept {
    if (this != &other) {
        release();
        bus_ = std::exchange(other.bus_, nullptr);
        owner_ = std::move(other.owner_);
    }
    return *this;
}

BusSession::~BusSession() { release(); }

void BusSession::release() {
    if (bus_ != nullptr) {
        bus_->release(*this);
        bus_ = nullptr;
    }
}

void BusSession::send(const MotorCommand& command) {
    if (bus_ == nullptr) throw BusError("bus session already released");
    if (command.motor_id >= kMotorCount) throw BusError("motor id out of range");
    if (!std::isfinite(command.rotation)) throw BusError("non-finite rotation");
    bus_->write(command);
}

void BusSession::send(std::span<const MotorCommand> commands) {
    for (const auto& c : commands) send(c);
}

std::optional<BusSession> ServoBus::try_acquire(std::string owner) {
    std::lock_guard lock(session_mutex_);
    if (owner_) return std::nullopt;
    owner_ = owner;
    return BusSession(this, std::move(owner));
}

bool ServoBus::busy() const {
    std::lock_guard lock(session_mutex_);
    return owner_.has_value();
}

std::optional<std::string> ServoBus::owner() const {
    std::lock_guard lock(session_mutex_);
    return owner_;
}

void ServoBus::release(const BusSession&) {
    std::lock_guard lock(session_mutex_);
    owner_.reset();
}

// ---------------------------------------------------------------------------

std::vector<LogEntry> CommandLog::for_motor(std::uint8_t motor) const {
    std::vector<LogEntry> out;
    for (const auto& e : entries_)
        if (e.motor_id == motor) out.push_back(e);
    return out;
}

std::string CommandLog::serialize() const {
    std::string out;
    for (const auto& e : entries_) {
        out += format_exact(e.t);
        out += ',';
        out += std::to_string(e.motor_id);
        out += ',';
        out += format_exact(e.rotation);
        out += '\n';
    }
    return out;
}

void CommandLog::write(std::ostream& out) const { out << serialize(); }

CommandLog CommandLog::parse(std::string_view text) {
    CommandLog log;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos)
            throw Error("command log line " + std::to_string(line_no) + ": expected t,motor_id,rotation_rad");
        LogEntry e;
        unsigned motor = 0;
        const auto id_text = line.substr(c1 + 1, c2 - c1 - 1);
        const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), motor);
        const auto t = parse_double(line.substr(0, c1));
        const auto rot = parse_double(line.substr(c2 + 1));
        if (ec != std::errc{} || ptr != id_text.data() + id_text.size() || motor >= kMotorCount || !t || !rot)
            throw Error("command log line " + std::to_string(line_no) + ": malformed record");
        e.t = *t;
        e.motor_id = static_cast<std::uint8_t>(motor);
        e.rotation = *rot;
        log.append(e);
    }
    return log;
}

void CommandLog::replay(BusSession& session) const {
    for (const auto& e : entries_) session.send(MotorCommand{e.motor_id, e.rotation, e.t});
}

MockServoBus::MockServoBus() : epoch_(std::chrono::steady_clock::now()) {}

CommandLog MockServoBus::log() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

std::size_t MockServoBus::command_count() const {
    std::lock_guard lock(log_mutex_);
    return log_.size();
}

void MockServoBus::fail_after(std::size_t accepted) {
    std::lock_guard lock(log_mutex_);
    remaining_before_failure_ = accepted;
}

void MockServoBus::write(const MotorCommand& command) {
    const auto now = std::chrono::steady_clock::now();
    std::lock_guard lock(log_mutex_);
    if (remaining_before_failure_) {
        if (*remaining_before_failure_ == 0) throw BusError("mock bus rejected command");
        --*remaining_before_failure_;
    }
    const double t = std::chrono::duration<double>(now - epoch_).count();
    log_.append({t, command.motor_id, command.rotation});
}

}  // namespace rotograb
