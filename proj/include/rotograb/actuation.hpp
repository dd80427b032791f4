#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotograb/finger_kinematics.hpp"
#include "rotograb/hand_geometry.hpp"
#include "rotograb/thumb_rotation.hpp"

namespace rotograb {

/// Motors 0-9: (joint 1, joints 2+3) per finger in the order thumb, index,
/// middle, ring, pinkie. Motor 10 turns the plate.
inline constexpr std::size_t kMotorCount = 11;
inline constexpr std::uint8_t kPlateMotor = 10;

constexpr std::uint8_t motor_id(Finger f, int joint) {
    return static_cast<std::uint8_t>(2 * index_of(f) + (joint == 1 ? 0 : 1));
}

struct MotorCommand {
    std::uint8_t motor_id = 0;
    double rotation = 0.0;   // rad of spool rotation from calibration
    double timestamp = 0.0;  // s
};

using MotorCommands = std::array<MotorCommand, kMotorCount>;

/// Spool rotations for a pose. Motor A of a finger turns by the joint-1
/// delta over the joint-1 spool radius; motor B by the joint-2 delta over the
/// flexor spool radius (its extensor spool has twice the radius and takes
/// up the coupled extensor); the plate motor by the right plate delta over
/// the plate spool radius.
MotorCommands joint_to_motor(const JointState& state, const HandGeometry& geometry, double timestamp = 0.0);

/// Inverse of joint_to_motor through the tendon-delta inversions. Throws
/// RangeError for rotations no in-range pose produces.
JointState motor_to_joint(std::span<const double, kMotorCount> rotations, const HandGeometry& geometry);

/// Both spools on the coupled joint-2/3 motor for one finger.
struct CoupledSpools {
    double motor_rotation = 0.0;
    double flexor_length_change = 0.0;    // joint-2 flexor
    double extensor_length_change = 0.0;  // shared joint-2/3 extensor
    double flexor_spool_rotation = 0.0;
    double extensor_spool_rotation = 0.0;
};

CoupledSpools coupled_spools(const JointState& state, Finger finger, const HandGeometry& geometry);

// ---------------------------------------------------------------------------
// Servo bus
// ---------------------------------------------------------------------------

class ServoBus;

/// Exclusive write access to a bus. Released on destruction.
class BusSession {
public:
    BusSession(BusSession&& other) noexcept;
    BusSession& operator=(BusSession&& other) noexcept;
    BusSession(const BusSession&) = delete;
    BusSession& operator=(const BusSession&) = delete;
    ~BusSession();

    void send(const MotorCommand& command);
    void send(std::span<const MotorCommand> commands);

    const std::string& owner() const { return owner_; }
    bool active() const { return bus_ != nullptr; }
    void release();

private:
    friend class ServoBus;
    BusSession(ServoBus* bus, std::string owner) : bus_(bus), owner_(std::move(owner)) {}
    ServoBus* bus_ = nullptr;
    std::string owner_;
};

/// Single-writer endpoint for motor commands. A hardware driver derives from
/// this and implements `write`; everything else goes through BusSession.
class ServoBus {
public:
    virtual ~ServoBus() = default;

    /// Nullopt when another session holds the bus.
    std::optional<BusSession> try_acquire(std::string owner);

    bool busy() const;
    std::optional<std::string> owner() const;

protected:
    /// Throws BusError to reject a command.
    virtual void write(const MotorCommand& command) = 0;

private:
    friend class BusSession;
    void release(const BusSession& session);

    mutable std::mutex session_mutex_;
    std::optional<std::string> owner_;
};

struct LogEntry {
    double t = 0.0;  // receive time, s since the bus was created
    std::uint8_t motor_id = 0;
    double rotation = 0.0;

    bool operator==(const LogEntry&) const = default;
};

/// Ordered record of every command a bus accepted.
class CommandLog {
public:
    void append(const LogEntry& entry) { entries_.push_back(entry); }

    const std::vector<LogEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::vector<LogEntry> for_motor(std::uint8_t motor) const;

    /// One `t,motor_id,rotation_rad` line per entry.
    std::string serialize() const;
    void write(std::ostream& out) const;
    static CommandLog parse(std::string_view text);

    /// Sends every entry, in order, through a session.
    void replay(BusSession& session) const;

private:
    std::vector<LogEntry> entries_;
};

/// In-memory bus. Commands are logged with their receive time.
class MockServoBus : public ServoBus {
public:
    MockServoBus();

    CommandLog log() const;
    std::size_t command_count() const;

    /// Reject every command after `accepted` more commands (for tests).
    void fail_after(std::size_t accepted);

protected:
    void write(const MotorCommand& command) override;

private:
    mutable std::mutex log_mutex_;
    CommandLog log_;
    std::chrono::steady_clock::time_point epoch_;
    std::optional<std::size_t> remaining_before_failure_;
};

}  // namespace rotograb
