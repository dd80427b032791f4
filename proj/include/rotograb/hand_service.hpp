#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "rotograb/actuation.hpp"
#include "rotograb/finger_kinematics.hpp"
#include "rotograb/hand_geometry.hpp"
#include "rotograb/teleop.hpp"
#include "rotograb/thumb_rotation.hpp"
#include "rotograb/trajectory.hpp"

namespace rotograb::service {

using thumb::PlateMode;

enum class Source { Idle, Teleop, Playback, Manual };

std::string_view source_name(Source source);

/// Immutable view of the hand at one sequence number. Every derived field is
/// computed from `state`.
struct Snapshot {
    std::uint64_t seq = 0;
    double t = 0.0;  // s since the service started
    JointState state = JointState::calibration();
    PlateMode mode = PlateMode::Middle;
    Source source = Source::Idle;
    std::string owner;  // empty when idle
    MotorCommands motors{};
    std::array<kinematics::FingerTendons, kFingerCount> tendons{};
    thumb::PlateDeltas plate{};
    std::array<kinematics::FingerPoints, kFingerCount> fk{};
};

using SnapshotPtr = std::shared_ptr<const Snapshot>;

struct Status {
    enum class Code { Ok, Busy, BadRequest, Limit, Range, Bus, Io, Internal };

    Code code = Code::Ok;
    std::string message;

    bool ok() const { return code == Code::Ok; }
    static Status success(std::string note = {}) { return {Code::Ok, std::move(note)}; }
};

std::string_view code_name(Status::Code code);

struct ServiceOptions {
    teleop::RetargetProfile profile;
    /// Playback speed factor applied to every `play` request.
    double rate_scale = 1.0;
};

/// Owns the hand state. All mutations run in order on one internal worker
/// thread; readers get immutable snapshots. One client at a time may drive
/// the bus; the others receive Busy until it releases or disconnects.
class HandService {
public:
    HandService(HandGeometry geometry, std::shared_ptr<ServoBus> bus);
    HandService(HandGeometry geometry, std::shared_ptr<ServoBus> bus, ServiceOptions options);
    ~HandService();

    HandService(const HandService&) = delete;
    HandService& operator=(const HandService&) = delete;

    const HandGeometry& geometry() const { return geometry_; }
    SnapshotPtr snapshot() const;

    /// Manual pose change. Unlisted degrees of freedom keep their value;
    /// out-of-limit targets are rejected with Limit.
    Status set_joints(const std::string& client, const std::vector<std::pair<std::size_t, double>>& targets);
    Status set_mode(const std::string& client, PlateMode mode);
    /// Back to the calibration pose (Manual source).
    Status reset(const std::string& client);
    Status play(const std::string& client, Trajectory trajectory);
    Status landmarks(const std::string& client, const teleop::LandmarkFrame& frame);
    /// Ends playback or teleop and returns to Idle. Owner only.
    Status stop(const std::string& client);
    Status release(const std::string& client) { return stop(client); }
    /// Drops any ownership the client holds.
    void disconnect(const std::string& client);

    /// Called on the worker thread after each published change.
    using Listener = std::function<void(const SnapshotPtr&)>;
    int subscribe(Listener listener);
    void unsubscribe(int id);

    /// Every source change so far, oldest first.
    std::vector<std::pair<Source, Source>> transitions() const;

private:
    template <class F>
    auto submit(F&& f) -> decltype(f());
    void post(std::function<void()> task);
    void run_worker();

    // Worker-thread only.
    Status claim(const std::string& client, Source source);
    bool enter(Source source, const std::string& owner);
    void leave_to_idle();
    void stop_playback();
    void finish_playback(std::uint64_t generation, const std::string& error);
    Status apply(const JointState& state, PlateMode mode, bool send);
    void publish();

    HandGeometry geometry_;
    std::shared_ptr<ServoBus> bus_;
    ServiceOptions options_;
    std::chrono::steady_clock::time_point start_;

    // Worker-owned state.
    JointState state_ = JointState::calibration();
    PlateMode mode_ = PlateMode::Middle;
    Source source_ = Source::Idle;
    std::string owner_;
    std::optional<BusSession> session_;
    std::optional<teleop::Retargeter> retargeter_;
    std::jthread playback_;
    std::uint64_t playback_generation_ = 0;
    std::uint64_t seq_ = 0;

    mutable std::mutex snapshot_mutex_;
    SnapshotPtr snapshot_;
    std::vector<std::pair<Source, Source>> transitions_;

    std::mutex listener_mutex_;
    std::map<int, Listener> listeners_;
    int next_listener_ = 0;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<std::function<void()>> queue_;
    bool stopping_ = false;
    std::thread worker_;
};

template <class F>
auto HandService::submit(F&& f) -> decltype(f()) {
    using R = decltype(f());
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(f));
    auto result = task->get_future();
    post([task] { (*task)(); });
    return result.get();
}

}  // namespace rotograb::service
