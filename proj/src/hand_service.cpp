#include "rotograb/hand_service.hpp"

#include <exception>

#include <spdlog/spdlog.h>

#include "rotograb/errors.hpp"
#include "rotograb/policy.hpp"

namespace rotograb::service {

namespace {

Snapshot derive(std::uint64_t seq, double t, const JointState& state, PlateMode mode, Source source,
                const std::string& owner, const HandGeometry& geometry) {
    Snapshot s;
    s.seq = seq;
    s.t = t;
    s.state = state;
    s.mode = mode;
    s.source = source;
    s.owner = owner;
    s.motors = joint_to_motor(state, geometry, t);
    for (Finger f : kAllFingers)
        s.tendons[index_of(f)] = kinematics::finger_tendon_deltas(geometry, state.theta1(f), state.theta2(f));
    s.plate = thumb::plate_tendon_delta(state.plate(), geometry);
    s.fk = kinematics::hand_fk(geometry, state);
    return s;
}

}  // namespace

std::string_view source_name(Source source) {
    switch (source) {
        case Source::Idle: return "idle";
        case Source::Teleop: return "teleop";
        case Source::Playback: return "playback";
        case Source::Manual: return "manual";
    }
    return "idle";
}

std::string_view code_name(Status::Code code) {
    switch (code) {
        case Status::Code::Ok: return "ok";
        case Status::Code::Busy: return "busy";
        case Status::Code::BadRequest: return "bad_request";
        case Status::Code::Limit: return "limit";
        case Status::Code::Range: return "range";
        case Status::Code::Bus: return "bus";
        case Status::Code::Io: return "io";
        case Status::Code::Internal: return "internal";
    }
    return "internal";
}

HandService::HandService(HandGeometry geometry, std::shared_ptr<ServoBus> bus)
    : HandService(std::move(geometry), std::move(bus), ServiceOptions{}) {}

HandService::HandService(HandGeometry geometry, std::shared_ptr<ServoBus> bus, ServiceOptions options)
    : geometry_(std::move(geometry)), bus_(std::move(bus)), options_(std::move(options)),
      start_(std::chrono::steady_clock::now()) {
    geometry_.validate();
    if (!bus_) throw std::invalid_argument("service needs a bus");
    if (options_.profile.joints[0].sources.empty()) options_.profile = teleop::RetargetProfile::defaults(geometry_);
    options_.profile.validate(geometry_);
    if (!(options_.rate_scale > 0.0)) throw std::invalid_argument("rate scale must be > 0");
    snapshot_ = std::make_shared<const Snapshot>(derive(0, 0.0, state_, mode_, source_, owner_, geometry_));
    worker_ = std::thread([this] { run_worker(); });
}

HandService::~HandService() {
    submit([this] {
        stop_playback();
        retargeter_.reset();
        session_.reset();
    });
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    worker_.join();
}

void HandService::post(std::function<void()> task) {
    {
        std::lock_guard lock(queue_mutex_);
        if (stopping_) return;
        queue_.push_back(std::move(task));
    }
    queue_cv_.notify_one();
}

void HandService::run_worker() {
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) return;
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        try {
            task();
        } catch (const std::exception& e) {
            spdlog::error("service task failed: {}", e.what());
        }
    }
}

SnapshotPtr HandService::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

std::vector<std::pair<Source, Source>> HandService::transitions() const {
    std::lock_guard lock(snapshot_mutex_);
    return transitions_;
}

int HandService::subscribe(Listener listener) {
    std::lock_guard lock(listener_mutex_);
    listeners_.emplace(next_listener_, std::move(listener));
    return next_listener_++;
}

void HandService::unsubscribe(int id) {
    std::lock_guard lock(listener_mutex_);
    listeners_.erase(id);
}

// --- worker thread ---------------------------------------------------------

void HandService::publish() {
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    auto next = std::make_shared<const Snapshot>(derive(++seq_, t, state_, mode_, source_, owner_, geometry_));
    {
        std::lock_guard lock(snapshot_mutex_);
        snapshot_ = next;
    }
    std::vector<Listener> listeners;
    {
        std::lock_guard lock(listener_mutex_);
        for (const auto& [id, l] : listeners_) listeners.push_back(l);
    }
    for (const auto& l : listeners) {
        try {
            l(next);
        } catch (const std::exception& e) {
            spdlog::warn("snapshot listener threw: {}", e.what());
        }
    }
}

bool HandService::enter(Source source, const std::string& owner) {
    auto session = bus_->try_acquire(owner);
    if (!session) return false;
    session_.emplace(std::move(*session));
    {
        std::lock_guard lock(snapshot_mutex_);
        transitions_.emplace_back(source_, source);
    }
    source_ = source;
    owner_ = owner;
    if (source == Source::Teleop) retargeter_.emplace(geometry_, options_.profile, state_);
    spdlog::info("{} took the bus for {}", owner, source_name(source));
    publish();
    return true;
}

void HandService::leave_to_idle() {
    if (source_ == Source::Idle) return;
    if (source_ == Source::Playback) stop_playback();
    retargeter_.reset();
    session_.reset();
    {
        std::lock_guard lock(snapshot_mutex_);
        transitions_.emplace_back(source_, Source::Idle);
    }
    spdlog::info("{} released the bus", owner_);
    source_ = Source::Idle;
    owner_.clear();
    publish();
}

Status HandService::claim(const std::string& client, Source source) {
    if (source_ != Source::Idle) {
        if (owner_ != client)
            return {Status::Code::Busy, "bus held by " + owner_ + " (" + std::string(source_name(source_)) + ")"};
        if (source_ == source) return Status::success();
        leave_to_idle();
    }
    if (!enter(source, client)) return {Status::Code::Busy, "bus held outside the service"};
    return Status::success();
}

void HandService::stop_playback() {
    ++playback_generation_;
    if (playback_.joinable()) {
        playback_.request_stop();
        playback_.join();
    }
}

void HandService::finish_playback(std::uint64_t generation, const std::string& error) {
    if (generation != playback_generation_ || source_ != Source::Playback) return;
    if (playback_.joinable()) playback_.join();
    if (!error.empty()) spdlog::warn("playback ended early: {}", error);
    leave_to_idle();
}

Status HandService::apply(const JointState& state, PlateMode mode, bool send) {
    if (send) {
        try {
            session_->send(joint_to_motor(state, geometry_, snapshot()->t));
        } catch (const BusError& e) {
            return {Status::Code::Bus, e.what()};
        }
    }
    state_ = state;
    mode_ = mode;
    publish();
    return Status::success();
}

// --- requests --------------------------------------------------------------

Status HandService::set_joints(const std::string& client,
                               const std::vector<std::pair<std::size_t, double>>& targets) {
    return submit([&]() -> Status {
        JointAngles angles = state_.angles();
        for (const auto& [dof, value] : targets) {
            if (dof >= kDofCount) return {Status::Code::BadRequest, "unknown degree of freedom"};
            angles[dof] = value;
        }
        std::optional<JointState> next;
        try {
            next = JointState::from_angles(angles, geometry_);
        } catch (const LimitError& e) {
            return {Status::Code::Limit, e.what()};
        }
        if (Status s = claim(client, Source::Manual); !s.ok()) return s;
        return apply(*next, thumb::nearest_mode(next->plate(), geometry_), true);
    });
}

Status HandService::set_mode(const std::string& client, PlateMode mode) {
    return submit([&]() -> Status {
        if (Status s = claim(client, Source::Manual); !s.ok()) return s;
        return apply(state_.with_plate(thumb::preset_angle(mode, geometry_), geometry_), mode, true);
    });
}

Status HandService::reset(const std::string& client) {
    return submit([&]() -> Status {
        if (Status s = claim(client, Source::Manual); !s.ok()) return s;
        return apply(JointState::calibration(), PlateMode::Middle, true);
    });
}

Status HandService::play(const std::string& client, Trajectory trajectory) {
    const auto report = policy::validate_trajectory_fixture(trajectory, geometry_);
    if (!report.passed()) {
        const auto& issue = report.issues.front();
        const auto code = issue.kind == policy::IssueKind::Limit ? Status::Code::Limit : Status::Code::BadRequest;
        return {code, "sample " + std::to_string(issue.sample) + ": " + issue.message};
    }
    return submit([&]() -> Status {
        if (source_ == Source::Playback && owner_ == client) stop_playback();
        if (Status s = claim(client, Source::Playback); !s.ok()) return s;
        const std::uint64_t generation = ++playback_generation_;
        BusSession* session = &*session_;
        playback_ = std::jthread([this, session, generation, traj = std::move(trajectory)](std::stop_token stop) {
            PlaybackOptions opts;
            opts.rate_scale = options_.rate_scale;
            opts.stop = stop;
            opts.on_sample = [this, generation](std::size_t, const JointState& s) {
                post([this, generation, s] {
                    if (generation == playback_generation_ && source_ == Source::Playback)
                        apply(s, thumb::nearest_mode(s.plate(), geometry_), false);
                });
            };
            std::string error;
            try {
                play_trajectory(traj, geometry_, *session, opts);
            } catch (const std::exception& e) {
                error = e.what();
            }
            post([this, generation, error] { finish_playback(generation, error); });
        });
        return Status::success();
    });
}

Status HandService::landmarks(const std::string& client, const teleop::LandmarkFrame& frame) {
    return submit([&]() -> Status {
        if (Status s = claim(client, Source::Teleop); !s.ok()) return s;
        const teleop::RetargetResult r = retargeter_->push(frame);
        if (r.held) return Status::success("held: " + r.reason);
        return apply(r.state, r.mode, true);
    });
}

Status HandService::stop(const std::string& client) {
    return submit([&]() -> Status {
        if (source_ == Source::Idle) return Status::success();
        if (owner_ != client) return {Status::Code::Busy, "bus held by " + owner_};
        leave_to_idle();
        return Status::success();
    });
}

void HandService::disconnect(const std::string& client) {
    submit([&] {
        if (source_ != Source::Idle && owner_ == client) leave_to_idle();
    });
}

}  // namespace rotograb::service
