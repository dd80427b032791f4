#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "rotograb/actuation.hpp"
#include "rotograb/errors.hpp"
#include "rotograb/trajectory.hpp"

using namespace rotograb;

namespace {

JointState random_state(std::mt19937_64& rng, const HandGeometry& g) {
    JointAngles a{};
    for (std::size_t d = 0; d < kDofCount; ++d) {
        const Interval& lim = dof_limits(g, d);
        a[d] = std::uniform_real_distribution<double>(lim.lo, lim.hi)(rng);
    }
    return JointState::from_angles(a, g);
}

Trajectory sweep(std::size_t count, double rate) {
    Trajectory t;
    t.name = "sweep";
    t.nominal_rate = rate;
    for (std::size_t i = 0; i < count; ++i) {
        JointAngles a = JointState::calibration().angles();
        a[dof_index(Finger::Index, 2)] = deg_to_rad(0.5 * static_cast<double>(i % 180));
        t.samples.push_back({static_cast<double>(i) / rate, a});
    }
    return t;
}

}  // namespace

TEST_CASE("motor layout") {
    CHECK(motor_id(Finger::Thumb, 1) == 0);
    CHECK(motor_id(Finger::Thumb, 2) == 1);
    CHECK(motor_id(Finger::Pinkie, 2) == 9);
    CHECK(motor_id(Finger::Index, 3) == 3);
    CHECK(kPlateMotor == 10);
}

TEST_CASE("calibration pose commands zero rotation on every motor") {
    const HandGeometry g;
    const MotorCommands c = joint_to_motor(JointState::calibration(), g, 1.5);
    for (std::size_t i = 0; i < kMotorCount; ++i) {
        CHECK(c[i].motor_id == i);
        CHECK(c[i].rotation == 0.0);
        CHECK(c[i].timestamp == 1.5);
    }
}

TEST_CASE("motor rotations invert back to the pose") {
    const HandGeometry g;
    std::mt19937_64 rng(11);
    for (int k = 0; k < 200; ++k) {
        const JointState s = random_state(rng, g);
        const MotorCommands c = joint_to_motor(s, g);
        std::array<double, kMotorCount> rot{};
        for (std::size_t i = 0; i < kMotorCount; ++i) rot[i] = c[i].rotation;
        const JointState back = motor_to_joint(rot, g);
        for (std::size_t d = 0; d < kDofCount; ++d) CHECK(std::abs(back.angles()[d] - s.angles()[d]) < 1e-6);
    }
    std::array<double, kMotorCount> bad{};
    bad[0] = 100.0;
    CHECK_THROWS_AS(motor_to_joint(bad, g), RangeError);
}

TEST_CASE("coupled spool contract") {
    const HandGeometry g;
    std::mt19937_64 rng(3);
    for (int k = 0; k < 500; ++k) {
        const JointState s = random_state(rng, g);
        for (Finger f : kAllFingers) {
            const CoupledSpools sp = coupled_spools(s, f, g);
            CHECK(std::abs(sp.extensor_length_change + 2.0 * sp.flexor_length_change) <= 1e-15);
            CHECK(std::abs(sp.extensor_spool_rotation - sp.flexor_spool_rotation) <= 1e-12);
            CHECK(std::abs(sp.motor_rotation - sp.flexor_spool_rotation) <= 1e-12);
        }
    }
}

TEST_CASE("bus allows a single writer") {
    MockServoBus bus;
    auto a = bus.try_acquire("alice");
    REQUIRE(a.has_value());
    CHECK(bus.busy());
    CHECK(bus.owner() == "alice");
    CHECK_FALSE(bus.try_acquire("bob").has_value());

    BusSession moved = std::move(*a);
    CHECK_FALSE(a->active());
    CHECK_THROWS_AS(a->send(MotorCommand{0, 0.1, 0.0}), BusError);
    moved.send(MotorCommand{2, 0.25, 0.0});
    CHECK_THROWS_AS(moved.send(MotorCommand{11, 0.0, 0.0}), BusError);
    CHECK_THROWS_AS(moved.send(MotorCommand{1, std::nan(""), 0.0}), BusError);
    moved.release();
    CHECK_FALSE(bus.busy());

    {
        auto b = bus.try_acquire("bob");
        REQUIRE(b.has_value());
    }
    CHECK_FALSE(bus.busy());
    CHECK(bus.command_count() == 1);
    CHECK(bus.log().entries().front().rotation == 0.25);
}

TEST_CASE("command log round trips exactly and replays") {
    const HandGeometry g;
    MockServoBus bus;
    {
        auto s = bus.try_acquire("t");
        std::mt19937_64 rng(5);
        for (int k = 0; k < 10; ++k) s->send(joint_to_motor(random_state(rng, g), g));
    }
    const CommandLog log = bus.log();
    CHECK(log.size() == 110);
    const CommandLog parsed = CommandLog::parse(log.serialize());
    CHECK(parsed.entries() == log.entries());
    CHECK(log.for_motor(kPlateMotor).size() == 10);

    MockServoBus second;
    auto s = second.try_acquire("replay");
    parsed.replay(*s);
    const auto replayed = second.log().entries();
    REQUIRE(replayed.size() == log.size());
    for (std::size_t i = 0; i < replayed.size(); ++i) {
        CHECK(replayed[i].motor_id == log.entries()[i].motor_id);
        CHECK(replayed[i].rotation == log.entries()[i].rotation);
    }
    CHECK_THROWS_AS(CommandLog::parse("0.1,12,0.5\n"), Error);
    CHECK_THROWS_AS(CommandLog::parse("0.1;2;0.5\n"), Error);
}

TEST_CASE("trajectory CSV round trip and errors") {
    Trajectory t = sweep(20, 50.0);
    t.source = "synthetic";
    t.metadata["operator"] = "test";
    const Trajectory back = parse_trajectory_csv(trajectory_to_csv(t));
    CHECK(back.name == "sweep");
    CHECK(back.source == "synthetic");
    CHECK(back.nominal_rate == 50.0);
    CHECK(back.metadata.at("operator") == "test");
    REQUIRE(back.samples.size() == t.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        CHECK(back.samples[i].t == t.samples[i].t);
        for (std::size_t d = 0; d < kDofCount; ++d)
            CHECK(std::abs(back.samples[i].angles[d] - t.samples[i].angles[d]) <= 1e-15);
    }

    const std::string header = trajectory_csv_header();
    CHECK_THROWS_WITH_AS(parse_trajectory_csv("t,a,b\n"), doctest::Contains("line 1"), TrajectoryError);
    CHECK_THROWS_WITH_AS(parse_trajectory_csv(header + "\n0,0,0,0,0,0,0,0,0,0,0,0\n0,0,0,0,0,0,0,0,0,0,0,0\n"),
                         doctest::Contains("line 3"), TrajectoryError);
    CHECK_THROWS_AS(parse_trajectory_csv(header + "\n0,0,0\n"), TrajectoryError);
    CHECK_THROWS_AS(parse_trajectory_csv(header + "\n0,x,0,0,0,0,0,0,0,0,0,0\n"), TrajectoryError);
    CHECK_THROWS_AS(parse_trajectory_csv(""), TrajectoryError);
    CHECK_THROWS_AS(load_trajectory("/nonexistent.csv"), IoError);
}

TEST_CASE("playback keeps its period on the mock bus") {
    const HandGeometry g;
    MockServoBus bus;
    auto s = bus.try_acquire("player");
    const Trajectory t = sweep(100, 50.0);
    std::size_t seen = 0;
    PlaybackOptions opts;
    opts.on_sample = [&](std::size_t i, const JointState&) { CHECK(i == seen++); };
    const PlaybackReport r = play_trajectory(t, g, *s, opts);
    CHECK(r.samples_commanded == 100);
    CHECK(seen == 100);
    CHECK(r.mean_period_deviation < 0.05);
    CHECK_FALSE(r.stopped);
    CHECK(bus.command_count() == 1100);
    CHECK(r.reached[dof_index(Finger::Index, 2)].hi == doctest::Approx(deg_to_rad(49.5)));

    // Samples arrive in order, one group of 11 per sample.
    const auto entries = bus.log().entries();
    for (std::size_t i = 1; i < entries.size(); ++i) CHECK(entries[i].t >= entries[i - 1].t);
    const auto index_b = bus.log().for_motor(motor_id(Finger::Index, 2));
    REQUIRE(index_b.size() == 100);
    const double spacing = index_b[99].t - index_b[0].t;
    CHECK(spacing == doctest::Approx(99.0 / 50.0).epsilon(0.05));
}

TEST_CASE("playback stops at an out-of-limit sample before sending it") {
    const HandGeometry g;
    MockServoBus bus;
    auto s = bus.try_acquire("player");
    Trajectory t = sweep(10, 1000.0);
    t.samples[6].angles[dof_index(Finger::Ring, 2)] = deg_to_rad(120.0);
    try {
        play_trajectory(t, g, *s);
        FAIL("expected PlaybackError");
    } catch (const PlaybackError& e) {
        CHECK(e.sample_index() == 6);
    }
    CHECK(bus.command_count() == 6 * kMotorCount);
}

TEST_CASE("playback surfaces bus rejection with the sample index") {
    const HandGeometry g;
    MockServoBus bus;
    bus.fail_after(3 * kMotorCount + 4);
    auto s = bus.try_acquire("player");
    try {
        play_trajectory(sweep(10, 1000.0), g, *s);
        FAIL("expected PlaybackError");
    } catch (const PlaybackError& e) {
        CHECK(e.sample_index() == 3);
    }
}

TEST_CASE("playback can be stopped") {
    const HandGeometry g;
    MockServoBus bus;
    auto s = bus.try_acquire("player");
    std::stop_source stop;
    PlaybackOptions opts;
    opts.stop = stop.get_token();
    std::thread stopper([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        stop.request_stop();
    });
    const auto t0 = std::chrono::steady_clock::now();
    const PlaybackReport r = play_trajectory(sweep(500, 50.0), g, *s, opts);
    stopper.join();
    CHECK(r.stopped);
    CHECK(r.samples_commanded < 500);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(2));
}

TEST_CASE("rate scale speeds playback up") {
    const HandGeometry g;
    MockServoBus bus;
    auto s = bus.try_acquire("player");
    PlaybackOptions opts;
    opts.rate_scale = 10.0;
    const auto t0 = std::chrono::steady_clock::now();
    play_trajectory(sweep(100, 50.0), g, *s, opts);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::milliseconds(1000));
    opts.rate_scale = 0.0;
    CHECK_THROWS_AS(play_trajectory(sweep(2, 50.0), g, *s, opts), PlaybackError);
}
