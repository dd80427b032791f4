#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "rotograb/errors.hpp"
#include "rotograb/teleop.hpp"
#include "support/hand_frames.hpp"

using namespace rotograb;
using namespace rotograb::teleop;
using testing::HandPose;
using testing::make_frame;

namespace {

std::string pts_json() {
    std::string s = "[";
    for (std::size_t i = 0; i < kLandmarkCount; ++i) s += (i ? ",[" : "[") + std::to_string(i) + ",0,0]";
    return s + "]";
}

}  // namespace

TEST_CASE("synthetic frames carry the requested flexions") {
    HandPose pose;
    pose.proximal = {0.3, 0.5, 0.6, 0.7, 0.8};
    pose.distal = {0.4, 0.9, 1.0, 1.1, 1.2};
    pose.thumb_offset = 0.2;
    const LandmarkFrame f = make_frame(pose);
    const auto human = extract_human_angles(f);
    for (std::size_t i = 0; i < kFingerCount; ++i) {
        CHECK(human[i].proximal == doctest::Approx(pose.proximal[i]).epsilon(1e-9));
        CHECK(human[i].distal == doctest::Approx(pose.distal[i]).epsilon(1e-9));
    }
    CHECK(thumb_lateral_offset(f) == doctest::Approx(0.2));
}

TEST_CASE("flexion angle") {
    LandmarkFrame f = make_frame({});
    f.points[0] = {0, 0, 0};
    f.points[1] = {1, 0, 0};
    f.points[2] = {1, 1, 0};
    CHECK(flexion_at(f, {0, 1, 2}) == doctest::Approx(kPi / 2));
    f.points[2] = {2, 0, 0};
    CHECK(flexion_at(f, {0, 1, 2}) == doctest::Approx(0.0));
    f.points[2] = f.points[1];
    CHECK_THROWS_AS(flexion_at(f, {0, 1, 2}), FrameError);
    CHECK_THROWS_AS(flexion_at(f, {0, 1, 99}), FrameError);
}

TEST_CASE("landmark JSON round trip and rejection") {
    HandPose pose;
    pose.t = 1.25;
    pose.confidence = 0.8;
    const LandmarkFrame f = make_frame(pose);
    const LandmarkFrame back = parse_landmark_json(landmark_json(f));
    CHECK(back.t == f.t);
    CHECK(back.confidence == f.confidence);
    for (std::size_t i = 0; i < kLandmarkCount; ++i) CHECK(back.points[i] == f.points[i]);

    CHECK_NOTHROW(parse_landmark_json(R"({"t":0,"pts":)" + pts_json() + R"(,"extra":1})"));
    CHECK_THROWS_AS(parse_landmark_json("nope"), FrameError);
    CHECK_THROWS_AS(parse_landmark_json(R"({"t":0,"conf":1,"pts":[[0,0,0]]})"), FrameError);
    CHECK_THROWS_AS(parse_landmark_json(R"({"conf":1})"), FrameError);
    CHECK_THROWS_AS(parse_landmark_json(R"({"t":0,"conf":2,"pts":)" + pts_json() + "}"), FrameError);
}

TEST_CASE("thumb mode from a labeled frame") {
    const HandGeometry g;
    HandPose far_index;
    far_index.thumb_offset = 0.8;  // thumb tip well past the index base
    CHECK(detect_thumb_mode(make_frame(far_index), PlateMode::Middle) == PlateMode::Right);
    HandPose far_pinkie;
    far_pinkie.thumb_offset = -0.8;
    CHECK(detect_thumb_mode(make_frame(far_pinkie), PlateMode::Middle) == PlateMode::Left);
    HandPose centered;
    CHECK(detect_thumb_mode(make_frame(centered), PlateMode::Right) == PlateMode::Right);
    CHECK(detect_thumb_mode(make_frame(centered), PlateMode::Middle) == PlateMode::Middle);

    HandPose dim = far_index;
    dim.confidence = 0.2;
    CHECK(detect_thumb_mode(make_frame(dim), PlateMode::Left) == PlateMode::Left);
}

TEST_CASE("hysteresis band noise does not flap the mode") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> noise(-0.14, 0.14);
    PlateMode mode = PlateMode::Right;
    int changes = 0;
    for (int i = 0; i < 2000; ++i) {
        HandPose p;
        p.thumb_offset = noise(rng);
        const PlateMode next = detect_thumb_mode(make_frame(p), mode);
        changes += next != mode;
        mode = next;
    }
    CHECK(changes == 0);
}

TEST_CASE("tracker falls back to Middle after the hold time") {
    ThumbModeTracker tr;
    HandPose p;
    p.thumb_offset = 0.5;
    tr = tr.update(make_frame(p), 0.15, 0.5);
    CHECK(tr.mode == PlateMode::Right);
    p.thumb_offset = 0.0;
    for (double t : {0.1, 0.3, 0.55}) {
        p.t = t;
        tr = tr.update(make_frame(p), 0.15, 0.5);
        CHECK(tr.mode == PlateMode::Right);
    }
    p.t = 0.61;
    tr = tr.update(make_frame(p), 0.15, 0.5);
    CHECK(tr.mode == PlateMode::Middle);

    // Leaving the band resets the timer.
    p.thumb_offset = -0.5;
    p.t = 1.0;
    tr = tr.update(make_frame(p), 0.15, 0.5);
    CHECK(tr.mode == PlateMode::Left);
    CHECK_FALSE(tr.band_entered_at.has_value());
}

TEST_CASE("default profile maps a flat hand to open joints and a fist to closed ones") {
    const HandGeometry g;
    const RetargetProfile profile = RetargetProfile::defaults(g);
    CHECK_NOTHROW(profile.validate(g));

    RetargetProfile instant = profile;
    for (auto& j : instant.joints) j.alpha = 1.0;
    instant.plate_alpha = 1.0;

    const RetargetResult open = retarget(make_frame({}), instant, g, JointState::calibration());
    CHECK_FALSE(open.held);
    for (Finger f : kAllFingers) {
        CHECK(open.state.theta1(f) == doctest::Approx(g.joint1_limits.lo));
        CHECK(open.state.theta2(f) == doctest::Approx(g.joint23_limits.lo));
    }

    HandPose fist;
    fist.proximal.fill(deg_to_rad(90.0));
    fist.distal.fill(deg_to_rad(100.0));
    fist.thumb_offset = 0.5;
    const RetargetResult closed = retarget(make_frame(fist), instant, g, JointState::calibration());
    CHECK(closed.mode == PlateMode::Right);
    CHECK(closed.state.plate() == doctest::Approx(deg_to_rad(65.0)));
    for (Finger f : kAllFingers) {
        CHECK(closed.state.theta1(f) == doctest::Approx(g.joint1_limits.hi));
        CHECK(closed.state.theta2(f) == doctest::Approx(g.joint23_limits.hi));
    }
}

TEST_CASE("smoothing approaches the target geometrically") {
    const HandGeometry g;
    const RetargetProfile profile = RetargetProfile::defaults(g);
    HandPose half;
    half.proximal.fill(deg_to_rad(45.0));
    Retargeter rt(g, profile, JointState::calibration());
    const std::size_t dof = dof_index(Finger::Index, 1);
    const double target = g.joint1_limits.lo + 0.5 * g.joint1_limits.width();
    double gap = std::abs(rt.state().angles()[dof] - target);
    for (int i = 0; i < 30; ++i) {
        half.t = 0.03 * i;
        rt.push(make_frame(half));
        const double next_gap = std::abs(rt.state().angles()[dof] - target);
        CHECK(next_gap == doctest::Approx(0.65 * gap).epsilon(1e-6));
        gap = next_gap;
    }
    CHECK(gap < 1e-4);
}

TEST_CASE("low confidence and broken frames hold the previous state") {
    const HandGeometry g;
    const RetargetProfile profile = RetargetProfile::defaults(g);
    const JointState start = JointState::calibration().with_finger(Finger::Ring, 0.2, 0.3, g);

    HandPose dim;
    dim.confidence = 0.3;
    const RetargetResult a = retarget(make_frame(dim), profile, g, start);
    CHECK(a.held);
    CHECK(a.state == start);

    LandmarkFrame broken = make_frame({});
    broken.points[6] = broken.points[5];
    const RetargetResult b = retarget(broken, profile, g, start);
    CHECK(b.held);
    CHECK(b.state == start);

    LandmarkFrame nan = make_frame({});
    nan.points[3].x() = std::numeric_limits<double>::quiet_NaN();
    CHECK(retarget(nan, profile, g, start).held);
}

TEST_CASE("adversarial frames never leave the joint limits") {
    const HandGeometry g;
    RetargetProfile profile = RetargetProfile::defaults(g);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (bool continuous : {false, true}) {
        profile.continuous_plate = continuous;
        JointState state = JointState::calibration();
        PlateMode mode = PlateMode::Middle;
        for (int i = 0; i < 5000; ++i) {
            LandmarkFrame f;
            f.t = i * 0.01;
            f.confidence = unit(rng) * 1.2;
            for (auto& p : f.points) p = {coord(rng), coord(rng), coord(rng)};
            const double r = unit(rng);
            if (r < 0.05) f.points[i % kLandmarkCount].x() = std::numeric_limits<double>::infinity();
            if (r > 0.95) f.points[5] = f.points[6];
            const RetargetResult out = retarget(f, profile, g, state, mode);
            REQUIRE_FALSE(first_limit_violation(out.state.angles(), g).has_value());
            state = out.state;
            mode = out.mode;
        }
    }
}

TEST_CASE("profile validation") {
    const HandGeometry g;
    RetargetProfile p = RetargetProfile::defaults(g);
    p.joints[2].output = {g.joint1_limits.lo, g.joint1_limits.hi + 0.1};
    CHECK_THROWS(p.validate(g));
    p = RetargetProfile::defaults(g);
    p.joints[0].alpha = 0.0;
    CHECK_THROWS(p.validate(g));
    p = RetargetProfile::defaults(g);
    p.joints[4].sources.clear();
    CHECK_THROWS(p.validate(g));
    p = RetargetProfile::defaults(g);
    p.joints[4].input = {1.0, 1.0};
    CHECK_THROWS(p.validate(g));
}
