#include <cmath>

#include "doctest.h"
#include "rotograb/errors.hpp"
#include "rotograb/thumb_rotation.hpp"

using namespace rotograb;
using namespace rotograb::thumb;

TEST_CASE("plate tendon length against the triangle construction") {
    const HandGeometry g;
    CHECK(std::abs(plate_tendon_length(0.0, g) - 0.044262012141513207) < 1e-15);
    CHECK(std::abs(plate_tendon_length(deg_to_rad(65.0), g) - 0.025541065846554356) < 1e-15);
    CHECK(std::abs(plate_tendon_delta(deg_to_rad(65.0), g).right - -0.018720946294958851) < 1e-15);
    CHECK(std::abs(plate_tendon_delta(deg_to_rad(-65.0), g).right - 0.017413590795257179) < 1e-15);
}

TEST_CASE("left and right deltas cancel over the plate range") {
    const HandGeometry g;
    for (int i = 0; i <= 1300; ++i) {
        const PlateDeltas d = plate_tendon_delta(deg_to_rad(-65.0 + 0.1 * i), g);
        CHECK(std::abs(d.left + d.right) <= 1e-12);
    }
    const PlateDeltas zero = plate_tendon_delta(0.0, g);
    CHECK(zero.left == 0.0);
    CHECK(zero.right == 0.0);
}

TEST_CASE("plate limits are enforced") {
    const HandGeometry g;
    CHECK_THROWS_AS(plate_tendon_length(deg_to_rad(65.5), g), LimitError);
    CHECK_THROWS_AS(plate_tendon_delta(std::nan(""), g), LimitError);
    CHECK_THROWS_AS(PlateState::free(deg_to_rad(-70.0), g), LimitError);
}

TEST_CASE("presets and nearest mode") {
    const HandGeometry g;
    CHECK(preset_angle(PlateMode::Left, g) == deg_to_rad(-65.0));
    CHECK(preset_angle(PlateMode::Middle, g) == 0.0);
    CHECK(preset_angle(PlateMode::Right, g) == deg_to_rad(65.0));
    CHECK(nearest_mode(deg_to_rad(40.0), g) == PlateMode::Right);
    CHECK(nearest_mode(deg_to_rad(-40.0), g) == PlateMode::Left);
    CHECK(nearest_mode(deg_to_rad(32.5), g) == PlateMode::Middle);
    CHECK(PlateState::preset(PlateMode::Right, g).at_preset);
    CHECK_FALSE(PlateState::free(0.3, g).at_preset);

    HandGeometry narrow = g;
    narrow.plate_limits = {deg_to_rad(-30.0), deg_to_rad(30.0)};
    CHECK(preset_angle(PlateMode::Right, narrow) == narrow.plate_limits.hi);
}

TEST_CASE("mode names") {
    for (PlateMode m : {PlateMode::Left, PlateMode::Middle, PlateMode::Right})
        CHECK(parse_mode(mode_name(m)) == m);
    CHECK(parse_mode("right") == PlateMode::Right);
    CHECK_FALSE(parse_mode("X").has_value());
}

TEST_CASE("plate delta inversion") {
    const HandGeometry g;
    for (int i = 0; i <= 130; ++i) {
        const double theta = deg_to_rad(-65.0 + i);
        const double d = plate_tendon_delta(theta, g).right;
        CHECK(std::abs(invert_plate_delta(d, g) - theta) < 1e-8);
    }
    CHECK(invert_plate_delta(plate_tendon_delta(g.plate_limits.hi, g).right, g) == g.plate_limits.hi);
    CHECK_THROWS_AS(invert_plate_delta(0.5, g), RangeError);
}

TEST_CASE("thumb tendons are independent of the plate angle") {
    const HandGeometry g;
    for (int a = 0; a < 20; ++a)
        for (int b = 0; b < 20; ++b)
            CHECK(thumb_decoupling_check(deg_to_rad(-65.0 + 6.5 * a), deg_to_rad(-65.0 + 6.5 * b), 0.3, 0.8, g));

    // An off-axis guide couples the plate into the thumb tendons.
    HandGeometry off = g;
    off.thumb_routing_offset = 0.004;
    CHECK_FALSE(thumb_decoupling_check(deg_to_rad(-40.0), deg_to_rad(40.0) + 0.1, 0.3, 0.8, off));
    CHECK(thumb_route_length(0.0, g) == thumb_route_length(1.0, g));
}
