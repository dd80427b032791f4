#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "rotograb/hand_geometry.hpp"

namespace rotograb::thumb {

/// Named plate poses, seen from the right hand: Right puts the thumb on the
/// index side.
enum class PlateMode { Left, Middle, Right };

std::string_view mode_name(PlateMode mode);  // "L", "M", "R"
std::optional<PlateMode> parse_mode(std::string_view text);

/// Preset plate angle for a mode: -65, 0 or +65 degrees (clipped to limits).
double preset_angle(PlateMode mode, const HandGeometry& geometry);

/// Nearest preset to `theta`; ties go towards Middle.
PlateMode nearest_mode(double theta, const HandGeometry& geometry);

struct PlateState {
    double theta = 0.0;
    PlateMode mode = PlateMode::Middle;
    /// False when the plate was commanded to an arbitrary angle.
    bool at_preset = true;

    static PlateState preset(PlateMode mode, const HandGeometry& geometry);
    static PlateState free(double theta, const HandGeometry& geometry);
};

/// Plate tendon length by the law of cosines:
/// sqrt(r_palm^2 + r_plate^2 - 2 r_palm r_plate cos(pi/2 - (theta + gamma))).
double plate_tendon_length(double theta, const HandGeometry& geometry);

struct PlateDeltas {
    double left = 0.0;
    double right = 0.0;
};

/// Right tendon change from theta = 0; the left tendon mirrors it.
PlateDeltas plate_tendon_delta(double theta, const HandGeometry& geometry);

/// Inverse of the right-tendon delta over the plate limits (bisection on the
/// monotone length). Throws RangeError when not achievable.
double invert_plate_delta(double right_delta, const HandGeometry& geometry);

/// Length of the thumb tendons' passage from the fixed palm guide to the
/// guide on the plate. Constant in theta when the plate guide sits on the
/// rotation axis (thumb_routing_offset = 0).
double thumb_route_length(double plate, const HandGeometry& geometry);

/// True iff the thumb's flexor and extensor deltas for (theta1, theta2) come
/// out identical at both plate angles.
bool thumb_decoupling_check(double plate_a, double plate_b, double theta1, double theta2,
                            const HandGeometry& geometry);

}  // namespace rotograb::thumb
