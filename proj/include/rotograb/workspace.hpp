#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rotograb/hand_geometry.hpp"

namespace rotograb::workspace {

struct CloudPoint {
    double plate = 0.0;
    double theta1 = 0.0;
    double theta2 = 0.0;
    Eigen::Vector3d tip = Eigen::Vector3d::Zero();
};

/// Fingertip positions over a regular joint-space grid.
struct WorkspaceCloud {
    Finger finger = Finger::Index;
    std::size_t resolution = 0;       // samples per joint axis
    std::vector<double> plate_angles; // a single 0 for the non-thumb fingers
    std::vector<CloudPoint> points;   // ordered by (plate, theta1, theta2) grid index
};

/// `resolution` evenly spaced values per joint axis including both limits;
/// the thumb additionally sweeps `plate_samples` plate angles across the
/// plate limits (a single sample sits at 0). Throws std::invalid_argument
/// for resolution < 2 or plate_samples == 0 on the thumb.
WorkspaceCloud sample_workspace(const HandGeometry& geometry, Finger finger, std::size_t resolution,
                                std::size_t plate_samples = 1);

/// Same, for an explicit list of plate angles (thumb only).
WorkspaceCloud sample_workspace_at(const HandGeometry& geometry, Finger finger, std::size_t resolution,
                                   std::span<const double> plate_angles);

/// Counter-clockwise convex hull (Andrew's monotone chain), collinear points dropped.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> points);

/// Shoelace area of a simple polygon (positive for counter-clockwise order).
double polygon_area(std::span<const Eigen::Vector2d> polygon);

struct AreaResult {
    double area = 0.0;
    bool degenerate = false;  // fewer than 3 non-collinear points
    std::vector<Eigen::Vector2d> hull;
};

AreaResult hull_area(std::span<const Eigen::Vector2d> points);

/// Convex-hull area of the cloud projected onto the world x-y plane
/// (orthogonal to the actuation tower axis).
AreaResult projected_area(const WorkspaceCloud& cloud);

struct FingerMetrics {
    Finger finger = Finger::Index;
    std::size_t points = 0;
    double projected_area = 0.0;  // m^2
    bool degenerate = false;
    double bbox_volume = 0.0;     // m^3, axis-aligned bounding box
    Eigen::Vector3d bbox_min = Eigen::Vector3d::Zero();
    Eigen::Vector3d bbox_max = Eigen::Vector3d::Zero();
};

struct WorkspaceReport {
    std::size_t resolution = 0;
    std::size_t plate_samples = 0;
    std::array<FingerMetrics, kFingerCount> fingers{};
    /// Per non-thumb finger (index order), whether the thumb's area is strictly larger.
    std::array<bool, kFingerCount> thumb_exceeds{};

    bool thumb_exceeds_all() const;
};

/// Per-finger metrics; the thumb cloud is the union over its plate sweep.
/// Fingers are sampled in parallel and merged in finger order.
WorkspaceReport workspace_report(const HandGeometry& geometry, std::size_t resolution = 25,
                                 std::size_t plate_samples = 27);

/// `finger,points,projected_area_m2,degenerate,bbox_volume_m3,min_x,...,max_z,thumb_exceeds`
std::string report_to_csv(const WorkspaceReport& report);
WorkspaceReport report_from_csv(std::string_view text);

/// `finger,plate_deg,theta1_deg,theta2_deg,x,y,z` with header.
std::string cloud_to_csv(std::span<const WorkspaceCloud> clouds);

}  // namespace rotograb::workspace
