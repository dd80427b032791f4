#include "rotograb/workspace.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rotograb/errors.hpp"
#include "rotograb/finger_kinematics.hpp"
#include "rotograb/number_format.hpp"

namespace rotograb::workspace {

namespace {

std::vector<double> linspace(const Interval& range, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = range.mid();
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        // Hit both ends exactly.
        out[i] = i + 1 == n ? range.hi
                            : range.lo + range.width() * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

std::vector<Eigen::Vector2d> project(const std::vector<CloudPoint>& points) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(points.size());
    for (const auto& p : points) out.emplace_back(p.tip.x(), p.tip.y());
    return out;
}

FingerMetrics metrics_for(const WorkspaceCloud& cloud) {
    FingerMetrics m;
    m.finger = cloud.finger;
    m.points = cloud.points.size();
    const AreaResult area = projected_area(cloud);
    m.projected_area = area.area;
    m.degenerate = area.degenerate;
    if (!cloud.points.empty()) {
        m.bbox_min = m.bbox_max = cloud.points.front().tip;
        for (const auto& p : cloud.points) {
            m.bbox_min = m.bbox_min.cwiseMin(p.tip);
            m.bbox_max = m.bbox_max.cwiseMax(p.tip);
        }
        m.bbox_volume = (m.bbox_max - m.bbox_min).prod();
    }
    return m;
}

}  // namespace

WorkspaceCloud sample_workspace_at(const HandGeometry& geometry, Finger finger, std::size_t resolution,
                                   std::span<const double> plate_angles) {
    if (resolution < 2) throw std::invalid_argument("workspace resolution must be >= 2");
    if (plate_angles.empty()) throw std::invalid_argument("at least one plate angle is required");
    WorkspaceCloud cloud;
    cloud.finger = finger;
    cloud.resolution = resolution;
    if (finger == Finger::Thumb)
        cloud.plate_angles.assign(plate_angles.begin(), plate_angles.end());
    else
        cloud.plate_angles = {0.0};

    const auto theta1 = linspace(geometry.joint1_limits, resolution);
    const auto theta2 = linspace(geometry.joint23_limits, resolution);
    cloud.points.reserve(cloud.plate_angles.size() * resolution * resolution);
    for (double plate : cloud.plate_angles)
        for (double t1 : theta1)
            for (double t2 : theta2)
                cloud.points.push_back({plate, t1, t2, kinematics::finger_fk(geometry, finger, t1, t2, plate).tip()});
    return cloud;
}

WorkspaceCloud sample_workspace(const HandGeometry& geometry, Finger finger, std::size_t resolution,
                                std::size_t plate_samples) {
    if (finger != Finger::Thumb) {
        const double zero = 0.0;
        return sample_workspace_at(geometry, finger, resolution, std::span<const double>(&zero, 1));
    }
    if (plate_samples == 0) throw std::invalid_argument("plate_samples must be >= 1");
    const auto plates = plate_samples == 1 ? std::vector<double>{0.0} : linspace(geometry.plate_limits, plate_samples);
    return sample_workspace_at(geometry, finger, resolution, plates);
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
    std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;

    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double polygon_area(std::span<const Eigen::Vector2d> polygon) {
    double twice = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const auto& a = polygon[i];
        const auto& b = polygon[(i + 1) % polygon.size()];
        twice += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * twice;
}

AreaResult hull_area(std::span<const Eigen::Vector2d> points) {
    AreaResult out;
    out.hull = convex_hull(std::vector<Eigen::Vector2d>(points.begin(), points.end()));
    if (out.hull.size() < 3) {
        out.degenerate = true;
        return out;
    }
    out.area = polygon_area(out.hull);
    // Round-off can leave a sliver hull around numerically collinear input.
    Eigen::Vector2d lo = out.hull.front(), hi = out.hull.front();
    for (const auto& p : out.hull) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    if (out.area <= 1e-12 * (hi - lo).squaredNorm()) {
        out.area = 0.0;
        out.degenerate = true;
    }
    return out;
}

AreaResult projected_area(const WorkspaceCloud& cloud) {
    const auto projected = project(cloud.points);
    return hull_area(projected);
}

bool WorkspaceReport::thumb_exceeds_all() const {
    for (Finger f : kAllFingers)
        if (f != Finger::Thumb && !thumb_exceeds[index_of(f)]) return false;
    return true;
}

WorkspaceReport workspace_report(const HandGeometry& geometry, std::size_t resolution, std::size_t plate_samples) {
    WorkspaceReport report;
    report.resolution = resolution;
    report.plate_samples = plate_samples;

    std::array<std::future<FingerMetrics>, kFingerCount> jobs;
    for (Finger f : kAllFingers) {
        jobs[index_of(f)] = std::async(std::launch::async, [&geometry, f, resolution, plate_samples] {
            return metrics_for(sample_workspace(geometry, f, resolution, plate_samples));
        });
    }
    for (Finger f : kAllFingers) report.fingers[index_of(f)] = jobs[index_of(f)].get();

    const double thumb = report.fingers[index_of(Finger::Thumb)].projected_area;
    for (Finger f : kAllFingers)
        if (f != Finger::Thumb) report.thumb_exceeds[index_of(f)] = thumb > report.fingers[index_of(f)].projected_area;
    return report;
}

std::string report_to_csv(const WorkspaceReport& report) {
    std::ostringstream out;
    out << "# resolution: " << report.resolution << "\n";
    out << "# plate_samples: " << report.plate_samples << "\n";
    out << "finger,points,projected_area_m2,degenerate,bbox_volume_m3,min_x,min_y,min_z,max_x,max_y,max_z,"
           "thumb_exceeds\n";
    for (Finger f : kAllFingers) {
        const auto& m = report.fingers[index_of(f)];
        out << finger_name(f) << ',' << m.points << ',' << format_exact(m.projected_area) << ','
            << (m.degenerate ? 1 : 0) << ',' << format_exact(m.bbox_volume);
        for (int i = 0; i < 3; ++i) out << ',' << format_exact(m.bbox_min[i]);
        for (int i = 0; i < 3; ++i) out << ',' << format_exact(m.bbox_max[i]);
        out << ',';
        if (f != Finger::Thumb) out << (report.thumb_exceeds[index_of(f)] ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

WorkspaceReport report_from_csv(std::string_view text) {
    WorkspaceReport report;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t rows = 0;
    bool header = false;
    std::array<bool, kFingerCount> seen{};
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            const std::string key = line.substr(1, colon - 1);
            const auto value = parse_double(line.substr(colon + 1));
            if (!value) throw Error("workspace report: bad value for" + key);
            if (key.find("resolution") != std::string::npos) report.resolution = static_cast<std::size_t>(*value);
            if (key.find("plate_samples") != std::string::npos)
                report.plate_samples = static_cast<std::size_t>(*value);
            continue;
        }
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (line.back() == ',') cols.emplace_back();
        if (cols.size() != 12) throw Error("workspace report: expected 12 columns");
        const auto finger = parse_finger(cols[0]);
        if (!finger) throw Error("workspace report: unknown finger " + cols[0]);
        auto& m = report.fingers[index_of(*finger)];
        m.finger = *finger;
        const auto num = [&](std::size_t i) {
            const auto v = parse_double(cols[i]);
            if (!v) throw Error("workspace report: bad number '" + cols[i] + "'");
            return *v;
        };
        m.points = static_cast<std::size_t>(num(1));
        m.projected_area = num(2);
        m.degenerate = num(3) != 0.0;
        m.bbox_volume = num(4);
        for (int i = 0; i < 3; ++i) m.bbox_min[i] = num(5 + i);
        for (int i = 0; i < 3; ++i) m.bbox_max[i] = num(8 + i);
        if (*finger != Finger::Thumb) report.thumb_exceeds[index_of(*finger)] = num(11) != 0.0;
        seen[index_of(*finger)] = true;
        ++rows;
    }
    if (rows != kFingerCount || std::find(seen.begin(), seen.end(), false) != seen.end())
        throw Error("workspace report: expected one row per finger");
    return report;
}

std::string cloud_to_csv(std::span<const WorkspaceCloud> clouds) {
    std::string out = "finger,plate_deg,theta1_deg,theta2_deg,x,y,z\n";
    for (const auto& cloud : clouds) {
        for (const auto& p : cloud.points) {
            out += finger_name(cloud.finger);
            for (double v : {rad_to_deg(p.plate), rad_to_deg(p.theta1), rad_to_deg(p.theta2)}) {
                out += ',';
                out += format_fixed(v, 6);
            }
            for (int i = 0; i < 3; ++i) {
                out += ',';
                out += format_fixed(p.tip[i], 9);
            }
            out += '\n';
        }
    }
    return out;
}

}  // namespace rotograb::workspace
