#include "rotograb/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rotograb/actuation.hpp"
#include "rotograb/errors.hpp"

namespace rotograb::policy {

void RewardSpec::validate() const {
    if (!(band.lo < band.hi)) throw std::invalid_argument("reward band must have lo < hi");
    if (!(falloff_width > 0.0)) throw std::invalid_argument("falloff width must be > 0");
    if (direction_sign != 1 && direction_sign != -1) throw std::invalid_argument("direction sign must be +1 or -1");
}

double rotation_reward(double omega_x, const RewardSpec& spec) {
    if (!std::isfinite(omega_x)) return 0.0;
    const double w = spec.direction_sign * omega_x;
    if (spec.band.contains(w)) return 1.0;
    const double distance = w < spec.band.lo ? spec.band.lo - w : w - spec.band.hi;
    return std::max(0.0, 1.0 - distance / spec.falloff_width);
}

std::string_view issue_kind_name(IssueKind kind) {
    switch (kind) {
        case IssueKind::Limit: return "limit";
        case IssueKind::Time: return "time";
        case IssueKind::Actuation: return "actuation";
    }
    return "unknown";
}

ValidationReport validate_trajectory_fixture(const Trajectory& trajectory, const HandGeometry& geometry) {
    ValidationReport report;
    report.sample_count = trajectory.samples.size();
    std::array<Interval, kDofCount> ranges{};

    for (std::size_t i = 0; i < trajectory.samples.size(); ++i) {
        const auto& sample = trajectory.samples[i];
        for (std::size_t d = 0; d < kDofCount; ++d) {
            const double a = sample.angles[d];
            if (i == 0) {
                ranges[d] = {a, a};
            } else {
                ranges[d].lo = std::min(ranges[d].lo, a);
                ranges[d].hi = std::max(ranges[d].hi, a);
            }
        }

        if (!std::isfinite(sample.t) || (i > 0 && !(sample.t > trajectory.samples[i - 1].t)))
            report.issues.push_back({i, IssueKind::Time, "time does not increase"});

        if (auto bad = first_limit_violation(sample.angles, geometry)) {
            std::ostringstream msg;
            msg << dof_name(*bad) << " = " << rad_to_deg(sample.angles[*bad]) << " deg outside limits";
            report.issues.push_back({i, IssueKind::Limit, msg.str()});
            continue;
        }
        try {
            const auto commands = joint_to_motor(JointState::from_angles(sample.angles, geometry), geometry, sample.t);
            for (const auto& c : commands)
                if (!std::isfinite(c.rotation)) throw Error("non-finite motor rotation");
        } catch (const std::exception& e) {
            report.issues.push_back({i, IssueKind::Actuation, e.what()});
        }
    }
    if (!trajectory.samples.empty()) report.ranges = ranges;
    return report;
}

}  // namespace rotograb::policy
