#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rotograb/hand_geometry.hpp"
#include "rotograb/trajectory.hpp"

namespace rotograb::policy {

/// Ball-rotation reward about the hand's x axis.
struct RewardSpec {
    Interval band{1.0, 3.0};      // rad/s
    double falloff_width = 1.0;   // rad/s, linear decay length outside the band
    int direction_sign = 1;       // +1 or -1

    /// Throws std::invalid_argument on an empty band, non-positive falloff or
    /// a sign other than +-1.
    void validate() const;
};

/// 1 on the band, decaying linearly to 0 over falloff_width on either side.
/// Non-finite input gives 0.
double rotation_reward(double omega_x, const RewardSpec& spec = {});

enum class IssueKind { Limit, Time, Actuation };

struct ValidationIssue {
    std::size_t sample = 0;
    IssueKind kind = IssueKind::Limit;
    std::string message;
};

struct ValidationReport {
    std::size_t sample_count = 0;
    std::vector<ValidationIssue> issues;
    /// Extreme angles per degree of freedom; empty for an empty trajectory.
    std::optional<std::array<Interval, kDofCount>> ranges;

    bool passed() const { return issues.empty(); }
};

std::string_view issue_kind_name(IssueKind kind);

/// Checks every sample against the limits, time monotonicity and the motor
/// mapping. Never throws for data problems; they go into the report.
ValidationReport validate_trajectory_fixture(const Trajectory& trajectory, const HandGeometry& geometry);

}  // namespace rotograb::policy
