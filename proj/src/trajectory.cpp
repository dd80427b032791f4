#include "rotograb/trajectory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "rotograb/errors.hpp"
#include "rotograb/number_format.hpp"

namespace rotograb {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    throw TrajectoryError("trajectory line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::string trajectory_csv_header() {
    std::string h = "t";
    for (std::size_t i = 0; i < kDofCount; ++i) {
        h += ',';
        h += dof_name(i);
    }
    return h;
}

Trajectory parse_trajectory_csv(std::string_view text) {
    Trajectory traj;
    bool header_seen = false;
    std::size_t line_no = 0;
    const std::string expected_header = trajectory_csv_header();

    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view raw = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '#') {
            if (header_seen) continue;
            const std::string_view body = trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string_view::npos) continue;
            const std::string key(trim(body.substr(0, colon)));
            const std::string value(trim(body.substr(colon + 1)));
            if (key == "name") {
                traj.name = value;
            } else if (key == "source") {
                traj.source = value;
            } else if (key == "nominal_rate_hz") {
                const auto rate = parse_double(value);
                if (!rate || *rate < 0.0) fail(line_no, "nominal_rate_hz must be a non-negative number");
                traj.nominal_rate = *rate;
            } else {
                traj.metadata[key] = value;
            }
            continue;
        }

        if (!header_seen) {
            std::string normalized;
            for (auto col : split(line, ',')) {
                if (!normalized.empty()) normalized += ',';
                normalized += col;
            }
            if (normalized != expected_header) fail(line_no, "expected header '" + expected_header + "'");
            header_seen = true;
            continue;
        }

        const auto cols = split(line, ',');
        if (cols.size() != kDofCount + 1)
            fail(line_no, "expected " + std::to_string(kDofCount + 1) + " columns, got " + std::to_string(cols.size()));
        TrajectorySample sample;
        const auto t = parse_double(cols[0]);
        if (!t || !std::isfinite(*t)) fail(line_no, "bad time value");
        sample.t = *t;
        for (std::size_t i = 0; i < kDofCount; ++i) {
            const auto deg = parse_double(cols[i + 1]);
            if (!deg || !std::isfinite(*deg)) fail(line_no, "bad angle in column " + std::string(dof_name(i)));
            sample.angles[i] = deg_to_rad(*deg);
        }
        if (!traj.samples.empty() && !(sample.t > traj.samples.back().t))
            fail(line_no, "time must be strictly increasing");
        traj.samples.push_back(sample);
    }
    if (!header_seen) throw TrajectoryError("trajectory: missing header '" + expected_header + "'");
    return traj;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_trajectory_csv(buffer.str());
}

std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out;
    if (!traj.name.empty()) out += "# name: " + traj.name + "\n";
    if (!traj.source.empty()) out += "# source: " + traj.source + "\n";
    if (traj.nominal_rate > 0.0) out += "# nominal_rate_hz: " + format_exact(traj.nominal_rate) + "\n";
    for (const auto& [k, v] : traj.metadata) out += "# " + k + ": " + v + "\n";
    out += trajectory_csv_header() + "\n";
    for (const auto& s : traj.samples) {
        out += format_exact(s.t);
        for (double a : s.angles) {
            out += ',';
            out += format_exact(rad_to_deg(a));
        }
        out += '\n';
    }
    return out;
}

PlaybackReport play_trajectory(const Trajectory& trajectory, const HandGeometry& geometry,
                               BusSession& session, const PlaybackOptions& options) {
    using clock = std::chrono::steady_clock;
    if (!(options.rate_scale > 0.0) || !std::isfinite(options.rate_scale))
        throw PlaybackError("rate_scale must be positive", 0);

    PlaybackReport report;
    for (auto& r : report.reached)
        r = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    if (trajectory.samples.empty()) {
        report.reached.fill({0.0, 0.0});
        return report;
    }

    std::mutex m;
    std::condition_variable_any cv;
    const double t0 = trajectory.samples.front().t;
    const auto start = clock::now();
    std::vector<double> actual;    // s since start
    std::vector<double> scheduled;
    actual.reserve(trajectory.samples.size());
    scheduled.reserve(trajectory.samples.size());

    for (std::size_t i = 0; i < trajectory.samples.size(); ++i) {
        const auto& sample = trajectory.samples[i];
        if (const auto bad = first_limit_violation(sample.angles, geometry)) {
            throw PlaybackError("sample " + std::to_string(i) + ": " + std::string(dof_name(*bad)) +
                                    " outside joint limits",
                                i);
        }
        const JointState state = JointState::from_angles(sample.angles, geometry);

        const double due = (sample.t - t0) / options.rate_scale;
        const auto deadline = start + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(due));
        {
            std::unique_lock lock(m);
            if (cv.wait_until(lock, options.stop, deadline, [] { return false; }); options.stop.stop_requested()) {
                report.stopped = true;
                break;
            }
        }

        const double sent_at = std::chrono::duration<double>(clock::now() - start).count();
        const auto commands = joint_to_motor(state, geometry, sample.t);
        try {
            session.send(commands);
        } catch (const Error& e) {
            throw PlaybackError("sample " + std::to_string(i) + ": " + e.what(), i);
        }
        actual.push_back(sent_at);
        scheduled.push_back(due);
        ++report.samples_commanded;
        for (std::size_t d = 0; d < kDofCount; ++d) {
            report.reached[d].lo = std::min(report.reached[d].lo, sample.angles[d]);
            report.reached[d].hi = std::max(report.reached[d].hi, sample.angles[d]);
        }
        if (options.on_sample) options.on_sample(i, state);
    }

    const std::size_t n = actual.size();
    if (n == 0) {
        report.reached.fill({0.0, 0.0});
        return report;
    }
    double lateness_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double late = std::abs(actual[i] - scheduled[i]);
        lateness_sum += late;
        report.max_abs_lateness = std::max(report.max_abs_lateness, late);
    }
    report.mean_abs_lateness = lateness_sum / static_cast<double>(n);
    if (n > 1) {
        double deviation_sum = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double planned = scheduled[i] - scheduled[i - 1];
            deviation_sum += std::abs((actual[i] - actual[i - 1]) - planned) / planned;
        }
        report.mean_period_deviation = deviation_sum / static_cast<double>(n - 1);
    }
    return report;
}

}  // namespace rotograb
