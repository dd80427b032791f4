#pragma once

// Monte-Carlo area of the convex hull of a small point set, without building
// the hull: a sample is inside iff some triangle of input points contains it.

#include <random>
#include <vector>

#include <Eigen/Core>

namespace testing {

inline bool in_triangle(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c) {
    const auto side = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v, const Eigen::Vector2d& w) {
        return (v.x() - u.x()) * (w.y() - u.y()) - (v.y() - u.y()) * (w.x() - u.x());
    };
    const double d1 = side(a, b, p);
    const double d2 = side(b, c, p);
    const double d3 = side(c, a, p);
    const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
    const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
    return !(neg && pos);
}

inline double monte_carlo_hull_area(const std::vector<Eigen::Vector2d>& pts, std::size_t samples,
                                    std::uint64_t seed) {
    Eigen::Vector2d lo = pts.front();
    Eigen::Vector2d hi = pts.front();
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(lo.x(), hi.x());
    std::uniform_real_distribution<double> uy(lo.y(), hi.y());
    std::size_t inside = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const Eigen::Vector2d q(ux(rng), uy(rng));
        bool hit = false;
        for (std::size_t i = 0; i < pts.size() && !hit; ++i)
            for (std::size_t j = i + 1; j < pts.size() && !hit; ++j)
                for (std::size_t k = j + 1; k < pts.size() && !hit; ++k)
                    hit = in_triangle(q, pts[i], pts[j], pts[k]);
        inside += hit ? 1 : 0;
    }
    return (hi - lo).prod() * static_cast<double>(inside) / static_cast<double>(samples);
}

inline std::vector<Eigen::Vector2d> random_cloud(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 0.02);
    std::vector<Eigen::Vector2d> pts;
    for (std::size_t i = 0; i < n; ++i) pts.emplace_back(g(rng), g(rng));
    return pts;
}

}  // namespace testing
