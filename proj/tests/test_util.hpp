#pragma once

#include <cmath>
#include <random>

#include "obbtable/geometry.hpp"

namespace obbtable::testutil {

using geometry::Point;
using geometry::Quad;

/// Random convex quad: four points on a random ellipse, angle-sorted, so
/// the result is convex and screen-clockwise.
inline Quad random_convex_quad(std::mt19937_64& rng, double lo = 0.0, double hi = 100.0) {
    std::uniform_real_distribution<double> pos(lo + (hi - lo) * 0.25, hi - (hi - lo) * 0.25);
    std::uniform_real_distribution<double> radius((hi - lo) * 0.03, (hi - lo) * 0.2);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);

    const double cx = pos(rng), cy = pos(rng);
    const double rx = radius(rng), ry = radius(rng);
    const double tilt = angle(rng);

    // four distinct, well-separated parameter angles
    std::array<double, 4> phi;
    std::uniform_real_distribution<double> slice(0.15, 1.0);
    double total = 0.0;
    for (double& p : phi) {
        p = slice(rng);
        total += p;
    }
    double acc = angle(rng);
    Quad q;
    const double ct = std::cos(tilt), st = std::sin(tilt);
    for (int i = 0; i < 4; ++i) {
        acc += phi[i] / total * 2.0 * M_PI;
        const double ex = rx * std::cos(acc);
        const double ey = ry * std::sin(acc);
        q.v[i] = {cx + ex * ct - ey * st, cy + ex * st + ey * ct};
    }
    return q;
}

inline bool point_in_convex(const Quad& q, const Point& p) {
    const double orient = geometry::signed_area(q) >= 0 ? 1.0 : -1.0;
    for (int i = 0; i < 4; ++i) {
        const Point& a = q.v[i];
        const Point& b = q.v[(i + 1) % 4];
        const double c = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (orient * c < 0.0) return false;
    }
    return true;
}

/// Monte-Carlo IoU estimate over uniform samples in the joint bounding box.
inline double monte_carlo_iou(const Quad& a, const Quad& b, std::size_t samples,
                              std::mt19937_64& rng) {
    double min_x = a.v[0].x, max_x = a.v[0].x, min_y = a.v[0].y, max_y = a.v[0].y;
    for (const Quad* q : {&a, &b}) {
        for (const Point& p : q->v) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    }
    std::uniform_real_distribution<double> ux(min_x, max_x), uy(min_y, max_y);
    std::size_t in_union = 0, in_both = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const Point p{ux(rng), uy(rng)};
        const bool ia = point_in_convex(a, p);
        const bool ib = point_in_convex(b, p);
        if (ia || ib) ++in_union;
        if (ia && ib) ++in_both;
    }
    return in_union == 0 ? 0.0 : static_cast<double>(in_both) / in_union;
}

}  // namespace obbtable::testutil
