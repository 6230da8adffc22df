#include "obbtable/geometry.hpp"

#include <algorithm>
#include <limits>

namespace obbtable::geometry {

namespace {

constexpr double kClipEps = 1e-9;       // points this close to a clip edge count as inside
constexpr double kDegenerateArea = 1e-9;

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool is_convex(std::span<const Point> pts) {
    const std::size_t n = pts.size();
    int sign = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double c = cross(pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        if (std::abs(c) <= kClipEps) continue;
        int s = c > 0 ? 1 : -1;
        if (sign == 0) {
            sign = s;
        } else if (s != sign) {
            return false;
        }
    }
    return true;
}

}  // namespace

double signed_area(std::span<const Point> points) {
    if (points.size() < 3) {
        throw InvalidPolygonError("signed_area: polygon needs at least 3 points");
    }
    for (const Point& p : points) {
        if (!is_finite(p)) {
            throw InvalidPolygonError("signed_area: non-finite coordinate");
        }
    }
    double sum = 0.0;
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& p = points[i];
        const Point& q = points[(i + 1) % n];
        sum += p.x * q.y - q.x * p.y;
    }
    return 0.5 * sum;
}

bool quad_is_valid(const Quad& q) {
    for (const Point& p : q.v) {
        if (!is_finite(p)) return false;
    }
    double area = 0.0;
    try {
        area = signed_area(q);
    } catch (const InvalidPolygonError&) {
        return false;
    }
    if (std::abs(area) <= 0.0) return false;
    return is_convex(q.v);
}

AngleDeg quad_angle(const Quad& q) {
    const double dx = q.b().x - q.a().x;
    const double dy = q.b().y - q.a().y;
    if (dx == 0.0 && dy == 0.0) {
        throw DegenerateEdgeError("quad_angle: A and B coincide");
    }
    // screen coordinates: positive angles turn toward +y (downward)
    return AngleDeg(std::atan2(dy, dx) * 180.0 / M_PI);
}

double angle_diff(AngleDeg p, AngleDeg g) {
    double d = std::abs(p.value() - g.value());
    return std::min(d, 360.0 - d);
}

std::vector<Point> clip_convex(std::span<const Point> subject,
                               std::span<const Point> clipper) {
    if (subject.size() < 3 || clipper.size() < 3) {
        throw InvalidPolygonError("clip_convex: polygon needs at least 3 points");
    }
    if (!is_convex(subject) || !is_convex(clipper)) {
        throw UnsupportedPolygonError("clip_convex: non-convex input");
    }

    // orient the inside test by the clipper's winding
    const double clip_area = signed_area(clipper);
    const double orient = clip_area >= 0.0 ? 1.0 : -1.0;

    std::vector<Point> output(subject.begin(), subject.end());
    const std::size_t m = clipper.size();
    for (std::size_t e = 0; e < m && !output.empty(); ++e) {
        const Point& ce1 = clipper[e];
        const Point& ce2 = clipper[(e + 1) % m];

        std::vector<Point> input;
        input.swap(output);

        const std::size_t n = input.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& cur = input[i];
            const Point& prev = input[(i + n - 1) % n];
            const double dc = orient * cross(ce1, ce2, cur);
            const double dp = orient * cross(ce1, ce2, prev);
            const bool cur_in = dc >= -kClipEps;
            const bool prev_in = dp >= -kClipEps;

            if (cur_in != prev_in) {
                // intersection of edge prev->cur with the clip line
                const double t = dp / (dp - dc);
                output.push_back({prev.x + t * (cur.x - prev.x),
                                  prev.y + t * (cur.y - prev.y)});
            }
            if (cur_in) output.push_back(cur);
        }
    }
    return output;
}

double rotated_iou(const Quad& p, const Quad& g, bool* degenerate) {
    if (degenerate) *degenerate = false;

    auto quad_area = [](const Quad& q) -> double {
        for (const Point& pt : q.v) {
            if (!is_finite(pt)) return 0.0;
        }
        return std::abs(signed_area(q));
    };

    const double area_p = quad_area(p);
    const double area_g = quad_area(g);
    if (area_p <= kDegenerateArea || area_g <= kDegenerateArea) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }

    // canonical argument order keeps iou(p,g) and iou(g,p) bit-identical
    auto lex_less = [](const Quad& lhs, const Quad& rhs) {
        for (int i = 0; i < 4; ++i) {
            if (lhs.v[i].x != rhs.v[i].x) return lhs.v[i].x < rhs.v[i].x;
            if (lhs.v[i].y != rhs.v[i].y) return lhs.v[i].y < rhs.v[i].y;
        }
        return false;
    };
    const Quad& first = lex_less(p, g) ? p : g;
    const Quad& second = lex_less(p, g) ? g : p;

    std::vector<Point> inter;
    try {
        inter = clip_convex(first.v, second.v);
    } catch (const std::invalid_argument&) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    if (inter.size() < 3) return 0.0;

    const double area_i = std::abs(signed_area(inter));
    const double area_u = area_p + area_g - area_i;
    if (area_u <= kDegenerateArea) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return std::clamp(area_i / area_u, 0.0, 1.0);
}

std::vector<Point> apply_affine(const AffineMap& m, std::span<const Point> points) {
    std::vector<Point> out;
    out.reserve(points.size());
    for (const Point& p : points) out.push_back(m.apply(p));
    return out;
}

Quad apply_affine(const AffineMap& m, const Quad& q) {
    return {m.apply(q.a()), m.apply(q.b()), m.apply(q.c()), m.apply(q.d())};
}

}  // namespace obbtable::geometry
