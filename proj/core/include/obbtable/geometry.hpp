#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace obbtable::geometry {

struct InvalidPolygonError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateEdgeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedPolygonError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Point {
    double x{0.0};
    double y{0.0};  // y grows downward (screen convention)

    friend bool operator==(const Point&, const Point&) = default;
};

inline bool is_finite(const Point& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

/// Four ordered vertices A,B,C,D. Valid quads are finite, non-degenerate
/// and convex; see quad_is_valid().
struct Quad {
    std::array<Point, 4> v{};

    Quad() = default;
    Quad(Point a, Point b, Point c, Point d) : v{a, b, c, d} {}

    Point& a() { return v[0]; }
    Point& b() { return v[1]; }
    Point& c() { return v[2]; }
    Point& d() { return v[3]; }
    const Point& a() const { return v[0]; }
    const Point& b() const { return v[1]; }
    const Point& c() const { return v[2]; }
    const Point& d() const { return v[3]; }

    friend bool operator==(const Quad&, const Quad&) = default;
};

/// Row-major 2x3 affine matrix: (x,y) -> (m00*x + m01*y + m02, m10*x + m11*y + m12).
struct AffineMap {
    double m00{1}, m01{0}, m02{0};
    double m10{0}, m11{1}, m12{0};

    static AffineMap identity() { return {}; }

    Point apply(const Point& p) const {
        return {m00 * p.x + m01 * p.y + m02, m10 * p.x + m11 * p.y + m12};
    }

    double det2() const { return m00 * m11 - m01 * m10; }

    friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

/// Angle in degrees, normalized to [0, 360).
class AngleDeg {
public:
    AngleDeg() = default;
    explicit AngleDeg(double degrees) : value_(normalize(degrees)) {}

    double value() const { return value_; }

    static double normalize(double degrees) {
        double r = std::fmod(degrees, 360.0);
        if (r < 0.0) r += 360.0;
        // fmod of a tiny negative can land exactly on 360
        if (r >= 360.0) r = 0.0;
        return r;
    }

private:
    double value_{0.0};
};

/// Shoelace area, cyclic indexing. Positive iff the vertex order is
/// clockwise on screen (y-down). Throws InvalidPolygonError for fewer
/// than 3 points or non-finite input.
double signed_area(std::span<const Point> points);

inline double signed_area(const Quad& q) {
    return signed_area(std::span<const Point>(q.v));
}

bool quad_is_valid(const Quad& q);

/// Direction of the A->B edge, degrees in [0,360); 0 = +x, 90 = downward.
AngleDeg quad_angle(const Quad& q);

/// Circular difference, in [0, 180].
double angle_diff(AngleDeg p, AngleDeg g);

/// Sutherland-Hodgman clipping of one convex polygon by another.
/// Both inputs must be convex; orientation may be either sign but must be
/// consistent within each polygon. Returns the intersection polygon
/// (empty when disjoint).
std::vector<Point> clip_convex(std::span<const Point> subject,
                               std::span<const Point> clipper);

/// IoU of two convex quads (Eq.-style polygon overlap, not envelopes).
/// A degenerate input scores 0; when `degenerate` is non-null it is set
/// accordingly. Never returns NaN.
double rotated_iou(const Quad& p, const Quad& g, bool* degenerate = nullptr);

std::vector<Point> apply_affine(const AffineMap& m, std::span<const Point> points);
Quad apply_affine(const AffineMap& m, const Quad& q);

}  // namespace obbtable::geometry
