#pragma once

#include <cmath>
#include <optional>

namespace fadetwin {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
inline bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

inline Vec2 normalized(Vec2 v) {
    double n = norm(v);
    return {v.x / n, v.y / n};
}

// Unit normal of the segment a->b (left-hand side).
inline Vec2 segment_normal(Vec2 a, Vec2 b) {
    Vec2 d = normalized(b - a);
    return {-d.y, d.x};
}

// Mirror p across the infinite line through a and b.
inline Vec2 mirror_point(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 n = segment_normal(a, b);
    double h = dot(p - a, n);
    return p - 2.0 * h * n;
}

struct SegmentHit {
    double t;  // parameter along p -> q
    double u;  // parameter along a -> b
};

// Intersection of segments p->q and a->b as line parameters.
// Returns nothing for (near-)parallel segments.
inline std::optional<SegmentHit> segment_intersection(Vec2 p, Vec2 q, Vec2 a, Vec2 b) {
    Vec2 r = q - p;
    Vec2 s = b - a;
    double denom = cross(r, s);
    if (std::abs(denom) < 1e-14 * (norm(r) * norm(s) + 1e-300)) return std::nullopt;
    Vec2 d = a - p;
    double t = cross(d, s) / denom;
    double u = cross(d, r) / denom;
    return SegmentHit{t, u};
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double len2 = dot(ab, ab);
    if (len2 == 0.0) return dist(p, a);
    double t = dot(p - a, ab) / len2;
    t = std::fmin(1.0, std::fmax(0.0, t));
    return dist(p, a + t * ab);
}

}  // namespace fadetwin
