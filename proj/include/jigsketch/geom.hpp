#pragma once

// Core value types. Conventions: right-handed, Y-up, meters, radians.
// Matrices are row-major; quaternions are stored (w, x, y, z).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace jigsketch {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline bool is_finite(const Vec3& a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

/// Unit vector along a; returns `fallback` when a has (near) zero length.
inline Vec3 normalized_or(const Vec3& a, const Vec3& fallback) {
    double n = norm(a);
    if (n < 1e-15) return fallback;
    return a / n;
}

constexpr Vec3 lerp(const Vec3& a, const Vec3& b, double u) { return a + (b - a) * u; }

/// Some unit vector perpendicular to v (v need not be normalized).
inline Vec3 any_perpendicular(const Vec3& v) {
    Vec3 axis = std::abs(v.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return normalized_or(cross(v, axis), {0, 0, 1});
}

struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static constexpr Mat3 identity() { return {}; }
    static constexpr Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
        return {{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
    }

    constexpr double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
    constexpr double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }

    constexpr Vec3 row(int r) const { return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)}; }
    constexpr Vec3 col(int c) const { return {(*this)(0, c), (*this)(1, c), (*this)(2, c)}; }

    constexpr Mat3 transposed() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
        return t;
    }

    constexpr double determinant() const { return dot(row(0), cross(row(1), row(2))); }

    friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Vec3 operator*(const Mat3& a, const Vec3& v) { return {dot(a.row(0), v), dot(a.row(1), v), dot(a.row(2), v)}; }

constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out(r, c) = dot(a.row(r), b.col(c));
    return out;
}

/// Largest absolute entry of AᵀA − I.
inline double orthonormality_error(const Mat3& a) {
    Mat3 p = a.transposed() * a;
    double worst = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(p(r, c) - (r == c ? 1.0 : 0.0)));
    return worst;
}

struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static constexpr Quat identity() { return {}; }

    static Quat from_axis_angle(const Vec3& axis, double angle) {
        Vec3 n = normalized_or(axis, {0, 1, 0});
        double s = std::sin(angle * 0.5);
        return {std::cos(angle * 0.5), n.x * s, n.y * s, n.z * s};
    }

    constexpr Vec3 vec() const { return {x, y, z}; }

    friend constexpr bool operator==(const Quat&, const Quat&) = default;
};

constexpr Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}
constexpr Quat operator-(const Quat& q) { return {-q.w, -q.x, -q.y, -q.z}; }

constexpr double dot(const Quat& a, const Quat& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Quat& q) { return std::sqrt(dot(q, q)); }
constexpr Quat conjugate(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }
inline bool is_finite(const Quat& q) {
    return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}

inline Quat normalized(const Quat& q) {
    double n = norm(q);
    if (n < 1e-15) return Quat::identity();
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

/// Rotates v by unit quaternion q.
constexpr Vec3 rotate(const Quat& q, const Vec3& v) {
    Vec3 u = q.vec();
    Vec3 t = 2.0 * cross(u, v);
    return v + q.w * t + cross(u, t);
}

inline Mat3 to_matrix(const Quat& q) {
    double xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    return {{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
             2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
             2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}};
}

/// Quaternion of a proper rotation matrix (Shepperd's method), normalized, w >= 0.
inline Quat from_matrix(const Mat3& r) {
    double trace = r(0, 0) + r(1, 1) + r(2, 2);
    Quat q;
    if (trace > 0) {
        double s = std::sqrt(trace + 1.0) * 2;
        q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2;
        q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
    } else if (r(1, 1) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2;
        q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
    } else {
        double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2;
        q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
    }
    if (q.w < 0) q = -q;
    return normalized(q);
}

/// Shortest-arc rotation taking direction `from` onto direction `to`.
inline Quat rotation_between(const Vec3& from, const Vec3& to) {
    Vec3 a = normalized_or(from, {0, 1, 0});
    Vec3 b = normalized_or(to, {0, 1, 0});
    double c = dot(a, b);
    if (c < -1.0 + 1e-12) return Quat::from_axis_angle(any_perpendicular(a), std::numbers::pi);
    Vec3 axis = cross(a, b);
    return normalized(Quat{1.0 + c, axis.x, axis.y, axis.z});
}

/// Spherical interpolation along the shortest arc. Falls back to normalized
/// lerp when the inputs are nearly parallel (|dot| > 0.9995).
inline Quat slerp(const Quat& q0, const Quat& q1, double u) {
    Quat end = q1;
    double c = dot(q0, q1);
    if (c < 0) {
        end = -q1;
        c = -c;
    }
    if (c > 0.9995) {
        Quat mix{q0.w + (end.w - q0.w) * u, q0.x + (end.x - q0.x) * u, q0.y + (end.y - q0.y) * u,
                 q0.z + (end.z - q0.z) * u};
        return normalized(mix);
    }
    double theta = std::acos(std::clamp(c, -1.0, 1.0));
    double s = std::sin(theta);
    double a = std::sin((1.0 - u) * theta) / s;
    double b = std::sin(u * theta) / s;
    return normalized(Quat{a * q0.w + b * end.w, a * q0.x + b * end.x, a * q0.y + b * end.y, a * q0.z + b * end.z});
}

/// Angle of the relative rotation between two unit quaternions, in [0, pi].
inline double angular_distance(const Quat& a, const Quat& b) {
    return 2.0 * std::acos(std::clamp(std::abs(dot(a, b)), 0.0, 1.0));
}

/// Rigid transform: x_world = orientation * x_local + position.
struct Pose {
    Vec3 position;
    Quat orientation;

    static constexpr Pose identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotate(orientation, p) + position; }

    friend constexpr bool operator==(const Pose&, const Pose&) = default;
};

/// parent ∘ child
inline Pose operator*(const Pose& parent, const Pose& child) {
    return {parent.position + rotate(parent.orientation, child.position),
            normalized(parent.orientation * child.orientation)};
}

inline Pose inverse(const Pose& p) {
    Quat inv = conjugate(p.orientation);
    return {rotate(inv, -p.position), inv};
}

/// x' = k A x + b with k > 0 and A a proper rotation.
struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation;
    Vec3 translation;

    static constexpr SimilarityTransform identity() { return {}; }

    /// True when k > 0, AᵀA = I and det A = 1 within `tol`.
    bool is_valid(double tol = 1e-9) const {
        return scale > 0 && std::isfinite(scale) && orthonormality_error(rotation) < tol &&
               std::abs(rotation.determinant() - 1.0) < tol && is_finite(translation);
    }

    friend constexpr bool operator==(const SimilarityTransform&, const SimilarityTransform&) = default;
};

inline Vec3 apply_similarity(const SimilarityTransform& t, const Vec3& p) {
    return t.scale * (t.rotation * p) + t.translation;
}

/// Transform equivalent to applying `first`, then `second`.
inline SimilarityTransform compose(const SimilarityTransform& second, const SimilarityTransform& first) {
    return {second.scale * first.scale, second.rotation * first.rotation,
            second.scale * (second.rotation * first.translation) + second.translation};
}

inline SimilarityTransform invert(const SimilarityTransform& t) {
    Mat3 rt = t.rotation.transposed();
    double inv_k = 1.0 / t.scale;
    return {inv_k, rt, -(inv_k * (rt * t.translation))};
}

} // namespace jigsketch
