#pragma once

#include <jigsketch/geom.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace jigsketch::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec3 random_vec(Rng& rng, double lo, double hi) { return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)}; }

/// Uniformly distributed rotation (normalized 4D Gaussian).
inline Quat random_rotation(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Quat q{n(rng), n(rng), n(rng), n(rng)};
    return normalized(q);
}

inline SimilarityTransform random_similarity(Rng& rng, double k_lo = 0.5, double k_hi = 3.0, double b_max = 2.0) {
    SimilarityTransform t;
    t.scale = uniform(rng, k_lo, k_hi);
    t.rotation = to_matrix(random_rotation(rng));
    Vec3 b;
    do b = random_vec(rng, -b_max, b_max);
    while (norm(b) > b_max);
    t.translation = b;
    return t;
}

/// Rotation matrix built entry by entry from the textbook Rodrigues formula,
/// independent of the quaternion path.
inline Mat3 rodrigues(const Vec3& axis, double angle) {
    Vec3 n = axis / norm(axis);
    double c = std::cos(angle), s = std::sin(angle), C = 1 - c;
    return {{c + n.x * n.x * C, n.x * n.y * C - n.z * s, n.x * n.z * C + n.y * s,
             n.y * n.x * C + n.z * s, c + n.y * n.y * C, n.y * n.z * C - n.x * s,
             n.z * n.x * C - n.y * s, n.z * n.y * C + n.x * s, c + n.z * n.z * C}};
}

inline double max_abs_diff(const Vec3& a, const Vec3& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

} // namespace jigsketch::testing
