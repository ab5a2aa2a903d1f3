#pragma once

// Tracker-space to display-space calibration.
//
// Two forms are kept side by side:
//  * the four-point projection map: the operator aligns the tracker with cubes
//    at (0,0,0), (t,0,0), (0,t,0), (0,0,t) in display space, giving readings
//    x0..x3; a point x is projected onto a_i = x_i - x0 and recomposed as
//    t * ((x-x0)·a_i / |a_i|²)_i.
//  * a least-squares similarity fit over any number of correspondences
//    (closed-form SVD solve with reflection correction).

#include <jigsketch/error.hpp>
#include <jigsketch/geom.hpp>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace jigsketch {

inline constexpr double kDefaultCubeSpacing = 0.1;
inline constexpr double kBasisVolumeThreshold = 1e-9;

struct CalibrationProbe {
    std::array<Vec3, 4> readings;
    double t = kDefaultCubeSpacing;
};

struct CoordinateMap {
    Vec3 x0;
    Vec3 a1;
    Vec3 a2;
    Vec3 a3;
    double t = kDefaultCubeSpacing;

    friend bool operator==(const CoordinateMap&, const CoordinateMap&) = default;
};

struct Correspondence {
    Vec3 source;
    Vec3 target;
};

using CorrespondenceSet = std::vector<Correspondence>;

inline double basis_volume(const Vec3& a1, const Vec3& a2, const Vec3& a3) { return dot(a1, cross(a2, a3)); }

inline CoordinateMap calibrate_four_point(const CalibrationProbe& probe) {
    if (!(probe.t > 0) || !std::isfinite(probe.t))
        throw Error(ErrorCode::InvalidArgument, "cube spacing t must be positive");
    for (const auto& r : probe.readings)
        if (!is_finite(r)) throw Error(ErrorCode::NonFiniteInput, "calibration reading is not finite");

    const auto& x = probe.readings;
    CoordinateMap map{x[0], x[1] - x[0], x[2] - x[0], x[3] - x[0], probe.t};
    if (!(std::abs(basis_volume(map.a1, map.a2, map.a3)) > kBasisVolumeThreshold))
        throw Error(ErrorCode::DegenerateBasis, "calibration readings are coplanar or repeated");
    return map;
}

inline Vec3 map_point(const CoordinateMap& map, const Vec3& x) {
    Vec3 d = x - map.x0;
    return map.t * Vec3{dot(d, map.a1) / squared_norm(map.a1), dot(d, map.a2) / squared_norm(map.a2),
                        dot(d, map.a3) / squared_norm(map.a3)};
}

inline double residual_rmse(const SimilarityTransform& t, const CorrespondenceSet& pairs) {
    if (pairs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& c : pairs) sum += squared_norm(apply_similarity(t, c.source) - c.target);
    return std::sqrt(sum / static_cast<double>(pairs.size()));
}

/// Least-squares similarity transform minimizing Σ‖kA·s + b − t‖² (Umeyama's
/// closed form). A reflection in the raw SVD solution is folded back into a
/// proper rotation; it is never reported as an error.
inline SimilarityTransform fit_similarity_lsq(const CorrespondenceSet& pairs) {
    if (pairs.size() < 3)
        throw Error(ErrorCode::DegenerateConfiguration, "need at least 3 correspondences");

    const double n = static_cast<double>(pairs.size());
    Eigen::Vector3d mu_s = Eigen::Vector3d::Zero();
    Eigen::Vector3d mu_t = Eigen::Vector3d::Zero();
    for (const auto& c : pairs) {
        if (!is_finite(c.source) || !is_finite(c.target))
            throw Error(ErrorCode::NonFiniteInput, "correspondence is not finite");
        mu_s += Eigen::Vector3d(c.source.x, c.source.y, c.source.z);
        mu_t += Eigen::Vector3d(c.target.x, c.target.y, c.target.z);
    }
    mu_s /= n;
    mu_t /= n;

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    double var_s = 0.0;
    for (const auto& c : pairs) {
        Eigen::Vector3d s = Eigen::Vector3d(c.source.x, c.source.y, c.source.z) - mu_s;
        Eigen::Vector3d t = Eigen::Vector3d(c.target.x, c.target.y, c.target.z) - mu_t;
        cov += t * s.transpose();
        scatter += s * s.transpose();
        var_s += s.squaredNorm();
    }
    cov /= n;
    scatter /= n;
    var_s /= n;

    // Collinear (or coincident) sources leave rotation about their line unconstrained.
    Eigen::JacobiSVD<Eigen::Matrix3d> scatter_svd(scatter);
    const auto& sv = scatter_svd.singularValues();
    if (!(sv(0) > 0) || sv(1) <= 1e-12 * sv(0))
        throw Error(ErrorCode::DegenerateConfiguration, "source points are collinear");

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    Eigen::Vector3d d = svd.singularValues();
    Eigen::Vector3d s(1.0, 1.0, 1.0);
    if (u.determinant() * v.determinant() < 0) s(2) = -1.0;

    Eigen::Matrix3d rot = u * s.asDiagonal() * v.transpose();
    double k = d.dot(s) / var_s;
    if (!(k > 0))
        throw Error(ErrorCode::DegenerateConfiguration, "targets carry no spread to fit a scale");
    Eigen::Vector3d b = mu_t - k * rot * mu_s;

    SimilarityTransform out;
    out.scale = k;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.rotation(r, c) = rot(r, c);
    out.translation = {b(0), b(1), b(2)};
    return out;
}

/// Display-space positions of the four calibration cubes.
inline std::array<Vec3, 4> cube_positions(double t) {
    return {Vec3{0, 0, 0}, Vec3{t, 0, 0}, Vec3{0, t, 0}, Vec3{0, 0, t}};
}

/// Similarity form of a four-point map, fitted on the probe's own pairs.
inline SimilarityTransform to_similarity(const CoordinateMap& map) {
    auto cubes = cube_positions(map.t);
    CorrespondenceSet pairs{{map.x0, cubes[0]},
                            {map.x0 + map.a1, cubes[1]},
                            {map.x0 + map.a2, cubes[2]},
                            {map.x0 + map.a3, cubes[3]}};
    return fit_similarity_lsq(pairs);
}

} // namespace jigsketch
