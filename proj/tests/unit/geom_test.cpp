#include <jigsketch/geom.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace jigsketch;
using namespace jigsketch::testing;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
    EXPECT_NEAR(a.x, b.x, tol);
    EXPECT_NEAR(a.y, b.y, tol);
    EXPECT_NEAR(a.z, b.z, tol);
}

// Same rotation up to the quaternion double cover.
void expect_same_rotation(const Quat& a, const Quat& b, double tol) { EXPECT_NEAR(std::abs(dot(a, b)), 1.0, tol); }

} // namespace

TEST(SimilarityTest, IdentityLeavesPointsAlone) {
    EXPECT_EQ(apply_similarity(SimilarityTransform::identity(), {1, 2, 3}), (Vec3{1, 2, 3}));
}

TEST(SimilarityTest, ScaleAndOffset) {
    SimilarityTransform t{2.0, Mat3::identity(), {1, 0, 0}};
    EXPECT_EQ(apply_similarity(t, {0, 0, 0}), (Vec3{1, 0, 0}));
}

TEST(SimilarityTest, QuarterTurnAboutZ) {
    // Hand-written Rz(90°).
    Mat3 rz{{0, -1, 0, 1, 0, 0, 0, 0, 1}};
    SimilarityTransform t{1.0, rz, {}};
    expect_vec_near(apply_similarity(t, {1, 0, 0}), {0, 1, 0}, 1e-15);
    // The quaternion path builds the same matrix.
    Mat3 q = to_matrix(Quat::from_axis_angle({0, 0, 1}, kPi / 2));
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(q.m[i], rz.m[i], 1e-15);
}

TEST(SimilarityTest, ComposeWithIdentityIsNoop) {
    Rng rng(7);
    auto t = random_similarity(rng);
    auto c = compose(t, SimilarityTransform::identity());
    EXPECT_DOUBLE_EQ(c.scale, t.scale);
    for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(c.rotation.m[i], t.rotation.m[i]);
    expect_vec_near(c.translation, t.translation, 0.0);
    EXPECT_EQ(invert(SimilarityTransform::identity()), SimilarityTransform::identity());
}

TEST(SimilarityTest, ComposeAndInvertMatchDirectApplication) {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        auto t1 = random_similarity(rng);
        auto t2 = random_similarity(rng);
        auto c = compose(t2, t1);
        auto inv = invert(t1);
        EXPECT_TRUE(c.is_valid());
        EXPECT_TRUE(inv.is_valid());
        for (int k = 0; k < 100; ++k) {
            Vec3 p = random_vec(rng, -10, 10);
            EXPECT_LT(max_abs_diff(apply_similarity(c, p), apply_similarity(t2, apply_similarity(t1, p))), 1e-9);
            EXPECT_LT(max_abs_diff(apply_similarity(inv, apply_similarity(t1, p)), p), 1e-9);
        }
    }
}

TEST(SimilarityTest, RoundTripOverThousandPoses) {
    Rng rng(3);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        auto t = random_similarity(rng);
        Vec3 p = random_vec(rng, -10, 10);
        worst = std::max(worst, max_abs_diff(apply_similarity(invert(t), apply_similarity(t, p)), p));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(QuatTest, MatrixRoundTrip) {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        Quat q = random_rotation(rng);
        expect_same_rotation(from_matrix(to_matrix(q)), q, 1e-12);
        Vec3 v = random_vec(rng, -1, 1);
        expect_vec_near(rotate(q, v), to_matrix(q) * v, 1e-12);
    }
}

TEST(QuatTest, AxisAngleMatchesRodrigues) {
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        Vec3 axis = random_vec(rng, -1, 1);
        double angle = uniform(rng, -kPi, kPi);
        Mat3 a = to_matrix(Quat::from_axis_angle(axis, angle));
        Mat3 b = rodrigues(axis, angle);
        for (int k = 0; k < 9; ++k) EXPECT_NEAR(a.m[k], b.m[k], 1e-12);
    }
}

TEST(QuatTest, RotationBetweenMapsDirections) {
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        Vec3 a = random_vec(rng, -1, 1), b = random_vec(rng, -1, 1);
        expect_vec_near(rotate(rotation_between(a, b), a / norm(a)), b / norm(b), 1e-12);
    }
    // Antiparallel inputs still produce a half turn.
    expect_vec_near(rotate(rotation_between({0, 1, 0}, {0, -1, 0}), {0, 1, 0}), {0, -1, 0}, 1e-12);
}

TEST(SlerpTest, SameInputIsFixedPoint) {
    Quat q = Quat::from_axis_angle({1, 2, 3}, 0.7);
    expect_same_rotation(slerp(q, q, 0.5), q, 1e-15);
}

TEST(SlerpTest, HalfwayToQuarterTurnIsEighthTurn) {
    Quat half = slerp(Quat::identity(), Quat::from_axis_angle({0, 0, 1}, kPi / 2), 0.5);
    // 45° about Z: (cos 22.5°, 0, 0, sin 22.5°).
    Quat expected{std::cos(kPi / 8), 0, 0, std::sin(kPi / 8)};
    EXPECT_NEAR(half.w, expected.w, 1e-12);
    EXPECT_NEAR(half.x, 0.0, 1e-12);
    EXPECT_NEAR(half.y, 0.0, 1e-12);
    EXPECT_NEAR(half.z, expected.z, 1e-12);
}

TEST(SlerpTest, EndpointsAndShortestArc) {
    Rng rng(17);
    for (int i = 0; i < 50; ++i) {
        Quat q0 = random_rotation(rng), q1 = random_rotation(rng);
        expect_same_rotation(slerp(q0, q1, 0.0), q0, 1e-12);
        expect_same_rotation(slerp(q0, q1, 1.0), q1, 1e-12);
        // Double cover: the sign of the endpoint does not change the path.
        for (double u : {0.25, 0.5, 0.75}) expect_same_rotation(slerp(q0, -q1, u), slerp(q0, q1, u), 1e-12);
        // Shortest arc: the halfway point is at half the relative angle.
        EXPECT_NEAR(angular_distance(q0, slerp(q0, q1, 0.5)), angular_distance(q0, q1) / 2, 1e-9);
    }
}

TEST(SlerpTest, UnitNormOnGrid) {
    Rng rng(19);
    for (int i = 0; i < 100; ++i) {
        Quat q0 = random_rotation(rng), q1 = random_rotation(rng);
        if (i % 10 == 0) q1 = normalized(Quat{q0.w + 1e-5, q0.x, q0.y, q0.z});  // nlerp branch
        for (int k = 0; k <= 100; ++k) EXPECT_NEAR(norm(slerp(q0, q1, k * 0.01)), 1.0, 1e-9);
    }
}

TEST(PoseTest, InverseAndComposition) {
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
        Pose a{random_vec(rng, -5, 5), random_rotation(rng)};
        Pose b{random_vec(rng, -5, 5), random_rotation(rng)};
        Vec3 p = random_vec(rng, -5, 5);
        expect_vec_near((a * b).apply(p), a.apply(b.apply(p)), 1e-12);
        expect_vec_near(inverse(a).apply(a.apply(p)), p, 1e-12);
    }
}

TEST(Mat3Test, OrthonormalityPreservedByCompose) {
    Rng rng(29);
    SimilarityTransform acc = SimilarityTransform::identity();
    for (int i = 0; i < 100; ++i) {
        acc = compose(random_similarity(rng, 0.9, 1.1), acc);
        EXPECT_LT(orthonormality_error(acc.rotation), 1e-9);
        EXPECT_NEAR(acc.rotation.determinant(), 1.0, 1e-9);
        EXPECT_GT(acc.scale, 0.0);
    }
}
