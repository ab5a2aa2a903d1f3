#include <jigsketch/calibration.hpp>

#include "test_support.hpp"

#include <Eigen/Geometry>
#include <gtest/gtest.h>

using namespace jigsketch;
using namespace jigsketch::testing;

namespace {

/// Readings the operator would get aligning the tracker with the four cubes
/// when display = M(tracker).
CalibrationProbe probe_for(const SimilarityTransform& m, double t) {
    auto inv = invert(m);
    auto cubes = cube_positions(t);
    CalibrationProbe probe;
    for (int i = 0; i < 4; ++i) probe.readings[i] = apply_similarity(inv, cubes[i]);
    probe.t = t;
    return probe;
}

CorrespondenceSet pairs_from(const SimilarityTransform& m, Rng& rng, int n, double noise_sigma) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    CorrespondenceSet pairs;
    for (int i = 0; i < n; ++i) {
        Vec3 s = random_vec(rng, -1, 1);
        Vec3 t = apply_similarity(m, s);
        if (noise_sigma > 0) t += Vec3{noise(rng), noise(rng), noise(rng)};
        pairs.push_back({s, t});
    }
    return pairs;
}

SimilarityTransform generator_37deg() {
    return {1.7, rodrigues({1, 1, 0}, 37.0 * std::numbers::pi / 180.0), {0.2, -0.1, 0.05}};
}

} // namespace

TEST(CalibrateFourPointTest, AlignedReadingsGiveIdentity) {
    CalibrationProbe probe{{Vec3{0, 0, 0}, Vec3{0.1, 0, 0}, Vec3{0, 0.1, 0}, Vec3{0, 0, 0.1}}, 0.1};
    auto map = calibrate_four_point(probe);
    for (Vec3 p : {Vec3{1, 2, 3}, Vec3{-0.3, 0.05, 0.7}, Vec3{}}) {
        Vec3 q = map_point(map, p);
        EXPECT_NEAR(q.x, p.x, 1e-15);
        EXPECT_NEAR(q.y, p.y, 1e-15);
        EXPECT_NEAR(q.z, p.z, 1e-15);
    }
}

TEST(CalibrateFourPointTest, DefaultSpacingIsTenCentimeters) { EXPECT_EQ(CalibrationProbe{}.t, 0.1); }

TEST(CalibrateFourPointTest, ScaleTwoGenerator) {
    // display = 2 * tracker, so the cube readings are at half the spacing.
    CalibrationProbe probe{{Vec3{0, 0, 0}, Vec3{0.05, 0, 0}, Vec3{0, 0.05, 0}, Vec3{0, 0, 0.05}}, 0.1};
    auto map = calibrate_four_point(probe);
    EXPECT_LT(max_abs_diff(map_point(map, {0.05, 0.05, 0}), {0.1, 0.1, 0}), 1e-15);
    EXPECT_LT(max_abs_diff(map_point(map, {0.025, 0, 0}), {0.05, 0, 0}), 1e-15);
}

TEST(CalibrateFourPointTest, BasisPointsMapToCubes) {
    Rng rng(1);
    auto m = random_similarity(rng);
    auto probe = probe_for(m, 0.1);
    auto map = calibrate_four_point(probe);
    EXPECT_LT(max_abs_diff(map_point(map, probe.readings[0]), {0, 0, 0}), 1e-12);
    EXPECT_LT(max_abs_diff(map_point(map, probe.readings[1]), {0.1, 0, 0}), 1e-12);
}

TEST(CalibrateFourPointTest, DegenerateReadingsRejected) {
    CalibrationProbe collinear{{Vec3{0, 0, 0}, Vec3{0.1, 0, 0}, Vec3{0.2, 0, 0}, Vec3{0.3, 0, 0}}, 0.1};
    try {
        calibrate_four_point(collinear);
        FAIL() << "expected DegenerateBasis";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateBasis);
    }
    CalibrationProbe repeated{{Vec3{0, 0, 0}, Vec3{0.1, 0, 0}, Vec3{0.1, 0, 0}, Vec3{0, 0, 0.1}}, 0.1};
    EXPECT_THROW(calibrate_four_point(repeated), Error);
}

TEST(CalibrateFourPointTest, ReproducesAnySimilarity) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        auto m = random_similarity(rng);
        auto map = calibrate_four_point(probe_for(m, 0.1));
        for (int k = 0; k < 100; ++k) {
            Vec3 x = random_vec(rng, -2, 2);
            EXPECT_LT(max_abs_diff(map_point(map, x), apply_similarity(m, x)), 1e-9);
        }
    }
}

TEST(CalibrateFourPointTest, TranslationEquivariant) {
    Rng rng(4);
    auto m = random_similarity(rng);
    auto probe = probe_for(m, 0.1);
    auto map = calibrate_four_point(probe);
    Vec3 d{0.7, -1.3, 0.25};
    auto shifted = probe;
    for (auto& r : shifted.readings) r += d;
    auto map2 = calibrate_four_point(shifted);
    for (int k = 0; k < 20; ++k) {
        Vec3 x = random_vec(rng, -1, 1);
        EXPECT_LT(max_abs_diff(map_point(map2, x + d), map_point(map, x)), 1e-12);
    }
}

TEST(CalibrateFourPointTest, ConversionToSimilarityForm) {
    Rng rng(6);
    auto m = random_similarity(rng);
    auto sim = to_similarity(calibrate_four_point(probe_for(m, 0.1)));
    EXPECT_NEAR(sim.scale, m.scale, 1e-9);
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(sim.rotation.m[i], m.rotation.m[i], 1e-9);
    EXPECT_LT(max_abs_diff(sim.translation, m.translation), 1e-9);
}

TEST(FitSimilarityTest, IdentityPairs) {
    Rng rng(8);
    auto pairs = pairs_from(SimilarityTransform::identity(), rng, 10, 0.0);
    auto fit = fit_similarity_lsq(pairs);
    EXPECT_NEAR(fit.scale, 1.0, 1e-12);
    EXPECT_LT(residual_rmse(fit, pairs), 1e-12);
}

TEST(FitSimilarityTest, RecoversGeneratorExactly) {
    Rng rng(10);
    auto gen = generator_37deg();
    auto pairs = pairs_from(gen, rng, 20, 0.0);
    auto fit = fit_similarity_lsq(pairs);
    EXPECT_NEAR(fit.scale, 1.7, 1e-9);
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(fit.rotation.m[i], gen.rotation.m[i], 1e-9);
    EXPECT_LT(max_abs_diff(fit.translation, gen.translation), 1e-9);
    EXPECT_LT(residual_rmse(fit, pairs), 1e-9);
}

TEST(FitSimilarityTest, NoisyFitWithinMillimeters) {
    auto gen = generator_37deg();
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(1000 + seed);
        auto pairs = pairs_from(gen, rng, 20, 0.001);
        auto fit = fit_similarity_lsq(pairs);
        EXPECT_LT(residual_rmse(fit, pairs), 0.003);
        EXPECT_LT(std::abs(fit.scale - 1.7) / 1.7, 0.01);
    }
}

TEST(FitSimilarityTest, AgreesWithEigenUmeyama) {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        auto pairs = pairs_from(random_similarity(rng), rng, 15, 0.01);
        Eigen::Matrix3Xd src(3, pairs.size()), dst(3, pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            src.col(static_cast<Eigen::Index>(i)) << pairs[i].source.x, pairs[i].source.y, pairs[i].source.z;
            dst.col(static_cast<Eigen::Index>(i)) << pairs[i].target.x, pairs[i].target.y, pairs[i].target.z;
        }
        Eigen::Matrix4d ref = Eigen::umeyama(src, dst, true);
        auto fit = fit_similarity_lsq(pairs);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) EXPECT_NEAR(fit.scale * fit.rotation(r, c), ref(r, c), 1e-9);
        }
        EXPECT_NEAR(fit.translation.x, ref(0, 3), 1e-9);
    }
}

TEST(FitSimilarityTest, ReflectionIsCorrectedNotRejected) {
    // Targets are a mirror image: the best proper rotation must still be returned.
    Rng rng(14);
    CorrespondenceSet pairs;
    for (int i = 0; i < 12; ++i) {
        Vec3 s = random_vec(rng, -1, 1);
        pairs.push_back({s, {-s.x, s.y, s.z}});
    }
    auto fit = fit_similarity_lsq(pairs);
    EXPECT_TRUE(fit.is_valid());
    EXPECT_NEAR(fit.rotation.determinant(), 1.0, 1e-9);
}

TEST(FitSimilarityTest, GloballyOptimalAgainstPerturbations) {
    Rng rng(16);
    auto pairs = pairs_from(random_similarity(rng), rng, 20, 0.002);
    auto fit = fit_similarity_lsq(pairs);
    double best = residual_rmse(fit, pairs);
    for (int i = 0; i < 1000; ++i) {
        SimilarityTransform p = fit;
        p.scale *= 1.0 + uniform(rng, -0.01, 0.01);
        p.rotation = rodrigues(random_vec(rng, -1, 1), uniform(rng, -0.01, 0.01)) * p.rotation;
        p.translation += random_vec(rng, -0.005, 0.005);
        EXPECT_GE(residual_rmse(p, pairs), best - 1e-15);
    }
}

TEST(FitSimilarityTest, DegenerateInputs) {
    CorrespondenceSet two{{{0, 0, 0}, {0, 0, 0}}, {{1, 0, 0}, {1, 0, 0}}};
    EXPECT_THROW(fit_similarity_lsq(two), Error);
    CorrespondenceSet collinear;
    for (int i = 0; i < 5; ++i) collinear.push_back({{double(i), 0, 0}, {double(i), 1, 0}});
    try {
        fit_similarity_lsq(collinear);
        FAIL() << "expected DegenerateConfiguration";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
    }
}

TEST(ResidualRmseTest, UniformOffset) {
    CorrespondenceSet pairs;
    for (int i = 0; i < 5; ++i) pairs.push_back({{double(i), 2.0 * i, 0}, {double(i) + 1.0, 2.0 * i, 0}});
    EXPECT_DOUBLE_EQ(residual_rmse(SimilarityTransform::identity(), pairs), 1.0);
}
