#include <jigsketch/jig.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace jigsketch;
using namespace jigsketch::testing;

namespace {

std::vector<Pose> at(Vec3 p) { return {Pose{p, Quat::identity()}}; }
std::vector<Pose> at(Vec3 a, Vec3 b) { return {Pose{a, Quat::identity()}, Pose{b, Quat::identity()}}; }

/// Brute-force nearest point: the polyline densified into many samples.
double densified_distance(const std::vector<Vec3>& path, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        for (int k = 0; k <= 20000; ++k) best = std::min(best, distance(p, lerp(path[i], path[i + 1], k / 20000.0)));
    return best;
}

double distance_to_segment(const Vec3& a, const Vec3& b, const Vec3& p) {
    double s = std::clamp(dot(p - a, b - a) / squared_norm(b - a), 0.0, 1.0);
    return distance(p, a + (b - a) * s);
}

} // namespace

TEST(WeightJigTest, EquilibriumIsExact) {
    JigConfig cfg = WeightJig{};
    auto in = at({0.3, 1.2, -0.5});
    JigState s = initial_jig_state(cfg, in);
    for (int k = 0; k < 600; ++k) {
        auto step = jig_step(cfg, s, in, 1.0 / 60);
        EXPECT_EQ(step.outputs[0].position, in[0].position);
        s = step.state;
    }
    EXPECT_EQ(s.velocity[0], Vec3{});
}

TEST(WeightJigTest, SettlesWithinTenSettleTimes) {
    for (const auto& name : {"weight:default", "weight:heavy", "weight:light"}) {
        JigConfig cfg = jig_preset(name);
        auto in = at({1, 0.5, 0});
        JigState s;
        s.initialized = true;
        s.position[0] = {-0.5, 1.5, 0.3};
        s.velocity[0] = {2, 0, -1};
        double dt = 1.0 / 60;
        int ticks = static_cast<int>(std::ceil(10 * jig_settle_time(cfg) / dt));
        Vec3 out;
        for (int k = 0; k < ticks; ++k) {
            auto step = jig_step(cfg, s, in, dt);
            s = step.state;
            out = step.outputs[0].position;
        }
        EXPECT_LT(distance(out, in[0].position), 1e-4) << name;
    }
}

TEST(WeightJigTest, LagsAndOvershoots) {
    JigConfig cfg = WeightJig{1.0, 100.0, 4.0};  // underdamped
    JigState s = initial_jig_state(cfg, at({0, 0, 0}));
    double peak = 0;
    auto first = jig_step(cfg, s, at({1, 0, 0}), 1.0 / 60);
    EXPECT_LT(first.outputs[0].position.x, 0.5);  // lag
    s = first.state;
    for (int k = 0; k < 120; ++k) {
        auto step = jig_step(cfg, s, at({1, 0, 0}), 1.0 / 60);
        s = step.state;
        peak = std::max(peak, step.outputs[0].position.x);
    }
    EXPECT_GT(peak, 1.0);  // overshoot
}

TEST(PendulumJigTest, NoGravityKeepsOffset) {
    JigConfig cfg = PendulumJig{0.3, 0.0, 0.5};
    JigState s;
    s.initialized = true;
    Vec3 pivot{0, 1, 0};
    Vec3 offset = Vec3{0.3, 0.0, 0.4} * (0.3 / 0.5);
    s.position[0] = pivot + offset;
    for (int k = 0; k < 1000; ++k) {
        auto step = jig_step(cfg, s, at(pivot), 1.0 / 60);
        s = step.state;
        EXPECT_LT(max_abs_diff(step.outputs[0].position - pivot, offset), 1e-15);
    }
}

TEST(PendulumJigTest, RestsBelowPivot) {
    JigConfig cfg = PendulumJig{};
    auto s = initial_jig_state(cfg, at({0, 2, 0}));
    EXPECT_EQ(s.position[0], (Vec3{0, 1.7, 0}));
    auto step = jig_step(cfg, s, at({0, 2, 0}), 1.0 / 60);
    EXPECT_LT(max_abs_diff(step.outputs[0].position, {0, 1.7, 0}), 1e-12);
}

TEST(PendulumJigTest, FixedPivotEnergyNonIncreasing) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        PendulumJig jig{uniform(rng, 0.1, 1.0), 9.81, uniform(rng, 0.0, 2.0)};
        if (trial % 10 == 0) jig.damping = 0.0;
        JigConfig cfg = jig;
        Vec3 pivot = random_vec(rng, -1, 1);
        JigState s;
        s.initialized = true;
        Vec3 dir = random_vec(rng, -1, 1);
        s.position[0] = pivot + dir / norm(dir) * jig.length;
        Vec3 v = random_vec(rng, -2, 2);
        Vec3 radial = (s.position[0] - pivot) / jig.length;
        s.velocity[0] = v - radial * dot(v, radial);
        double e = pendulum_energy(jig, s);
        for (int k = 0; k < 600; ++k) {
            s = jig_step(cfg, s, at(pivot), 1.0 / 60).state;
            double next = pendulum_energy(jig, s);
            EXPECT_LE(next, e + 1e-6);
            EXPECT_NEAR(distance(s.position[0], pivot), jig.length, 1e-12);
            e = next;
        }
    }
}

TEST(PendulumJigTest, MovingPivotSwingsBob) {
    JigConfig cfg = PendulumJig{};
    auto s = initial_jig_state(cfg, at({0, 1, 0}));
    double max_x = 0;
    for (int k = 0; k < 60; ++k) {
        auto step = jig_step(cfg, s, at({k < 10 ? 0.05 * k : 0.5, 1, 0}), 1.0 / 60);
        s = step.state;
        max_x = std::max(max_x, std::abs(step.outputs[0].position.x - (k < 10 ? 0.05 * k : 0.5)));
    }
    EXPECT_GT(max_x, 0.01);
}

TEST(StickJigTest, OrthogonalProjection) {
    JigConfig cfg = StickJig{{{-1, 0, 0}, {1, 0, 0}}};
    auto step = jig_step(cfg, JigState{}, at({0.3, 1.0, 0}), 1.0 / 60);
    EXPECT_LT(max_abs_diff(step.outputs[0].position, {0.3, 0, 0}), 1e-15);
}

TEST(StickJigTest, OnPathAndNearest) {
    Rng rng(2);
    std::vector<Vec3> path{{0, 1, 0}, {0.5, 1.2, 0.1}, {0.6, 0.8, -0.3}, {1.2, 0.9, 0.2}};
    JigConfig cfg = StickJig{path};
    JigState s;
    for (int k = 0; k < 300; ++k) {
        Vec3 p = random_vec(rng, -1, 2);
        auto step = jig_step(cfg, s, at(p), 1.0 / 60);
        s = step.state;
        Vec3 out = step.outputs[0].position;
        double on_path = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
            on_path = std::min(on_path, distance_to_segment(path[i], path[i + 1], out));
        EXPECT_LT(on_path, 1e-9);
        if (k < 30) {
            EXPECT_LE(distance(out, p), densified_distance(path, p) + 1e-12);
        }
    }
}

TEST(BandJigTest, RestSeparationIsForceFree) {
    BandJig band;
    JigConfig cfg = band;
    auto in = at({0, 1, 0}, {band.rest_length, 1, 0});
    JigState s = initial_jig_state(cfg, in);
    for (int k = 0; k < 120; ++k) {
        auto step = jig_step(cfg, s, in, 1.0 / 60);
        s = step.state;
        EXPECT_EQ(step.outputs[0].position, in[0].position);
        EXPECT_EQ(step.outputs[1].position, in[1].position);
    }
}

TEST(BandJigTest, SymmetricUnderSwap) {
    Rng rng(3);
    JigConfig cfg = BandJig{};
    JigState a, b;
    for (int k = 0; k < 200; ++k) {
        Vec3 p = random_vec(rng, -1, 1), q = random_vec(rng, -1, 1);
        auto sa = jig_step(cfg, a, at(p, q), 1.0 / 60);
        auto sb = jig_step(cfg, b, at(q, p), 1.0 / 60);
        a = sa.state;
        b = sb.state;
        EXPECT_LT(max_abs_diff(sa.outputs[0].position, sb.outputs[1].position), 1e-12);
        EXPECT_LT(max_abs_diff(sa.outputs[1].position, sb.outputs[0].position), 1e-12);
    }
}

TEST(BandJigTest, StretchPullsEndsTogether) {
    JigConfig cfg = BandJig{};
    auto in = at({0, 1, 0}, {1.0, 1, 0});
    auto s = initial_jig_state(cfg, in);
    for (int k = 0; k < 60; ++k) s = jig_step(cfg, s, in, 1.0 / 60).state;
    double sep = distance(s.position[0], s.position[1]);
    EXPECT_LT(sep, 1.0);
    EXPECT_GT(sep, 0.3);
}

TEST(JigTest, Deterministic) {
    Rng rng(4);
    std::vector<Vec3> inputs;
    for (int k = 0; k < 200; ++k) inputs.push_back(random_vec(rng, -1, 1));
    for (const auto& [name, cfg] : jig_presets()) {
        std::vector<Vec3> run[2];
        for (auto& out : run) {
            JigState s;
            for (std::size_t k = 0; k < inputs.size(); ++k) {
                std::vector<Pose> in = jig_device_count(cfg) == 2 ? at(inputs[k], inputs[(k + 7) % inputs.size()])
                                                                  : at(inputs[k]);
                auto step = jig_step(cfg, s, in, 1.0 / 60);
                s = step.state;
                for (const auto& p : step.outputs) out.push_back(p.position);
            }
        }
        EXPECT_EQ(run[0], run[1]) << name;
    }
}

TEST(JigTest, OrientationPassesThrough) {
    Quat q = Quat::from_axis_angle({0, 1, 0}, 0.7);
    std::vector<Pose> in{{{0, 1, 0}, q}};
    auto step = jig_step(WeightJig{}, JigState{}, in, 1.0 / 60);
    EXPECT_EQ(step.outputs[0].orientation, q);
}

TEST(JigTest, Errors) {
    std::vector<Pose> bad{{{std::nan(""), 0, 0}, Quat::identity()}};
    try {
        jig_step(WeightJig{}, JigState{}, bad, 1.0 / 60);
        FAIL() << "expected NonFiniteInput";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFiniteInput);
    }
    EXPECT_THROW(jig_step(BandJig{}, JigState{}, at({0, 0, 0}), 1.0 / 60), Error);
    EXPECT_THROW(validate(JigConfig{StickJig{{{0, 0, 0}}}}), Error);
    EXPECT_THROW(validate(JigConfig{WeightJig{0.0, 1, 1}}), Error);
    EXPECT_THROW(jig_preset("weight:enormous"), Error);
    EXPECT_NO_THROW(jig_preset("pendulum"));
}

TEST(SettleTimeTest, CriticallyDamped) {
    EXPECT_NEAR(jig_settle_time(WeightJig{1.0, 100.0, 20.0}), 0.4, 1e-12);
}

TEST(SettleTimeTest, DoublingDampingHalves) {
    double a = jig_settle_time(WeightJig{1.0, 100.0, 5.0});
    double b = jig_settle_time(WeightJig{1.0, 100.0, 10.0});
    EXPECT_NEAR(b, a / 2, 1e-12);
}

TEST(SettleTimeTest, OverdampedUsesSlowMode) {
    // c=50, m=1, k=100: roots of s²+50s+100 are -2.0871 and -47.913.
    double slow = (50.0 - std::sqrt(2500.0 - 400.0)) / 2.0;
    EXPECT_NEAR(jig_settle_time(WeightJig{1.0, 100.0, 50.0}), 4.0 / slow, 1e-12);
    EXPECT_GT(jig_settle_time(WeightJig{1.0, 100.0, 50.0}), jig_settle_time(WeightJig{1.0, 100.0, 20.0}));
}

TEST(SettleTimeTest, UndampedNeverSettles) {
    EXPECT_TRUE(std::isinf(jig_settle_time(WeightJig{1.0, 100.0, 0.0})));
}

TEST(SettleTimeTest, WrongVariant) {
    for (JigConfig cfg : {JigConfig{PendulumJig{}}, JigConfig{StickJig{{{0, 0, 0}, {1, 0, 0}}}}}) {
        try {
            jig_settle_time(cfg);
            FAIL() << "expected WrongVariant";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::WrongVariant);
        }
    }
    EXPECT_GT(jig_settle_time(BandJig{}), 0.0);
}
