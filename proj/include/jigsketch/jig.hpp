#pragma once

// Virtual material jigs: dynamical filters on a device pose stream that
// mimic the physical props used while puppeteering.
//
//   Weight   - mass-spring-damper follower (lag and overshoot of a heavy hand)
//   Pendulum - a bob dangling under gravity from the device position
//   Stick    - device position projected onto a fixed path
//   Band     - two followers joined by an elastic band (tension only)
//
// Integration is semi-implicit Euler, substepped to at most 2 ms.

#include <jigsketch/error.hpp>
#include <jigsketch/geom.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace jigsketch {

inline constexpr double kMaxJigDt = 0.05;
inline constexpr double kMaxJigSubstep = 0.002;
inline constexpr double kDefaultGravity = 9.81;

struct WeightJig {
    double mass = 1.0;
    double stiffness = 60.0;
    double damping = 10.0;
};

struct PendulumJig {
    double length = 0.3;
    double gravity = kDefaultGravity;
    double damping = 0.5;
};

struct StickJig {
    std::vector<Vec3> path;
};

struct BandJig {
    double rest_length = 0.3;
    double stiffness = 40.0;
    double damping = 4.0;
    // Unit-mass spring pulling each band end toward its device.
    double tracking_stiffness = 150.0;
    double tracking_damping = 24.0;
};

using JigConfig = std::variant<WeightJig, PendulumJig, StickJig, BandJig>;

inline std::string_view jig_kind(const JigConfig& c) {
    switch (c.index()) {
    case 0: return "weight";
    case 1: return "pendulum";
    case 2: return "stick";
    default: return "band";
    }
}

inline std::size_t jig_device_count(const JigConfig& c) { return std::holds_alternative<BandJig>(c) ? 2 : 1; }

inline void validate(const JigConfig& config) {
    auto positive = [](double v) { return v > 0 && std::isfinite(v); };
    auto non_negative = [](double v) { return v >= 0 && std::isfinite(v); };
    bool ok = std::visit(
        [&](const auto& j) {
            using T = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<T, WeightJig>)
                return positive(j.mass) && positive(j.stiffness) && non_negative(j.damping);
            else if constexpr (std::is_same_v<T, PendulumJig>)
                return positive(j.length) && non_negative(j.gravity) && non_negative(j.damping);
            else if constexpr (std::is_same_v<T, StickJig>) {
                if (j.path.size() < 2) return false;
                for (const auto& p : j.path)
                    if (!is_finite(p)) return false;
                return true;
            } else
                return positive(j.rest_length) && positive(j.stiffness) && non_negative(j.damping) &&
                       positive(j.tracking_stiffness) && non_negative(j.tracking_damping);
        },
        config);
    if (!ok) throw Error(ErrorCode::InvalidArgument, "invalid " + std::string(jig_kind(config)) + " jig parameters");
}

struct JigState {
    std::array<Vec3, 2> position{};
    std::array<Vec3, 2> velocity{};
    bool initialized = false;

    friend bool operator==(const JigState&, const JigState&) = default;
};

struct JigStep {
    JigState state;
    std::vector<Pose> outputs;
};

/// Nearest point on a polyline; ties resolve to the earliest segment.
inline Vec3 closest_point_on_path(std::span<const Vec3> path, const Vec3& p) {
    Vec3 best = path.front();
    double best_d2 = squared_norm(p - best);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        Vec3 a = path[i];
        Vec3 ab = path[i + 1] - a;
        double len2 = squared_norm(ab);
        double s = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
        Vec3 q = s == 1.0 ? path[i + 1] : a + ab * s;
        double d2 = squared_norm(p - q);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = q;
        }
    }
    return best;
}

/// Initial state: followers sit on their inputs; a pendulum bob hangs at rest.
inline JigState initial_jig_state(const JigConfig& config, std::span<const Pose> inputs) {
    JigState s;
    for (std::size_t i = 0; i < inputs.size() && i < 2; ++i) s.position[i] = inputs[i].position;
    if (const auto* p = std::get_if<PendulumJig>(&config))
        s.position[0] = inputs[0].position + Vec3{0, -p->length, 0};
    s.initialized = true;
    return s;
}

/// Kinetic plus gravitational energy of a unit-mass pendulum bob.
inline double pendulum_energy(const PendulumJig& jig, const JigState& s) {
    return 0.5 * squared_norm(s.velocity[0]) + jig.gravity * s.position[0].y;
}

/// Advances one jig by dt seconds (clamped to 0.05 s) and returns the
/// filtered poses. Orientation passes through unchanged.
inline JigStep jig_step(const JigConfig& config, JigState state, std::span<const Pose> inputs, double dt) {
    if (inputs.size() != jig_device_count(config))
        throw Error(ErrorCode::InvalidArgument, std::string(jig_kind(config)) + " jig expects " +
                                                    std::to_string(jig_device_count(config)) + " input(s)");
    for (const auto& in : inputs)
        if (!is_finite(in.position) || !is_finite(in.orientation))
            throw Error(ErrorCode::NonFiniteInput, "jig input is not finite");
    if (!(dt > 0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "jig dt must be positive");
    dt = std::min(dt, kMaxJigDt);
    if (!state.initialized) state = initial_jig_state(config, inputs);

    const int substeps = static_cast<int>(std::ceil(dt / kMaxJigSubstep - 1e-9));
    const double h = dt / substeps;

    JigStep out;
    std::visit(
        [&](const auto& jig) {
            using T = std::decay_t<decltype(jig)>;
            auto& x = state.position;
            auto& v = state.velocity;
            if constexpr (std::is_same_v<T, WeightJig>) {
                const Vec3 target = inputs[0].position;
                for (int k = 0; k < substeps; ++k) {
                    Vec3 accel = (jig.stiffness * (target - x[0]) - jig.damping * v[0]) / jig.mass;
                    v[0] += accel * h;
                    x[0] += v[0] * h;
                }
                out.outputs.push_back({x[0], inputs[0].orientation});
            } else if constexpr (std::is_same_v<T, PendulumJig>) {
                const Vec3 pivot = inputs[0].position;
                const Vec3 g{0, -jig.gravity, 0};
                for (int k = 0; k < substeps; ++k) {
                    Vec3 vel = (v[0] + g * h) * (1.0 / (1.0 + jig.damping * h));
                    Vec3 predicted = x[0] + vel * h;
                    Vec3 hang = normalized_or(predicted - pivot, {0, -1, 0});
                    Vec3 next = pivot + hang * jig.length;
                    v[0] = (next - x[0]) / h;
                    x[0] = next;
                }
                out.outputs.push_back({x[0], inputs[0].orientation});
            } else if constexpr (std::is_same_v<T, StickJig>) {
                Vec3 prev = x[0];
                x[0] = closest_point_on_path(jig.path, inputs[0].position);
                v[0] = (x[0] - prev) / dt;
                out.outputs.push_back({x[0], inputs[0].orientation});
            } else {
                for (int k = 0; k < substeps; ++k) {
                    std::array<Vec3, 2> force;
                    for (int i = 0; i < 2; ++i)
                        force[i] = jig.tracking_stiffness * (inputs[i].position - x[i]) - jig.tracking_damping * v[i];
                    Vec3 d = x[1] - x[0];
                    double len = norm(d);
                    if (len > jig.rest_length) {
                        Vec3 dir = d / len;
                        double pull = jig.stiffness * (len - jig.rest_length) + jig.damping * dot(v[1] - v[0], dir);
                        if (pull > 0) {
                            force[0] += dir * pull;
                            force[1] -= dir * pull;
                        }
                    }
                    for (int i = 0; i < 2; ++i) {
                        v[i] += force[i] * h;
                        x[i] += v[i] * h;
                    }
                }
                out.outputs.push_back({x[0], inputs[0].orientation});
                out.outputs.push_back({x[1], inputs[1].orientation});
            }
        },
        config);
    for (const auto& p : out.outputs)
        if (!is_finite(p.position)) throw Error(ErrorCode::NonFiniteInput, "jig state diverged");
    out.state = state;
    return out;
}

/// 2% settling time 4/σ of the follower spring, σ the slowest decay rate:
/// ζω up to critical damping, ω(ζ - √(ζ²-1)) above it. +infinity when undamped.
inline double jig_settle_time(const JigConfig& config) {
    auto settle = [](double mass, double stiffness, double damping) {
        if (damping <= 0) return std::numeric_limits<double>::infinity();
        double omega = std::sqrt(stiffness / mass);
        double zeta = damping / (2.0 * std::sqrt(stiffness * mass));
        double rate = zeta <= 1.0 ? zeta * omega : omega * (zeta - std::sqrt(zeta * zeta - 1.0));
        return 4.0 / rate;
    };
    if (const auto* w = std::get_if<WeightJig>(&config)) return settle(w->mass, w->stiffness, w->damping);
    if (const auto* b = std::get_if<BandJig>(&config)) return settle(1.0, b->tracking_stiffness, b->tracking_damping);
    throw Error(ErrorCode::WrongVariant, "settle time is defined for weight and band jigs only");
}

/// Named parameter sets, addressed as "<kind>:<name>".
inline std::map<std::string, JigConfig> jig_presets() {
    return {
        {"weight:default", WeightJig{}},
        {"weight:heavy", WeightJig{3.0, 60.0, 12.0}},
        {"weight:light", WeightJig{0.5, 80.0, 9.0}},
        {"pendulum:default", PendulumJig{}},
        {"pendulum:long", PendulumJig{0.6, kDefaultGravity, 0.2}},
        {"stick:default", StickJig{{{-0.5, 1.0, 0.0}, {0.5, 1.0, 0.0}}}},
        {"band:default", BandJig{}},
    };
}

inline JigConfig jig_preset(const std::string& name) {
    auto presets = jig_presets();
    auto it = presets.find(name.find(':') == std::string::npos ? name + ":default" : name);
    if (it == presets.end()) throw Error(ErrorCode::UnknownId, "no jig preset '" + name + "'");
    return it->second;
}

} // namespace jigsketch
