#pragma once

// Sketched motion paths: fixed-rate recording, rigid/zoom edits about the
// waypoint centroid, timed replay with a look-ahead window, and layered replay
// of several cursors on one session clock.

#include <jigsketch/error.hpp>
#include <jigsketch/geom.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jigsketch {

inline constexpr double kDefaultSamplePeriod = 1.0 / 60.0;
inline constexpr std::size_t kReplayWindow = 5;
inline constexpr double kRotateStepRadians = 5.0 * std::numbers::pi / 180.0;
inline constexpr double kZoomStepFactor = 1.1;

struct Waypoint {
    Vec3 pos;
    double time = 0.0;

    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct Trajectory {
    std::string id;
    std::vector<Waypoint> waypoints;
    double sample_period = kDefaultSamplePeriod;

    double start_time() const { return waypoints.empty() ? 0.0 : waypoints.front().time; }
    double duration() const { return waypoints.empty() ? 0.0 : waypoints.back().time - waypoints.front().time; }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Checks the finished-trajectory invariants; throws InvalidArgument on violation.
inline void validate(const Trajectory& traj) {
    if (!(traj.sample_period > 0)) throw Error(ErrorCode::InvalidArgument, "sample_period must be positive");
    if (traj.waypoints.size() < 2) throw Error(ErrorCode::TooShort, "trajectory needs at least 2 waypoints");
    for (std::size_t i = 0; i < traj.waypoints.size(); ++i) {
        const auto& w = traj.waypoints[i];
        if (!is_finite(w.pos) || !std::isfinite(w.time) || w.time < 0)
            throw Error(ErrorCode::InvalidArgument, "waypoint " + std::to_string(i) + " is not finite");
        if (i > 0) {
            double gap = w.time - traj.waypoints[i - 1].time;
            if (!(gap > 0)) throw Error(ErrorCode::InvalidArgument, "waypoint times must strictly increase");
            if (std::abs(gap - traj.sample_period) > 1e-6)
                throw Error(ErrorCode::InvalidArgument, "waypoint spacing differs from sample_period");
        }
    }
}

/// Downsamples an incoming position stream onto the fixed grid
/// start + k·period, interpolating linearly between raw samples.
class TrajectoryRecorder {
public:
    explicit TrajectoryRecorder(double sample_period = kDefaultSamplePeriod) : period_(sample_period) {
        if (!(period_ > 0)) throw Error(ErrorCode::InvalidArgument, "sample period must be positive");
    }

    void begin(double clock, std::string id = {}) {
        if (!(clock >= 0) || !std::isfinite(clock)) throw Error(ErrorCode::InvalidArgument, "invalid start time");
        id_ = std::move(id);
        start_ = clock;
        waypoints_.clear();
        last_.reset();
        active_ = true;
    }

    void sample(const Vec3& pos, double clock) {
        require_active();
        if (!is_finite(pos) || !std::isfinite(clock)) throw Error(ErrorCode::NonFiniteInput, "non-finite sample");
        if (clock < start_) return;
        if (last_ && clock < last_->time) throw Error(ErrorCode::InvalidArgument, "samples must not go back in time");
        Waypoint current{pos, clock};
        emit_until(clock, [&](double g) {
            if (!last_ || clock <= last_->time) return pos;
            double u = (g - last_->time) / (clock - last_->time);
            return lerp(last_->pos, pos, std::clamp(u, 0.0, 1.0));
        });
        last_ = current;
    }

    Trajectory end(double clock) {
        require_active();
        active_ = false;
        if (last_) emit_until(clock, [&](double) { return last_->pos; });
        if (waypoints_.size() < 2) throw Error(ErrorCode::TooShort, "recording retained fewer than 2 samples");
        return Trajectory{id_, std::move(waypoints_), period_};
    }

    bool active() const { return active_; }
    double sample_period() const { return period_; }
    /// Waypoints emitted so far (for live display).
    std::span<const Waypoint> pending() const { return waypoints_; }

private:
    void require_active() const {
        if (!active_) throw Error(ErrorCode::BadMode, "recorder is not active");
    }

    double grid_time(std::size_t k) const { return start_ + static_cast<double>(k) * period_; }

    template <class PosAt>
    void emit_until(double clock, PosAt pos_at) {
        // Grid points within 1e-9 s of the clock count as reached.
        while (grid_time(waypoints_.size()) <= clock + 1e-9) {
            double g = grid_time(waypoints_.size());
            waypoints_.push_back({pos_at(g), g});
        }
    }

    double period_;
    double start_ = 0.0;
    std::string id_;
    std::vector<Waypoint> waypoints_;
    std::optional<Waypoint> last_;
    bool active_ = false;
};

inline Vec3 centroid(const Trajectory& traj) {
    Vec3 sum;
    for (const auto& w : traj.waypoints) sum += w.pos;
    return traj.waypoints.empty() ? sum : sum / static_cast<double>(traj.waypoints.size());
}

inline double arc_length(const Trajectory& traj) {
    double len = 0.0;
    for (std::size_t i = 1; i < traj.waypoints.size(); ++i)
        len += distance(traj.waypoints[i - 1].pos, traj.waypoints[i].pos);
    return len;
}

enum class Axis { X, Y, Z };

inline Vec3 axis_vector(Axis axis) {
    switch (axis) {
    case Axis::X: return {1, 0, 0};
    case Axis::Y: return {0, 1, 0};
    case Axis::Z: return {0, 0, 1};
    }
    return {0, 1, 0};
}

inline Trajectory translate_traj(Trajectory traj, const Vec3& delta) {
    for (auto& w : traj.waypoints) w.pos += delta;
    return traj;
}

/// Rotates about the waypoint centroid around a world axis (X right, Y up, Z out).
inline Trajectory rotate_traj(Trajectory traj, Axis axis, double angle) {
    if (angle == 0.0) return traj;
    Vec3 c = centroid(traj);
    Mat3 r = to_matrix(Quat::from_axis_angle(axis_vector(axis), angle));
    for (auto& w : traj.waypoints) w.pos = c + r * (w.pos - c);
    return traj;
}

inline Trajectory zoom_traj(Trajectory traj, double factor) {
    if (!(factor > 0) || !std::isfinite(factor))
        throw Error(ErrorCode::NonPositiveFactor, "zoom factor must be positive");
    if (factor == 1.0) return traj;
    Vec3 c = centroid(traj);
    for (auto& w : traj.waypoints) w.pos = c + factor * (w.pos - c);
    return traj;
}

struct ReplayCursor {
    std::string trajectory_id;
    double start_time = 0.0;
    double speed = 1.0;
    std::size_t window = kReplayWindow;
};

inline void validate(const ReplayCursor& cursor) {
    if (!(cursor.speed > 0) || !std::isfinite(cursor.speed))
        throw Error(ErrorCode::InvalidArgument, "replay speed must be positive");
    if (cursor.window < 1) throw Error(ErrorCode::InvalidArgument, "replay window must be at least 1");
}

/// Half-open waypoint index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool empty() const { return end == begin; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct ReplayFrame {
    Vec3 pos;
    IndexRange visible;
    bool finished = false;

    friend bool operator==(const ReplayFrame&, const ReplayFrame&) = default;
};

/// Cursor position at session time `clock`. Local time runs at `speed` times
/// the drawing speed; the visible window holds the next `window` waypoints
/// strictly ahead of the cursor.
inline ReplayFrame replay_eval(const ReplayCursor& cursor, const Trajectory& traj, double clock) {
    const auto& wps = traj.waypoints;
    if (wps.empty()) return {{}, {}, true};
    const double t0 = wps.front().time;
    const double duration = traj.duration();
    const double u = std::max(0.0, (clock - cursor.start_time) * cursor.speed);

    ReplayFrame frame;
    frame.finished = u >= duration;
    if (frame.finished) {
        frame.pos = wps.back().pos;
        frame.visible = {wps.size(), wps.size()};
        return frame;
    }

    // First waypoint whose local time is strictly greater than u.
    auto ahead = std::upper_bound(wps.begin(), wps.end(), u,
                                  [t0](double value, const Waypoint& w) { return value < w.time - t0; });
    std::size_t next = static_cast<std::size_t>(ahead - wps.begin());
    const auto& a = wps[next - 1];
    const auto& b = wps[next];
    double span = b.time - a.time;
    double s = span > 0 ? (u - (a.time - t0)) / span : 0.0;
    frame.pos = s == 0.0 ? a.pos : lerp(a.pos, b.pos, s);
    frame.visible = {next, std::min(wps.size(), next + cursor.window)};
    return frame;
}

/// Session time at which a cursor reaches the end of its trajectory.
inline double replay_end_time(const ReplayCursor& cursor, const Trajectory& traj) {
    return cursor.start_time + traj.duration() / cursor.speed;
}

struct LayeredFrame {
    std::size_t cursor_index = 0;
    std::string trajectory_id;
    ReplayFrame frame;
};

inline const Trajectory* find_trajectory(std::span<const Trajectory> trajectories, const std::string& id) {
    for (const auto& t : trajectories)
        if (t.id == id) return &t;
    return nullptr;
}

/// Evaluates every cursor active at `clock` (started, and not past its end)
/// independently of the others.
inline std::vector<LayeredFrame> layered_frames(std::span<const ReplayCursor> cursors,
                                                std::span<const Trajectory> trajectories, double clock) {
    std::vector<LayeredFrame> out;
    for (std::size_t i = 0; i < cursors.size(); ++i) {
        const auto& c = cursors[i];
        const Trajectory* traj = find_trajectory(trajectories, c.trajectory_id);
        if (!traj) throw Error(ErrorCode::UnknownId, "no trajectory '" + c.trajectory_id + "'");
        if (clock < c.start_time) continue;
        if ((clock - c.start_time) * c.speed > traj->duration()) continue;
        out.push_back({i, c.trajectory_id, replay_eval(c, *traj, clock)});
    }
    return out;
}

struct ScheduleTick {
    double clock = 0.0;
    std::vector<LayeredFrame> frames;
};

/// Layered replay on ticks clock = t_begin + k·dt for every k with clock <= t_end.
inline std::vector<ScheduleTick> layered_schedule(std::span<const ReplayCursor> cursors,
                                                  std::span<const Trajectory> trajectories, double t_begin,
                                                  double t_end, double dt) {
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "tick must be positive");
    for (const auto& c : cursors) validate(c);
    std::vector<ScheduleTick> ticks;
    for (std::size_t k = 0;; ++k) {
        double clock = t_begin + static_cast<double>(k) * dt;
        if (clock > t_end + 1e-12) break;
        ticks.push_back({clock, layered_frames(cursors, trajectories, clock)});
    }
    return ticks;
}

} // namespace jigsketch
