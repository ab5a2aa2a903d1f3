#pragma once

// Takes record solved bone poses of the bones a set of bindings moves.
// A timeline stacks takes at start offsets; later takes override earlier
// ones on their bones, but only while they are active. Outside every active
// interval a bone holds the last value of the first take that recorded it.

#include <jigsketch/error.hpp>
#include <jigsketch/geom.hpp>
#include <jigsketch/jig.hpp>
#include <jigsketch/rig.hpp>
#include <jigsketch/stream.hpp>
#include <jigsketch/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace jigsketch {

enum class ChannelProperty { Position, Orientation };

inline std::string_view to_string(ChannelProperty p) {
    return p == ChannelProperty::Position ? "position" : "orientation";
}

struct Channel {
    std::string bone;
    ChannelProperty property = ChannelProperty::Position;
    std::vector<double> times;
    std::vector<Vec3> positions;     ///< filled for Position channels
    std::vector<Quat> orientations;  ///< filled for Orientation channels

    std::size_t size() const { return times.size(); }

    friend bool operator==(const Channel&, const Channel&) = default;
};

struct Take {
    std::string id;
    std::vector<Channel> channels;
    std::vector<std::string> bound_bones;  ///< sorted
    double duration = 0.0;
    double sample_period = kDefaultTakePeriod;

    static constexpr double kDefaultTakePeriod = 1.0 / 60.0;

    bool binds(const std::string& bone) const {
        return std::binary_search(bound_bones.begin(), bound_bones.end(), bone);
    }

    const Channel* channel(const std::string& bone, ChannelProperty property) const {
        for (const auto& c : channels)
            if (c.bone == bone && c.property == property) return &c;
        return nullptr;
    }

    friend bool operator==(const Take&, const Take&) = default;
};

inline void validate(const Take& take) {
    if (!std::is_sorted(take.bound_bones.begin(), take.bound_bones.end()))
        throw Error(ErrorCode::InvalidArgument, "take bound_bones must be sorted");
    double max_time = 0.0;
    for (const auto& c : take.channels) {
        if (!take.binds(c.bone))
            throw Error(ErrorCode::InvalidArgument, "channel bone '" + c.bone + "' is not bound in take");
        std::size_t values = c.property == ChannelProperty::Position ? c.positions.size() : c.orientations.size();
        if (values != c.times.size() || c.times.empty())
            throw Error(ErrorCode::InvalidArgument, "channel '" + c.bone + "' has mismatched keys");
        for (std::size_t i = 1; i < c.times.size(); ++i)
            if (!(c.times[i] > c.times[i - 1]))
                throw Error(ErrorCode::InvalidArgument, "channel '" + c.bone + "' times must strictly increase");
        max_time = std::max(max_time, c.times.back());
    }
    if (std::abs(max_time - take.duration) > 1e-9)
        throw Error(ErrorCode::InvalidArgument, "take duration must equal its last key time");
}

/// Samples solved poses into position and orientation channels for the
/// bones a set of bindings influences.
class TakeRecorder {
public:
    explicit TakeRecorder(double sample_period = Take::kDefaultTakePeriod) : period_(sample_period) {
        if (!(period_ > 0)) throw Error(ErrorCode::InvalidArgument, "take sample period must be positive");
    }

    void begin(const Armature& arm, const std::vector<std::string>& bound, double clock, std::string id = {}) {
        if (bound.empty()) throw Error(ErrorCode::NoBindings, "bind a device before recording a take");
        std::vector<std::size_t> driven;
        for (const auto& name : bound) driven.push_back(arm.index_of(name));
        bones_ = influenced_bones(arm, driven);

        take_ = Take{std::move(id), {}, {}, 0.0, period_};
        for (std::size_t b : bones_) {
            take_.bound_bones.push_back(arm.bones[b].name);
            take_.channels.push_back({arm.bones[b].name, ChannelProperty::Position, {}, {}, {}});
            take_.channels.push_back({arm.bones[b].name, ChannelProperty::Orientation, {}, {}, {}});
        }
        std::sort(take_.bound_bones.begin(), take_.bound_bones.end());
        start_ = clock;
        next_key_ = 0;
        active_ = true;
    }

    /// Records one key if `clock` has reached the next grid time.
    void sample(double clock, const PoseState& pose) {
        if (!active_) throw Error(ErrorCode::BadMode, "take recorder is not active");
        double key_time = static_cast<double>(next_key_) * period_;
        if (clock - start_ < key_time - 1e-9) return;
        for (std::size_t i = 0; i < bones_.size(); ++i) {
            const Pose& p = pose.local[bones_[i]];
            auto& pos = take_.channels[2 * i];
            auto& rot = take_.channels[2 * i + 1];
            pos.times.push_back(key_time);
            pos.positions.push_back(p.position);
            rot.times.push_back(key_time);
            rot.orientations.push_back(p.orientation);
        }
        take_.duration = key_time;
        ++next_key_;
    }

    Take end() {
        if (!active_) throw Error(ErrorCode::BadMode, "take recorder is not active");
        active_ = false;
        if (next_key_ == 0) throw Error(ErrorCode::TooShort, "take recorded no keys");
        return std::move(take_);
    }

    bool active() const { return active_; }
    std::size_t keys() const { return next_key_; }

private:
    double period_;
    double start_ = 0.0;
    std::size_t next_key_ = 0;
    std::vector<std::size_t> bones_;
    Take take_;
    bool active_ = false;
};

/// A jig attached to one device (or two, for a band).
struct JigAssignment {
    std::vector<std::string> devices;
    JigConfig config;
    JigState state;
};

/// Replaces raw device poses by their jig-filtered versions. Jigs whose
/// devices have not reported yet are skipped.
inline void filter_through_jigs(std::vector<JigAssignment>& jigs, std::map<std::string, Pose>& poses, double dt) {
    for (auto& jig : jigs) {
        std::vector<Pose> inputs;
        for (const auto& d : jig.devices) {
            auto it = poses.find(d);
            if (it == poses.end()) break;
            inputs.push_back(it->second);
        }
        if (inputs.size() != jig.devices.size()) continue;
        auto step = jig_step(jig.config, jig.state, inputs, dt);
        jig.state = step.state;
        for (std::size_t i = 0; i < jig.devices.size(); ++i) poses[jig.devices[i]] = step.outputs[i];
    }
}

struct BindingSpec {
    std::string device;
    std::string bone;
    BindMode mode = BindMode::LocationOnly;
};

/// Offline take recording: ticks at k·dt from 0 until the last sample,
/// feeding the latest (jig-filtered) pose of each device to the rig.
inline Take record_take(const Armature& arm, const std::vector<BindingSpec>& bindings,
                        const std::vector<StreamSample>& stream, std::vector<JigAssignment> jigs, double dt,
                        std::string id = "take", std::size_t max_devices = 2) {
    if (bindings.empty()) throw Error(ErrorCode::NoBindings, "record_take needs at least one binding");
    RigSession rig(arm, std::max(max_devices, bindings.size()));
    std::vector<std::string> bound;
    for (const auto& b : bindings) {
        rig.bind_device(b.device, b.bone, b.mode);
        bound.push_back(b.bone);
    }
    auto sorted = sorted_by_time(stream);
    TickSampler sampler(sorted);
    TakeRecorder recorder(dt);
    recorder.begin(arm, bound, 0.0, std::move(id));
    const double end = last_sample_time(sorted);
    for (std::size_t k = 0;; ++k) {
        double clock = static_cast<double>(k) * dt;
        if (clock > end + kTickSlack) break;
        sampler.advance(clock);
        auto poses = sampler.latest();
        filter_through_jigs(jigs, poses, dt);
        recorder.sample(clock, rig.apply_input(poses));
    }
    return recorder.end();
}

/// Offline trajectory recording of one device, on the same tick grid as
/// record_take.
inline Trajectory record_trajectory(const std::vector<StreamSample>& stream, const std::string& device,
                                    std::vector<JigAssignment> jigs, double dt,
                                    double sample_period = kDefaultSamplePeriod, std::string id = "traj") {
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "tick must be positive");
    auto sorted = sorted_by_time(stream);
    TickSampler sampler(sorted);
    TrajectoryRecorder recorder(sample_period);
    recorder.begin(0.0, std::move(id));
    const double end = last_sample_time(sorted);
    double clock = 0.0;
    for (std::size_t k = 0;; ++k) {
        double next = static_cast<double>(k) * dt;
        if (next > end + kTickSlack) break;
        clock = next;
        sampler.advance(clock);
        auto poses = sampler.latest();
        filter_through_jigs(jigs, poses, dt);
        if (auto it = poses.find(device); it != poses.end()) recorder.sample(it->second.position, clock);
    }
    return recorder.end(clock);
}

/// Runs a stream through jigs tick by tick and returns, per tick, the
/// filtered pose of every device that has reported so far.
inline std::vector<StreamSample> filter_stream(const std::vector<StreamSample>& stream, std::vector<JigAssignment> jigs,
                                               double dt) {
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "tick must be positive");
    auto sorted = sorted_by_time(stream);
    TickSampler sampler(sorted);
    const double end = last_sample_time(sorted);
    std::vector<StreamSample> out;
    for (std::size_t k = 0;; ++k) {
        double clock = static_cast<double>(k) * dt;
        if (clock > end + kTickSlack) break;
        sampler.advance(clock);
        auto poses = sampler.latest();
        filter_through_jigs(jigs, poses, dt);
        for (const auto& [device, pose] : poses) out.push_back({clock, device, pose.position, pose.orientation});
    }
    return out;
}

struct TimelineEntry {
    Take take;
    double offset = 0.0;

    double end() const { return offset + take.duration; }
    bool active_at(double t) const { return t >= offset && t <= end(); }

    friend bool operator==(const TimelineEntry&, const TimelineEntry&) = default;
};

struct Timeline {
    std::vector<TimelineEntry> entries;

    bool empty() const { return entries.empty(); }
    double duration() const {
        double d = 0.0;
        for (const auto& e : entries) d = std::max(d, e.end());
        return d;
    }

    friend bool operator==(const Timeline&, const Timeline&) = default;
};

inline Timeline layer_takes(Timeline timeline, Take take, double offset) {
    if (!(offset >= 0) || !std::isfinite(offset))
        throw Error(ErrorCode::InvalidArgument, "take offset must be non-negative");
    timeline.entries.push_back({std::move(take), offset});
    return timeline;
}

namespace detail {

/// Channel value at take-local time tau, clamped to the first/last key.
/// Key times (within 1e-9 s) return the stored value exactly.
template <class T>
T sample_channel(const std::vector<double>& times, const std::vector<T>& values, double tau) {
    if (tau <= times.front() + 1e-9) return values.front();
    if (tau >= times.back() - 1e-9) return values.back();
    auto it = std::upper_bound(times.begin(), times.end(), tau);
    std::size_t hi = static_cast<std::size_t>(it - times.begin());
    std::size_t lo = hi - 1;
    if (tau - times[lo] <= 1e-9) return values[lo];
    if (times[hi] - tau <= 1e-9) return values[hi];
    double u = (tau - times[lo]) / (times[hi] - times[lo]);
    if constexpr (std::is_same_v<T, Vec3>)
        return lerp(values[lo], values[hi], u);
    else
        return slerp(values[lo], values[hi], u);
}

inline const TimelineEntry* pick_entry(const Timeline& tl, const std::string& bone, ChannelProperty prop, double t) {
    for (auto it = tl.entries.rbegin(); it != tl.entries.rend(); ++it)
        if (it->active_at(t) && it->take.channel(bone, prop)) return &*it;
    for (const auto& e : tl.entries)
        if (e.take.channel(bone, prop)) return t >= e.offset ? &e : nullptr;
    return nullptr;
}

} // namespace detail

inline PoseState sample_timeline(const Timeline& timeline, const Armature& arm, double t) {
    PoseState pose = rest_pose(arm);
    for (std::size_t i = 0; i < arm.bones.size(); ++i) {
        const auto& name = arm.bones[i].name;
        if (const auto* e = detail::pick_entry(timeline, name, ChannelProperty::Position, t)) {
            const auto* c = e->take.channel(name, ChannelProperty::Position);
            pose.local[i].position = detail::sample_channel(c->times, c->positions, t - e->offset);
        }
        if (const auto* e = detail::pick_entry(timeline, name, ChannelProperty::Orientation, t)) {
            const auto* c = e->take.channel(name, ChannelProperty::Orientation);
            pose.local[i].orientation = detail::sample_channel(c->times, c->orientations, t - e->offset);
        }
    }
    return pose;
}

} // namespace jigsketch
