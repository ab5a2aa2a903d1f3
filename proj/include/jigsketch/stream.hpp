#pragma once

#include <jigsketch/geom.hpp>

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace jigsketch {

/// One 6-DOF reading from a tracked device.
struct StreamSample {
    double t = 0.0;
    std::string device;
    Vec3 pos;
    Quat quat;

    Pose pose() const { return {pos, quat}; }

    friend bool operator==(const StreamSample&, const StreamSample&) = default;
};

/// Samples within this much of a tick's clock belong to that tick.
inline constexpr double kTickSlack = 1e-6;

/// Stable time order; per-device order is preserved for equal timestamps.
inline std::vector<StreamSample> sorted_by_time(std::vector<StreamSample> samples) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const StreamSample& a, const StreamSample& b) { return a.t < b.t; });
    return samples;
}

/// Walks a time-sorted stream tick by tick, holding the latest pose per device.
class TickSampler {
public:
    explicit TickSampler(std::span<const StreamSample> sorted) : samples_(sorted) {}

    /// Consumes every sample with t <= clock (+ slack); returns true when
    /// anything new arrived.
    bool advance(double clock) {
        bool any = false;
        while (next_ < samples_.size() && samples_[next_].t <= clock + kTickSlack) {
            latest_[samples_[next_].device] = samples_[next_].pose();
            ++next_;
            any = true;
        }
        return any;
    }

    const std::map<std::string, Pose>& latest() const { return latest_; }
    bool exhausted() const { return next_ >= samples_.size(); }

private:
    std::span<const StreamSample> samples_;
    std::size_t next_ = 0;
    std::map<std::string, Pose> latest_;
};

/// Maps every sample from tracker space into the scene with a similarity
/// transform; orientations pick up its rotation.
inline std::vector<StreamSample> calibrate_stream(std::vector<StreamSample> samples, const SimilarityTransform& map) {
    const Quat r = from_matrix(map.rotation);
    for (auto& s : samples) {
        s.pos = apply_similarity(map, s.pos);
        s.quat = normalized(r * s.quat);
    }
    return samples;
}

inline double last_sample_time(std::span<const StreamSample> samples) {
    double t = 0.0;
    for (const auto& s : samples) t = std::max(t, s.t);
    return t;
}

} // namespace jigsketch
