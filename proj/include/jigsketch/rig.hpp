#pragma once

// Armatures, forward kinematics, IK and the constraint stack that lets a
// handful of tracked devices drive a rigged character.
//
// Bones point along their local +Y axis (head -> tail). Control bones are
// unparented handles; IK chains, copy-location and keep-offset parenting make
// the rest of the skeleton follow them.

#include <jigsketch/error.hpp>
#include <jigsketch/geom.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace jigsketch {

struct Bone {
    std::string name;
    std::optional<std::size_t> parent;
    Pose rest_local;
    double length = 0.1;
};

/// Where a constraint reads a point from: a bone's head or tail in the
/// current solve, or an external point supplied by a binding.
struct PointRef {
    enum class Kind { BoneHead, BoneTail, External };
    Kind kind = Kind::BoneHead;
    std::string name;

    static PointRef head(std::string n) { return {Kind::BoneHead, std::move(n)}; }
    static PointRef tail(std::string n) { return {Kind::BoneTail, std::move(n)}; }
    static PointRef external(std::string n) { return {Kind::External, std::move(n)}; }

    friend bool operator==(const PointRef&, const PointRef&) = default;
};

struct IkChain {
    std::string tip;
    std::size_t chain_length = 2;
    PointRef target;
    std::optional<PointRef> pole;
    int iterations = 50;
    double tolerance = 1e-4;
};

struct CopyLocation {
    std::string bone;
    PointRef source;
    Vec3 offset;
};

/// Parent-with-offset (Blender's Ctrl-P keep offset): the bone's world pose
/// stays at source_world ∘ offset.
struct KeepOffsetParent {
    std::string bone;
    std::string source;
    Pose offset;
};

using Constraint = std::variant<IkChain, CopyLocation, KeepOffsetParent>;

struct Armature {
    std::vector<Bone> bones;
    std::vector<Constraint> constraints;

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < bones.size(); ++i)
            if (bones[i].name == name) return i;
        return std::nullopt;
    }

    std::size_t index_of(const std::string& name) const {
        auto i = find(name);
        if (!i) throw Error(ErrorCode::UnknownBone, "no bone named '" + name + "'");
        return *i;
    }

    /// Number of bones from the root down to and including `i`.
    std::size_t depth(std::size_t i) const {
        std::size_t d = 1;
        for (auto p = bones[i].parent; p; p = bones[*p].parent) ++d;
        return d;
    }

    bool is_ancestor(std::size_t ancestor, std::size_t bone) const {
        for (auto p = bones[bone].parent; p; p = bones[*p].parent)
            if (*p == ancestor) return true;
        return false;
    }
};

inline void validate(const PointRef& ref, const Armature& arm) {
    if (ref.kind != PointRef::Kind::External) arm.index_of(ref.name);
}

inline void validate(const Armature& arm) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < arm.bones.size(); ++i) {
        const auto& b = arm.bones[i];
        if (b.name.empty()) throw Error(ErrorCode::InvalidArgument, "bone " + std::to_string(i) + " has no name");
        if (!names.insert(b.name).second) throw Error(ErrorCode::InvalidArgument, "duplicate bone name '" + b.name + "'");
        if (b.parent && *b.parent >= i)
            throw Error(ErrorCode::InvalidArgument, "bone '" + b.name + "' must come after its parent");
        if (!(b.length > 0) || !std::isfinite(b.length))
            throw Error(ErrorCode::InvalidArgument, "bone '" + b.name + "' needs a positive length");
        if (!is_finite(b.rest_local.position) || !is_finite(b.rest_local.orientation))
            throw Error(ErrorCode::InvalidArgument, "bone '" + b.name + "' has a non-finite rest pose");
    }
    for (const auto& c : arm.constraints) {
        std::visit(
            [&](const auto& con) {
                using T = std::decay_t<decltype(con)>;
                if constexpr (std::is_same_v<T, IkChain>) {
                    std::size_t tip = arm.index_of(con.tip);
                    if (con.chain_length < 1 || con.chain_length > arm.depth(tip))
                        throw Error(ErrorCode::InvalidArgument, "IK chain on '" + con.tip + "' is longer than the hierarchy");
                    if (!(con.tolerance > 0)) throw Error(ErrorCode::InvalidArgument, "IK tolerance must be positive");
                    if (con.iterations < 1) throw Error(ErrorCode::InvalidArgument, "IK needs at least one iteration");
                    validate(con.target, arm);
                    if (con.pole) validate(*con.pole, arm);
                } else if constexpr (std::is_same_v<T, CopyLocation>) {
                    arm.index_of(con.bone);
                    validate(con.source, arm);
                } else {
                    arm.index_of(con.bone);
                    arm.index_of(con.source);
                }
            },
            c);
    }
}

/// Per-bone local poses; defaults to the rest pose.
struct PoseState {
    std::vector<Pose> local;

    friend bool operator==(const PoseState&, const PoseState&) = default;
};

inline PoseState rest_pose(const Armature& arm) {
    PoseState p;
    p.local.reserve(arm.bones.size());
    for (const auto& b : arm.bones) p.local.push_back(b.rest_local);
    return p;
}

/// World head pose of every bone.
inline std::vector<Pose> fk_world(const Armature& arm, const PoseState& pose) {
    std::vector<Pose> world(arm.bones.size());
    for (std::size_t i = 0; i < arm.bones.size(); ++i) {
        const auto& b = arm.bones[i];
        world[i] = b.parent ? world[*b.parent] * pose.local[i] : pose.local[i];
    }
    return world;
}

inline Vec3 bone_tail(const Pose& head_world, double length) { return head_world.apply({0, length, 0}); }

/// Keep-offset parenting captured in the rest pose.
inline KeepOffsetParent keep_offset_at_rest(const Armature& arm, const std::string& bone, const std::string& source) {
    auto world = fk_world(arm, rest_pose(arm));
    return {bone, source, inverse(world[arm.index_of(source)]) * world[arm.index_of(bone)]};
}

// ---------------------------------------------------------------------------
// Solvers

struct TwoBoneSolution {
    Vec3 mid;
    Vec3 end;
    Quat upper;  ///< world orientation of the first bone (+Y toward mid)
    Quat lower;  ///< world orientation of the second bone (+Y toward end)
    bool reached = false;
};

/// Analytic law-of-cosines solve. The bend plane is spanned by root->target
/// and root->pole (or `bend_hint` / the root's +Z axis when no pole is given).
/// Out-of-range targets clamp: a straight chain toward the target, or a fully
/// folded one when the target is closer than |l1 - l2|.
inline TwoBoneSolution solve_ik_two_bone(const Pose& root_world, double l1, double l2, const Vec3& target,
                                         const std::optional<Vec3>& pole = std::nullopt,
                                         const std::optional<Vec3>& bend_hint = std::nullopt) {
    if (!(l1 > 0) || !(l2 > 0)) throw Error(ErrorCode::InvalidArgument, "bone lengths must be positive");
    const Vec3 root = root_world.position;
    const Vec3 rest_dir = rotate(root_world.orientation, {0, 1, 0});
    const Vec3 to_target = target - root;
    double d = norm(to_target);
    const Vec3 dir = normalized_or(to_target, rest_dir);

    Vec3 bend_src = pole ? *pole - root : bend_hint ? *bend_hint - root : rotate(root_world.orientation, {0, 0, 1});
    Vec3 bend = bend_src - dir * dot(bend_src, dir);
    if (norm(bend) < 1e-12) {
        bend = rotate(root_world.orientation, {0, 0, 1});
        bend = bend - dir * dot(bend, dir);
    }
    bend = normalized_or(bend, any_perpendicular(dir));

    TwoBoneSolution out;
    const double reach = l1 + l2;
    const double inner = std::abs(l1 - l2);
    out.reached = d <= reach && d >= inner;
    d = std::clamp(d, inner, reach);

    double cos_root = (l1 * l1 + d * d - l2 * l2) / (2.0 * l1 * d);
    if (!std::isfinite(cos_root)) cos_root = 1.0;
    cos_root = std::clamp(cos_root, -1.0, 1.0);
    double sin_root = std::sqrt(std::max(0.0, 1.0 - cos_root * cos_root));
    out.mid = root + dir * (l1 * cos_root) + bend * (l1 * sin_root);
    out.end = out.reached ? target : root + dir * d;

    Quat upper_swing = rotation_between(rest_dir, out.mid - root);
    out.upper = normalized(upper_swing * root_world.orientation);
    Quat lower_swing = rotation_between(rotate(out.upper, {0, 1, 0}), out.end - out.mid);
    out.lower = normalized(lower_swing * out.upper);
    return out;
}

struct FabrikResult {
    std::vector<Vec3> joints;
    int iterations = 0;
    double error = 0.0;
    bool reachable = true;
};

/// Rotates the interior joints about the root->end axis so the first bent
/// joint lies in the half-plane of the pole.
inline void align_to_pole(std::span<Vec3> joints, const Vec3& pole) {
    if (joints.size() < 3) return;
    const Vec3 root = joints.front();
    const Vec3 axis = normalized_or(joints.back() - root, {0, 0, 0});
    if (squared_norm(axis) == 0) return;

    auto perp = [&](const Vec3& p) {
        Vec3 v = p - root;
        return v - axis * dot(v, axis);
    };
    Vec3 want = perp(pole);
    if (norm(want) < 1e-12) return;
    Vec3 have;
    for (std::size_t i = 1; i + 1 < joints.size(); ++i) {
        Vec3 p = perp(joints[i]);
        if (norm(p) > 1e-12) {
            have = p;
            break;
        }
    }
    if (norm(have) < 1e-12) return;
    double angle = std::atan2(dot(cross(have, want), axis), dot(have, want));
    Mat3 r = to_matrix(Quat::from_axis_angle(axis, angle));
    for (std::size_t i = 1; i + 1 < joints.size(); ++i) joints[i] = root + r * (joints[i] - root);
}

/// Forward-and-backward reaching IK. `joints` holds n+1 positions for n
/// segments; the root stays pinned and segment lengths are preserved.
/// Two-segment chains take the analytic solve.
inline FabrikResult solve_ik_fabrik(std::span<const Vec3> joints, std::span<const double> lengths, const Vec3& target,
                                    const std::optional<Vec3>& pole, int iterations, double tolerance) {
    if (joints.size() < 2 || lengths.size() + 1 != joints.size())
        throw Error(ErrorCode::InvalidArgument, "FABRIK needs n+1 joints for n lengths");
    if (iterations < 1 || !(tolerance > 0))
        throw Error(ErrorCode::InvalidArgument, "FABRIK needs iterations >= 1 and tolerance > 0");

    FabrikResult out;
    out.joints.assign(joints.begin(), joints.end());
    auto& p = out.joints;
    const std::size_t n = lengths.size();
    const Vec3 root = p[0];
    double total = 0.0;
    for (double l : lengths) total += l;

    auto toward = [](const Vec3& from, const Vec3& to, const Vec3& fallback) {
        return normalized_or(to - from, fallback);
    };

    if (distance(root, target) > total) {
        out.reachable = false;
        Vec3 dir = toward(root, target, {0, 1, 0});
        for (std::size_t i = 0; i < n; ++i) p[i + 1] = p[i] + dir * lengths[i];
        out.error = distance(p[n], target);
        return out;
    }

    out.error = distance(p[n], target);
    if (out.error <= tolerance) return out;

    if (n == 2 && lengths[0] > 0 && lengths[1] > 0) {
        auto two = solve_ik_two_bone({root, Quat::identity()}, lengths[0], lengths[1], target, pole, p[1]);
        p[1] = two.mid;
        p[2] = two.end;
        out.error = distance(p[n], target);
        return out;
    }

    // Swing the whole chain rigidly about the root so its end points at the
    // target; this removes most of the slow unfolding from tangled starts.
    if (norm(p[n] - root) > 1e-9 && norm(target - root) > 1e-9) {
        Quat turn = rotation_between(p[n] - root, target - root);
        for (std::size_t i = 1; i <= n; ++i) p[i] = root + rotate(turn, p[i] - root);
    }
    while (out.error > tolerance && out.iterations < iterations) {
        p[n] = target;
        for (std::size_t i = n; i-- > 0;) {
            Vec3 fallback = i > 0 ? toward(p[i - 1], p[i + 1], {0, 1, 0}) : toward(root, p[i + 1], {0, 1, 0});
            p[i] = p[i + 1] + toward(p[i + 1], p[i], -fallback) * lengths[i];
        }
        p[0] = root;
        for (std::size_t i = 0; i < n; ++i) p[i + 1] = p[i] + toward(p[i], p[i + 1], {0, 1, 0}) * lengths[i];
        ++out.iterations;
        out.error = distance(p[n], target);
    }
    if (pole) align_to_pole(p, *pole);
    out.error = distance(p[n], target);
    return out;
}

// ---------------------------------------------------------------------------
// Constraint stack

/// A point delivered by a binding. Names matching a bone drive that bone
/// directly; every entry is also readable as PointRef::external(name).
struct DriveTarget {
    Pose pose;
    bool with_orientation = false;
};

using Externals = std::map<std::string, DriveTarget>;

namespace detail {

/// Sets bone i's world pose by rewriting its local pose against the parent.
inline void set_world(const Armature& arm, PoseState& pose, const std::vector<Pose>& world, std::size_t i,
                      const Pose& target) {
    const auto& b = arm.bones[i];
    pose.local[i] = b.parent ? inverse(world[*b.parent]) * target : target;
    pose.local[i].orientation = normalized(pose.local[i].orientation);
}

inline Vec3 resolve(const PointRef& ref, const Armature& arm, const std::vector<Pose>& world, const Externals& ext) {
    switch (ref.kind) {
    case PointRef::Kind::BoneHead: return world[arm.index_of(ref.name)].position;
    case PointRef::Kind::BoneTail: {
        std::size_t i = arm.index_of(ref.name);
        return bone_tail(world[i], arm.bones[i].length);
    }
    case PointRef::Kind::External: {
        auto it = ext.find(ref.name);
        if (it == ext.end())
            throw Error(ErrorCode::MissingExternal, "'" + ref.name + "' has no bound device; bind one first");
        return it->second.pose.position;
    }
    }
    return {};
}

inline std::vector<std::size_t> chain_bones(const Armature& arm, const IkChain& ik) {
    std::vector<std::size_t> chain;
    std::optional<std::size_t> b = arm.index_of(ik.tip);
    for (std::size_t k = 0; k < ik.chain_length && b; ++k) {
        chain.push_back(*b);
        b = arm.bones[*b].parent;
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
}

inline void apply_ik(const Armature& arm, PoseState& pose, std::vector<Pose>& world, const IkChain& ik,
                     const Externals& ext) {
    auto chain = chain_bones(arm, ik);
    const std::size_t n = chain.size();
    std::vector<Vec3> joints;
    joints.reserve(n + 1);
    for (std::size_t b : chain) joints.push_back(world[b].position);
    joints.push_back(bone_tail(world[chain.back()], arm.bones[chain.back()].length));
    std::vector<double> lengths;
    for (std::size_t j = 0; j < n; ++j) lengths.push_back(distance(joints[j], joints[j + 1]));

    const Vec3 target = resolve(ik.target, arm, world, ext);
    std::optional<Vec3> pole;
    if (ik.pole) pole = resolve(*ik.pole, arm, world, ext);

    std::vector<Vec3> solved;
    if (n == 2 && lengths[0] > 0 && lengths[1] > 0) {
        auto two = solve_ik_two_bone(world[chain[0]], lengths[0], lengths[1], target, pole, joints[1]);
        solved = {joints[0], two.mid, two.end};
    } else {
        solved = solve_ik_fabrik(joints, lengths, target, pole, ik.iterations, ik.tolerance).joints;
    }

    // Swing each bone so its next joint lands on the solved position.
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t b = chain[j];
        Vec3 head = world[b].position;
        Vec3 next = j + 1 < n ? world[chain[j + 1]].position : bone_tail(world[b], arm.bones[b].length);
        Quat swing = rotation_between(next - head, solved[j + 1] - head);
        set_world(arm, pose, world, b, {head, normalized(swing * world[b].orientation)});
        world = fk_world(arm, pose);
    }
}

} // namespace detail

/// Drives bound bones from `externals`, then evaluates the armature's
/// constraints once each, in declaration order.
inline PoseState apply_constraints(const Armature& arm, PoseState pose, const Externals& externals) {
    if (pose.local.size() != arm.bones.size())
        throw Error(ErrorCode::InvalidArgument, "pose does not match armature");
    auto world = fk_world(arm, pose);

    for (std::size_t i = 0; i < arm.bones.size(); ++i) {
        auto it = externals.find(arm.bones[i].name);
        if (it == externals.end()) continue;
        Pose target{it->second.pose.position,
                    it->second.with_orientation ? it->second.pose.orientation : world[i].orientation};
        detail::set_world(arm, pose, world, i, target);
        world = fk_world(arm, pose);
    }

    for (const auto& c : arm.constraints) {
        if (const auto* ik = std::get_if<IkChain>(&c)) {
            detail::apply_ik(arm, pose, world, *ik, externals);
        } else if (const auto* copy = std::get_if<CopyLocation>(&c)) {
            std::size_t i = arm.index_of(copy->bone);
            Vec3 p = detail::resolve(copy->source, arm, world, externals) + copy->offset;
            detail::set_world(arm, pose, world, i, {p, world[i].orientation});
            world = fk_world(arm, pose);
        } else if (const auto* keep = std::get_if<KeepOffsetParent>(&c)) {
            std::size_t i = arm.index_of(keep->bone);
            detail::set_world(arm, pose, world, i, world[arm.index_of(keep->source)] * keep->offset);
            world = fk_world(arm, pose);
        }
    }
    return pose;
}

/// Bones whose local pose can change when `driven` bones move: the driven
/// bones plus, transitively, every bone written by a constraint that reads a
/// moving point.
inline std::vector<std::size_t> influenced_bones(const Armature& arm, const std::vector<std::size_t>& driven) {
    std::vector<bool> moving(arm.bones.size(), false);
    for (std::size_t b : driven) moving[b] = true;

    auto world_moves = [&](std::size_t b) {
        if (moving[b]) return true;
        for (auto p = arm.bones[b].parent; p; p = arm.bones[*p].parent)
            if (moving[*p]) return true;
        return false;
    };
    auto ref_moves = [&](const PointRef& r) {
        return r.kind == PointRef::Kind::External || world_moves(arm.index_of(r.name));
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& c : arm.constraints) {
            std::vector<std::size_t> writes;
            bool reads_moving = false;
            if (const auto* ik = std::get_if<IkChain>(&c)) {
                writes = detail::chain_bones(arm, *ik);
                reads_moving = ref_moves(ik->target) || (ik->pole && ref_moves(*ik->pole)) || world_moves(writes.front());
            } else if (const auto* copy = std::get_if<CopyLocation>(&c)) {
                writes = {arm.index_of(copy->bone)};
                reads_moving = ref_moves(copy->source) || world_moves(writes.front());
            } else if (const auto* keep = std::get_if<KeepOffsetParent>(&c)) {
                writes = {arm.index_of(keep->bone)};
                reads_moving = world_moves(arm.index_of(keep->source)) || world_moves(writes.front());
            }
            if (!reads_moving) continue;
            for (std::size_t w : writes)
                if (!moving[w]) moving[w] = changed = true;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < moving.size(); ++i)
        if (moving[i]) out.push_back(i);
    return out;
}

// ---------------------------------------------------------------------------
// Device bindings

enum class BindMode { LocationOnly, FullPose };

struct Binding {
    std::string device;
    std::string bone;
    BindMode mode = BindMode::LocationOnly;
    /// Captured from the first device sample seen after binding.
    std::optional<Pose> grab_offset;
};

/// Owns an armature's live pose and the device bindings that drive it.
class RigSession {
public:
    explicit RigSession(Armature armature, std::size_t max_devices = 2)
        : armature_(std::move(armature)), max_devices_(max_devices) {
        validate(armature_);
        pose_ = rest_pose(armature_);
        world_ = fk_world(armature_, pose_);
    }

    const Armature& armature() const { return armature_; }
    const PoseState& pose() const { return pose_; }
    const std::vector<Pose>& world() const { return world_; }
    const std::vector<Binding>& bindings() const { return bindings_; }

    /// Binds a device to a bone. The grab offset is captured against the
    /// bone's current world pose so binding never makes the bone jump.
    void bind_device(const std::string& device, const std::string& bone, BindMode mode = BindMode::LocationOnly) {
        std::size_t index = armature_.index_of(bone);
        for (const auto& b : bindings_)
            if (b.device == device) throw Error(ErrorCode::DeviceAlreadyBound, "device '" + device + "' is already bound");
        if (bindings_.size() >= max_devices_)
            throw Error(ErrorCode::InvalidArgument, "at most " + std::to_string(max_devices_) + " devices may be bound");
        Binding b{device, bone, mode, std::nullopt};
        if (auto it = last_samples_.find(device); it != last_samples_.end())
            b.grab_offset = capture(mode, it->second, world_[index]);
        bindings_.push_back(std::move(b));
        dirty_ = true;
    }

    void unbind_device(const std::string& device) {
        auto it = std::find_if(bindings_.begin(), bindings_.end(), [&](const Binding& b) { return b.device == device; });
        if (it == bindings_.end()) throw Error(ErrorCode::UnknownId, "device '" + device + "' is not bound");
        bindings_.erase(it);
        dirty_ = true;
    }

    void reset_pose() {
        pose_ = rest_pose(armature_);
        world_ = fk_world(armature_, pose_);
        dirty_ = true;
    }

    /// Constraint sources implied by the latest samples.
    Externals externals() const {
        Externals ext;
        for (const auto& b : bindings_) {
            auto it = last_samples_.find(b.device);
            if (it == last_samples_.end() || !b.grab_offset) continue;
            ext[b.bone] = {source_pose(b.mode, it->second, *b.grab_offset), b.mode == BindMode::FullPose};
        }
        return ext;
    }

    /// Feeds one sample per device and re-solves the rig.
    const PoseState& apply_input(const std::map<std::string, Pose>& samples) {
        for (const auto& [device, sample] : samples) {
            if (!is_finite(sample.position) || !is_finite(sample.orientation))
                throw Error(ErrorCode::NonFiniteInput, "device '" + device + "' sent a non-finite pose");
            auto [it, inserted] = last_samples_.try_emplace(device, sample);
            if (!inserted && !(it->second == sample)) {
                it->second = sample;
                dirty_ = true;
            }
            dirty_ = dirty_ || inserted;
        }
        for (auto& b : bindings_) {
            if (b.grab_offset) continue;
            if (auto it = last_samples_.find(b.device); it != last_samples_.end())
                b.grab_offset = capture(b.mode, it->second, world_[armature_.index_of(b.bone)]);
        }
        // Unchanged input leaves the solved pose exactly as it was; re-running
        // the iterative solver would only accumulate round-off.
        if (!dirty_) return pose_;
        dirty_ = false;
        pose_ = apply_constraints(armature_, std::move(pose_), externals());
        world_ = fk_world(armature_, pose_);
        return pose_;
    }

    static Pose capture(BindMode mode, const Pose& sample, const Pose& bone_world) {
        if (mode == BindMode::FullPose) return inverse(sample) * bone_world;
        return {bone_world.position - sample.position, Quat::identity()};
    }

    static Pose source_pose(BindMode mode, const Pose& sample, const Pose& grab) {
        if (mode == BindMode::FullPose) return sample * grab;
        return {sample.position + grab.position, sample.orientation};
    }

private:
    Armature armature_;
    std::size_t max_devices_;
    PoseState pose_;
    std::vector<Pose> world_;
    std::vector<Binding> bindings_;
    std::map<std::string, Pose> last_samples_;
    bool dirty_ = true;
};

inline std::string_view to_string(BindMode m) { return m == BindMode::FullPose ? "full_pose" : "location_only"; }

inline BindMode parse_bind_mode(std::string_view s) {
    if (s == "location_only") return BindMode::LocationOnly;
    if (s == "full_pose") return BindMode::FullPose;
    throw Error(ErrorCode::InvalidArgument, "unknown bind mode '" + std::string(s) + "'");
}

} // namespace jigsketch
