#pragma once

// Shipped armatures, one per rig archetype:
//   simple   - one bone, driven directly by a device
//   legs     - two IK legs with ankle controls and knee pole targets
//   complex  - an abstract creature whose two neck bones follow a head control
//   humanoid - full body, six control bones and four pole targets

#include <jigsketch/error.hpp>
#include <jigsketch/rig.hpp>

#include <array>
#include <numbers>
#include <string>
#include <string_view>

namespace jigsketch {

namespace detail {

class ArmatureBuilder {
public:
    ArmatureBuilder& bone(const std::string& name, const std::string& parent, Vec3 local_pos, Quat local_rot,
                          double length) {
        Bone b{name, std::nullopt, {local_pos, local_rot}, length};
        if (!parent.empty()) b.parent = arm_.index_of(parent);
        arm_.bones.push_back(std::move(b));
        return *this;
    }

    /// Unparented handle placed at a world position.
    ArmatureBuilder& control(const std::string& name, Vec3 world_pos, double length = 0.08) {
        return bone(name, "", world_pos, Quat::identity(), length);
    }

    Vec3 head(const std::string& name) const { return world()[arm_.index_of(name)].position; }
    Vec3 tail(const std::string& name) const {
        std::size_t i = arm_.index_of(name);
        return bone_tail(world()[i], arm_.bones[i].length);
    }

    ArmatureBuilder& constrain(Constraint c) {
        arm_.constraints.push_back(std::move(c));
        return *this;
    }

    /// Ctrl-P keep offset to a control, then copy-location back onto the chain.
    ArmatureBuilder& follow_rotation(const std::string& bone, const std::string& control, const std::string& chain_end) {
        constrain(keep_offset_at_rest(arm_, bone, control));
        return constrain(CopyLocation{bone, PointRef::tail(chain_end), {}});
    }

    Armature build() {
        validate(arm_);
        return std::move(arm_);
    }

private:
    std::vector<Pose> world() const { return fk_world(arm_, rest_pose(arm_)); }

    Armature arm_;
};

inline Quat rot_z(double a) { return Quat::from_axis_angle({0, 0, 1}, a); }
inline Quat rot_x(double a) { return Quat::from_axis_angle({1, 0, 0}, a); }

inline void add_leg(ArmatureBuilder& b, const std::string& side, double x, bool with_foot) {
    constexpr double pi = std::numbers::pi;
    b.bone("thigh_" + side, "hips", {x, 0, 0}, rot_z(pi), 0.45)
        .bone("shin_" + side, "thigh_" + side, {0, 0.45, 0}, rot_x(-0.05), 0.45);
    if (with_foot) b.bone("foot_" + side, "shin_" + side, {0, 0.45, 0}, rot_x(-pi / 2), 0.15);
}

} // namespace detail

inline constexpr std::array<std::string_view, 4> kPresetNames{"simple", "legs", "complex", "humanoid"};

inline Armature preset_simple() {
    detail::ArmatureBuilder b;
    b.bone("body", "", {0, 1.0, 0}, Quat::identity(), 0.2);
    return b.build();
}

inline Armature preset_legs() {
    detail::ArmatureBuilder b;
    b.bone("hips", "", {0, 0.95, 0}, Quat::identity(), 0.1);
    detail::add_leg(b, "L", 0.1, false);
    detail::add_leg(b, "R", -0.1, false);
    for (std::string side : {"L", "R"}) {
        Vec3 ankle = b.tail("shin_" + side);
        Vec3 knee = b.head("shin_" + side);
        b.control("ankle_" + side + ".ik", ankle);
        b.control("knee_" + side + ".pole", knee + Vec3{0, 0, 0.5});
    }
    for (std::string side : {"L", "R"})
        b.constrain(IkChain{"shin_" + side, 2, PointRef::head("ankle_" + side + ".ik"),
                            PointRef::head("knee_" + side + ".pole")});
    return b.build();
}

inline Armature preset_complex() {
    detail::ArmatureBuilder b;
    b.bone("base", "", {0, 0.4, 0}, Quat::identity(), 0.3)
        .bone("neck_lower", "base", {0, 0.3, 0}, detail::rot_z(0.25), 0.3)
        .bone("neck_upper", "neck_lower", {0, 0.3, 0}, detail::rot_z(-0.45), 0.3)
        .bone("head", "neck_upper", {0, 0.3, 0}, detail::rot_z(0.2), 0.15);
    b.control("ctrl_head", b.head("head"));
    b.constrain(IkChain{"neck_upper", 2, PointRef::head("ctrl_head"), std::nullopt});
    b.follow_rotation("head", "ctrl_head", "neck_upper");
    return b.build();
}

inline Armature preset_humanoid() {
    constexpr double pi = std::numbers::pi;
    detail::ArmatureBuilder b;
    b.bone("hips", "", {0, 1.0, 0}, Quat::identity(), 0.1)
        .bone("spine", "hips", {0, 0.1, 0}, Quat::identity(), 0.2)
        .bone("chest", "spine", {0, 0.2, 0}, Quat::identity(), 0.2)
        .bone("neck", "chest", {0, 0.2, 0}, detail::rot_x(0.05), 0.1)
        .bone("head", "neck", {0, 0.1, 0}, detail::rot_x(-0.05), 0.2);
    for (auto [side, sign] : {std::pair{std::string("L"), 1.0}, std::pair{std::string("R"), -1.0}}) {
        b.bone("upper_arm_" + side, "chest", {0.15 * sign, 0.18, 0}, detail::rot_z(-sign * pi / 2), 0.28)
            .bone("forearm_" + side, "upper_arm_" + side, {0, 0.28, 0}, detail::rot_x(0.05), 0.25)
            .bone("hand_" + side, "forearm_" + side, {0, 0.25, 0}, Quat::identity(), 0.08);
    }
    detail::add_leg(b, "L", 0.1, true);
    detail::add_leg(b, "R", -0.1, true);

    b.control("ctrl_hips", b.head("hips"));
    b.control("ctrl_head", b.head("head"));
    for (std::string side : {"L", "R"}) {
        b.control("ctrl_hand_" + side, b.head("hand_" + side));
        b.control("ctrl_foot_" + side, b.head("foot_" + side));
        b.control("elbow_" + side + ".pole", b.head("forearm_" + side) + Vec3{0, 0, -0.4});
        b.control("knee_" + side + ".pole", b.head("shin_" + side) + Vec3{0, 0, 0.5});
    }

    b.constrain(CopyLocation{"hips", PointRef::head("ctrl_hips"), {}});
    b.constrain(IkChain{"neck", 2, PointRef::head("ctrl_head"), std::nullopt});
    b.follow_rotation("head", "ctrl_head", "neck");
    for (std::string side : {"L", "R"}) {
        b.constrain(IkChain{"forearm_" + side, 2, PointRef::head("ctrl_hand_" + side),
                            PointRef::head("elbow_" + side + ".pole")});
        b.follow_rotation("hand_" + side, "ctrl_hand_" + side, "forearm_" + side);
        b.constrain(IkChain{"shin_" + side, 2, PointRef::head("ctrl_foot_" + side),
                            PointRef::head("knee_" + side + ".pole")});
        b.follow_rotation("foot_" + side, "ctrl_foot_" + side, "shin_" + side);
    }
    return b.build();
}

inline Armature preset_armature(std::string_view name) {
    if (name == "simple") return preset_simple();
    if (name == "legs") return preset_legs();
    if (name == "complex") return preset_complex();
    if (name == "humanoid") return preset_humanoid();
    throw Error(ErrorCode::UnknownId, "no armature preset '" + std::string(name) + "'");
}

inline bool is_pole_name(std::string_view name) {
    return name.size() >= 5 && name.substr(name.size() - 5) == ".pole";
}

/// Handles a device can grab: unparented bones other than the skeleton root
/// and the pole targets.
inline std::vector<std::string> control_bones(const Armature& arm) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i < arm.bones.size(); ++i)
        if (!arm.bones[i].parent && !is_pole_name(arm.bones[i].name)) out.push_back(arm.bones[i].name);
    return out;
}

} // namespace jigsketch
