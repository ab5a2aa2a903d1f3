#pragma once

// JSON persistence for armatures, trajectories, takes, timelines,
// calibration maps and jig parameters. Every document carries "v": 1.

#include <jigsketch/calibration.hpp>
#include <jigsketch/error.hpp>
#include <jigsketch/jig.hpp>
#include <jigsketch/rig.hpp>
#include <jigsketch/takes.hpp>
#include <jigsketch/trajectory.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace jigsketch::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

[[noreturn]] inline void schema_error(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

inline void check_version(const json& j) {
    if (!j.is_object()) schema_error("expected a JSON object");
    if (j.contains("v") && j.at("v") != kSchemaVersion)
        schema_error("unsupported schema version " + j.at("v").dump());
}

inline json versioned(json j) {
    j["v"] = kSchemaVersion;
    return j;
}

/// Runs a decoder, reporting nlohmann type/key errors as ParseError.
template <class F>
auto decode(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        schema_error(e.what());
    }
}

// --- primitives -------------------------------------------------------------

inline json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
inline json to_json(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }
inline json to_json(const Pose& p) { return {{"p", to_json(p.position)}, {"q", to_json(p.orientation)}}; }

inline Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) schema_error("expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Quat quat_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) schema_error("expected [w, x, y, z]");
    Quat q{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    double n = norm(q);
    if (!(n > 1e-12)) schema_error("zero quaternion");
    // Leave already-unit values untouched so that write/read is exact.
    return std::abs(n - 1.0) < 1e-14 ? q : normalized(q);
}

inline Pose pose_from_json(const json& j) {
    return {vec3_from_json(j.at("p")), j.contains("q") ? quat_from_json(j.at("q")) : Quat::identity()};
}

// --- calibration --------------------------------------------------------------

inline json to_json(const CoordinateMap& m) {
    return versioned({{"x0", to_json(m.x0)}, {"a1", to_json(m.a1)}, {"a2", to_json(m.a2)}, {"a3", to_json(m.a3)}, {"t", m.t}});
}

inline CoordinateMap coordinate_map_from_json(const json& j) {
    return decode([&] {
        check_version(j);
        CoordinateMap m{vec3_from_json(j.at("x0")), vec3_from_json(j.at("a1")), vec3_from_json(j.at("a2")),
                        vec3_from_json(j.at("a3")), j.at("t").get<double>()};
        // Re-runs the degeneracy check.
        return calibrate_four_point({{m.x0, m.x0 + m.a1, m.x0 + m.a2, m.x0 + m.a3}, m.t});
    });
}

inline json to_json(const SimilarityTransform& t) {
    json a = json::array();
    for (double v : t.rotation.m) a.push_back(v);
    return versioned({{"k", t.scale}, {"A", a}, {"b", to_json(t.translation)}});
}

inline SimilarityTransform similarity_from_json(const json& j) {
    return decode([&] {
        check_version(j);
        SimilarityTransform t;
        t.scale = j.at("k").get<double>();
        const auto& a = j.at("A");
        if (!a.is_array() || a.size() != 9) schema_error("A must hold 9 row-major entries");
        for (std::size_t i = 0; i < 9; ++i) t.rotation.m[i] = a[i].get<double>();
        t.translation = vec3_from_json(j.at("b"));
        if (!t.is_valid(1e-6)) schema_error("similarity transform violates k > 0 / orthonormal A");
        return t;
    });
}

// --- armature ---------------------------------------------------------------

inline json to_json(const PointRef& r) {
    switch (r.kind) {
    case PointRef::Kind::BoneHead: return {{"bone_head", r.name}};
    case PointRef::Kind::BoneTail: return {{"bone_tail", r.name}};
    case PointRef::Kind::External: return {{"external", r.name}};
    }
    return {};
}

inline PointRef point_ref_from_json(const json& j) {
    if (j.is_string()) return PointRef::head(j.get<std::string>());
    if (j.contains("bone_head")) return PointRef::head(j.at("bone_head").get<std::string>());
    if (j.contains("bone_tail")) return PointRef::tail(j.at("bone_tail").get<std::string>());
    if (j.contains("external")) return PointRef::external(j.at("external").get<std::string>());
    schema_error("point reference needs bone_head, bone_tail or external");
}

inline json to_json(const Constraint& c) {
    return std::visit(
        [](const auto& con) -> json {
            using T = std::decay_t<decltype(con)>;
            if constexpr (std::is_same_v<T, IkChain>) {
                json j{{"type", "ik"},
                       {"tip", con.tip},
                       {"chain_length", con.chain_length},
                       {"target", to_json(con.target)},
                       {"iterations", con.iterations},
                       {"tolerance", con.tolerance}};
                if (con.pole) j["pole"] = to_json(*con.pole);
                return j;
            } else if constexpr (std::is_same_v<T, CopyLocation>) {
                return {{"type", "copy_location"},
                        {"bone", con.bone},
                        {"source", to_json(con.source)},
                        {"offset", to_json(con.offset)}};
            } else {
                return {{"type", "keep_offset"}, {"bone", con.bone}, {"source", con.source}, {"offset", to_json(con.offset)}};
            }
        },
        c);
}

inline json to_json(const Armature& arm) {
    json bones = json::array();
    for (const auto& b : arm.bones) {
        bones.push_back({{"name", b.name},
                         {"parent", b.parent ? json(arm.bones[*b.parent].name) : json(nullptr)},
                         {"rest", to_json(b.rest_local)},
                         {"length", b.length}});
    }
    json constraints = json::array();
    for (const auto& c : arm.constraints) constraints.push_back(to_json(c));
    return versioned({{"bones", bones}, {"constraints", constraints}});
}

inline Armature armature_from_json(const json& j) {
    return decode([&] {
        check_version(j);
        Armature arm;
        for (const auto& jb : j.at("bones")) {
            Bone b;
            b.name = jb.at("name").get<std::string>();
            const json& parent = jb.contains("parent") ? jb.at("parent") : json(nullptr);
            if (parent.is_string()) {
                auto p = arm.find(parent.get<std::string>());
                if (!p) schema_error("bone '" + b.name + "' names an unknown or later parent");
                b.parent = *p;
            } else if (parent.is_number_integer()) {
                b.parent = parent.get<std::size_t>();
            }
            b.rest_local = jb.contains("rest") ? pose_from_json(jb.at("rest")) : Pose{};
            b.length = jb.at("length").get<double>();
            arm.bones.push_back(std::move(b));
        }
        if (j.contains("constraints")) {
            for (const auto& jc : j.at("constraints")) {
                std::string type = jc.at("type").get<std::string>();
                if (type == "ik") {
                    IkChain ik;
                    ik.tip = jc.at("tip").get<std::string>();
                    ik.chain_length = jc.at("chain_length").get<std::size_t>();
                    ik.target = point_ref_from_json(jc.at("target"));
                    if (jc.contains("pole") && !jc.at("pole").is_null()) ik.pole = point_ref_from_json(jc.at("pole"));
                    ik.iterations = jc.value("iterations", ik.iterations);
                    ik.tolerance = jc.value("tolerance", ik.tolerance);
                    arm.constraints.emplace_back(std::move(ik));
                } else if (type == "copy_location") {
                    CopyLocation c{jc.at("bone").get<std::string>(), point_ref_from_json(jc.at("source")), {}};
                    if (jc.contains("offset")) c.offset = vec3_from_json(jc.at("offset"));
                    arm.constraints.emplace_back(std::move(c));
                } else if (type == "keep_offset") {
                    std::string bone = jc.at("bone").get<std::string>();
                    std::string source = jc.at("source").get<std::string>();
                    validate(Armature{arm.bones, {}});
                    KeepOffsetParent k = jc.contains("offset") ? KeepOffsetParent{bone, source, pose_from_json(jc.at("offset"))}
                                                               : keep_offset_at_rest(arm, bone, source);
                    arm.constraints.emplace_back(std::move(k));
                } else {
                    schema_error("unknown constraint type '" + type + "'");
                }
            }
        }
        validate(arm);
        return arm;
    });
}

// --- trajectory ---------------------------------------------------------------

inline json to_json(const Trajectory& t) {
    json wps = json::array();
    for (const auto& w : t.waypoints) wps.push_back({{"t", w.time}, {"p", to_json(w.pos)}});
    return versioned({{"id", t.id}, {"sample_period", t.sample_period}, {"waypoints", wps}});
}

inline Trajectory trajectory_from_json(const json& j) {
    return decode([&] {
        check_version(j);
        Trajectory t;
        t.id = j.at("id").get<std::string>();
        t.sample_period = j.at("sample_period").get<double>();
        for (const auto& w : j.at("waypoints")) t.waypoints.push_back({vec3_from_json(w.at("p")), w.at("t").get<double>()});
        validate(t);
        return t;
    });
}

// --- takes and timelines ------------------------------------------------------

inline json to_json(const Take& take) {
    json channels = json::array();
    for (const auto& c : take.channels) {
        json values = json::array();
        if (c.property == ChannelProperty::Position)
            for (const auto& v : c.positions) values.push_back(to_json(v));
        else
            for (const auto& q : c.orientations) values.push_back(to_json(q));
        channels.push_back({{"bone", c.bone}, {"property", to_string(c.property)}, {"times", c.times}, {"values", values}});
    }
    return versioned({{"id", take.id},
                      {"sample_period", take.sample_period},
                      {"duration", take.duration},
                      {"bound_bones", take.bound_bones},
                      {"channels", channels}});
}

inline Take take_from_json(const json& j) {
    return decode([&] {
        check_version(j);
        Take take;
        take.id = j.at("id").get<std::string>();
        take.sample_period = j.value("sample_period", Take::kDefaultTakePeriod);
        take.duration = j.at("duration").get<double>();
        take.bound_bones = j.at("bound_bones").get<std::vector<std::string>>();
        std::sort(take.bound_bones.begin(), take.bound_bones.end());
        for (const auto& jc : j.at("channels")) {
            Channel c;
            c.bone = jc.at("bone").get<std::string>();
            std::string prop = jc.at("property").get<std::string>();
            if (prop == "position")
                c.property = ChannelProperty::Position;
            else if (prop == "orientation")
                c.property = ChannelProperty::Orientation;
            else
                schema_error("unknown channel property '" + prop + "'");
            c.times = jc.at("times").get<std::vector<double>>();
            for (const auto& v : jc.at("values")) {
                if (c.property == ChannelProperty::Position)
                    c.positions.push_back(vec3_from_json(v));
                else
                    c.orientations.push_back(quat_from_json(v));
            }
            take.channels.push_back(std::move(c));
        }
        validate(take);
        return take;
    });
}

inline json to_json(const Timeline& tl) {
    json entries = json::array();
    for (const auto& e : tl.entries) entries.push_back({{"offset", e.offset}, {"take", to_json(e.take)}});
    return versioned({{"entries", entries}});
}

inline Timeline timeline_from_json(const json& j) {
    return decode([&] {
        check_version(j);
        Timeline tl;
        for (const auto& e : j.at("entries")) tl = layer_takes(std::move(tl), take_from_json(e.at("take")), e.at("offset").get<double>());
        return tl;
    });
}

// --- jigs -----------------------------------------------------------------------

inline json to_json(const JigConfig& config) {
    return std::visit(
        [](const auto& jig) -> json {
            using T = std::decay_t<decltype(jig)>;
            if constexpr (std::is_same_v<T, WeightJig>)
                return {{"kind", "weight"}, {"mass", jig.mass}, {"stiffness", jig.stiffness}, {"damping", jig.damping}};
            else if constexpr (std::is_same_v<T, PendulumJig>)
                return {{"kind", "pendulum"}, {"length", jig.length}, {"gravity", jig.gravity}, {"damping", jig.damping}};
            else if constexpr (std::is_same_v<T, StickJig>) {
                json path = json::array();
                for (const auto& p : jig.path) path.push_back(to_json(p));
                return {{"kind", "stick"}, {"path", path}};
            } else
                return {{"kind", "band"},
                        {"rest_length", jig.rest_length},
                        {"stiffness", jig.stiffness},
                        {"damping", jig.damping},
                        {"tracking_stiffness", jig.tracking_stiffness},
                        {"tracking_damping", jig.tracking_damping}};
        },
        config);
}

inline JigConfig jig_from_json(const json& j) {
    return decode([&]() -> JigConfig {
        std::string kind = j.at("kind").get<std::string>();
        JigConfig out;
        if (kind == "weight") {
            WeightJig w;
            out = WeightJig{j.value("mass", w.mass), j.value("stiffness", w.stiffness), j.value("damping", w.damping)};
        } else if (kind == "pendulum") {
            PendulumJig p;
            out = PendulumJig{j.value("length", p.length), j.value("gravity", p.gravity), j.value("damping", p.damping)};
        } else if (kind == "stick") {
            StickJig s;
            for (const auto& p : j.at("path")) s.path.push_back(vec3_from_json(p));
            out = std::move(s);
        } else if (kind == "band") {
            BandJig b;
            out = BandJig{j.value("rest_length", b.rest_length), j.value("stiffness", b.stiffness),
                          j.value("damping", b.damping), j.value("tracking_stiffness", b.tracking_stiffness),
                          j.value("tracking_damping", b.tracking_damping)};
        } else {
            schema_error("unknown jig kind '" + kind + "'");
        }
        validate(out);
        return out;
    });
}

inline json jig_presets_json() {
    json jigs = json::object();
    for (const auto& [name, config] : jig_presets()) jigs[name] = to_json(config);
    return versioned({{"jigs", jigs}});
}

// --- files ------------------------------------------------------------------------

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorCode::InvalidArgument, "failed writing '" + path + "'");
}

inline json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        schema_error(e.what());
    }
}

inline json read_json_file(const std::string& path) { return parse_json(read_text_file(path)); }

} // namespace jigsketch::io
