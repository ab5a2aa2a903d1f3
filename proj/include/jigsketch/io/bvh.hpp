#pragma once

// BVH interchange.
//
// Conventions (BVH itself does not fix them):
//  * offsets and root positions in centimeters (meters x 100)
//  * root channels: Xposition Yposition Zposition Zrotation Xrotation Yrotation
//  * other joints:  Zrotation Xrotation Yrotation, intrinsic Z-X-Y, degrees
//  * the exported skeleton is bone 0 and its descendants; unparented control
//    bones and pole targets are rig handles and are left out
//  * BVH joints have identity rest rotations, so each joint's world rotation
//    is exported relative to its rest world rotation and offsets are the rest
//    head differences in world axes

#include <jigsketch/error.hpp>
#include <jigsketch/geom.hpp>
#include <jigsketch/io/csv.hpp>
#include <jigsketch/rig.hpp>
#include <jigsketch/takes.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jigsketch::io {

inline constexpr double kMetersToBvh = 100.0;
/// Pitch (X rotation) is kept at most this far from +/-90 degrees.
inline constexpr double kGimbalMarginDegrees = 1e-4;

struct BvhJoint {
    std::string name;
    std::optional<std::size_t> parent;
    Vec3 offset;
    std::vector<std::string> channels;
    std::optional<Vec3> end_site;

    friend bool operator==(const BvhJoint&, const BvhJoint&) = default;
};

struct BvhDocument {
    std::vector<BvhJoint> joints;  ///< depth-first order, matching the frame layout
    double frame_time = 1.0 / 30.0;
    std::vector<std::vector<double>> frames;

    std::size_t channel_count() const {
        std::size_t n = 0;
        for (const auto& j : joints) n += j.channels.size();
        return n;
    }
};

inline void validate(const BvhDocument& doc) {
    if (!(doc.frame_time > 0)) throw Error(ErrorCode::InvalidArgument, "BVH frame time must be positive");
    const std::size_t n = doc.channel_count();
    for (const auto& f : doc.frames)
        if (f.size() != n) throw Error(ErrorCode::InvalidArgument, "BVH frame has wrong channel count");
}

struct EulerZXY {
    double z = 0.0;
    double x = 0.0;
    double y = 0.0;
};

/// Intrinsic Z-X-Y angles (degrees) with R = Rz · Rx · Ry. Pitch is clamped
/// to +/-(90 - 1e-4) degrees; `clamped` reports when that happened.
inline EulerZXY euler_zxy_degrees(const Quat& q, bool* clamped = nullptr) {
    constexpr double deg = 180.0 / std::numbers::pi;
    const Mat3 m = to_matrix(q);
    const double limit = (90.0 - kGimbalMarginDegrees) / deg;
    double sx = std::clamp(m(2, 1), -1.0, 1.0);
    double x = std::asin(sx);
    EulerZXY e;
    if (std::abs(x) > limit) {
        if (clamped) *clamped = true;
        x = std::copysign(limit, x);
        // Near gimbal lock only z + y (or z - y) is observable; put it all in z.
        e.z = std::atan2(m(1, 0), m(0, 0)) * deg;
        e.x = x * deg;
        e.y = 0.0;
        return e;
    }
    if (clamped) *clamped = false;
    e.z = std::atan2(-m(0, 1), m(1, 1)) * deg;
    e.x = x * deg;
    e.y = std::atan2(-m(2, 0), m(2, 2)) * deg;
    return e;
}

inline Quat quat_from_euler_zxy_degrees(const EulerZXY& e) {
    constexpr double rad = std::numbers::pi / 180.0;
    return normalized(Quat::from_axis_angle({0, 0, 1}, e.z * rad) * Quat::from_axis_angle({1, 0, 0}, e.x * rad) *
                      Quat::from_axis_angle({0, 1, 0}, e.y * rad));
}

struct BvhExportStats {
    std::size_t gimbal_clamps = 0;
};

inline std::size_t bvh_frame_count(double duration, double frame_rate) {
    return static_cast<std::size_t>(std::floor(duration * frame_rate + 1e-9)) + 1;
}

inline BvhDocument export_bvh(const Armature& arm, const Timeline& timeline, double frame_rate,
                              BvhExportStats* stats = nullptr) {
    if (timeline.empty()) throw Error(ErrorCode::EmptyTimeline, "nothing to export");
    if (!(frame_rate > 0)) throw Error(ErrorCode::InvalidArgument, "frame rate must be positive");
    if (arm.bones.empty()) throw Error(ErrorCode::InvalidArgument, "armature has no bones");

    // Depth-first order over bone 0's subtree.
    std::vector<std::size_t> order;
    std::vector<std::optional<std::size_t>> bvh_parent;
    std::vector<std::size_t> bvh_index(arm.bones.size(), SIZE_MAX);
    std::function<void(std::size_t, std::optional<std::size_t>)> visit = [&](std::size_t b, std::optional<std::size_t> p) {
        bvh_index[b] = order.size();
        order.push_back(b);
        bvh_parent.push_back(p);
        for (std::size_t c = b + 1; c < arm.bones.size(); ++c)
            if (arm.bones[c].parent == b) visit(c, bvh_index[b]);
    };
    visit(0, std::nullopt);

    const auto rest_world = fk_world(arm, rest_pose(arm));
    BvhDocument doc;
    doc.frame_time = 1.0 / frame_rate;
    for (std::size_t k = 0; k < order.size(); ++k) {
        std::size_t b = order[k];
        BvhJoint j;
        j.name = arm.bones[b].name;
        j.parent = bvh_parent[k];
        if (j.parent) {
            std::size_t pb = order[*j.parent];
            j.offset = (rest_world[b].position - rest_world[pb].position) * kMetersToBvh;
            j.channels = {"Zrotation", "Xrotation", "Yrotation"};
        } else {
            j.channels = {"Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation"};
        }
        bool leaf = true;
        for (std::size_t c = b + 1; c < arm.bones.size(); ++c)
            if (arm.bones[c].parent == b) leaf = false;
        if (leaf) j.end_site = rotate(rest_world[b].orientation, {0, arm.bones[b].length, 0}) * kMetersToBvh;
        doc.joints.push_back(std::move(j));
    }

    const std::size_t frames = bvh_frame_count(timeline.duration(), frame_rate);
    doc.frames.reserve(frames);
    std::vector<Quat> global(order.size());
    for (std::size_t f = 0; f < frames; ++f) {
        double t = static_cast<double>(f) / frame_rate;
        auto world = fk_world(arm, sample_timeline(timeline, arm, t));
        std::vector<double> values;
        values.reserve(doc.channel_count());
        for (std::size_t k = 0; k < order.size(); ++k) {
            std::size_t b = order[k];
            global[k] = normalized(world[b].orientation * conjugate(rest_world[b].orientation));
            Quat local = bvh_parent[k] ? normalized(conjugate(global[*bvh_parent[k]]) * global[k]) : global[k];
            if (!bvh_parent[k]) {
                Vec3 p = world[b].position * kMetersToBvh;
                values.insert(values.end(), {p.x, p.y, p.z});
            }
            bool clamped = false;
            EulerZXY e = euler_zxy_degrees(local, &clamped);
            if (clamped && stats) ++stats->gimbal_clamps;
            values.insert(values.end(), {e.z, e.x, e.y});
        }
        doc.frames.push_back(std::move(values));
    }
    return doc;
}

namespace detail {

inline std::string bvh_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    return s == "-0.000000" ? "0.000000" : s;
}

inline std::string bvh_vec(const Vec3& v) { return bvh_number(v.x) + " " + bvh_number(v.y) + " " + bvh_number(v.z); }

} // namespace detail

inline std::string write_bvh(const BvhDocument& doc) {
    validate(doc);
    std::string out = "HIERARCHY\n";
    std::function<void(std::size_t, int)> emit = [&](std::size_t k, int depth) {
        const auto& j = doc.joints[k];
        std::string ind(static_cast<std::size_t>(depth), '\t');
        out += ind + (j.parent ? "JOINT " : "ROOT ") + j.name + "\n" + ind + "{\n";
        out += ind + "\tOFFSET " + detail::bvh_vec(j.offset) + "\n";
        out += ind + "\tCHANNELS " + std::to_string(j.channels.size());
        for (const auto& c : j.channels) out += " " + c;
        out += "\n";
        for (std::size_t c = k + 1; c < doc.joints.size(); ++c)
            if (doc.joints[c].parent == k) emit(c, depth + 1);
        if (j.end_site) {
            out += ind + "\tEnd Site\n" + ind + "\t{\n";
            out += ind + "\t\tOFFSET " + detail::bvh_vec(*j.end_site) + "\n" + ind + "\t}\n";
        }
        out += ind + "}\n";
    };
    for (std::size_t k = 0; k < doc.joints.size(); ++k)
        if (!doc.joints[k].parent) emit(k, 0);

    char ft[32];
    std::snprintf(ft, sizeof ft, "%.7f", doc.frame_time);
    out += "MOTION\nFrames: " + std::to_string(doc.frames.size()) + "\nFrame Time: " + ft + "\n";
    for (const auto& f : doc.frames) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i) out += ' ';
            out += detail::bvh_number(f[i]);
        }
        out += '\n';
    }
    return out;
}

namespace detail {

class BvhTokenizer {
public:
    explicit BvhTokenizer(std::string_view text) : text_(text) {}

    struct Token {
        std::string_view text;
        std::size_t line = 0;
        std::size_t index = 0;
    };

    std::optional<Token> next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') ++line_;
            ++pos_;
        }
        if (pos_ >= text_.size()) return std::nullopt;
        std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return Token{text_.substr(start, pos_ - start), line_, ++count_};
    }

    Token expect_any(std::string_view what) {
        auto t = next();
        if (!t) throw ParseError(line_, "unexpected end of file, expected " + std::string(what));
        return *t;
    }

    void expect(std::string_view word) {
        auto t = expect_any(word);
        if (t.text != word) fail(t, "expected '" + std::string(word) + "'");
    }

    double number() {
        auto t = expect_any("a number");
        double v = 0.0;
        std::string_view s = t.text;
        if (!s.empty() && s.front() == '+') s.remove_prefix(1);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) fail(t, "expected a number");
        return v;
    }

    [[noreturn]] static void fail(const Token& t, const std::string& msg) {
        throw ParseError(t.line, msg + " at token " + std::to_string(t.index) + " ('" + std::string(t.text) + "')");
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t count_ = 0;
};

} // namespace detail

inline BvhDocument parse_bvh(std::string_view text) {
    detail::BvhTokenizer tok(text);
    BvhDocument doc;
    tok.expect("HIERARCHY");

    std::function<void(std::optional<std::size_t>)> joint_body = [&](std::optional<std::size_t> parent) {
        auto name = tok.expect_any("joint name");
        BvhJoint j;
        j.name = std::string(name.text);
        j.parent = parent;
        std::size_t self = doc.joints.size();
        doc.joints.push_back(j);
        tok.expect("{");
        tok.expect("OFFSET");
        doc.joints[self].offset = {tok.number(), tok.number(), tok.number()};
        tok.expect("CHANNELS");
        auto count_tok = tok.expect_any("channel count");
        int count = 0;
        auto [p, ec] = std::from_chars(count_tok.text.data(), count_tok.text.data() + count_tok.text.size(), count);
        if (ec != std::errc() || count < 0 || count > 6) detail::BvhTokenizer::fail(count_tok, "bad channel count");
        for (int c = 0; c < count; ++c) {
            auto ch = tok.expect_any("channel name");
            static constexpr std::string_view known[] = {"Xposition", "Yposition", "Zposition",
                                                         "Xrotation", "Yrotation", "Zrotation"};
            if (std::find(std::begin(known), std::end(known), ch.text) == std::end(known))
                detail::BvhTokenizer::fail(ch, "unknown channel");
            doc.joints[self].channels.emplace_back(ch.text);
        }
        while (true) {
            auto t = tok.expect_any("JOINT, End Site or }");
            if (t.text == "}") break;
            if (t.text == "JOINT") {
                joint_body(self);
            } else if (t.text == "End") {
                tok.expect("Site");
                tok.expect("{");
                tok.expect("OFFSET");
                doc.joints[self].end_site = Vec3{tok.number(), tok.number(), tok.number()};
                tok.expect("}");
            } else {
                detail::BvhTokenizer::fail(t, "unexpected token in joint");
            }
        }
    };

    tok.expect("ROOT");
    joint_body(std::nullopt);
    auto t = tok.expect_any("MOTION");
    while (t.text == "ROOT") {
        joint_body(std::nullopt);
        t = tok.expect_any("MOTION");
    }
    if (t.text != "MOTION") detail::BvhTokenizer::fail(t, "expected 'MOTION'");
    tok.expect("Frames:");
    double frames = tok.number();
    if (frames < 0 || frames != std::floor(frames)) throw ParseError(1, "frame count must be a non-negative integer");
    tok.expect("Frame");
    tok.expect("Time:");
    doc.frame_time = tok.number();
    if (!(doc.frame_time > 0)) throw ParseError(1, "frame time must be positive");

    const std::size_t n = doc.channel_count();
    for (std::size_t f = 0; f < static_cast<std::size_t>(frames); ++f) {
        std::vector<double> row(n);
        for (auto& v : row) v = tok.number();
        doc.frames.push_back(std::move(row));
    }
    if (auto extra = tok.next()) detail::BvhTokenizer::fail(*extra, "trailing data after motion");
    return doc;
}

} // namespace jigsketch::io
