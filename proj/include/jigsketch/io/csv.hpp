#pragma once

// Text tables: device streams (t,device,px,py,pz,qw,qx,qy,qz), labelled
// points for calibration (label,x,y,z) and replay output (t,id,x,y,z).
// Numbers are written with 9 significant digits.

#include <jigsketch/error.hpp>
#include <jigsketch/geom.hpp>
#include <jigsketch/stream.hpp>
#include <jigsketch/trajectory.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jigsketch::io {

inline constexpr std::string_view kStreamHeader = "t,device,px,py,pz,qw,qx,qy,qz";
inline constexpr std::string_view kPointsHeader = "label,x,y,z";
inline constexpr std::string_view kReplayHeader = "t,id,x,y,z";

inline std::string format_number(double v) {
    char buf[32];
    int n = std::snprintf(buf, sizeof buf, "%.9g", v);
    std::string s(buf, static_cast<std::size_t>(n));
    return s == "-0" ? "0" : s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline double parse_number(std::string_view field, std::size_t line) {
    double v = 0.0;
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
        throw ParseError(line, "'" + std::string(field) + "' is not a finite number");
    return v;
}

/// Calls row(fields, line_number) for every non-empty line after the header.
template <class Row>
void for_each_row(std::string_view text, std::string_view header, bool header_required, Row row) {
    std::size_t line_no = 0;
    bool first = true;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == header) continue;
            if (header_required) throw ParseError(line_no, "expected header '" + std::string(header) + "'");
        }
        row(split_fields(line), line_no);
    }
    if (first && header_required) throw ParseError(1, "missing header '" + std::string(header) + "'");
}

} // namespace detail

/// Parses a device stream. Quaternions are renormalized; time must not
/// decrease within a device.
inline std::vector<StreamSample> read_stream_csv(std::string_view text) {
    std::vector<StreamSample> out;
    std::map<std::string, double> last_t;
    detail::for_each_row(text, kStreamHeader, true, [&](const std::vector<std::string_view>& f, std::size_t line) {
        if (f.size() != 9) throw ParseError(line, "expected 9 fields, got " + std::to_string(f.size()));
        StreamSample s;
        s.t = detail::parse_number(f[0], line);
        s.device = std::string(f[1]);
        if (s.device.empty()) throw ParseError(line, "empty device id");
        s.pos = {detail::parse_number(f[2], line), detail::parse_number(f[3], line), detail::parse_number(f[4], line)};
        Quat q{detail::parse_number(f[5], line), detail::parse_number(f[6], line), detail::parse_number(f[7], line),
               detail::parse_number(f[8], line)};
        if (!(norm(q) > 1e-12)) throw ParseError(line, "zero quaternion");
        s.quat = normalized(q);
        auto it = last_t.find(s.device);
        if (it != last_t.end() && s.t < it->second) throw NonMonotonicTime(s.device, line);
        last_t[s.device] = s.t;
        out.push_back(std::move(s));
    });
    return out;
}

inline std::string write_stream_csv(const std::vector<StreamSample>& samples) {
    std::string out(kStreamHeader);
    out += '\n';
    for (const auto& s : samples) {
        out += format_number(s.t) + ',' + s.device;
        for (double v : {s.pos.x, s.pos.y, s.pos.z, s.quat.w, s.quat.x, s.quat.y, s.quat.z}) out += ',' + format_number(v);
        out += '\n';
    }
    return out;
}

using LabeledPoints = std::vector<std::pair<std::string, Vec3>>;

inline LabeledPoints read_points_csv(std::string_view text) {
    LabeledPoints out;
    detail::for_each_row(text, kPointsHeader, false, [&](const std::vector<std::string_view>& f, std::size_t line) {
        if (f.size() != 4) throw ParseError(line, "expected label,x,y,z");
        out.emplace_back(std::string(f[0]),
                         Vec3{detail::parse_number(f[1], line), detail::parse_number(f[2], line), detail::parse_number(f[3], line)});
    });
    return out;
}

inline std::string write_points_csv(const LabeledPoints& points) {
    std::string out(kPointsHeader);
    out += '\n';
    for (const auto& [label, p] : points)
        out += label + ',' + format_number(p.x) + ',' + format_number(p.y) + ',' + format_number(p.z) + '\n';
    return out;
}

/// Four probe readings; rows labelled x0..x3 are taken by label, otherwise
/// in file order.
inline std::array<Vec3, 4> probe_readings(const LabeledPoints& points) {
    if (points.size() != 4) throw Error(ErrorCode::InvalidArgument, "probe needs exactly 4 readings");
    std::array<Vec3, 4> out;
    std::array<bool, 4> seen{};
    bool labelled = true;
    for (const auto& [label, p] : points) {
        if (label.size() == 2 && label[0] == 'x' && label[1] >= '0' && label[1] <= '3' && !seen[label[1] - '0']) {
            out[label[1] - '0'] = p;
            seen[label[1] - '0'] = true;
        } else {
            labelled = false;
        }
    }
    if (!labelled)
        for (std::size_t i = 0; i < 4; ++i) out[i] = points[i].second;
    return out;
}

/// Correspondences from rows labelled src:NAME and dst:NAME.
inline std::vector<std::pair<std::string, std::pair<Vec3, Vec3>>> correspondence_rows(const LabeledPoints& points) {
    std::map<std::string, std::pair<std::optional<Vec3>, std::optional<Vec3>>> by_name;
    std::vector<std::string> order;
    for (const auto& [label, p] : points) {
        bool src = label.rfind("src:", 0) == 0;
        bool dst = label.rfind("dst:", 0) == 0;
        if (!src && !dst) throw Error(ErrorCode::InvalidArgument, "label '" + label + "' must start with src: or dst:");
        std::string name = label.substr(4);
        if (!by_name.count(name)) order.push_back(name);
        auto& slot = src ? by_name[name].first : by_name[name].second;
        if (slot) throw Error(ErrorCode::InvalidArgument, "duplicate label '" + label + "'");
        slot = p;
    }
    std::vector<std::pair<std::string, std::pair<Vec3, Vec3>>> out;
    for (const auto& name : order) {
        const auto& [s, d] = by_name[name];
        if (!s || !d) throw Error(ErrorCode::InvalidArgument, "pair '" + name + "' needs both src: and dst: rows");
        out.push_back({name, {*s, *d}});
    }
    return out;
}

struct ReplayRow {
    double t = 0.0;
    std::string id;
    Vec3 pos;
};

inline std::string write_replay_csv(const std::vector<ReplayRow>& rows) {
    std::string out(kReplayHeader);
    out += '\n';
    for (const auto& r : rows)
        out += format_number(r.t) + ',' + r.id + ',' + format_number(r.pos.x) + ',' + format_number(r.pos.y) + ',' +
               format_number(r.pos.z) + '\n';
    return out;
}

inline std::vector<ReplayRow> read_replay_csv(std::string_view text) {
    std::vector<ReplayRow> out;
    detail::for_each_row(text, kReplayHeader, true, [&](const std::vector<std::string_view>& f, std::size_t line) {
        if (f.size() != 5) throw ParseError(line, "expected t,id,x,y,z");
        out.push_back({detail::parse_number(f[0], line), std::string(f[1]),
                       {detail::parse_number(f[2], line), detail::parse_number(f[3], line), detail::parse_number(f[4], line)}});
    });
    return out;
}

} // namespace jigsketch::io
