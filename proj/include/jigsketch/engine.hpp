#pragma once

#include <jigsketch/calibration.hpp>
#include <jigsketch/io/bvh.hpp>
#include <jigsketch/io/json.hpp>
#include <jigsketch/jig.hpp>
#include <jigsketch/presets.hpp>
#include <jigsketch/rig.hpp>
#include <jigsketch/stream.hpp>
#include <jigsketch/takes.hpp>
#include <jigsketch/trajectory.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace jigsketch {

enum class EngineMode { Idle, RecordingTrajectory, RecordingTake, Replaying };

inline std::string_view to_string(EngineMode m) {
    switch (m) {
    case EngineMode::Idle: return "idle";
    case EngineMode::RecordingTrajectory: return "recording_trajectory";
    case EngineMode::RecordingTake: return "recording_take";
    case EngineMode::Replaying: return "replaying";
    }
    return "idle";
}

struct EngineConfig {
    double tick_rate = 60.0;
    double snapshot_rate = 30.0;
    std::size_t max_devices = 2;
    /// Virtual clock: samples are assigned to ticks by their own timestamps.
    /// When false (live input), every queued sample lands in the next tick.
    bool sample_time_driven = true;
};

using ClientId = std::uint64_t;

/// A message leaving the engine; `to` empty means broadcast.
struct Outbound {
    std::optional<ClientId> to;
    io::json message;
};

/// Error codes as they appear on the wire.
inline std::string_view wire_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownBone: return "UnknownId";
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonPositiveFactor:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::ParseError: return "MalformedCommand";
    default: return to_string(code);
    }
}

/// Parses `{t, device, pos:[x,y,z], quat:[w,x,y,z]}`; quat defaults to identity.
inline StreamSample sample_from_json(const io::json& j) {
    return io::decode([&] {
        if (!j.is_object()) io::schema_error("sample must be an object");
        StreamSample s;
        s.t = j.at("t").get<double>();
        s.device = j.at("device").get<std::string>();
        s.pos = io::vec3_from_json(j.at("pos"));
        s.quat = j.contains("quat") ? io::quat_from_json(j.at("quat")) : Quat::identity();
        if (s.device.empty()) io::schema_error("empty device name");
        if (!std::isfinite(s.t) || !is_finite(s.pos) || !is_finite(s.quat))
            throw Error(ErrorCode::NonFiniteInput, "sample is not finite");
        return s;
    });
}

inline io::json to_json(const StreamSample& s) {
    return {{"type", "sample"}, {"t", s.t}, {"device", s.device}, {"pos", io::to_json(s.pos)},
            {"quat", io::to_json(s.quat)}};
}

/// The single authoritative session: commands and samples are queued from
/// any thread, and only tick() mutates state.
class Engine {
public:
    explicit Engine(Armature armature = preset_legs(), EngineConfig config = {})
        : config_(config), rig_(std::move(armature), config.max_devices) {
        if (!(config_.tick_rate > 0) || !(config_.snapshot_rate > 0))
            throw Error(ErrorCode::InvalidArgument, "tick and snapshot rates must be positive");
        dt_ = 1.0 / config_.tick_rate;
        snapshot_every_ =
            std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(config_.tick_rate / config_.snapshot_rate - 1e-9)));
    }

    // --- ingress (thread-safe) -----------------------------------------------

    /// Queues a decoded wire message. Samples go to the sample queue; anything
    /// else is answered during the next tick.
    void submit(ClientId from, io::json message) {
        if (message.is_object() && message.value("type", "") == "sample") {
            try {
                push_sample(sample_from_json(message));
            } catch (const Error& e) {
                std::lock_guard lock(inbox_mutex_);
                commands_.push_back({from, std::move(message), std::string(e.what())});
            }
            return;
        }
        std::lock_guard lock(inbox_mutex_);
        commands_.push_back({from, std::move(message), {}});
    }

    void submit_text(ClientId from, std::string_view text) {
        io::json message;
        try {
            message = io::json::parse(text);
        } catch (const io::json::exception& e) {
            std::lock_guard lock(inbox_mutex_);
            commands_.push_back({from, nullptr, std::string("invalid JSON: ") + e.what()});
            return;
        }
        submit(from, std::move(message));
    }

    void push_sample(StreamSample sample) {
        if (!std::isfinite(sample.t) || !is_finite(sample.pos) || !is_finite(sample.quat))
            throw Error(ErrorCode::NonFiniteInput, "sample is not finite");
        std::lock_guard lock(inbox_mutex_);
        samples_.push_back(std::move(sample));
    }

    // --- tick (single consumer) ----------------------------------------------

    std::vector<Outbound> tick() {
        std::vector<Outbound> out;
        const double clock = this->clock();

        std::deque<Inbound> commands;
        {
            std::lock_guard lock(inbox_mutex_);
            commands.swap(commands_);
            if (!samples_.empty()) pending_unsorted_ = true;
            for (auto& s : samples_) pending_.push_back(std::move(s));
            samples_.clear();
        }
        for (auto& c : commands) out.push_back(handle(c, clock));

        drain_samples(clock);
        filtered_ = raw_;
        for (auto& [device, pose] : filtered_) pose = calibrated(pose);
        filter_through_jigs(jigs_, filtered_, dt_);
        rig_.apply_input(filtered_);

        if (traj_recorder_ && traced_device_) {
            if (auto it = filtered_.find(*traced_device_); it != filtered_.end())
                traj_recorder_->sample(it->second.position, clock);
        }
        if (take_recorder_.active()) take_recorder_.sample(clock, rig_.pose());
        advance_replay(clock);

        if (ticks_ % snapshot_every_ == 0) out.push_back({std::nullopt, snapshot()});
        ++ticks_;
        return out;
    }

    /// Ticks until the virtual clock passes `t` (inclusive within slack).
    std::vector<Outbound> run_until(double t) {
        std::vector<Outbound> out;
        while (clock() <= t + kTickSlack) {
            auto step = tick();
            out.insert(out.end(), std::make_move_iterator(step.begin()), std::make_move_iterator(step.end()));
        }
        return out;
    }

    io::json snapshot() const {
        const auto& arm = rig_.armature();
        const auto& world = rig_.world();
        io::json bones = io::json::array();
        for (std::size_t i = 0; i < arm.bones.size(); ++i)
            bones.push_back({{"name", arm.bones[i].name},
                             {"p", io::to_json(world[i].position)},
                             {"q", io::to_json(world[i].orientation)},
                             {"tail", io::to_json(bone_tail(world[i], arm.bones[i].length))}});
        io::json bindings = io::json::array();
        for (const auto& b : rig_.bindings())
            bindings.push_back({{"device", b.device}, {"bone", b.bone}, {"mode", to_string(b.mode)}});
        io::json devices = io::json::object();
        for (const auto& [name, pose] : filtered_) devices[name] = io::to_json(pose);
        io::json cursors = io::json::array();
        for (const auto& c : cursor_frames_) {
            io::json visible = io::json::array();
            for (std::size_t i = c.frame.visible.begin; i < c.frame.visible.end; ++i) visible.push_back(i);
            cursors.push_back({{"trajectory", c.trajectory_id},
                               {"pos", io::to_json(c.frame.pos)},
                               {"visible", visible},
                               {"finished", c.frame.finished}});
        }
        io::json jigs = io::json::array();
        for (std::size_t i = 0; i < jigs_.size(); ++i) {
            const auto& j = jigs_[i];
            io::json positions = io::json::array();
            for (std::size_t k = 0; k < j.devices.size(); ++k) positions.push_back(io::to_json(j.state.position[k]));
            jigs.push_back({{"id", jig_ids_[i]},
                            {"kind", jig_kind(j.config)},
                            {"devices", j.devices},
                            {"config", io::to_json(j.config)},
                            {"initialized", j.state.initialized},
                            {"positions", positions}});
        }
        io::json trajectories = io::json::array();
        for (const auto& t : trajectories_)
            trajectories.push_back({{"id", t.id}, {"waypoints", t.waypoints.size()}, {"duration", t.duration()}});
        io::json takes = io::json::array();
        for (const auto& t : takes_)
            takes.push_back({{"id", t.id}, {"duration", t.duration}, {"bones", t.bound_bones}});
        io::json timeline = io::json::array();
        for (const auto& e : timeline_.entries)
            timeline.push_back({{"take", e.take.id}, {"offset", e.offset}, {"end", e.end()}});
        io::json snap{{"type", "snapshot"},
                      {"v", io::kSchemaVersion},
                      {"tick", ticks_},
                      {"clock", clock()},
                      {"mode", to_string(mode_)},
                      {"bones", bones},
                      {"bindings", bindings},
                      {"devices", devices},
                      {"cursors", cursors},
                      {"jigs", jigs},
                      {"trajectories", trajectories},
                      {"takes", takes},
                      {"timeline", timeline},
                      {"calibrated", calibration_.has_value()}};
        if (traj_recorder_) {
            io::json live = io::json::array();
            for (const auto& w : traj_recorder_->pending()) live.push_back(io::to_json(w.pos));
            snap["recording"] = {{"kind", "trajectory"}, {"device", *traced_device_}, {"waypoints", live}};
        } else if (take_recorder_.active()) {
            snap["recording"] = {{"kind", "take"}, {"keys", take_recorder_.keys()}};
        }
        return snap;
    }

    io::json hello() const {
        io::json presets = io::json::array();
        for (const auto& [name, cfg] : jig_presets()) presets.push_back(name);
        io::json armatures = io::json::array();
        for (auto name : kPresetNames) armatures.push_back(name);
        return {{"type", "hello"},
                {"v", io::kSchemaVersion},
                {"server", "jigsketch"},
                {"tick_rate", config_.tick_rate},
                {"snapshot_rate", config_.tick_rate / static_cast<double>(snapshot_every_)},
                {"armature", io::to_json(rig_.armature())},
                {"jig_presets", presets},
                {"armature_presets", armatures}};
    }

    EngineMode mode() const { return mode_; }
    double dt() const { return dt_; }
    double clock() const { return static_cast<double>(ticks_) * dt_; }
    std::uint64_t ticks() const { return ticks_; }
    const RigSession& rig() const { return rig_; }
    const std::vector<Trajectory>& trajectories() const { return trajectories_; }
    const std::vector<Take>& takes() const { return takes_; }
    const Timeline& timeline() const { return timeline_; }
    const std::optional<SimilarityTransform>& calibration() const { return calibration_; }
    const std::map<std::string, Pose>& device_poses() const { return filtered_; }
    const EngineConfig& config() const { return config_; }

private:
    struct Inbound {
        ClientId from = 0;
        io::json message;
        std::string rejection;  // set when the message failed to decode
    };

    struct CommandError {
        std::string code;
        std::string message;
    };

    static CommandError malformed(std::string msg) { return {"MalformedCommand", std::move(msg)}; }
    static CommandError bad_mode(std::string msg) { return {"BadMode", std::move(msg)}; }
    static CommandError unknown_id(std::string msg) { return {"UnknownId", std::move(msg)}; }

    Outbound handle(const Inbound& in, double clock) {
        io::json seq = nullptr;
        if (in.message.is_object() && in.message.contains("seq")) seq = in.message["seq"];
        auto error = [&](std::string_view code, const std::string& msg) {
            return Outbound{in.from, {{"type", "error"}, {"seq", seq}, {"code", code}, {"message", msg}}};
        };
        if (!in.rejection.empty()) return error("MalformedCommand", in.rejection);
        const auto& m = in.message;
        if (!m.is_object()) return error("MalformedCommand", "message must be a JSON object");
        std::string type = m.contains("type") && m["type"].is_string() ? m["type"].get<std::string>() : "";
        if (type == "hello") {
            auto reply = hello();
            reply["seq"] = seq;
            return {in.from, reply};
        }
        if (type != "command") return error("MalformedCommand", "unknown message type '" + type + "'");
        if (seq.is_null()) return error("MalformedCommand", "command without seq");
        if (!m.contains("cmd") || !m["cmd"].is_string()) return error("MalformedCommand", "command without cmd");
        const std::string cmd = m["cmd"].get<std::string>();
        try {
            io::json result = dispatch(cmd, m, clock);
            io::json ack{{"type", "ack"}, {"seq", seq}, {"cmd", cmd}};
            ack.update(result);
            return {in.from, ack};
        } catch (const CommandError& e) {
            return error(e.code, e.message);
        } catch (const Error& e) {
            return error(wire_code(e.code()), e.what());
        } catch (const io::json::exception& e) {
            return error("MalformedCommand", e.what());
        }
    }

    template <class T>
    static T field(const io::json& m, const char* key) {
        if (!m.contains(key)) throw malformed(std::string("missing field '") + key + "'");
        try {
            return m.at(key).get<T>();
        } catch (const io::json::exception&) {
            throw malformed(std::string("field '") + key + "' has the wrong type");
        }
    }

    static double finite_field(const io::json& m, const char* key, double fallback) {
        if (!m.contains(key)) return fallback;
        double v = field<double>(m, key);
        if (!std::isfinite(v)) throw malformed(std::string("field '") + key + "' must be finite");
        return v;
    }

    io::json dispatch(const std::string& cmd, const io::json& m, double clock) {
        if (cmd == "bind") return cmd_bind(m);
        if (cmd == "unbind") {
            rig_.unbind_device(field<std::string>(m, "device"));
            return io::json::object();
        }
        if (cmd == "set_jig") return cmd_set_jig(m);
        if (cmd == "record_start") return cmd_record_start(m, clock);
        if (cmd == "record_stop") return cmd_record_stop(clock);
        if (cmd == "replay") return cmd_replay(m, clock);
        if (cmd == "replay_stop") {
            if (mode_ != EngineMode::Replaying) throw bad_mode("no replay is running");
            stop_replay();
            return io::json::object();
        }
        if (cmd == "edit") return cmd_edit(m);
        if (cmd == "layer") return cmd_layer(m);
        if (cmd == "calibrate") return cmd_calibrate(m);
        if (cmd == "load_armature") return cmd_load_armature(m);
        if (cmd == "get_trajectory") return {{"trajectory", io::to_json(trajectory(field<std::string>(m, "id")))}};
        if (cmd == "get_take") return {{"take", io::to_json(take(field<std::string>(m, "id")))}};
        if (cmd == "get_timeline") return {{"timeline", io::to_json(timeline_)}};
        if (cmd == "export_bvh") {
            double fps = finite_field(m, "fps", 30.0);
            if (!(fps > 0)) throw malformed("fps must be positive");
            return {{"bvh", io::write_bvh(io::export_bvh(rig_.armature(), timeline_, fps))}};
        }
        throw malformed("unknown command '" + cmd + "'");
    }

    io::json cmd_bind(const io::json& m) {
        if (mode_ == EngineMode::RecordingTake) throw bad_mode("cannot change bindings while recording a take");
        auto device = field<std::string>(m, "device");
        auto bone = field<std::string>(m, "bone");
        BindMode mode = m.contains("mode") ? parse_bind_mode(field<std::string>(m, "mode")) : BindMode::LocationOnly;
        rig_.bind_device(device, bone, mode);
        return {{"device", device}, {"bone", bone}, {"mode", to_string(mode)}};
    }

    io::json cmd_set_jig(const io::json& m) {
        std::vector<std::string> devices;
        if (m.contains("devices")) devices = field<std::vector<std::string>>(m, "devices");
        else devices.push_back(field<std::string>(m, "device"));
        if (devices.empty()) throw malformed("set_jig needs a device");

        // Any jig touching these devices is replaced.
        for (std::size_t i = jigs_.size(); i-- > 0;) {
            bool overlaps = false;
            for (const auto& d : jigs_[i].devices)
                overlaps = overlaps || std::find(devices.begin(), devices.end(), d) != devices.end();
            if (overlaps) {
                jigs_.erase(jigs_.begin() + static_cast<std::ptrdiff_t>(i));
                jig_ids_.erase(jig_ids_.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
        if (!m.contains("jig") || m["jig"].is_null()) return {{"jig", nullptr}};

        JigConfig config = m["jig"].is_string() ? jig_preset(m["jig"].get<std::string>()) : io::jig_from_json(m["jig"]);
        validate(config);
        if (devices.size() != jig_device_count(config))
            throw malformed(std::string(jig_kind(config)) + " jig needs " + std::to_string(jig_device_count(config)) +
                            " device(s)");
        std::string id = "jig" + std::to_string(++jig_counter_);
        jigs_.push_back({devices, config, {}});
        jig_ids_.push_back(id);
        return {{"jig", id}, {"kind", jig_kind(config)}};
    }

    std::string fresh_id(const io::json& m, const std::string& prefix, std::size_t& counter, bool taken_check_traj) {
        std::string id = m.contains("id") ? field<std::string>(m, "id") : prefix + std::to_string(++counter);
        bool taken = taken_check_traj ? find_trajectory(trajectories_, id) != nullptr
                                      : std::any_of(takes_.begin(), takes_.end(), [&](const Take& t) { return t.id == id; });
        if (id.empty() || taken) throw malformed("id '" + id + "' is empty or already in use");
        return id;
    }

    io::json cmd_record_start(const io::json& m, double clock) {
        if (mode_ != EngineMode::Idle) throw bad_mode(std::string("cannot record while ") + std::string(to_string(mode_)));
        auto kind = field<std::string>(m, "kind");
        if (kind == "trajectory") {
            std::string device;
            if (m.contains("device")) device = field<std::string>(m, "device");
            else if (!rig_.bindings().empty()) device = rig_.bindings().front().device;
            else throw malformed("record_start trajectory needs a device");
            double period = finite_field(m, "sample_period", kDefaultSamplePeriod);
            std::string id = fresh_id(m, "traj", traj_counter_, true);
            traj_recorder_.emplace(period);
            traj_recorder_->begin(clock, id);
            traced_device_ = device;
            mode_ = EngineMode::RecordingTrajectory;
            return {{"kind", kind}, {"id", id}, {"device", device}};
        }
        if (kind == "take") {
            if (rig_.bindings().empty()) throw Error(ErrorCode::NoBindings, "bind a device before recording a take");
            std::vector<std::string> bound;
            for (const auto& b : rig_.bindings()) bound.push_back(b.bone);
            std::string id = fresh_id(m, "take", take_counter_, false);
            take_recorder_ = TakeRecorder(finite_field(m, "sample_period", Take::kDefaultTakePeriod));
            take_recorder_.begin(rig_.armature(), bound, clock, id);
            mode_ = EngineMode::RecordingTake;
            return {{"kind", kind}, {"id", id}};
        }
        throw malformed("record kind must be 'trajectory' or 'take'");
    }

    io::json cmd_record_stop(double clock) {
        if (mode_ == EngineMode::RecordingTrajectory) {
            mode_ = EngineMode::Idle;
            auto recorder = std::move(*traj_recorder_);
            traj_recorder_.reset();
            traced_device_.reset();
            Trajectory t = recorder.end(clock);
            trajectories_.push_back(t);
            return {{"kind", "trajectory"}, {"id", t.id}, {"waypoints", t.waypoints.size()}, {"duration", t.duration()}};
        }
        if (mode_ == EngineMode::RecordingTake) {
            mode_ = EngineMode::Idle;
            Take t = take_recorder_.end();
            takes_.push_back(t);
            return {{"kind", "take"}, {"id", t.id}, {"duration", t.duration}, {"bones", t.bound_bones}};
        }
        throw bad_mode("nothing is being recorded");
    }

    io::json cmd_replay(const io::json& m, double clock) {
        if (mode_ != EngineMode::Idle) throw bad_mode(std::string("cannot replay while ") + std::string(to_string(mode_)));
        auto ids = field<std::vector<std::string>>(m, "ids");
        if (ids.empty()) throw malformed("replay needs at least one trajectory id");
        double speed = finite_field(m, "speed", 1.0);
        if (!(speed > 0)) throw malformed("replay speed must be positive");
        std::size_t window = m.contains("window") ? field<std::size_t>(m, "window") : kReplayWindow;
        if (window < 1) throw malformed("replay window must be at least 1");
        double end = clock;
        std::vector<ReplayCursor> cursors;
        for (const auto& id : ids) {
            const Trajectory& t = trajectory(id);
            cursors.push_back({id, clock, speed, window});
            end = std::max(end, replay_end_time(cursors.back(), t));
        }
        cursors_ = std::move(cursors);
        mode_ = EngineMode::Replaying;
        return {{"ids", ids}, {"speed", speed}, {"start", clock}, {"end", end}};
    }

    io::json cmd_edit(const io::json& m) {
        if (mode_ != EngineMode::Idle) throw bad_mode(std::string("cannot edit while ") + std::string(to_string(mode_)));
        if (trajectories_.empty()) throw unknown_id("no trajectory to edit");
        std::string id = m.contains("id") ? field<std::string>(m, "id") : trajectories_.back().id;
        Trajectory& t = trajectory(id);
        auto op = field<std::string>(m, "op");
        if (op == "translate") {
            if (!m.contains("delta")) throw malformed("translate needs delta");
            Vec3 delta = io::vec3_from_json(m["delta"]);
            if (!is_finite(delta)) throw malformed("delta must be finite");
            t = translate_traj(std::move(t), delta);
        } else if (op == "rotate") {
            auto axis_name = m.contains("axis") ? field<std::string>(m, "axis") : std::string("y");
            Axis axis = axis_name == "x" ? Axis::X : axis_name == "y" ? Axis::Y : axis_name == "z" ? Axis::Z
                                                                                 : throw malformed("axis must be x, y or z");
            t = rotate_traj(std::move(t), axis, finite_field(m, "angle", kRotateStepRadians));
        } else if (op == "zoom") {
            double factor = finite_field(m, "factor", kZoomStepFactor);
            if (!(factor > 0)) throw malformed("zoom factor must be positive");
            t = zoom_traj(std::move(t), factor);
        } else {
            throw malformed("edit op must be translate, rotate or zoom");
        }
        return {{"id", id}, {"op", op}, {"centroid", io::to_json(centroid(t))}};
    }

    io::json cmd_layer(const io::json& m) {
        if (mode_ == EngineMode::RecordingTake) throw bad_mode("cannot layer while recording a take");
        const Take& t = take(field<std::string>(m, "take"));
        double offset = finite_field(m, "offset", 0.0);
        if (!(offset >= 0)) throw malformed("layer offset must be non-negative");
        timeline_ = layer_takes(std::move(timeline_), t, offset);
        return {{"take", t.id}, {"offset", offset}, {"entries", timeline_.entries.size()},
                {"duration", timeline_.duration()}};
    }

    io::json cmd_calibrate(const io::json& m) {
        if (mode_ == EngineMode::RecordingTrajectory || mode_ == EngineMode::RecordingTake)
            throw bad_mode("cannot calibrate while recording");
        if (m.value("clear", false)) {
            calibration_.reset();
            return {{"calibrated", false}};
        }
        SimilarityTransform s;
        if (m.contains("readings")) {
            const auto& r = m["readings"];
            if (!r.is_array() || r.size() != 4) throw malformed("readings must hold 4 points");
            CalibrationProbe probe;
            for (std::size_t i = 0; i < 4; ++i) probe.readings[i] = io::vec3_from_json(r[i]);
            probe.t = finite_field(m, "t", kDefaultCubeSpacing);
            s = to_similarity(calibrate_four_point(probe));
        } else if (m.contains("pairs")) {
            CorrespondenceSet pairs;
            for (const auto& p : m["pairs"]) pairs.push_back({io::vec3_from_json(p.at("src")), io::vec3_from_json(p.at("dst"))});
            s = fit_similarity_lsq(pairs);
        } else if (m.contains("map")) {
            s = io::similarity_from_json(m["map"]);
        } else {
            throw malformed("calibrate needs readings, pairs, map or clear");
        }
        calibration_ = s;
        return {{"calibrated", true}, {"map", io::to_json(s)}};
    }

    io::json cmd_load_armature(const io::json& m) {
        if (mode_ != EngineMode::Idle) throw bad_mode("armatures can only be loaded while idle");
        Armature arm = m.contains("preset") ? preset_armature(field<std::string>(m, "preset"))
                       : m.contains("armature") ? io::armature_from_json(m["armature"])
                                                : throw malformed("load_armature needs preset or armature");
        rig_ = RigSession(std::move(arm), config_.max_devices);
        takes_.clear();
        timeline_ = {};
        return {{"bones", rig_.armature().bones.size()}};
    }

    Trajectory& trajectory(const std::string& id) {
        for (auto& t : trajectories_)
            if (t.id == id) return t;
        throw unknown_id("no trajectory '" + id + "'");
    }

    const Take& take(const std::string& id) const {
        for (const auto& t : takes_)
            if (t.id == id) return t;
        throw unknown_id("no take '" + id + "'");
    }

    void drain_samples(double clock) {
        if (!config_.sample_time_driven) {
            for (auto& s : pending_) raw_[s.device] = s.pose();
            pending_.clear();
            return;
        }
        if (pending_unsorted_) pending_ = sorted_by_time(std::move(pending_));
        pending_unsorted_ = false;
        std::size_t n = 0;
        while (n < pending_.size() && pending_[n].t <= clock + kTickSlack) {
            raw_[pending_[n].device] = pending_[n].pose();
            ++n;
        }
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(n));
    }

    Pose calibrated(const Pose& p) const {
        if (!calibration_) return p;
        return {apply_similarity(*calibration_, p.position),
                normalized(from_matrix(calibration_->rotation) * p.orientation)};
    }

    void advance_replay(double clock) {
        cursor_frames_.clear();
        if (mode_ != EngineMode::Replaying) return;
        bool all_finished = true;
        for (const auto& c : cursors_) {
            const Trajectory* t = find_trajectory(trajectories_, c.trajectory_id);
            ReplayFrame f = replay_eval(c, *t, clock);
            all_finished = all_finished && f.finished;
            cursor_frames_.push_back({0, c.trajectory_id, f});
        }
        if (all_finished) stop_replay();
    }

    void stop_replay() {
        cursors_.clear();
        mode_ = EngineMode::Idle;
    }

    EngineConfig config_;
    double dt_ = 1.0 / 60.0;
    std::uint64_t snapshot_every_ = 2;
    std::uint64_t ticks_ = 0;
    EngineMode mode_ = EngineMode::Idle;

    RigSession rig_;
    std::vector<JigAssignment> jigs_;
    std::vector<std::string> jig_ids_;
    std::optional<SimilarityTransform> calibration_;
    std::map<std::string, Pose> raw_;
    std::map<std::string, Pose> filtered_;

    std::optional<TrajectoryRecorder> traj_recorder_;
    std::optional<std::string> traced_device_;
    TakeRecorder take_recorder_;
    std::vector<ReplayCursor> cursors_;
    std::vector<LayeredFrame> cursor_frames_;

    std::vector<Trajectory> trajectories_;
    std::vector<Take> takes_;
    Timeline timeline_;
    std::size_t traj_counter_ = 0;
    std::size_t take_counter_ = 0;
    std::size_t jig_counter_ = 0;

    std::mutex inbox_mutex_;
    std::deque<Inbound> commands_;
    std::vector<StreamSample> samples_;
    std::vector<StreamSample> pending_;
    bool pending_unsorted_ = false;
};

} // namespace jigsketch
