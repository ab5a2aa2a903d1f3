#pragma once

// Command-line driver. Every subcommand reads files, calls the library and
// writes the result; run() never exits the process so tests can call it.

#include <jigsketch/calibration.hpp>
#include <jigsketch/engine.hpp>
#include <jigsketch/io/bvh.hpp>
#include <jigsketch/io/csv.hpp>
#include <jigsketch/io/json.hpp>
#include <jigsketch/presets.hpp>
#include <jigsketch/server.hpp>
#include <jigsketch/takes.hpp>
#include <jigsketch/trajectory.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace jigsketch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

inline std::atomic<bool>& stop_requested() {
    static std::atomic<bool> flag{false};
    return flag;
}

/// Bad flag values detected after parsing; reported as usage errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- argument helpers ----------------------------------------------------------

/// A preset name, or a path to armature JSON. "legs.json" falls back to the
/// preset of the same name when no such file exists.
inline Armature load_rig(const std::string& spec) {
    if (std::filesystem::exists(spec)) return io::armature_from_json(io::read_json_file(spec));
    std::string stem = std::filesystem::path(spec).stem().string();
    for (auto name : kPresetNames)
        if (spec == name || stem == name) return preset_armature(name);
    throw Error(ErrorCode::ParseError, "no armature file or preset named '" + spec + "'");
}

/// Calibration file in either the four-point or the similarity form.
inline SimilarityTransform load_calibration(const std::string& path) {
    auto j = io::read_json_file(path);
    if (j.is_object() && j.contains("A")) return io::similarity_from_json(j);
    return to_similarity(io::coordinate_map_from_json(j));
}

inline JigConfig parse_jig_config(const std::string& spec) {
    if (spec.size() > 5 && spec.ends_with(".json")) return io::jig_from_json(io::read_json_file(spec));
    return jig_preset(spec);
}

/// "DEVICE=CONFIG", "A,B=CONFIG" or plain "CONFIG" (devices filled in later).
struct JigSpec {
    std::vector<std::string> devices;
    JigConfig config;
};

inline JigSpec parse_jig_spec(const std::string& spec) {
    JigSpec out;
    auto eq = spec.find('=');
    std::string config = spec;
    if (eq != std::string::npos) {
        std::stringstream devs(spec.substr(0, eq));
        for (std::string d; std::getline(devs, d, ',');)
            if (!d.empty()) out.devices.push_back(d);
        config = spec.substr(eq + 1);
        if (out.devices.empty()) throw UsageError("jig spec '" + spec + "' names no device");
    }
    out.config = parse_jig_config(config);
    return out;
}

inline std::vector<JigAssignment> assign_jigs(const std::vector<std::string>& specs,
                                              const std::vector<std::string>& default_devices) {
    std::vector<JigAssignment> jigs;
    for (const auto& s : specs) {
        JigSpec spec = parse_jig_spec(s);
        if (spec.devices.empty()) {
            std::size_t need = jig_device_count(spec.config);
            if (default_devices.size() < need) throw UsageError("jig '" + s + "' needs device names (DEVICE=" + s + ")");
            spec.devices.assign(default_devices.begin(), default_devices.begin() + static_cast<std::ptrdiff_t>(need));
        }
        if (spec.devices.size() != jig_device_count(spec.config))
            throw UsageError("jig '" + s + "' expects " + std::to_string(jig_device_count(spec.config)) + " device(s)");
        jigs.push_back({spec.devices, spec.config, {}});
    }
    return jigs;
}

inline BindingSpec parse_binding(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
        throw UsageError("binding '" + spec + "' must look like DEVICE=BONE[:location_only|full_pose]");
    BindingSpec b{spec.substr(0, eq), spec.substr(eq + 1), BindMode::LocationOnly};
    if (auto colon = b.bone.rfind(':'); colon != std::string::npos) {
        b.mode = parse_bind_mode(b.bone.substr(colon + 1));
        b.bone = b.bone.substr(0, colon);
    }
    return b;
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") out << text;
    else io::write_text_file(path, text);
}

// --- replay table --------------------------------------------------------------

/// Layered replay sampled every dt from 0; each cursor also gets a row at its
/// exact end time when the tick grid misses it.
inline std::vector<io::ReplayRow> replay_rows(const std::vector<ReplayCursor>& cursors,
                                              const std::vector<Trajectory>& trajectories, double dt) {
    double t_end = 0.0;
    for (const auto& c : cursors) {
        const Trajectory* t = find_trajectory(trajectories, c.trajectory_id);
        if (!t) throw Error(ErrorCode::UnknownId, "no trajectory '" + c.trajectory_id + "'");
        t_end = std::max(t_end, replay_end_time(c, *t));
    }
    struct Row {
        io::ReplayRow row;
        std::size_t cursor;
    };
    std::vector<Row> rows;
    std::vector<double> last(cursors.size(), -1.0);
    for (const auto& tick : layered_schedule(cursors, trajectories, 0.0, t_end, dt))
        for (const auto& f : tick.frames) {
            rows.push_back({{tick.clock, f.trajectory_id, f.frame.pos}, f.cursor_index});
            last[f.cursor_index] = tick.clock;
        }
    for (std::size_t i = 0; i < cursors.size(); ++i) {
        const Trajectory* t = find_trajectory(trajectories, cursors[i].trajectory_id);
        double end = replay_end_time(cursors[i], *t);
        if (last[i] < end - 1e-12) rows.push_back({{end, cursors[i].trajectory_id, t->waypoints.back().pos}, i});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.row.t < b.row.t || (a.row.t == b.row.t && a.cursor < b.cursor);
    });
    std::vector<io::ReplayRow> out;
    for (auto& r : rows) out.push_back(std::move(r.row));
    return out;
}

// --- subcommands -----------------------------------------------------------------

struct Options {
    std::string output;
    // calibrate / fit-lsq
    std::string probe, pairs, form = "coordinate";
    double cube_t = kDefaultCubeSpacing;
    // streams and rigs
    std::string stream, rig = "legs", calibration, kind = "take", device, id;
    std::vector<std::string> binds, jigs;
    double tick_rate = 60.0;
    double sample_period = kDefaultSamplePeriod;
    // trajectories
    std::vector<std::string> trajs;
    std::vector<double> translate;
    std::string rotate;
    double angle_degrees = 5.0;
    double zoom = 0.0;
    int steps = 1;
    double speed = 1.0;
    std::size_t window = kReplayWindow;
    // export
    std::vector<std::string> takes;
    std::string timeline;
    double fps = 30.0;
    // serve
    std::string host = "127.0.0.1", static_dir;
    unsigned short port = 8080;
    int udp_port = -1;
    double snapshot_rate = 30.0;
    bool virtual_clock = false;
    double run_for = 0.0;
    // presets
    bool list = false, jigs_only = false;
    std::string armature, write_dir;
};

inline int cmd_calibrate(const Options& o, std::ostream& out) {
    auto readings = io::probe_readings(io::read_points_csv(io::read_text_file(o.probe)));
    CoordinateMap map = calibrate_four_point({readings, o.cube_t});
    io::json j = o.form == "similarity" ? io::to_json(to_similarity(map)) : io::to_json(map);
    emit(o.output, io::dump(j), out);
    return kExitOk;
}

inline int cmd_fit_lsq(const Options& o, std::ostream& out, std::ostream& err) {
    CorrespondenceSet pairs;
    for (const auto& [label, p] : io::correspondence_rows(io::read_points_csv(io::read_text_file(o.pairs))))
        pairs.push_back({p.first, p.second});
    auto s = fit_similarity_lsq(pairs);
    emit(o.output, io::dump(io::to_json(s)), out);
    err << "rmse " << io::format_number(residual_rmse(s, pairs)) << " over " << pairs.size() << " pairs\n";
    return kExitOk;
}

inline std::vector<StreamSample> load_stream(const Options& o) {
    auto samples = io::read_stream_csv(io::read_text_file(o.stream));
    if (!o.calibration.empty()) samples = calibrate_stream(std::move(samples), load_calibration(o.calibration));
    return samples;
}

inline int cmd_record(const Options& o, std::ostream& out) {
    if (!(o.tick_rate > 0)) throw UsageError("--tick-rate must be positive");
    std::vector<BindingSpec> bindings;
    std::vector<std::string> devices;
    for (const auto& b : o.binds) {
        bindings.push_back(parse_binding(b));
        devices.push_back(bindings.back().device);
    }
    if (o.kind == "trajectory") {
        std::string device = !o.device.empty() ? o.device : devices.empty() ? "" : devices.front();
        if (device.empty()) throw UsageError("trajectory recording needs --device or --bind");
        auto jigs = assign_jigs(o.jigs, {device});
        auto traj = record_trajectory(load_stream(o), device, std::move(jigs), 1.0 / o.tick_rate, o.sample_period,
                                      o.id.empty() ? "traj" : o.id);
        emit(o.output, io::dump(io::to_json(traj)), out);
        return kExitOk;
    }
    if (bindings.empty()) throw UsageError("take recording needs at least one --bind DEVICE=BONE");
    auto jigs = assign_jigs(o.jigs, devices);
    Take take = record_take(load_rig(o.rig), bindings, load_stream(o), std::move(jigs), 1.0 / o.tick_rate,
                            o.id.empty() ? "take" : o.id, std::max<std::size_t>(2, bindings.size()));
    emit(o.output, io::dump(io::to_json(take)), out);
    return kExitOk;
}

inline int cmd_edit(const Options& o, std::ostream& out) {
    int ops = (o.translate.empty() ? 0 : 1) + (o.rotate.empty() ? 0 : 1) + (o.zoom == 0.0 ? 0 : 1);
    if (ops != 1) throw UsageError("give exactly one of --translate, --rotate, --zoom");
    if (o.steps < 1) throw UsageError("--steps must be at least 1");
    Trajectory t = io::trajectory_from_json(io::read_json_file(o.trajs.at(0)));
    for (int i = 0; i < o.steps; ++i) {
        if (!o.translate.empty()) {
            t = translate_traj(std::move(t), {o.translate[0], o.translate[1], o.translate[2]});
        } else if (!o.rotate.empty()) {
            Axis axis = o.rotate == "x" ? Axis::X : o.rotate == "y" ? Axis::Y : Axis::Z;
            t = rotate_traj(std::move(t), axis, o.angle_degrees * std::numbers::pi / 180.0);
        } else {
            t = zoom_traj(std::move(t), o.zoom);
        }
    }
    emit(o.output, io::dump(io::to_json(t)), out);
    return kExitOk;
}

inline int cmd_replay(const Options& o, std::ostream& out) {
    if (!(o.speed > 0)) throw UsageError("--speed must be positive");
    if (!(o.tick_rate > 0)) throw UsageError("--tick-rate must be positive");
    if (o.window < 1) throw UsageError("--window must be at least 1");
    std::vector<Trajectory> trajectories;
    std::vector<ReplayCursor> cursors;
    for (const auto& path : o.trajs) {
        trajectories.push_back(io::trajectory_from_json(io::read_json_file(path)));
        cursors.push_back({trajectories.back().id, 0.0, o.speed, o.window});
    }
    emit(o.output, io::write_replay_csv(replay_rows(cursors, trajectories, 1.0 / o.tick_rate)), out);
    return kExitOk;
}

inline int cmd_simulate_jig(const Options& o, std::ostream& out) {
    if (!(o.tick_rate > 0)) throw UsageError("--tick-rate must be positive");
    auto samples = load_stream(o);
    std::vector<std::string> devices;
    for (const auto& s : samples)
        if (std::find(devices.begin(), devices.end(), s.device) == devices.end()) devices.push_back(s.device);
    std::vector<JigAssignment> jigs;
    for (const auto& spec_text : o.jigs) {
        JigSpec spec = parse_jig_spec(spec_text);
        if (!spec.devices.empty()) {
            auto more = assign_jigs({spec_text}, {});
            jigs.insert(jigs.end(), more.begin(), more.end());
        } else if (jig_device_count(spec.config) == 1) {
            // A bare single-device jig applies to every device in the stream.
            for (const auto& d : devices) jigs.push_back({{d}, spec.config, {}});
        } else {
            auto more = assign_jigs({spec_text}, devices);
            jigs.insert(jigs.end(), more.begin(), more.end());
        }
    }
    emit(o.output, io::write_stream_csv(filter_stream(samples, std::move(jigs), 1.0 / o.tick_rate)), out);
    return kExitOk;
}

inline int cmd_export_bvh(const Options& o, std::ostream& out) {
    if (!(o.fps > 0)) throw UsageError("--fps must be positive");
    Armature arm = load_rig(o.rig);
    Timeline tl;
    if (!o.timeline.empty()) tl = io::timeline_from_json(io::read_json_file(o.timeline));
    for (const auto& spec : o.takes) {
        auto at = spec.rfind('@');
        double offset = 0.0;
        std::string path = spec;
        if (at != std::string::npos && at > 0) {
            try {
                std::size_t used = 0;
                offset = std::stod(spec.substr(at + 1), &used);
                if (used != spec.size() - at - 1) throw std::invalid_argument("trailing");
                path = spec.substr(0, at);
            } catch (const std::exception&) {
                throw UsageError("take '" + spec + "' must look like FILE[@OFFSET]");
            }
        }
        tl = layer_takes(std::move(tl), io::take_from_json(io::read_json_file(path)), offset);
    }
    io::BvhExportStats stats;
    std::string text = io::write_bvh(io::export_bvh(arm, tl, o.fps, &stats));
    emit(o.output, text, out);
    return kExitOk;
}

inline int cmd_presets(const Options& o, std::ostream& out) {
    if (!o.write_dir.empty()) {
        std::filesystem::create_directories(std::filesystem::path(o.write_dir) / "armatures");
        for (auto name : kPresetNames)
            io::write_text_file((std::filesystem::path(o.write_dir) / "armatures" / (std::string(name) + ".json")).string(),
                                io::dump(io::to_json(preset_armature(name))));
        io::write_text_file((std::filesystem::path(o.write_dir) / "jigs.json").string(), io::dump(io::jig_presets_json()));
        return kExitOk;
    }
    if (!o.armature.empty()) {
        emit(o.output, io::dump(io::to_json(preset_armature(o.armature))), out);
        return kExitOk;
    }
    if (o.jigs_only) {
        emit(o.output, io::dump(io::jig_presets_json()), out);
        return kExitOk;
    }
    std::string text = "armatures:\n";
    for (auto name : kPresetNames) text += "  " + std::string(name) + "\n";
    text += "jigs:\n";
    for (const auto& [name, cfg] : jig_presets()) text += "  " + name + "\n";
    emit(o.output, text, out);
    return kExitOk;
}

inline int cmd_serve(const Options& o, std::ostream& out) {
    EngineConfig ec;
    ec.tick_rate = o.tick_rate;
    ec.snapshot_rate = o.snapshot_rate;
    ec.sample_time_driven = o.virtual_clock;
    if (!(ec.tick_rate > 0) || !(ec.snapshot_rate > 0)) throw UsageError("rates must be positive");
    Engine engine(load_rig(o.rig), ec);
    server::ServerConfig sc;
    sc.host = o.host;
    sc.port = o.port;
    if (o.udp_port >= 0) sc.udp_port = static_cast<unsigned short>(o.udp_port);
    sc.static_dir = o.static_dir;
    server::Server srv(engine, sc);
    srv.start();
    out << "listening on http://" << o.host << ":" << srv.port() << " (WebSocket /ws";
    if (auto u = srv.udp_port()) out << ", UDP samples on " << *u;
    out << ")" << std::endl;

    stop_requested() = false;
    auto on_signal = [](int) { stop_requested() = true; };
    auto old_int = std::signal(SIGINT, on_signal);
    auto old_term = std::signal(SIGTERM, on_signal);
    auto start = std::chrono::steady_clock::now();
    while (!stop_requested()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        if (o.run_for > 0 && std::chrono::steady_clock::now() - start >= std::chrono::duration<double>(o.run_for)) break;
    }
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);
    srv.stop();
    return kExitOk;
}

// --- entry point -----------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Movement sketching engine: calibration, trajectories, rigs, jigs, takes and BVH export.", "jigsketch"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    Options o;

    auto* calibrate = app.add_subcommand("calibrate", "Four-point calibration from probe readings (label,x,y,z CSV)");
    calibrate->add_option("--probe", o.probe, "CSV with the four probe readings (x0..x3)")->required()->check(CLI::ExistingFile);
    calibrate->add_option("--t", o.cube_t, "Calibration cube spacing in meters")->capture_default_str()->check(CLI::PositiveNumber);
    calibrate->add_option("--form", o.form, "Output form")->check(CLI::IsMember({"coordinate", "similarity"}))->capture_default_str();
    calibrate->add_option("-o,--output", o.output, "Output JSON (default stdout)");

    auto* fit = app.add_subcommand("fit-lsq", "Least-squares similarity fit from src:/dst: labelled point pairs");
    fit->add_option("--pairs", o.pairs, "CSV with src:NAME and dst:NAME rows")->required()->check(CLI::ExistingFile);
    fit->add_option("-o,--output", o.output, "Output JSON (default stdout)");

    auto* record = app.add_subcommand("record", "Record a take or trajectory from a stream CSV");
    record->add_option("--stream", o.stream, "Input stream CSV")->required()->check(CLI::ExistingFile);
    record->add_option("--rig", o.rig, "Armature JSON file or preset name")->capture_default_str();
    record->add_option("--bind", o.binds, "DEVICE=BONE[:location_only|full_pose] (repeatable)");
    record->add_option("--jig", o.jigs, "Jig preset or JSON file, optionally DEVICE=... or A,B=... (repeatable)");
    record->add_option("--kind", o.kind, "What to record")->check(CLI::IsMember({"take", "trajectory"}))->capture_default_str();
    record->add_option("--device", o.device, "Device traced by a trajectory recording");
    record->add_option("--calibration", o.calibration, "Calibration map JSON applied to the stream")->check(CLI::ExistingFile);
    record->add_option("--tick-rate", o.tick_rate, "Engine tick rate in Hz")->capture_default_str();
    record->add_option("--sample-period", o.sample_period, "Trajectory waypoint spacing in seconds")->capture_default_str()->check(CLI::PositiveNumber);
    record->add_option("--id", o.id, "Identifier stored in the output");
    record->add_option("-o,--output", o.output, "Output JSON (default stdout)");

    auto* edit = app.add_subcommand("edit", "Translate, rotate or zoom a trajectory");
    edit->add_option("--traj", o.trajs, "Trajectory JSON")->required()->expected(1)->check(CLI::ExistingFile);
    edit->add_option("--translate", o.translate, "Offset X,Y,Z in meters")->expected(3)->delimiter(',');
    edit->add_option("--rotate", o.rotate, "Rotate about the centroid around axis x, y or z")->check(CLI::IsMember({"x", "y", "z"}));
    edit->add_option("--angle", o.angle_degrees, "Rotation angle in degrees")->capture_default_str();
    edit->add_option("--zoom", o.zoom, "Scale about the centroid by this factor")->check(CLI::PositiveNumber);
    edit->add_option("--steps", o.steps, "Apply the edit this many times")->capture_default_str();
    edit->add_option("-o,--output", o.output, "Output JSON (default stdout)");

    auto* replay = app.add_subcommand("replay", "Replay trajectories and write cursor positions as CSV");
    replay->add_option("--traj", o.trajs, "Trajectory JSON (repeatable for layered replay)")->required()->check(CLI::ExistingFile);
    replay->add_option("--speed", o.speed, "Playback speed multiplier")->capture_default_str();
    replay->add_option("--tick-rate", o.tick_rate, "Output rows per second")->capture_default_str();
    replay->add_option("--window", o.window, "Visible waypoints ahead of the cursor")->capture_default_str();
    replay->add_option("-o,--output", o.output, "Output CSV (default stdout)");

    auto* sim = app.add_subcommand("simulate-jig", "Filter a stream CSV through jigs");
    sim->add_option("--stream", o.stream, "Input stream CSV")->required()->check(CLI::ExistingFile);
    sim->add_option("--jig", o.jigs, "Jig preset or JSON file, optionally DEVICE=... (repeatable)")->required();
    sim->add_option("--calibration", o.calibration, "Calibration map JSON applied first")->check(CLI::ExistingFile);
    sim->add_option("--tick-rate", o.tick_rate, "Simulation rate in Hz")->capture_default_str();
    sim->add_option("-o,--output", o.output, "Output stream CSV (default stdout)");

    auto* bvh = app.add_subcommand("export-bvh", "Export layered takes as BVH");
    bvh->add_option("--rig", o.rig, "Armature JSON file or preset name")->capture_default_str();
    bvh->add_option("--take", o.takes, "Take JSON, optionally FILE@OFFSET seconds (repeatable)");
    bvh->add_option("--timeline", o.timeline, "Timeline JSON")->check(CLI::ExistingFile);
    bvh->add_option("--fps", o.fps, "Frames per second")->capture_default_str();
    bvh->add_option("-o,--output", o.output, "Output BVH (default stdout)");

    auto* serve = app.add_subcommand("serve", "Run the live engine with WebSocket, HTTP and UDP endpoints");
    serve->add_option("--host", o.host, "Bind address")->capture_default_str()->envname("JIGSKETCH_HOST");
    serve->add_option("--port", o.port, "HTTP/WebSocket port (0 picks one)")->capture_default_str()->envname("JIGSKETCH_PORT");
    serve->add_option("--udp-port", o.udp_port, "UDP port for NDJSON samples (-1 disables)")->capture_default_str()->envname("JIGSKETCH_UDP_PORT");
    serve->add_option("--static", o.static_dir, "Directory of UI assets")->envname("JIGSKETCH_STATIC");
    serve->add_option("--rig", o.rig, "Armature JSON file or preset name")->capture_default_str();
    serve->add_option("--tick-rate", o.tick_rate, "Engine tick rate in Hz")->capture_default_str()->envname("JIGSKETCH_TICK_RATE");
    serve->add_option("--snapshot-rate", o.snapshot_rate, "Snapshot broadcast rate in Hz")->capture_default_str()->envname("JIGSKETCH_SNAPSHOT_RATE");
    serve->add_flag("--virtual-clock", o.virtual_clock, "Assign samples to ticks by their timestamps");
    serve->add_option("--run-for", o.run_for, "Stop after this many seconds (0 runs until interrupted)");

    auto* presets = app.add_subcommand("presets", "List or write built-in armatures and jigs");
    presets->add_option("--armature", o.armature, "Print one armature preset as JSON");
    presets->add_flag("--jigs", o.jigs_only, "Print the jig presets as JSON");
    presets->add_option("--write-dir", o.write_dir, "Write armatures/*.json and jigs.json into this directory");
    presets->add_option("-o,--output", o.output, "Output file (default stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*calibrate) return cmd_calibrate(o, out);
        if (*fit) return cmd_fit_lsq(o, out, err);
        if (*record) return cmd_record(o, out);
        if (*edit) return cmd_edit(o, out);
        if (*replay) return cmd_replay(o, out);
        if (*sim) return cmd_simulate_jig(o, out);
        if (*bvh) return cmd_export_bvh(o, out);
        if (*serve) return cmd_serve(o, out);
        if (*presets) return cmd_presets(o, out);
    } catch (const UsageError& e) {
        err << "jigsketch: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "jigsketch: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        err << "jigsketch: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

} // namespace jigsketch::cli
