#include <jigsketch/server.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace jigsketch;
using namespace jigsketch::server;
using io::json;

namespace {

std::filesystem::path make_static_dir() {
    auto dir = std::filesystem::temp_directory_path() / ("jigsketch_static_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir / "js");
    std::ofstream(dir / "index.html") << "<!doctype html><title>viewport</title>\n";
    std::ofstream(dir / "js" / "app.js") << "console.log('hi');\n";
    return dir;
}

struct HttpResult {
    unsigned status = 0;
    std::string content_type;
    std::string body;
};

HttpResult http_get(unsigned short port, const std::string& target, http::verb verb = http::verb::get) {
    net::io_context ioc;
    beast::tcp_stream stream(ioc);
    stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    http::request<http::empty_body> req{verb, target, 11};
    req.set(http::field::host, "localhost");
    http::write(stream, req);
    beast::flat_buffer buffer;
    http::response_parser<http::string_body> parser;
    if (verb == http::verb::head) parser.skip(true);
    http::read(stream, buffer, parser);
    auto res = parser.release();
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return {res.result_int(), std::string(res[http::field::content_type]), res.body()};
}

class WsClient {
public:
    explicit WsClient(unsigned short port) : ws_(ioc_) {
        beast::get_lowest_layer(ws_).connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
        beast::get_lowest_layer(ws_).expires_after(std::chrono::seconds(10));
        ws_.handshake("localhost", "/ws");
    }

    void send(const json& j) { ws_.write(net::buffer(j.dump())); }

    json receive() {
        beast::flat_buffer buffer;
        beast::get_lowest_layer(ws_).expires_after(std::chrono::seconds(10));
        ws_.read(buffer);
        return json::parse(beast::buffers_to_string(buffer.data()));
    }

    /// Reads until a reply (ack/error/hello) carrying `seq` arrives.
    json reply(int seq) {
        for (int i = 0; i < 2000; ++i) {
            auto m = receive();
            if (m.at("type") != "snapshot" && m.contains("seq") && m["seq"] == seq) return m;
        }
        return nullptr;
    }

    template <class Pred>
    json snapshot_where(Pred pred) {
        for (int i = 0; i < 2000; ++i) {
            auto m = receive();
            if (m.at("type") == "snapshot" && pred(m)) return m;
        }
        return nullptr;
    }

    json command(int seq, const std::string& cmd, json fields = json::object()) {
        fields["type"] = "command";
        fields["seq"] = seq;
        fields["cmd"] = cmd;
        send(fields);
        return reply(seq);
    }

private:
    net::io_context ioc_;
    websocket::stream<beast::tcp_stream> ws_;
};

struct LiveServer {
    LiveServer(Armature arm = preset_legs(), EngineConfig engine_cfg = live_config())
        : dir(make_static_dir()), engine(std::move(arm), engine_cfg), server(engine, config(dir)) {
        server.start();
    }
    ~LiveServer() {
        server.stop();
        std::filesystem::remove_all(dir);
    }

    static EngineConfig live_config() {
        EngineConfig c;
        c.sample_time_driven = false;
        return c;
    }
    static ServerConfig config(const std::filesystem::path& dir) {
        ServerConfig c;
        c.port = 0;
        c.udp_port = 0;
        c.static_dir = dir.string();
        return c;
    }

    std::filesystem::path dir;
    Engine engine;
    Server server;
};

} // namespace

TEST(StaticPathTest, Resolution) {
    std::filesystem::path root = "/srv/ui";
    EXPECT_EQ(resolve_static(root, "/"), root / "index.html");
    EXPECT_EQ(resolve_static(root, "/js/app.js?v=3"), root / "js" / "app.js");
    EXPECT_EQ(resolve_static(root, "/a%20b.css"), root / "a b.css");
    EXPECT_EQ(resolve_static(root, "/sub/"), root / "sub" / "index.html");
    EXPECT_FALSE(resolve_static(root, "/../etc/passwd"));
    EXPECT_FALSE(resolve_static(root, "/js/%2e%2e/%2e%2e/secret"));
    EXPECT_FALSE(resolve_static(root, "/%zz"));
    EXPECT_FALSE(resolve_static(root, "relative"));
    EXPECT_FALSE(resolve_static({}, "/index.html"));
    EXPECT_EQ(mime_type("a.js"), "text/javascript; charset=utf-8");
}

TEST(ServerTest, ServesStaticAssets) {
    LiveServer live;
    auto port = live.server.port();
    auto index = http_get(port, "/");
    EXPECT_EQ(index.status, 200u);
    EXPECT_EQ(index.content_type, "text/html; charset=utf-8");
    EXPECT_NE(index.body.find("viewport"), std::string::npos);
    auto js = http_get(port, "/js/app.js");
    EXPECT_EQ(js.status, 200u);
    EXPECT_EQ(js.content_type, "text/javascript; charset=utf-8");
    EXPECT_EQ(http_get(port, "/missing.css").status, 404u);
    EXPECT_EQ(http_get(port, "/../../etc/passwd").status, 400u);
    EXPECT_EQ(http_get(port, "/ws").status, 426u);
    EXPECT_EQ(http_get(port, "/", http::verb::post).status, 405u);
    auto head = http_get(port, "/", http::verb::head);
    EXPECT_EQ(head.status, 200u);
    EXPECT_TRUE(head.body.empty());
}

TEST(ServerTest, HelloAndSnapshots) {
    LiveServer live;
    WsClient client(live.server.port());
    client.send({{"type", "hello"}, {"seq", 1}});
    auto hello = client.reply(1);
    ASSERT_FALSE(hello.is_null());
    EXPECT_EQ(hello.at("type"), "hello");
    EXPECT_EQ(hello.at("armature").at("bones").size(), preset_legs().bones.size());
    auto snap = client.snapshot_where([](const json&) { return true; });
    EXPECT_EQ(snap.at("mode"), "idle");
    EXPECT_EQ(snap.at("bones").size(), preset_legs().bones.size());
}

TEST(ServerTest, ErrorsEchoSeq) {
    LiveServer live;
    WsClient client(live.server.port());
    auto err = client.command(5, "edit", {{"op", "zoom"}, {"factor", -1}});
    EXPECT_EQ(err.at("type"), "error");
    EXPECT_EQ(err.at("code"), "UnknownId");  // nothing recorded yet
    err = client.command(6, "record_stop");
    EXPECT_EQ(err.at("code"), "BadMode");
    client.send({{"type", "command"}, {"seq", 7}, {"cmd", "teleport"}});
    EXPECT_EQ(client.reply(7).at("code"), "MalformedCommand");
}

TEST(ServerTest, ScriptedProtocolSession) {
    LiveServer live;
    WsClient client(live.server.port());
    int seq = 0;
    auto ok = [&](const json& m) {
        EXPECT_EQ(m.at("type"), "ack") << m.dump();
        return m;
    };
    ok(client.command(++seq, "bind", {{"device", "sim1"}, {"bone", "ankle_L.ik"}}));
    auto sample = [&](double t, double x) {
        client.send({{"type", "sample"}, {"t", t}, {"device", "sim1"}, {"pos", {x, 0.1, 0.1}}, {"quat", {1, 0, 0, 0}}});
    };
    sample(0.0, 0.0);
    ok(client.command(++seq, "record_start", {{"kind", "trajectory"}, {"device", "sim1"}}));
    for (int i = 1; i <= 20; ++i) {
        sample(i / 60.0, i * 0.005);
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    client.snapshot_where([](const json& s) {
        return s.contains("recording") && s["recording"]["waypoints"].size() >= 8;
    });
    auto stop = ok(client.command(++seq, "record_stop"));
    std::string traj = stop.at("id");

    ok(client.command(++seq, "record_start", {{"kind", "take"}}));
    for (int i = 0; i < 10; ++i) {
        sample(1 + i / 60.0, 0.1 - i * 0.005);
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    client.snapshot_where([](const json& s) { return s.contains("recording") && s["recording"]["keys"] >= 4; });
    std::string take = ok(client.command(++seq, "record_stop")).at("id");

    auto replay = ok(client.command(++seq, "replay", {{"ids", {traj}}, {"speed", 1.0}}));
    // Every replay snapshot's window matches the library evaluation for the trajectory.
    auto got = ok(client.command(++seq, "get_trajectory", {{"id", traj}}));
    Trajectory t = io::trajectory_from_json(got.at("trajectory"));
    std::size_t frames = 0;
    ReplayCursor cursor{traj, replay.at("start").get<double>(), 1.0};
    for (int i = 0; i < 400 && frames < 100; ++i) {
        auto s = client.receive();
        if (s.at("type") != "snapshot") continue;
        if (s.at("cursors").empty()) {
            if (s.at("mode") == "idle") break;
            continue;
        }
        auto f = replay_eval(cursor, t, s.at("clock").get<double>());
        json expected = json::array();
        for (std::size_t k = f.visible.begin; k < f.visible.end; ++k) expected.push_back(k);
        EXPECT_EQ(s["cursors"][0]["visible"], expected);
        ++frames;
    }
    EXPECT_GT(frames, 3u);
    auto layered = ok(client.command(++seq, "layer", {{"take", take}, {"offset", 0.5}}));
    EXPECT_EQ(layered.at("entries"), 1);
}

TEST(ServerTest, UdpSamplesReachEngine) {
    LiveServer live;
    WsClient client(live.server.port());
    client.command(1, "bind", {{"device", "vive1"}, {"bone", "ankle_L.ik"}});
    net::io_context ioc;
    udp::socket sock(ioc, udp::endpoint(udp::v4(), 0));
    std::string lines =
        "{\"t\":0.0,\"device\":\"vive1\",\"pos\":[0.5,0.2,0.1],\"quat\":[1,0,0,0]}\n"
        "garbage\n"
        "{\"t\":0.1,\"device\":\"vive2\",\"pos\":[1,2,3]}\n";
    sock.send_to(net::buffer(lines), udp::endpoint(net::ip::make_address("127.0.0.1"), *live.server.udp_port()));
    auto snap = client.snapshot_where([](const json& s) { return s.at("devices").size() == 2; });
    ASSERT_FALSE(snap.is_null());
    EXPECT_EQ(io::vec3_from_json(snap["devices"]["vive2"]["p"]), (Vec3{1, 2, 3}));
}

TEST(ServerTest, TwoClientsIndependentReplies) {
    LiveServer live;
    WsClient a(live.server.port());
    WsClient b(live.server.port());
    b.send({{"type", "command"}, {"seq", 1}, {"cmd", "bind"}, {"device", "d2"}, {"bone", "ankle_R.ik"}});
    auto ra = a.command(1, "bind", {{"device", "d1"}, {"bone", "ankle_L.ik"}});
    auto rb = b.reply(1);
    EXPECT_EQ(ra.at("device"), "d1");
    EXPECT_EQ(rb.at("device"), "d2");
    auto snap = a.snapshot_where([](const json& s) { return s.at("bindings").size() == 2; });
    EXPECT_FALSE(snap.is_null());
}
