#pragma once

// Network front end for the engine: WebSocket `/ws`, static files over HTTP,
// and newline-delimited JSON samples over UDP. One I/O thread owns every
// socket; one loop thread owns Engine::tick().

#include <jigsketch/engine.hpp>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

namespace jigsketch::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using udp = net::ip::udp;

struct ServerConfig {
    std::string host = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    std::optional<unsigned short> udp_port;
    std::string static_dir;
    /// Outgoing messages a slow WebSocket client may have queued before it is dropped.
    std::size_t max_queued = 512;
};

inline constexpr ClientId kUdpClient = 0;

inline std::string_view mime_type(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
    if (ext == ".css") return "text/css; charset=utf-8";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".wasm") return "application/wasm";
    if (ext == ".map" || ext == ".txt" || ext == ".md") return "text/plain; charset=utf-8";
    return "application/octet-stream";
}

/// Maps a request target to a file under `root`. Returns nothing for targets
/// that try to leave the root or are not plain paths.
inline std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view target) {
    if (root.empty() || target.empty() || target.front() != '/') return std::nullopt;
    target = target.substr(0, target.find_first_of("?#"));
    std::string decoded;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] == '%') {
            if (i + 2 >= target.size()) return std::nullopt;
            int value = 0;
            auto [ptr, ec] = std::from_chars(target.data() + i + 1, target.data() + i + 3, value, 16);
            if (ec != std::errc() || ptr != target.data() + i + 3) return std::nullopt;
            decoded.push_back(static_cast<char>(value));
            i += 2;
        } else {
            decoded.push_back(target[i]);
        }
    }
    if (decoded.back() == '/') decoded += "index.html";
    std::filesystem::path rel;
    std::stringstream parts(decoded.substr(1));
    for (std::string seg; std::getline(parts, seg, '/');) {
        if (seg.empty() || seg == ".") continue;
        if (seg == ".." || seg.find('\\') != std::string::npos || seg.find('\0') != std::string::npos) return std::nullopt;
        rel /= seg;
    }
    if (rel.empty()) rel = "index.html";
    return root / rel;
}

class Server;

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, Server& server, ClientId id) : ws_(std::move(socket)), server_(server), id_(id) {}

    void run(http::request<http::string_body> req);
    void send(std::shared_ptr<const std::string> text);
    void close();

private:
    void read();
    void write();

    websocket::stream<beast::tcp_stream> ws_;
    Server& server_;
    ClientId id_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, Server& server) : stream_(std::move(socket)), server_(server) {}
    void run() { read(); }

private:
    void read();
    void respond();

    beast::tcp_stream stream_;
    Server& server_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

class Server {
public:
    Server(Engine& engine, ServerConfig config) : engine_(engine), config_(std::move(config)), acceptor_(ioc_) {}
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;
    ~Server() { stop(); }

    /// Binds the sockets and starts the I/O and tick threads.
    void start() {
        auto address = net::ip::make_address(config_.host);
        tcp::endpoint endpoint{address, config_.port};
        acceptor_.open(endpoint.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(endpoint);
        acceptor_.listen(net::socket_base::max_listen_connections);
        if (config_.udp_port) {
            udp_.emplace(ioc_, udp::endpoint{address, *config_.udp_port});
            receive_udp();
        }
        accept();
        running_ = true;
        io_thread_ = std::thread([this] { ioc_.run(); });
        tick_thread_ = std::thread([this] { tick_loop(); });
    }

    void stop() {
        if (!running_.exchange(false)) return;
        if (tick_thread_.joinable()) tick_thread_.join();
        net::post(ioc_, [this] {
            beast::error_code ec;
            acceptor_.close(ec);
            if (udp_) udp_->close(ec);
            for (auto& [id, weak] : sessions_)
                if (auto s = weak.lock()) s->close();
        });
        // Give sessions a moment to send close frames, then stop hard.
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        ioc_.stop();
        if (io_thread_.joinable()) io_thread_.join();
    }

    unsigned short port() const { return acceptor_.local_endpoint().port(); }
    std::optional<unsigned short> udp_port() const {
        if (!udp_) return std::nullopt;
        return udp_->local_endpoint().port();
    }
    const ServerConfig& config() const { return config_; }
    Engine& engine() { return engine_; }

    // Called on the I/O thread by sessions.
    ClientId next_client_id() { return next_id_++; }
    void attach(ClientId id, const std::shared_ptr<WsSession>& s) { sessions_[id] = s; }
    void detach(ClientId id) { sessions_.erase(id); }
    std::size_t client_count() const { return sessions_.size(); }

private:
    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec == net::error::operation_aborted) return;
            } else {
                std::make_shared<HttpSession>(std::move(socket), *this)->run();
            }
            if (acceptor_.is_open()) accept();
        });
    }

    void receive_udp() {
        udp_->async_receive_from(net::buffer(datagram_), udp_sender_, [this](beast::error_code ec, std::size_t n) {
            if (ec == net::error::operation_aborted) return;
            if (!ec) ingest_ndjson(std::string_view(datagram_.data(), n));
            if (udp_ && udp_->is_open()) receive_udp();
        });
    }

    void ingest_ndjson(std::string_view text) {
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            auto line = text.substr(pos, end - pos);
            pos = end + 1;
            if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
            auto j = io::json::parse(line, nullptr, false);
            if (!j.is_object()) continue;
            if (!j.contains("type")) j["type"] = "sample";
            if (j["type"] != "sample") continue;
            engine_.submit(kUdpClient, std::move(j));  // bad samples are answered to nobody
        }
    }

    void tick_loop() {
        using clock = std::chrono::steady_clock;
        const auto dt = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(engine_.dt()));
        auto next = clock::now();
        while (running_) {
            auto out = engine_.tick();
            if (!out.empty()) net::post(ioc_, [this, out = std::move(out)] { deliver(out); });
            next += dt;
            auto now = clock::now();
            if (now > next + 10 * dt) next = now;  // fell far behind: skip ahead instead of bursting
            std::this_thread::sleep_until(next);
        }
    }

    void deliver(const std::vector<Outbound>& out) {
        for (const auto& o : out) {
            auto text = std::make_shared<const std::string>(o.message.dump());
            if (o.to) {
                auto it = sessions_.find(*o.to);
                if (it == sessions_.end()) continue;
                if (auto s = it->second.lock()) s->send(text);
            } else {
                for (auto& [id, weak] : sessions_)
                    if (auto s = weak.lock()) s->send(text);
            }
        }
    }

    Engine& engine_;
    ServerConfig config_;
    net::io_context ioc_;
    tcp::acceptor acceptor_;
    std::optional<udp::socket> udp_;
    udp::endpoint udp_sender_;
    std::array<char, 65536> datagram_{};
    std::map<ClientId, std::weak_ptr<WsSession>> sessions_;
    ClientId next_id_ = 1;
    std::atomic<bool> running_{false};
    std::thread io_thread_;
    std::thread tick_thread_;
};

// --- WebSocket session -----------------------------------------------------------

inline void WsSession::run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
        if (ec) return;
        self->server_.attach(self->id_, self);
        self->read();
    });
}

inline void WsSession::read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
            self->server_.detach(self->id_);
            return;
        }
        self->server_.engine().submit_text(self->id_, beast::buffers_to_string(self->buffer_.data()));
        self->buffer_.consume(self->buffer_.size());
        self->read();
    });
}

inline void WsSession::send(std::shared_ptr<const std::string> text) {
    if (closed_) return;
    if (queue_.size() >= server_.config().max_queued) {
        close();
        return;
    }
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
}

inline void WsSession::write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
            self->server_.detach(self->id_);
            return;
        }
        self->queue_.pop_front();
        if (!self->queue_.empty()) self->write();
    });
}

inline void WsSession::close() {
    if (closed_) return;
    closed_ = true;
    server_.detach(id_);
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
}

// --- HTTP session ----------------------------------------------------------------

inline void HttpSession::read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) {
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (ec) return;
        self->respond();
    });
}

inline void HttpSession::respond() {
    std::string target(req_.target());
    std::string_view path = std::string_view(target).substr(0, target.find('?'));
    if (websocket::is_upgrade(req_) && path == "/ws") {
        stream_.expires_never();
        auto id = server_.next_client_id();
        std::make_shared<WsSession>(stream_.release_socket(), server_, id)->run(std::move(req_));
        return;
    }

    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::server, "jigsketch");
    auto fail = [&](http::status status, std::string body) {
        res->result(status);
        res->set(http::field::content_type, "text/plain; charset=utf-8");
        res->body() = std::move(body);
    };

    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
        fail(http::status::method_not_allowed, "method not allowed\n");
    } else if (path == "/ws") {
        fail(http::status::upgrade_required, "WebSocket upgrade required\n");
    } else if (auto file = resolve_static(server_.config().static_dir, target); !file) {
        fail(http::status::bad_request, "bad path\n");
    } else if (std::error_code fec; !std::filesystem::is_regular_file(*file, fec)) {
        fail(http::status::not_found, "not found\n");
    } else {
        std::ifstream in(*file, std::ios::binary);
        std::ostringstream content;
        content << in.rdbuf();
        res->result(http::status::ok);
        res->set(http::field::content_type, std::string(mime_type(*file)));
        res->body() = content.str();
    }
    res->prepare_payload();
    if (req_.method() == http::verb::head) res->body().clear();

    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
        if (ec) return;
        if (res->need_eof()) {
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        self->read();
    });
}

} // namespace jigsketch::server
