#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "hearthguard/error.hpp"
#include "hearthguard/meshbus/broker.hpp"
#include "hearthguard/meshbus/frame.hpp"

namespace hearthguard::meshbus {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

/// "host:port", ":port" or "port".
inline Endpoint parse_endpoint(const std::string& s) {
    Endpoint ep;
    std::string port = s;
    if (const auto colon = s.rfind(':'); colon != std::string::npos) {
        if (colon > 0) ep.host = s.substr(0, colon);
        port = s.substr(colon + 1);
    }
    try {
        std::size_t used = 0;
        const int p = std::stoi(port, &used);
        if (used != port.size() || p < 0 || p > 65535) throw std::invalid_argument("range");
        ep.port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad endpoint '" + s + "', expected host:port");
    }
    return ep;
}

namespace detail {

inline std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const FrameTooLarge*>(&e)) return "FrameTooLarge";
    if (dynamic_cast<const MalformedFrame*>(&e)) return "MalformedFrame";
    if (dynamic_cast<const InvalidTopic*>(&e)) return "InvalidTopic";
    if (dynamic_cast<const InvalidFilter*>(&e)) return "InvalidFilter";
    if (dynamic_cast<const NotConnected*>(&e)) return "NotConnected";
    return "Error";
}

/// Applies one inbound frame for a network client. Replies go through `reply`.
template <typename Reply>
void dispatch(Broker& broker, Broker::ClientId id, const Frame& f, Reply&& reply) {
    try {
        switch (f.op) {
            case Op::connect: reply(make_ack(f.id)); break;
            case Op::pub: broker.publish(id, f); break;
            case Op::sub:
                validate_frame(f);
                broker.subscribe(id, *f.topic);
                reply(make_ack(f.id));
                break;
            case Op::unsub:
                validate_frame(f);
                broker.unsubscribe(id, *f.topic);
                reply(make_ack(f.id));
                break;
            case Op::ping: reply(Frame{Op::pong, std::nullopt, nullptr, false, f.id}); break;
            case Op::pong:
            case Op::ack: break;
        }
    } catch (const Error& e) {
        reply(make_ack(f.id, error_kind(e) + ": " + e.what()));
    }
}

/// Runs an io_context on a background thread until stopped.
class IoThread {
public:
    IoThread() : guard_(asio::make_work_guard(io_)) {}
    ~IoThread() { stop(); }
    asio::io_context& io() { return io_; }
    void start() {
        thread_ = std::thread([this] { io_.run(); });
    }
    void stop() {
        guard_.reset();
        io_.stop();
        if (thread_.joinable()) thread_.join();
    }

private:
    asio::io_context io_;
    asio::executor_work_guard<asio::io_context::executor_type> guard_;
    std::thread thread_;
};

}  // namespace detail

// ------------------------------------------------------------------ TCP server

class TcpServer {
public:
    /// Binds immediately; port 0 picks a free port.
    TcpServer(Broker& broker, const Endpoint& ep) : broker_(broker), acceptor_(io_.io()) {
        try {
            const tcp::endpoint at(asio::ip::make_address(ep.host), ep.port);
            acceptor_.open(at.protocol());
            acceptor_.set_option(asio::socket_base::reuse_address(true));
            acceptor_.bind(at);
            acceptor_.listen();
        } catch (const std::exception& e) {
            throw BindFailure("tcp bind " + ep.host + ":" + std::to_string(ep.port) + ": " + e.what());
        }
        accept();
        io_.start();
    }
    ~TcpServer() { stop(); }
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

    void stop() {
        if (stopped_.exchange(true)) return;
        io_.stop();
        for (auto& w : sessions_)
            if (auto s = w.lock()) s->detach();
        sessions_.clear();
        beast::error_code ignored;
        acceptor_.close(ignored);
    }

private:
    class Session : public std::enable_shared_from_this<Session> {
    public:
        Session(tcp::socket sock, Broker& broker) : sock_(std::move(sock)), broker_(broker) {
            beast::error_code ignored;
            sock_.set_option(tcp::no_delay(true), ignored);
        }

        void start() {
            std::weak_ptr<Session> weak = shared_from_this();
            auto ex = sock_.get_executor();
            id_ = broker_.connect("tcp", [weak, ex](const Frame& f) {
                std::string bytes = encode_tcp(f);
                asio::post(ex, [weak, bytes = std::move(bytes)]() mutable {
                    if (auto s = weak.lock()) s->send(std::move(bytes));
                });
            });
            read_header();
        }

        /// Drops the broker registration; used once the io thread has stopped.
        void detach() {
            if (closed_) return;
            closed_ = true;
            broker_.disconnect(id_);
        }

    private:
        void read_header() {
            auto self = shared_from_this();
            asio::async_read(sock_, asio::buffer(header_), [self](beast::error_code ec, std::size_t) {
                if (ec) return self->close();
                const auto n = decode_length(self->header_.data());
                if (n > kMaxFrameBytes) {
                    self->fail(make_ack(0, "FrameTooLarge: declared length " + std::to_string(n)));
                    return;
                }
                self->body_.resize(n);
                self->read_body();
            });
        }

        void read_body() {
            auto self = shared_from_this();
            asio::async_read(sock_, asio::buffer(body_), [self](beast::error_code ec, std::size_t) {
                if (ec) return self->close();
                Frame f;
                try {
                    f = decode_json(self->body_);
                } catch (const Error& e) {
                    self->fail(make_ack(0, detail::error_kind(e) + ": " + e.what()));
                    return;
                }
                detail::dispatch(self->broker_, self->id_, f,
                                 [&](const Frame& r) { self->send(encode_tcp(r)); });
                self->read_header();
            });
        }

        /// Sends an error ack, then closes once it is written.
        void fail(const Frame& ack) {
            close_after_write_ = true;
            send(encode_tcp(ack));
        }

        void send(std::string bytes) {
            if (closed_) return;
            out_.push_back(std::move(bytes));
            if (out_.size() == 1) write_next();
        }

        void write_next() {
            auto self = shared_from_this();
            asio::async_write(sock_, asio::buffer(out_.front()), [self](beast::error_code ec, std::size_t) {
                if (ec) return self->close();
                self->out_.pop_front();
                if (!self->out_.empty())
                    self->write_next();
                else if (self->close_after_write_)
                    self->close();
            });
        }

        void close() {
            if (closed_) return;
            closed_ = true;
            broker_.disconnect(id_);
            beast::error_code ignored;
            sock_.shutdown(tcp::socket::shutdown_both, ignored);
            sock_.close(ignored);
        }

        tcp::socket sock_;
        Broker& broker_;
        Broker::ClientId id_ = 0;
        std::array<unsigned char, 4> header_{};
        std::string body_;
        std::deque<std::string> out_;
        bool close_after_write_ = false;
        bool closed_ = false;
    };

    void accept() {
        acceptor_.async_accept([this](beast::error_code ec, tcp::socket sock) {
            if (ec) return;
            std::erase_if(sessions_, [](const auto& w) { return w.expired(); });
            auto session = std::make_shared<Session>(std::move(sock), broker_);
            session->start();
            sessions_.push_back(session);
            accept();
        });
    }

    Broker& broker_;
    detail::IoThread io_;
    tcp::acceptor acceptor_;
    std::vector<std::weak_ptr<Session>> sessions_;
    std::atomic<bool> stopped_{false};
};

// ------------------------------------------------------------ WebSocket server

class WsServer {
public:
    WsServer(Broker& broker, const Endpoint& ep) : broker_(broker), acceptor_(io_.io()) {
        try {
            const tcp::endpoint at(asio::ip::make_address(ep.host), ep.port);
            acceptor_.open(at.protocol());
            acceptor_.set_option(asio::socket_base::reuse_address(true));
            acceptor_.bind(at);
            acceptor_.listen();
        } catch (const std::exception& e) {
            throw BindFailure("websocket bind " + ep.host + ":" + std::to_string(ep.port) + ": " + e.what());
        }
        accept();
        io_.start();
    }
    ~WsServer() { stop(); }
    WsServer(const WsServer&) = delete;
    WsServer& operator=(const WsServer&) = delete;

    std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

    void stop() {
        if (stopped_.exchange(true)) return;
        io_.stop();
        for (auto& w : sessions_)
            if (auto s = w.lock()) s->detach();
        sessions_.clear();
        beast::error_code ignored;
        acceptor_.close(ignored);
    }

private:
    class Session : public std::enable_shared_from_this<Session> {
    public:
        Session(tcp::socket sock, Broker& broker) : ws_(std::move(sock)), broker_(broker) {
            ws_.read_message_max(kMaxFrameBytes);
            ws_.text(true);
        }

        void start() {
            auto self = shared_from_this();
            ws_.async_accept([self](beast::error_code ec) {
                if (ec) return;
                std::weak_ptr<Session> weak = self;
                auto ex = self->ws_.get_executor();
                self->id_ = self->broker_.connect("ws", [weak, ex](const Frame& f) {
                    std::string text = encode_json(f);
                    asio::post(ex, [weak, text = std::move(text)]() mutable {
                        if (auto s = weak.lock()) s->send(std::move(text));
                    });
                });
                self->connected_ = true;
                self->read();
            });
        }

        void detach() {
            if (closed_) return;
            closed_ = true;
            if (connected_) broker_.disconnect(id_);
        }

    private:
        void read() {
            auto self = shared_from_this();
            ws_.async_read(in_, [self](beast::error_code ec, std::size_t) {
                if (ec == websocket::error::message_too_big) {
                    self->fail(make_ack(0, "FrameTooLarge: message exceeds limit"));
                    return;
                }
                if (ec) return self->close();
                const std::string text = beast::buffers_to_string(self->in_.data());
                self->in_.consume(self->in_.size());
                Frame f;
                try {
                    f = decode_json(text);
                } catch (const Error& e) {
                    self->fail(make_ack(0, detail::error_kind(e) + ": " + e.what()));
                    return;
                }
                detail::dispatch(self->broker_, self->id_, f, [&](const Frame& r) { self->send(encode_json(r)); });
                self->read();
            });
        }

        void fail(const Frame& ack) {
            close_after_write_ = true;
            send(encode_json(ack));
        }

        void send(std::string text) {
            if (closed_) return;
            out_.push_back(std::move(text));
            if (out_.size() == 1) write_next();
        }

        void write_next() {
            auto self = shared_from_this();
            ws_.async_write(asio::buffer(out_.front()), [self](beast::error_code ec, std::size_t) {
                if (ec) return self->close();
                self->out_.pop_front();
                if (!self->out_.empty())
                    self->write_next();
                else if (self->close_after_write_)
                    self->ws_.async_close(websocket::close_code::policy_error,
                                          [self](beast::error_code) { self->close(); });
            });
        }

        void close() {
            if (closed_) return;
            closed_ = true;
            if (connected_) broker_.disconnect(id_);
            beast::error_code ignored;
            beast::get_lowest_layer(ws_).shutdown(tcp::socket::shutdown_both, ignored);
            beast::get_lowest_layer(ws_).close(ignored);
        }

        websocket::stream<tcp::socket> ws_;
        Broker& broker_;
        Broker::ClientId id_ = 0;
        beast::flat_buffer in_;
        std::deque<std::string> out_;
        bool connected_ = false;
        bool close_after_write_ = false;
        bool closed_ = false;
    };

    void accept() {
        acceptor_.async_accept([this](beast::error_code ec, tcp::socket sock) {
            if (ec) return;
            std::erase_if(sessions_, [](const auto& w) { return w.expired(); });
            auto session = std::make_shared<Session>(std::move(sock), broker_);
            session->start();
            sessions_.push_back(session);
            accept();
        });
    }

    Broker& broker_;
    detail::IoThread io_;
    tcp::acceptor acceptor_;
    std::vector<std::weak_ptr<Session>> sessions_;
    std::atomic<bool> stopped_{false};
};

// --------------------------------------------------------------------- clients

/// Single-threaded TCP client. A read is kept outstanding; `receive` pumps the
/// io_context until a frame is available or the timeout passes.
class TcpClient {
public:
    TcpClient(const std::string& host, std::uint16_t port) : sock_(io_) {
        tcp::resolver resolver(io_);
        asio::connect(sock_, resolver.resolve(host, std::to_string(port)));
        sock_.set_option(tcp::no_delay(true));
        start_read();
    }
    ~TcpClient() {
        beast::error_code ignored;
        sock_.close(ignored);
    }

    void send(const Frame& f) { send_raw(encode_tcp(f)); }

    /// Writes bytes as-is, for exercising the framing.
    void send_raw(const std::string& bytes) {
        bool done = false;
        beast::error_code err;
        asio::async_write(sock_, asio::buffer(bytes), [&](beast::error_code ec, std::size_t) {
            err = ec;
            done = true;
        });
        while (!done) {
            io_.restart();
            io_.run_one();
        }
        if (err) throw NotConnected("send failed: " + err.message());
    }

    std::optional<Frame> receive(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (inbox_.empty()) {
            if (closed_) throw NotConnected("connection closed");
            const auto now = std::chrono::steady_clock::now();
            if (now >= deadline) return std::nullopt;
            io_.restart();
            io_.run_one_for(deadline - now);
        }
        Frame f = std::move(inbox_.front());
        inbox_.pop_front();
        return f;
    }

    /// Sends and waits for the ack with the same id; other frames stay queued.
    Frame request(const Frame& f, std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
        send(f);
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            for (auto it = inbox_.begin(); it != inbox_.end(); ++it) {
                if ((it->op == Op::ack || it->op == Op::pong) && it->id == f.id) {
                    Frame r = *it;
                    inbox_.erase(it);
                    return r;
                }
            }
            if (closed_) throw NotConnected("connection closed");
            const auto now = std::chrono::steady_clock::now();
            if (now >= deadline) throw NotConnected("no reply to frame " + std::to_string(f.id));
            io_.restart();
            io_.run_one_for(deadline - now);
        }
    }

    bool closed() const { return closed_; }

private:
    void start_read() {
        sock_.async_read_some(asio::buffer(chunk_), [this](beast::error_code ec, std::size_t n) {
            if (ec) {
                closed_ = true;
                return;
            }
            decoder_.feed(std::string_view(chunk_.data(), n));
            while (auto f = decoder_.next()) inbox_.push_back(std::move(*f));
            start_read();
        });
    }

    asio::io_context io_;
    tcp::socket sock_;
    std::array<char, 65536> chunk_{};
    TcpFrameDecoder decoder_;
    std::deque<Frame> inbox_;
    bool closed_ = false;
};

/// Single-threaded WebSocket client with the same receive model as TcpClient.
class WsClient {
public:
    WsClient(const std::string& host, std::uint16_t port) : ws_(io_) {
        tcp::resolver resolver(io_);
        asio::connect(ws_.next_layer(), resolver.resolve(host, std::to_string(port)));
        ws_.handshake(host + ":" + std::to_string(port), "/");
        ws_.text(true);
        ws_.read_message_max(kMaxFrameBytes * 2);
        start_read();
    }
    ~WsClient() {
        beast::error_code ignored;
        beast::get_lowest_layer(ws_).close(ignored);
    }

    void send(const Frame& f) { send_text(encode_json(f)); }

    void send_text(const std::string& text) {
        bool done = false;
        beast::error_code err;
        ws_.async_write(asio::buffer(text), [&](beast::error_code ec, std::size_t) {
            err = ec;
            done = true;
        });
        while (!done) {
            io_.restart();
            io_.run_one();
        }
        if (err) throw NotConnected("send failed: " + err.message());
    }

    std::optional<Frame> receive(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (inbox_.empty()) {
            if (closed_) throw NotConnected("connection closed");
            const auto now = std::chrono::steady_clock::now();
            if (now >= deadline) return std::nullopt;
            io_.restart();
            io_.run_one_for(deadline - now);
        }
        Frame f = std::move(inbox_.front());
        inbox_.pop_front();
        return f;
    }

    Frame request(const Frame& f, std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
        send(f);
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            for (auto it = inbox_.begin(); it != inbox_.end(); ++it) {
                if ((it->op == Op::ack || it->op == Op::pong) && it->id == f.id) {
                    Frame r = *it;
                    inbox_.erase(it);
                    return r;
                }
            }
            if (closed_) throw NotConnected("connection closed");
            const auto now = std::chrono::steady_clock::now();
            if (now >= deadline) throw NotConnected("no reply to frame " + std::to_string(f.id));
            io_.restart();
            io_.run_one_for(deadline - now);
        }
    }

    bool closed() const { return closed_; }

private:
    void start_read() {
        ws_.async_read(in_, [this](beast::error_code ec, std::size_t) {
            if (ec) {
                closed_ = true;
                return;
            }
            inbox_.push_back(decode_json(beast::buffers_to_string(in_.data())));
            in_.consume(in_.size());
            start_read();
        });
    }

    asio::io_context io_;
    websocket::stream<tcp::socket> ws_;
    beast::flat_buffer in_;
    std::deque<Frame> inbox_;
    bool closed_ = false;
};

}  // namespace hearthguard::meshbus
