#include "rotograb/server.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <csignal>
#include <deque>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "rotograb/errors.hpp"
#include "rotograb/protocol.hpp"

namespace rotograb::server {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using Message = std::shared_ptr<const std::string>;

void apply_environment(ServerOptions& options) {
    if (const char* port = std::getenv("ROTOGRAB_PORT"); port != nullptr && *port != '\0') {
        const std::string_view text(port);
        unsigned value = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0 || value >= 65535)
            throw std::invalid_argument("ROTOGRAB_PORT must be a port number below 65535");
        options.ws_port = static_cast<std::uint16_t>(value);
        options.tcp_port = static_cast<std::uint16_t>(value + 1);
    }
    if (const char* level = std::getenv("ROTOGRAB_LOG_LEVEL"); level != nullptr && *level != '\0') {
        const auto parsed = spdlog::level::from_str(level);
        if (parsed == spdlog::level::off && std::string_view(level) != "off")
            throw std::invalid_argument("ROTOGRAB_LOG_LEVEL must be a spdlog level name");
        spdlog::set_level(parsed);
    }
}

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(std::string id, service::HandService& service, std::size_t max_queue,
               std::function<void(const std::string&)> on_close)
        : id_(std::move(id)), service_(service), max_queue_(max_queue), on_close_(std::move(on_close)) {}
    virtual ~Connection() = default;

    virtual void start() = 0;
    virtual void close() = 0;

    const std::string& id() const { return id_; }

    void deliver(Message msg, bool droppable) {
        net::post(executor(), [self = shared_from_this(), msg = std::move(msg), droppable] {
            if (self->closed_) return;
            if (droppable && self->queue_.size() >= self->max_queue_) return;
            self->queue_.push_back(msg);
            if (self->queue_.size() == 1) self->write_next();
        });
    }

protected:
    virtual net::any_io_executor executor() = 0;
    virtual void write_front() = 0;

    void write_next() {
        if (!queue_.empty() && !closed_) write_front();
    }

    void on_written(beast::error_code ec) {
        if (ec) return fail(ec);
        queue_.pop_front();
        write_next();
    }

    void on_line(std::string_view line) {
        if (line.empty()) return;
        deliver(std::make_shared<const std::string>(protocol::handle_line(service_, id_, line)), false);
    }

    void fail(beast::error_code ec) {
        if (closed_) return;
        closed_ = true;
        if (ec && ec != net::error::eof && ec != websocket::error::closed && ec != net::error::operation_aborted)
            spdlog::debug("{}: {}", id_, ec.message());
        on_close_(id_);
    }

    std::deque<Message> queue_;
    bool closed_ = false;

private:
    std::string id_;
    service::HandService& service_;
    std::size_t max_queue_;
    std::function<void(const std::string&)> on_close_;
};

class TcpConnection final : public Connection {
public:
    TcpConnection(tcp::socket socket, std::string id, service::HandService& service, std::size_t max_queue,
                  std::function<void(const std::string&)> on_close)
        : Connection(std::move(id), service, max_queue, std::move(on_close)), socket_(std::move(socket)) {}

    void start() override {
        net::dispatch(socket_.get_executor(), [self = shared_this()] { self->read(); });
    }

    void close() override {
        net::post(socket_.get_executor(), [self = shared_this()] {
            beast::error_code ignored;
            self->socket_.shutdown(tcp::socket::shutdown_both, ignored);
            self->socket_.close(ignored);
        });
    }

private:
    std::shared_ptr<TcpConnection> shared_this() {
        return std::static_pointer_cast<TcpConnection>(shared_from_this());
    }

    net::any_io_executor executor() override { return socket_.get_executor(); }

    void read() {
        net::async_read_until(socket_, net::dynamic_buffer(buffer_), '\n',
                              [self = shared_this()](beast::error_code ec, std::size_t n) {
                                  if (ec) return self->fail(ec);
                                  std::string_view line(self->buffer_.data(), n - 1);
                                  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                                  self->on_line(line);
                                  self->buffer_.erase(0, n);
                                  self->read();
                              });
    }

    void write_front() override {
        out_ = *queue_.front() + '\n';
        net::async_write(socket_, net::buffer(out_),
                         [self = shared_this()](beast::error_code ec, std::size_t) { self->on_written(ec); });
    }

    tcp::socket socket_;
    std::string buffer_;
    std::string out_;
};

class WsConnection final : public Connection {
public:
    WsConnection(tcp::socket socket, std::string id, service::HandService& service, std::size_t max_queue,
                 std::function<void(const std::string&)> on_close)
        : Connection(std::move(id), service, max_queue, std::move(on_close)), ws_(std::move(socket)) {}

    void start() override {
        net::dispatch(ws_.get_executor(), [self = shared_this()] {
            self->ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
            self->ws_.text(true);
            self->ws_.async_accept([self](beast::error_code ec) {
                if (ec) return self->fail(ec);
                self->accepted_ = true;
                self->read();
                self->write_next();
            });
        });
    }

    void close() override {
        net::post(ws_.get_executor(), [self = shared_this()] {
            beast::error_code ignored;
            beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
            beast::get_lowest_layer(self->ws_).close();
        });
    }

private:
    std::shared_ptr<WsConnection> shared_this() {
        return std::static_pointer_cast<WsConnection>(shared_from_this());
    }

    net::any_io_executor executor() override { return ws_.get_executor(); }

    void read() {
        ws_.async_read(buffer_, [self = shared_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->fail(ec);
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->on_line(text);
            self->read();
        });
    }

    void write_front() override {
        if (!accepted_) return;  // resumed after the handshake
        ws_.async_write(net::buffer(*queue_.front()),
                        [self = shared_this()](beast::error_code ec, std::size_t) { self->on_written(ec); });
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    bool accepted_ = false;
};

}  // namespace

struct Server::Impl {
    Impl(service::HandService& s, ServerOptions o)
        : service(s), options(std::move(o)), ws_acceptor(ioc), tcp_acceptor(ioc), tick(ioc) {}

    service::HandService& service;
    ServerOptions options;
    net::io_context ioc;
    tcp::acceptor ws_acceptor;
    tcp::acceptor tcp_acceptor;
    net::steady_timer tick;
    std::vector<std::thread> threads;
    std::optional<net::executor_work_guard<net::io_context::executor_type>> work;

    std::mutex clients_mutex;
    std::map<std::string, std::weak_ptr<Connection>> clients;
    std::atomic<std::uint64_t> next_client{0};
    int listener = -1;
    std::uint16_t bound_ws = 0;
    std::uint16_t bound_tcp = 0;
    bool running = false;

    void bind(tcp::acceptor& acceptor, std::uint16_t port) {
        beast::error_code ec;
        const tcp::endpoint ep(net::ip::make_address(options.bind, ec), port);
        if (ec) throw Error("bad bind address '" + options.bind + "': " + ec.message());
        acceptor.open(ep.protocol(), ec);
        if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
        if (!ec) acceptor.bind(ep, ec);
        if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
        if (ec) throw Error("cannot bind " + options.bind + ":" + std::to_string(port) + ": " + ec.message());
    }

    void on_close(const std::string& id) {
        {
            std::lock_guard lock(clients_mutex);
            clients.erase(id);
        }
        service.disconnect(id);
        spdlog::info("{} disconnected", id);
    }

    template <class Conn>
    void accept(tcp::acceptor& acceptor, const char* prefix) {
        acceptor.async_accept(net::make_strand(ioc), [this, &acceptor, prefix](beast::error_code ec, tcp::socket s) {
            if (ec) return;  // acceptor closed
            const std::string id = std::string(prefix) + "-" + std::to_string(++next_client);
            auto conn = std::make_shared<Conn>(std::move(s), id, service, options.max_queue,
                                               [this](const std::string& cid) { on_close(cid); });
            {
                std::lock_guard lock(clients_mutex);
                clients[id] = conn;
            }
            spdlog::info("{} connected", id);
            conn->start();
            broadcast_to(conn, service.snapshot());
            accept<Conn>(acceptor, prefix);
        });
    }

    void broadcast_to(const std::shared_ptr<Connection>& conn, const service::SnapshotPtr& snap) {
        conn->deliver(std::make_shared<const std::string>(protocol::state_message(*snap, service.geometry())), true);
    }

    void broadcast(const service::SnapshotPtr& snap) {
        auto msg = std::make_shared<const std::string>(protocol::state_message(*snap, service.geometry()));
        std::vector<std::shared_ptr<Connection>> live;
        {
            std::lock_guard lock(clients_mutex);
            for (auto& [id, weak] : clients)
                if (auto c = weak.lock()) live.push_back(std::move(c));
        }
        for (auto& c : live) c->deliver(msg, true);
    }

    void schedule_tick() {
        const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / options.tick_hz));
        tick.expires_after(period);
        tick.async_wait([this](beast::error_code ec) {
            if (ec) return;
            broadcast(service.snapshot());
            schedule_tick();
        });
    }
};

Server::Server(service::HandService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
    if (!(impl_->options.tick_hz > 0.0)) throw std::invalid_argument("tick rate must be > 0");
    if (impl_->options.io_threads < 1) throw std::invalid_argument("need at least one I/O thread");
}

Server::~Server() { stop(); }

void Server::start() {
    Impl& s = *impl_;
    if (s.running) return;
    s.bind(s.ws_acceptor, s.options.ws_port);
    s.bind(s.tcp_acceptor, s.options.tcp_port);
    s.bound_ws = s.ws_acceptor.local_endpoint().port();
    s.bound_tcp = s.tcp_acceptor.local_endpoint().port();
    s.accept<WsConnection>(s.ws_acceptor, "ws");
    s.accept<TcpConnection>(s.tcp_acceptor, "tcp");
    s.schedule_tick();
    s.listener = s.service.subscribe([&s](const service::SnapshotPtr& snap) { s.broadcast(snap); });
    s.work.emplace(s.ioc.get_executor());
    for (int i = 0; i < s.options.io_threads; ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
    s.running = true;
    spdlog::info("serving WebSocket on {}:{} and TCP on {}:{}", s.options.bind, ws_port(), s.options.bind,
                 tcp_port());
}

void Server::stop() {
    Impl& s = *impl_;
    if (!s.running) return;
    s.running = false;
    s.service.unsubscribe(s.listener);
    net::post(s.ioc, [&s] {
        beast::error_code ignored;
        s.ws_acceptor.close(ignored);
        s.tcp_acceptor.close(ignored);
        s.tick.cancel();
    });
    std::vector<std::shared_ptr<Connection>> live;
    {
        std::lock_guard lock(s.clients_mutex);
        for (auto& [id, weak] : s.clients)
            if (auto c = weak.lock()) live.push_back(std::move(c));
    }
    for (auto& c : live) c->close();
    s.work.reset();
    for (auto& t : s.threads) t.join();
    s.threads.clear();
    for (auto& c : live) s.service.disconnect(c->id());
}

void Server::run_until_signal() {
    net::io_context signal_ctx;
    net::signal_set signals(signal_ctx, SIGINT, SIGTERM);
    signals.async_wait([](beast::error_code, int sig) { spdlog::info("signal {}, shutting down", sig); });
    signal_ctx.run();
    stop();
}

std::uint16_t Server::ws_port() const { return impl_->bound_ws; }
std::uint16_t Server::tcp_port() const { return impl_->bound_tcp; }

}  // namespace rotograb::server
