#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rotograb/hand_service.hpp"

namespace rotograb::server {

struct ServerOptions {
    std::string bind = "127.0.0.1";
    std::uint16_t ws_port = 8765;   // 0 picks a free port
    std::uint16_t tcp_port = 8766;  // 0 picks a free port
    double tick_hz = 30.0;
    /// Outbound messages queued per client before state broadcasts to it
    /// are dropped. Replies are never dropped.
    std::size_t max_queue = 256;
    int io_threads = 2;
};

/// ROTOGRAB_PORT sets the WebSocket port (TCP takes the next one) and
/// ROTOGRAB_LOG_LEVEL the spdlog level. Throws std::invalid_argument on a
/// malformed value.
void apply_environment(ServerOptions& options);

/// WebSocket and plain TCP front ends for a HandService. Both carry the same
/// JSON messages: one per WebSocket text frame, one per line over TCP.
class Server {
public:
    Server(service::HandService& service, ServerOptions options);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds both listeners and starts the I/O threads. Throws Error when an
    /// address cannot be bound.
    void start();
    /// Closes listeners and connections. Idempotent.
    void stop();
    /// Blocks until SIGINT or SIGTERM, then stops.
    void run_until_signal();

    std::uint16_t ws_port() const;
    std::uint16_t tcp_port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rotograb::server
