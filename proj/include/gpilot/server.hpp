#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "gpilot/pipeline.hpp"

namespace gpilot::server {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    std::uint64_t max_wire_pixels = kDefaultMaxWirePixels;
    std::size_t queue_depth = 2;
    int io_threads = 1;
};

/// HTTP: GET /health, GET /config, POST /init-box, POST /reset.
/// WebSocket /pilot: binary wire frames in; per processed frame one JSON
/// report (text) followed by the annotated frame (binary, wire format).
/// Each connection owns an independent pipeline and simulated drone.
class Server {
public:
    Server(pipeline::PipelineConfig config, std::shared_ptr<const haar::Cascade> cascade,
           std::shared_ptr<const skin::SkinModel> skin_model, ServerOptions options = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts serving on background threads.
    void start();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();
    void stop();
    unsigned short port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gpilot::server
