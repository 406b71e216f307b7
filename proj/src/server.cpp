#include "gpilot/server.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "gpilot/errors.hpp"

namespace gpilot::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

class PilotSession;

struct Registry {
    std::mutex mutex;
    pipeline::PipelineConfig config;
    std::shared_ptr<const haar::Cascade> cascade;
    std::shared_ptr<const skin::SkinModel> skin_model;
    ServerOptions options;
    std::vector<std::weak_ptr<PilotSession>> sessions;

    std::vector<std::shared_ptr<PilotSession>> live() {
        std::lock_guard lock(mutex);
        std::vector<std::shared_ptr<PilotSession>> out;
        std::erase_if(sessions, [](const auto& w) { return w.expired(); });
        for (const auto& w : sessions)
            if (auto s = w.lock()) out.push_back(std::move(s));
        return out;
    }
};

json error_json(std::string_view kind, std::string_view message) {
    return {{"error", std::string(message)}, {"kind", std::string(kind)}};
}

// ---------------------------------------------------------------------------
// WebSocket /pilot

constexpr std::size_t kReadChunk = 64 * 1024;

class PilotSession : public std::enable_shared_from_this<PilotSession> {
public:
    PilotSession(tcp::socket&& socket, std::shared_ptr<Registry> registry)
        : ws_(std::move(socket)), registry_(std::move(registry)), pipeline_(make_pipeline(*registry_)) {}

    ~PilotSession() {
        shutdown_worker();
    }

    void start(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.read_message_max(kWireHeaderSize + 3 * registry_->options.max_wire_pixels);
        worker_ = std::thread([self = weak_from_this()] {
            if (auto s = self.lock()) s->work_loop(self);
        });
        ws_.async_accept(req, beast::bind_front_handler(&PilotSession::on_accept, shared_from_this()));
    }

    void reset() {
        std::lock_guard lock(pipeline_mutex_);
        pipeline_.reset();
    }

    void set_init_box(const BoundingBox& box) {
        std::lock_guard lock(pipeline_mutex_);
        pipeline_.set_init_box(box);
    }

    pipeline::SessionState state() {
        std::lock_guard lock(pipeline_mutex_);
        return pipeline_.state();
    }

    void close() {
        net::post(ws_.get_executor(), [self = shared_from_this()] {
            beast::error_code ec;
            beast::get_lowest_layer(self->ws_).socket().close(ec);
        });
        shutdown_worker();
    }

private:
    static pipeline::Session make_pipeline(Registry& r) {
        std::lock_guard lock(r.mutex);
        return pipeline::Session(r.config, r.cascade, r.skin_model);
    }

    void on_accept(beast::error_code ec) {
        if (ec) return fail(ec, "accept");
        ws_.binary(true);
        do_read();
    }

    void do_read() {
        ws_.async_read_some(buffer_, kReadChunk, beast::bind_front_handler(&PilotSession::on_read, shared_from_this()));
    }

    // Oversized frames are refused from their header, before the payload is buffered.
    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return fail(ec, "read");
        if (!header_checked_ && ws_.got_binary() && buffer_.size() >= kWireHeaderSize) {
            header_checked_ = true;
            const auto data = buffer_.data();
            try {
                decode_wire_header({static_cast<const std::uint8_t*>(data.data()), kWireHeaderSize},
                                   registry_->options.max_wire_pixels);
            } catch (const ResourceError& e) {
                return refuse(e.what());
            } catch (const Error&) {
            }
        }
        if (!ws_.is_message_done()) return do_read();
        header_checked_ = false;
        on_message();
        do_read();
    }

    void on_message() {
        if (!ws_.got_binary()) {
            buffer_.consume(buffer_.size());
            return send_error("protocol", "expected a binary wire frame");
        }
        const auto data = buffer_.data();
        const std::span<const std::uint8_t> bytes(static_cast<const std::uint8_t*>(data.data()), data.size());
        try {
            auto frame = decode_wire_frame(bytes, registry_->options.max_wire_pixels);
            buffer_.consume(buffer_.size());
            enqueue(std::move(frame));
        } catch (const Error& e) {
            buffer_.consume(buffer_.size());
            send_error(dynamic_cast<const TruncationError*>(&e) ? "truncation" : "protocol", e.what());
        }
    }

    void refuse(const std::string& reason) {
        buffer_.consume(buffer_.size());
        spdlog::warn("closing /pilot connection: {}", reason);
        shutdown_worker();
        ws_.async_close(websocket::close_reason(websocket::close_code::protocol_error, reason),
                        [self = shared_from_this()](beast::error_code) {});
    }

    void fail(beast::error_code ec, const char* what) {
        if (ec != websocket::error::closed && ec != net::error::operation_aborted && ec != net::error::eof)
            spdlog::debug("/pilot {}: {}", what, ec.message());
        shutdown_worker();
    }

    // Bounded hand-off: keeps the newest queue_depth frames.
    void enqueue(Frame frame) {
        {
            std::lock_guard lock(queue_mutex_);
            while (queue_.size() >= registry_->options.queue_depth) {
                queue_.pop_front();
                ++dropped_;
            }
            queue_.push_back(std::move(frame));
        }
        queue_cv_.notify_one();
    }

    // Safe to call from several threads; only the first one joins.
    void shutdown_worker() {
        std::thread worker;
        {
            std::lock_guard lock(queue_mutex_);
            stopping_ = true;
            worker = std::move(worker_);
        }
        queue_cv_.notify_all();
        if (worker.joinable()) {
            if (worker.get_id() == std::this_thread::get_id()) worker.detach();
            else worker.join();
        }
    }

    void work_loop(const std::weak_ptr<PilotSession>& weak) {
        for (;;) {
            Frame frame;
            {
                std::unique_lock lock(queue_mutex_);
                queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
                if (stopping_) return;
                frame = std::move(queue_.front());
                queue_.pop_front();
            }
            std::string report;
            std::vector<std::uint8_t> annotated;
            try {
                std::lock_guard lock(pipeline_mutex_);
                const auto r = pipeline_.process(frame);
                report = pipeline::to_jsonl(r, true);
                annotated = encode_wire_frame(pipeline::annotate(frame, r, pipeline_.config().anchors));
            } catch (const Error& e) {
                report = error_json("pipeline", e.what()).dump();
            }
            auto self = weak.lock();
            if (!self) return;
            net::post(ws_.get_executor(), [self, report = std::move(report), annotated = std::move(annotated)]() mutable {
                self->queue_write({std::move(report), false});
                if (!annotated.empty()) self->queue_write({std::string(annotated.begin(), annotated.end()), true});
            });
        }
    }

    struct Outgoing {
        std::string payload;
        bool binary;
    };

    void send_error(std::string_view kind, std::string_view message) {
        queue_write({error_json(kind, message).dump(), false});
    }

    // Runs on the connection's strand.
    void queue_write(Outgoing msg) {
        writes_.push_back(std::move(msg));
        if (writes_.size() == 1) do_write();
    }

    void do_write() {
        auto& msg = writes_.front();
        ws_.binary(msg.binary);
        ws_.async_write(net::buffer(msg.payload),
                        beast::bind_front_handler(&PilotSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) return fail(ec, "write");
        writes_.pop_front();
        if (!writes_.empty()) do_write();
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    bool header_checked_ = false;
    std::shared_ptr<Registry> registry_;
    std::deque<Outgoing> writes_;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<Frame> queue_;
    bool stopping_ = false;
    std::uint64_t dropped_ = 0;
    std::thread worker_;

    std::mutex pipeline_mutex_;
    pipeline::Session pipeline_;
};

// ---------------------------------------------------------------------------
// Plain HTTP

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, std::shared_ptr<Registry> registry)
        : stream_(std::move(socket)), registry_(std::move(registry)) {}

    void start() {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
    }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) return close();
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/pilot") {
                stream_.expires_never();
                auto session = std::make_shared<PilotSession>(stream_.release_socket(), registry_);
                {
                    std::lock_guard lock(registry_->mutex);
                    registry_->sessions.push_back(session);
                }
                session->start(std::move(req_));
                return;
            }
            return respond(http::status::not_found, error_json("not_found", "no WebSocket at this path"));
        }
        handle();
    }

    void handle() {
        const auto target = std::string(req_.target());
        const auto method = req_.method();
        if (method == http::verb::options) return respond(http::status::no_content, nullptr);
        if (target == "/health") {
            if (method != http::verb::get) return method_not_allowed();
            return respond(http::status::ok, health());
        }
        if (target == "/config") {
            if (method != http::verb::get) return method_not_allowed();
            std::lock_guard lock(registry_->mutex);
            return respond(http::status::ok, pipeline::to_json(registry_->config));
        }
        if (target == "/reset") {
            if (method != http::verb::post) return method_not_allowed();
            const auto sessions = registry_->live();
            for (const auto& s : sessions) s->reset();
            return respond(http::status::ok, {{"ok", true}, {"sessions", sessions.size()}});
        }
        if (target == "/init-box") {
            if (method != http::verb::post) return method_not_allowed();
            BoundingBox box;
            try {
                box = parse_init_box(req_.body());
            } catch (const Error& e) {
                return respond(http::status::bad_request, error_json("bad_request", e.what()));
            }
            {
                std::lock_guard lock(registry_->mutex);
                registry_->config.init_box = box;
            }
            const auto sessions = registry_->live();
            for (const auto& s : sessions) s->set_init_box(box);
            return respond(http::status::ok, {{"ok", true}, {"box", {box.x, box.y, box.width, box.height}}});
        }
        respond(http::status::not_found, error_json("not_found", "unknown path " + target));
    }

    static BoundingBox parse_init_box(const std::string& body) {
        const auto j = json::parse(body, nullptr, false);
        if (j.is_discarded()) return pipeline::parse_box(body);
        const auto& b = j.is_object() && j.contains("box") ? j["box"] : j;
        if (!b.is_array() || b.size() != 4) throw FormatError("init box must be [x,y,w,h]");
        for (const auto& v : b)
            if (!v.is_number_integer()) throw FormatError("init box must hold integers");
        const BoundingBox box{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
        if (box.width <= 0 || box.height <= 0) throw FormatError("init box width and height must be positive");
        return box;
    }

    json health() {
        const auto sessions = registry_->live();
        bool tracking = false;
        bool lost = false;
        for (const auto& s : sessions) {
            const auto st = s->state();
            tracking = tracking || st == pipeline::SessionState::Tracking;
            lost = lost || st == pipeline::SessionState::Lost;
        }
        const char* state = tracking ? "tracking" : lost ? "lost" : "awaiting_init";
        return {{"state", state}, {"sessions", sessions.size()}};
    }

    void method_not_allowed() { respond(http::status::method_not_allowed, error_json("method", "method not allowed")); }

    void respond(http::status status, const json& body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::server, "gpilot");
        res->set(http::field::access_control_allow_origin, "*");
        res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res->set(http::field::access_control_allow_headers, "Content-Type");
        if (!body.is_null()) {
            res->set(http::field::content_type, "application/json");
            res->body() = body.dump();
        }
        res->keep_alive(req_.keep_alive());
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (!res->keep_alive()) return self->close();
            self->do_read();
        });
    }

    void close() {
        beast::error_code ec;
        stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    bool header_checked_ = false;
    http::request<http::string_body> req_;
    std::shared_ptr<Registry> registry_;
};

}  // namespace

// ---------------------------------------------------------------------------

struct Server::Impl {
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::shared_ptr<Registry> registry = std::make_shared<Registry>();
    std::vector<std::thread> threads;
    std::mutex stop_mutex;
    std::condition_variable stop_cv;
    bool stopped = false;

    void do_accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec != net::error::operation_aborted) spdlog::warn("accept: {}", ec.message());
                if (!acceptor.is_open()) return;
            } else {
                std::make_shared<HttpSession>(std::move(socket), registry)->start();
            }
            do_accept();
        });
    }
};

Server::Server(pipeline::PipelineConfig config, std::shared_ptr<const haar::Cascade> cascade,
               std::shared_ptr<const skin::SkinModel> skin_model, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
    auto& r = *impl_->registry;
    r.config = std::move(config);
    r.cascade = std::move(cascade);
    r.skin_model = std::move(skin_model);
    r.options = std::move(options);
    if (r.options.queue_depth < 1) throw ContractError("queue depth must be at least 1");
}

Server::~Server() { stop(); }

void Server::start() {
    auto& opt = impl_->registry->options;
    const tcp::endpoint endpoint(net::ip::make_address(opt.address), opt.port);
    auto& acc = impl_->acceptor;
    acc.open(endpoint.protocol());
    acc.set_option(net::socket_base::reuse_address(true));
    acc.bind(endpoint);
    acc.listen(net::socket_base::max_listen_connections);
    impl_->do_accept();
    for (int i = 0; i < std::max(1, opt.io_threads); ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    spdlog::info("serving on http://{}:{}", opt.address, port());
}

void Server::wait() {
    std::unique_lock lock(impl_->stop_mutex);
    impl_->stop_cv.wait(lock, [&] { return impl_->stopped; });
}

void Server::stop() {
    {
        std::lock_guard lock(impl_->stop_mutex);
        if (impl_->stopped) return;
        impl_->stopped = true;
    }
    for (const auto& s : impl_->registry->live()) s->close();
    impl_->ioc.stop();
    for (auto& t : impl_->threads)
        if (t.joinable()) t.join();
    impl_->threads.clear();
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->stop_cv.notify_all();
}

unsigned short Server::port() const {
    beast::error_code ec;
    const auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? impl_->registry->options.port : ep.port();
}

}  // namespace gpilot::server
