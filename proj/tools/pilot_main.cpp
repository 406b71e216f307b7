#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <boost/asio/ip/tcp.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "gpilot/errors.hpp"
#include "gpilot/frame.hpp"
#include "gpilot/haar.hpp"
#include "gpilot/pipeline.hpp"
#include "gpilot/scene.hpp"
#include "gpilot/server.hpp"
#include "gpilot/skin.hpp"

namespace fs = std::filesystem;
using namespace gpilot;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kInitFailed = 3, kTrackingLost = 4 };

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("pilot");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("PILOT_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

struct Common {
    std::string cascade;
    std::string skin_model;
    std::string config_file;
    std::string tracker;
    std::string init_box;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--cascade", c.cascade, "Haar cascade XML (default: bundled mini cascade)");
    app->add_option("--skin-model", c.skin_model, "SKN1 skin model (default: built-in)");
    app->add_option("--config", c.config_file, "JSON file overriding pipeline parameters");
    app->add_option("--tracker", c.tracker, "tracker overrides k=v,...");
    app->add_option("--init-box", c.init_box, "manual user box x,y,w,h (skips face detection)");
}

std::shared_ptr<const haar::Cascade> load_cascade_option(const std::string& path) {
    if (path.empty() || path == "mini") return {std::shared_ptr<void>{}, &haar::mini_face_cascade()};
    return std::make_shared<haar::Cascade>(haar::load_cascade(path));
}

std::shared_ptr<const skin::SkinModel> load_skin_option(const std::string& path) {
    if (path.empty()) return {std::shared_ptr<void>{}, &skin::default_skin_model()};
    return std::make_shared<skin::SkinModel>(skin::load_skin_model(path));
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void apply_common(pipeline::PipelineConfig& config, const Common& c) {
    if (!c.config_file.empty()) pipeline::apply_json(config, read_json_file(c.config_file));
    if (!c.tracker.empty()) pipeline::apply_tracker_overrides(config.tracker, c.tracker);
    if (!c.init_box.empty()) config.init_box = pipeline::parse_box(c.init_box);
}

std::unique_ptr<std::ostream> open_output(const std::string& path, std::ostream*& target) {
    if (path.empty() || path == "-") {
        target = &std::cout;
        return nullptr;
    }
    auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*f) throw InputError("cannot write " + path);
    target = f.get();
    return f;
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
    Common common;
    std::string input;
    std::string pattern = "*.ppm";
    std::uint32_t interval = 40;
    std::string scenario;
    std::string report;
    std::string annotated;
    std::string dump_skin;
    std::string track_log;
    std::string hand_log;
    bool timing = false;
    std::uint64_t max_pixels = kDefaultMaxWirePixels;
};

class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::optional<Frame> next() = 0;
};

class DirectorySource : public FrameSource {
public:
    DirectorySource(const fs::path& dir, const SequenceOptions& opt) : frames_(load_sequence(dir, opt)) {}
    std::optional<Frame> next() override {
        if (pos_ >= frames_.size()) return std::nullopt;
        return std::move(frames_[pos_++]);
    }

private:
    std::vector<Frame> frames_;
    std::size_t pos_ = 0;
};

class WireSource : public FrameSource {
public:
    WireSource(std::istream& in, std::uint64_t max_pixels) : in_(in), max_pixels_(max_pixels) {}
    std::optional<Frame> next() override { return try_read_wire_frame(in_, max_pixels_); }

private:
    std::istream& in_;
    std::uint64_t max_pixels_;
};

class TcpSource : public FrameSource {
public:
    TcpSource(const std::string& host, const std::string& port, std::uint64_t max_pixels)
        : stream_(host, port), max_pixels_(max_pixels) {
        if (!stream_) throw InputError("cannot connect to " + host + ":" + port + ": " + stream_.error().message());
    }
    std::optional<Frame> next() override { return try_read_wire_frame(stream_, max_pixels_); }

private:
    boost::asio::ip::tcp::iostream stream_;
    std::uint64_t max_pixels_;
};

std::unique_ptr<FrameSource> open_source(const RunOptions& o) {
    const auto& in = o.input;
    if (in.rfind("dir:", 0) == 0) return std::make_unique<DirectorySource>(in.substr(4), SequenceOptions{o.pattern, o.interval});
    if (in == "wire:stdin" || in == "wire:-") return std::make_unique<WireSource>(std::cin, o.max_pixels);
    if (in.rfind("wire:", 0) == 0) {
        const auto target = in.substr(5);
        const auto colon = target.rfind(':');
        if (colon == std::string::npos) throw InputError("wire input needs host:port or stdin");
        return std::make_unique<TcpSource>(target.substr(0, colon), target.substr(colon + 1), o.max_pixels);
    }
    throw InputError("unknown input '" + in + "' (use dir:<path>, wire:stdin or wire:<host:port>)");
}

struct Outputs {
    std::ostream* report = nullptr;
    std::unique_ptr<std::ostream> report_file;
    std::unique_ptr<std::ofstream> track_log;
    std::unique_ptr<std::ofstream> hand_log;
    fs::path annotated;
    fs::path dump_skin;
    bool timing = false;
};

void emit(Outputs& out, pipeline::Session& session, const skin::SkinModel& model, const Frame& frame,
          const pipeline::FrameReport& r) {
    *out.report << pipeline::to_jsonl(r, out.timing) << '\n';
    if (out.track_log) *out.track_log << pipeline::tracker_json(r).dump() << '\n';
    if (out.hand_log) *out.hand_log << pipeline::hand_json(r).dump() << '\n';
    const auto stem = fmt::format("frame_{:06d}", r.index);
    if (!out.annotated.empty())
        write_ppm(pipeline::annotate(frame, r, session.config().anchors), out.annotated / (stem + ".ppm"));
    if (!out.dump_skin.empty() && r.user_box) {
        const auto mask = skin::detect_skin(model, frame, *r.user_box, session.config().skin);
        const auto dump = skin::render_skin_dump(model, frame, mask);
        write_ppm(dump.likelihood, out.dump_skin / (stem + "_likelihood.ppm"));
        write_ppm(dump.mask, out.dump_skin / (stem + "_mask.ppm"));
        write_ppm(dump.overlay, out.dump_skin / (stem + "_overlay.ppm"));
    }
}

int cmd_run(const RunOptions& o) {
    if (o.input.empty() == o.scenario.empty()) {
        std::cerr << "run: give exactly one of --input or --scenario\n";
        return kUsage;
    }
    pipeline::PipelineConfig config;
    std::optional<scene::Scenario> scenario;
    if (!o.scenario.empty()) {
        scenario = scene::load_scenario(o.scenario);
        config = pipeline::config_for(*scenario, config);
    }
    apply_common(config, o.common);
    const auto cascade = load_cascade_option(o.common.cascade);
    const auto model = load_skin_option(o.common.skin_model);

    Outputs out;
    out.report_file = open_output(o.report, out.report);
    out.timing = o.timing;
    if (!o.track_log.empty()) out.track_log = std::make_unique<std::ofstream>(o.track_log);
    if (!o.hand_log.empty()) out.hand_log = std::make_unique<std::ofstream>(o.hand_log);
    if (!o.annotated.empty()) fs::create_directories(out.annotated = o.annotated);
    if (!o.dump_skin.empty()) fs::create_directories(out.dump_skin = o.dump_skin);

    pipeline::Session session(config, cascade, model);
    bool lost = false;
    try {
        if (scenario) {
            const auto reports = pipeline::run_scenario(session, *scenario, [&](const Frame& f, const auto& r) {
                emit(out, session, *model, f, r);
            });
            lost = !reports.empty() && reports.back().state == pipeline::SessionState::Lost;
        } else {
            auto source = open_source(o);
            while (auto frame = source->next()) {
                const auto r = session.process(*frame);
                emit(out, session, *model, *frame, r);
                if (r.state == pipeline::SessionState::Lost) {
                    lost = true;
                    break;
                }
            }
        }
    } catch (const InitializationError& e) {
        out.report->flush();
        std::cerr << "pilot: " << e.what() << '\n';
        return kInitFailed;
    }
    out.report->flush();
    if (lost) {
        std::cerr << "pilot: tracking lost\n";
        return kTrackingLost;
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// serve

int cmd_serve(const Common& common, server::ServerOptions options, int init_max_frames) {
    pipeline::PipelineConfig config;
    config.init_max_frames = init_max_frames;
    apply_common(config, common);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // inherited by the server threads

    server::Server srv(config, load_cascade_option(common.cascade), load_skin_option(common.skin_model), options);
    srv.start();
    std::cerr << "pilot: listening on " << options.address << ":" << srv.port() << std::endl;
    int received = 0;
    sigwait(&signals, &received);
    spdlog::info("signal {}, shutting down", received);
    srv.stop();
    return kOk;
}

// ---------------------------------------------------------------------------
// train-skin

std::vector<Rgb> collect_pixels(const fs::path& dir, const std::string& pattern) {
    std::vector<Rgb> out;
    for (const auto& f : load_sequence(dir, {pattern, 40}))
        for (int y = 0; y < f.height(); ++y)
            for (int x = 0; x < f.width(); ++x) out.push_back(f.at(x, y));
    return out;
}

int cmd_train_skin(const std::string& skin_dir, const std::string& nonskin_dir, int bins, const std::string& pattern,
                   const std::string& output) {
    const auto skin_px = collect_pixels(skin_dir, pattern);
    const auto nonskin_px = collect_pixels(nonskin_dir, pattern);
    const auto model = skin::train_skin_model(skin_px, nonskin_px, bins);
    skin::save_skin_model(model, output);
    std::cerr << fmt::format("pilot: trained {}^3 model from {} skin / {} non-skin pixels -> {}\n", bins,
                             skin_px.size(), nonskin_px.size(), output);
    return kOk;
}

// ---------------------------------------------------------------------------
// render

int cmd_render(const std::string& scenario_path, const std::string& out_dir) {
    const auto sc = scene::load_scenario(scenario_path);
    fs::create_directories(out_dir);
    std::ofstream truth(fs::path(out_dir) / "truth.jsonl");
    for (int i = 0; i < sc.frames; ++i) {
        const auto r = scene::render(sc.scene_at(i), sc.drone, static_cast<std::uint32_t>(i) * sc.frame_interval_ms);
        write_ppm(r.frame, fs::path(out_dir) / fmt::format("frame_{:06d}.ppm", i));
        const auto& t = r.truth;
        nlohmann::json j = {{"t", r.frame.timestamp_ms()},
                            {"p_uc", {t.shoulder_center.x, t.shoulder_center.y}},
                            {"hand", t.hand ? nlohmann::json{t.hand->x, t.hand->y} : nlohmann::json(nullptr)},
                            {"gesture_vector", {t.gesture_vector.x, t.gesture_vector.y}},
                            {"face_box", {t.face_box.x, t.face_box.y, t.face_box.width, t.face_box.height}},
                            {"body_box", {t.body_box.x, t.body_box.y, t.body_box.width, t.body_box.height}}};
        truth << j.dump() << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const Common& common, const std::string& scenario_path, int frames) {
    scene::Scenario sc;
    if (!scenario_path.empty()) {
        sc = scene::load_scenario(scenario_path);
    } else {
        sc.drone.position = {0.0, 0.0, 1.3};
        sc.drone.yaw = std::atan2(sc.scene.user_position.y, sc.scene.user_position.x);
        sc.timeline = {{0, scene::ArmPose::Right, 0.35, 0.0, std::nullopt}};
    }
    if (frames > 0) sc.frames = frames;
    auto config = pipeline::config_for(sc, {});
    apply_common(config, common);
    pipeline::Session session(config, load_cascade_option(common.cascade), load_skin_option(common.skin_model));

    struct Acc {
        double sum = 0;
        int n = 0;
        void add(double v) {
            sum += v;
            ++n;
        }
        double mean() const { return n ? sum / n : 0.0; }
    } render, detect, track, skin_t, hand_t, command_t, total;

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    int processed = 0;
    for (int i = 0; i < sc.frames; ++i) {
        const auto t0 = Clock::now();
        const auto rendered = scene::render(sc.scene_at(i), session.drone(), static_cast<std::uint32_t>(i) * sc.frame_interval_ms);
        render.add(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
        const auto r = session.process(rendered.frame);
        const auto& st = session.last_times();
        if (st.detect_ms > 0) detect.add(st.detect_ms);
        track.add(st.track_ms);
        skin_t.add(st.skin_ms);
        hand_t.add(st.hand_ms);
        command_t.add(st.command_ms);
        total.add(st.total_ms);
        ++processed;
        if (r.state == pipeline::SessionState::Lost) break;
    }
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();
    std::cout << fmt::format("{:<14}{:>12}{:>8}\n", "stage", "mean ms", "calls");
    for (const auto& [name, a] : {std::pair{"render", render}, {"face detect", detect}, {"track", track},
                                  {"skin", skin_t}, {"hand", hand_t}, {"command", command_t}, {"pipeline", total}})
        std::cout << fmt::format("{:<14}{:>12.3f}{:>8}\n", name, a.mean(), a.n);
    std::cout << fmt::format("{} frames of {}x{} in {:.2f} s: {:.1f} fps end to end\n", processed, sc.scene.camera.width,
                             sc.scene.camera.height, wall, processed / wall);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Gesture piloting pipeline: face-initialized tracking, skin-based hand detection, command generation"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "process a frame sequence or a closed-loop scenario");
    add_common(run_cmd, run.common);
    run_cmd->add_option("--input", run.input, "dir:<path>, wire:stdin or wire:<host:port>");
    run_cmd->add_option("--pattern", run.pattern, "filename glob for dir: input")->capture_default_str();
    run_cmd->add_option("--interval", run.interval, "synthesized frame interval, ms")->capture_default_str();
    run_cmd->add_option("--scenario", run.scenario, "closed-loop scenario JSON");
    run_cmd->add_option("--report", run.report, "report JSONL path (default stdout)");
    run_cmd->add_option("--annotated", run.annotated, "directory for annotated PPM frames");
    run_cmd->add_option("--dump-skin", run.dump_skin, "directory for likelihood/mask/overlay rasters");
    run_cmd->add_option("--track-log", run.track_log, "per-frame tracker JSONL");
    run_cmd->add_option("--hand-log", run.hand_log, "per-frame hand detection JSONL");
    run_cmd->add_option("--max-pixels", run.max_pixels, "largest accepted wire frame, pixels")->capture_default_str();
    run_cmd->add_flag("--timing", run.timing, "include processing_ms in reports");

    Common serve_common;
    server::ServerOptions serve_opts;
    int serve_init_frames = 0;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP + WebSocket service for the pilot console");
    add_common(serve_cmd, serve_common);
    serve_cmd->add_option("--port", serve_opts.port, "TCP port (0 = any free port)")->capture_default_str();
    serve_cmd->add_option("--address", serve_opts.address, "bind address")->capture_default_str();
    serve_cmd->add_option("--queue-depth", serve_opts.queue_depth, "frames buffered per session")->capture_default_str();
    serve_cmd->add_option("--max-pixels", serve_opts.max_wire_pixels, "largest accepted frame, pixels")->capture_default_str();
    serve_cmd->add_option("--init-frames", serve_init_frames, "give up face detection after N frames (0 = never)")
        ->capture_default_str();

    std::string skin_dir, nonskin_dir, skin_out, skin_pattern = "*.ppm";
    int bins = 64;
    auto* train_cmd = app.add_subcommand("train-skin", "train a histogram skin model from labeled images");
    train_cmd->add_option("--skin", skin_dir, "directory of skin-only images")->required();
    train_cmd->add_option("--nonskin", nonskin_dir, "directory of non-skin images")->required();
    train_cmd->add_option("--bins", bins, "bins per channel (power of two)")->capture_default_str();
    train_cmd->add_option("--pattern", skin_pattern, "filename glob")->capture_default_str();
    train_cmd->add_option("-o,--output", skin_out, "output model path")->required();

    Common bench_common;
    std::string bench_scenario;
    int bench_frames = 0;
    auto* bench_cmd = app.add_subcommand("bench", "per-stage timing on a rendered 640x480 scenario");
    add_common(bench_cmd, bench_common);
    bench_cmd->add_option("--scenario", bench_scenario, "scenario JSON (default: right arm raised)");
    bench_cmd->add_option("--frames", bench_frames, "override frame count");

    std::string render_scenario, render_out;
    auto* render_cmd = app.add_subcommand("render", "write a scenario's frames (fixed drone) and ground truth");
    render_cmd->add_option("--scenario", render_scenario, "scenario JSON")->required();
    render_cmd->add_option("-o,--output", render_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(run);
        if (*serve_cmd) return cmd_serve(serve_common, serve_opts, serve_init_frames);
        if (*train_cmd) return cmd_train_skin(skin_dir, nonskin_dir, bins, skin_pattern, skin_out);
        if (*bench_cmd) return cmd_bench(bench_common, bench_scenario, bench_frames);
        if (*render_cmd) return cmd_render(render_scenario, render_out);
    } catch (const std::exception& e) {
        std::cerr << "pilot: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}
