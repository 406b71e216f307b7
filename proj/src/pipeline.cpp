#include "gpilot/pipeline.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include <spdlog/spdlog.h>

#include "gpilot/errors.hpp"

namespace gpilot::pipeline {

using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x + 0.0, v.y + 0.0, v.z + 0.0}); }
nlohmann::json box_json(const BoundingBox& b) { return nlohmann::json::array({b.x, b.y, b.width, b.height}); }

}  // namespace

const char* to_string(SessionState state) {
    switch (state) {
        case SessionState::Tracking: return "tracking";
        case SessionState::Lost: return "lost";
        case SessionState::AwaitingInit: break;
    }
    return "awaiting_init";
}

// ---------------------------------------------------------------------------
// Reports

nlohmann::json to_json(const FrameReport& r, bool with_timing) {
    nlohmann::json j;
    j["t"] = r.timestamp_ms;
    j["frame"] = r.index;
    j["state"] = to_string(r.state);
    j["box"] = r.user_box ? box_json(*r.user_box) : nlohmann::json(nullptr);
    j["scale"] = r.scale;
    j["hand"] = {{"kind", hand::to_string(r.detection.kind)},
                 {"vec", {r.detection.vector.x, r.detection.vector.y}},
                 {"score", r.detection.score}};
    j["command"] = {{"kind", command::to_string(r.command.kind)},
                    {"vec", vec_json(r.command.vector)},
                    {"speed_norm", command::speed_norm(r.command)}};
    j["emitted"] = r.emitted;
    j["velocity_cmd"] = vec_json(r.velocity_command);
    j["drone"] = {{"position", vec_json(r.drone.position)},
                  {"yaw", r.drone.yaw},
                  {"velocity", vec_json(r.drone.velocity)}};
    if (r.error) j["error"] = *r.error;
    if (with_timing) j["processing_ms"] = r.processing_ms;
    return j;
}

std::string to_jsonl(const FrameReport& report, bool with_timing) { return to_json(report, with_timing).dump(); }

nlohmann::json tracker_json(const FrameReport& r) {
    return {{"t", r.timestamp_ms},
            {"box", r.user_box ? box_json(*r.user_box) : nlohmann::json(nullptr)},
            {"scale", r.scale}};
}

nlohmann::json hand_json(const FrameReport& r) {
    return {{"t", r.timestamp_ms},
            {"kind", hand::to_string(r.detection.kind)},
            {"vec", {r.detection.vector.x, r.detection.vector.y}},
            {"score", r.detection.score}};
}

// ---------------------------------------------------------------------------
// Session

Session::Session(PipelineConfig config, std::shared_ptr<const haar::Cascade> cascade,
                 std::shared_ptr<const skin::SkinModel> skin_model)
    : config_(std::move(config)),
      cascade_(std::move(cascade)),
      skin_model_(std::move(skin_model)),
      limiter_(config_.rate_limit_ms),
      drone_(config_.initial_drone) {
    if (!skin_model_) throw ContractError("session needs a skin model");
    buffers_.capacity = config_.buffer_length;
    pending_box_ = config_.init_box;
}

void Session::set_init_box(const BoundingBox& box) {
    if (box.width <= 0 || box.height <= 0) throw ContractError("init box must have positive size");
    pending_box_ = box;
    tracker_.reset();
    state_ = SessionState::AwaitingInit;
    frames_without_init_ = 0;
}

void Session::reset() {
    drone_ = config_.initial_drone;
    buffers_.clear();
    limiter_.reset();
    active_velocity_ = {};
    hold_until_.reset();
    last_timestamp_.reset();
    if (state_ == SessionState::Lost) {
        state_ = SessionState::AwaitingInit;
        tracker_.reset();
        frames_without_init_ = 0;
    }
}

bool Session::try_initialize(const Frame& frame) {
    std::optional<BoundingBox> box = pending_box_;
    if (!box && cascade_) {
        const auto t0 = Clock::now();
        const auto faces = haar::detect_faces(*cascade_, frame, config_.detect);
        times_.detect_ms = ms_since(t0);
        if (!faces.empty()) {
            box = haar::user_box_from_face(faces.front(), frame.width(), frame.height(), config_.body_ratios);
            spdlog::info("face at ({},{},{},{}) -> user box ({},{},{},{})", faces.front().x, faces.front().y,
                         faces.front().width, faces.front().height, box->x, box->y, box->width, box->height);
        }
    }
    if (!box) {
        ++frames_without_init_;
        if (config_.init_max_frames > 0 && frames_without_init_ >= static_cast<std::uint64_t>(config_.init_max_frames))
            throw InitializationError("no face found in the first " + std::to_string(frames_without_init_) +
                                      " frames; pass an initial box");
        return false;
    }
    const auto t0 = Clock::now();
    tracker_ = dsst::init_tracker(frame, *box, config_.tracker);
    times_.track_ms = ms_since(t0);
    pending_box_.reset();
    state_ = SessionState::Tracking;
    return true;
}

FrameReport Session::process(const Frame& frame) {
    const auto start = Clock::now();
    times_ = {};
    FrameReport r;
    r.timestamp_ms = frame.timestamp_ms();
    r.index = frames_seen_++;
    last_mask_.reset();

    if (state_ == SessionState::Lost) {
        r.state = state_;
        r.drone = drone_;
        r.error = "tracking lost";
        r.processing_ms = times_.total_ms = ms_since(start);
        return r;
    }

    bool tracked_now = false;
    if (state_ == SessionState::AwaitingInit) {
        tracked_now = try_initialize(frame);
    } else {
        const auto t0 = Clock::now();
        try {
            dsst::track(*tracker_, frame);
            tracked_now = true;
        } catch (const TrackingLostError& e) {
            spdlog::warn("tracking lost at t={}: {}", frame.timestamp_ms(), e.what());
            state_ = SessionState::Lost;
            r.error = e.what();
        }
        times_.track_ms = ms_since(t0);
    }

    hand::HandDetection det;
    if (tracked_now) {
        const BoundingBox box = tracker_->box();
        r.user_box = box;
        r.scale = tracker_->scale_factor;

        auto t0 = Clock::now();
        auto mask = skin::detect_skin(*skin_model_, frame, box, config_.skin);
        mask = skin::erase_body_regions(std::move(mask), box, config_.skin);
        times_.skin_ms = ms_since(t0);

        t0 = Clock::now();
        det = hand::detect_hands(box, mask, hand::anchors(box, config_.anchors), config_.hand);
        times_.hand_ms = ms_since(t0);
        last_mask_ = std::move(mask);

        t0 = Clock::now();
        command::push_frame(buffers_, det);
        r.command = command::generate_command(buffers_, config_.command);
        command::set_magnitude(r.command, box.width);
        if (r.command.kind != command::CommandKind::None && limiter_.admit(frame.timestamp_ms())) {
            r.emitted = true;
            active_velocity_ = sim::camera_to_body(r.command, drone_.yaw, config_.sim);
            hold_until_ = frame.timestamp_ms() + config_.command_hold_ms;
        }
        times_.command_ms = ms_since(t0);
    }
    r.detection = det;
    r.state = state_;

    if (hold_until_ && frame.timestamp_ms() >= *hold_until_) {
        active_velocity_ = {};
        hold_until_.reset();
    }
    if (last_timestamp_ && frame.timestamp_ms() > *last_timestamp_) {
        const double dt = (frame.timestamp_ms() - *last_timestamp_) / 1000.0;
        drone_ = sim::step(drone_, active_velocity_, config_.user_position, dt, config_.sim);
    }
    last_timestamp_ = frame.timestamp_ms();
    r.velocity_command = active_velocity_;
    r.drone = drone_;
    r.processing_ms = times_.total_ms = ms_since(start);
    return r;
}

PipelineConfig config_for(const scene::Scenario& scenario, PipelineConfig base) {
    base.user_position = scenario.scene.user_position;
    base.initial_drone = scenario.drone;
    base.sim = scenario.sim;
    return base;
}

std::vector<FrameReport> run_scenario(Session& session, const scene::Scenario& scenario, const FrameSink& sink) {
    std::vector<FrameReport> reports;
    reports.reserve(static_cast<std::size_t>(scenario.frames));
    for (int i = 0; i < scenario.frames; ++i) {
        const auto ts = static_cast<std::uint32_t>(i) * scenario.frame_interval_ms;
        const auto rendered = scene::render(scenario.scene_at(i), session.drone(), ts);
        reports.push_back(session.process(rendered.frame));
        if (sink) sink(rendered.frame, reports.back());
        if (reports.back().state == SessionState::Lost) break;
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Configuration

nlohmann::json to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["hand"] = {{"lambda1", c.hand.lambda1},
                 {"lambda2", c.hand.lambda2},
                 {"lambda3", c.hand.lambda3},
                 {"min_skin", c.hand.min_skin},
                 {"front_offset_divisor", c.hand.front_offset_divisor}};
    j["anchors"] = {{"shoulder_height", c.anchors.shoulder_height}, {"hand_side_ratio", c.anchors.hand_side_ratio}};
    j["command"] = {{"lambda4", c.command.lambda4},
                    {"min_count", c.command.min_count},
                    {"buffer_length", c.buffer_length},
                    {"rate_limit_ms", c.rate_limit_ms},
                    {"hold_ms", c.command_hold_ms}};
    j["tracker"] = {{"lambda", c.tracker.lambda},
                    {"eta", c.tracker.eta},
                    {"scales", c.tracker.scale_count},
                    {"scale_step", c.tracker.scale_step},
                    {"padding", c.tracker.padding},
                    {"sigma_factor", c.tracker.sigma_factor},
                    {"scale_sigma", c.tracker.scale_sigma},
                    {"template_area", c.tracker.template_area},
                    {"scale_template_area", c.tracker.scale_template_area},
                    {"min_size", c.tracker.min_size},
                    {"features", c.tracker.features == dsst::FeatureKind::Gray ? "gray" : "gradient"}};
    j["skin"] = {{"threshold", c.skin.threshold},
                 {"side_extension", c.skin.side_extension},
                 {"top_extension", c.skin.top_extension},
                 {"erase_top", c.skin.erase_top},
                 {"erase_bottom", c.skin.erase_bottom}};
    j["sim"] = {{"tau", c.sim.tau},
                {"v_max", c.sim.v_max},
                {"omega_max", c.sim.omega_max},
                {"depth_speed", c.sim.depth_speed}};
    j["detect"] = {{"scale_step", c.detect.scale_step},
                   {"min_window", c.detect.min_window},
                   {"min_neighbors", c.detect.min_neighbors},
                   {"group_eps", c.detect.group_eps},
                   {"min_step", c.detect.min_step}};
    j["body_ratios"] = {{"width", c.body_ratios.width}, {"height", c.body_ratios.height}};
    j["init"] = {{"max_frames", c.init_max_frames},
                 {"box", c.init_box ? box_json(*c.init_box) : nlohmann::json(nullptr)}};
    j["user_position"] = vec_json(c.user_position);
    j["drone"] = {{"position", vec_json(c.initial_drone.position)},
                  {"yaw", c.initial_drone.yaw},
                  {"velocity", vec_json(c.initial_drone.velocity)}};
    return j;
}

namespace {

template <typename T>
void take(const nlohmann::json& obj, const char* key, T& field) {
    if (obj.contains(key)) field = obj.at(key).get<T>();
}

void check_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
    if (!obj.is_object()) throw FormatError("config: '" + where + "' must be an object");
    for (const auto& [k, v] : obj.items()) {
        bool known = false;
        for (auto key : keys) known = known || key == k;
        if (!known) throw FormatError("config: unknown key '" + where + "." + k + "'");
    }
}

Vec3 vec_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("config: expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

BoundingBox box_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw FormatError("config: expected [x,y,w,h]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

dsst::FeatureKind feature_kind(std::string_view s) {
    if (s == "gray") return dsst::FeatureKind::Gray;
    if (s == "gradient") return dsst::FeatureKind::GrayGradient;
    throw FormatError("unknown feature kind '" + std::string(s) + "'");
}

}  // namespace

void apply_json(PipelineConfig& c, const nlohmann::json& j) {
    try {
        check_keys(j, {"hand", "anchors", "command", "tracker", "skin", "sim", "detect", "body_ratios", "init",
                       "user_position", "drone"},
                   "config");
        if (j.contains("hand")) {
            const auto& h = j["hand"];
            check_keys(h, {"lambda1", "lambda2", "lambda3", "min_skin", "front_offset_divisor"}, "hand");
            take(h, "lambda1", c.hand.lambda1);
            take(h, "lambda2", c.hand.lambda2);
            take(h, "lambda3", c.hand.lambda3);
            take(h, "min_skin", c.hand.min_skin);
            take(h, "front_offset_divisor", c.hand.front_offset_divisor);
        }
        if (j.contains("anchors")) {
            const auto& a = j["anchors"];
            check_keys(a, {"shoulder_height", "hand_side_ratio"}, "anchors");
            take(a, "shoulder_height", c.anchors.shoulder_height);
            take(a, "hand_side_ratio", c.anchors.hand_side_ratio);
        }
        if (j.contains("command")) {
            const auto& m = j["command"];
            check_keys(m, {"lambda4", "min_count", "buffer_length", "rate_limit_ms", "hold_ms"}, "command");
            take(m, "lambda4", c.command.lambda4);
            take(m, "min_count", c.command.min_count);
            take(m, "buffer_length", c.buffer_length);
            take(m, "rate_limit_ms", c.rate_limit_ms);
            take(m, "hold_ms", c.command_hold_ms);
        }
        if (j.contains("tracker")) {
            const auto& t = j["tracker"];
            check_keys(t, {"lambda", "eta", "scales", "scale_step", "padding", "sigma_factor", "scale_sigma",
                           "template_area", "scale_template_area", "min_size", "features"},
                       "tracker");
            take(t, "lambda", c.tracker.lambda);
            take(t, "eta", c.tracker.eta);
            take(t, "scales", c.tracker.scale_count);
            take(t, "scale_step", c.tracker.scale_step);
            take(t, "padding", c.tracker.padding);
            take(t, "sigma_factor", c.tracker.sigma_factor);
            take(t, "scale_sigma", c.tracker.scale_sigma);
            take(t, "template_area", c.tracker.template_area);
            take(t, "scale_template_area", c.tracker.scale_template_area);
            take(t, "min_size", c.tracker.min_size);
            if (t.contains("features")) c.tracker.features = feature_kind(t["features"].get<std::string>());
        }
        if (j.contains("skin")) {
            const auto& s = j["skin"];
            check_keys(s, {"threshold", "side_extension", "top_extension", "erase_top", "erase_bottom"}, "skin");
            take(s, "threshold", c.skin.threshold);
            take(s, "side_extension", c.skin.side_extension);
            take(s, "top_extension", c.skin.top_extension);
            take(s, "erase_top", c.skin.erase_top);
            take(s, "erase_bottom", c.skin.erase_bottom);
        }
        if (j.contains("sim")) {
            const auto& s = j["sim"];
            check_keys(s, {"tau", "v_max", "omega_max", "depth_speed"}, "sim");
            take(s, "tau", c.sim.tau);
            take(s, "v_max", c.sim.v_max);
            take(s, "omega_max", c.sim.omega_max);
            take(s, "depth_speed", c.sim.depth_speed);
        }
        if (j.contains("detect")) {
            const auto& d = j["detect"];
            check_keys(d, {"scale_step", "min_window", "min_neighbors", "group_eps", "min_step"}, "detect");
            take(d, "scale_step", c.detect.scale_step);
            take(d, "min_window", c.detect.min_window);
            take(d, "min_neighbors", c.detect.min_neighbors);
            take(d, "group_eps", c.detect.group_eps);
            take(d, "min_step", c.detect.min_step);
        }
        if (j.contains("body_ratios")) {
            const auto& b = j["body_ratios"];
            check_keys(b, {"width", "height"}, "body_ratios");
            take(b, "width", c.body_ratios.width);
            take(b, "height", c.body_ratios.height);
        }
        if (j.contains("init")) {
            const auto& i = j["init"];
            check_keys(i, {"max_frames", "box"}, "init");
            take(i, "max_frames", c.init_max_frames);
            if (i.contains("box")) {
                if (i["box"].is_null()) c.init_box.reset();
                else c.init_box = box_from(i["box"]);
            }
        }
        if (j.contains("user_position")) c.user_position = vec_from(j["user_position"]);
        if (j.contains("drone")) {
            const auto& d = j["drone"];
            check_keys(d, {"position", "yaw", "velocity"}, "drone");
            if (d.contains("position")) c.initial_drone.position = vec_from(d["position"]);
            take(d, "yaw", c.initial_drone.yaw);
            if (d.contains("velocity")) c.initial_drone.velocity = vec_from(d["velocity"]);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
}

namespace {

double parse_double(std::string_view key, std::string_view v) {
    double out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw FormatError("tracker override '" + std::string(key) + "': bad number '" + std::string(v) + "'");
    return out;
}

int parse_int(std::string_view key, std::string_view v) {
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw FormatError("tracker override '" + std::string(key) + "': bad integer '" + std::string(v) + "'");
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

void apply_tracker_overrides(dsst::TrackerParams& p, std::string_view overrides) {
    while (!overrides.empty()) {
        const auto comma = overrides.find(',');
        const auto item = trim(overrides.substr(0, comma));
        overrides = comma == std::string_view::npos ? std::string_view{} : overrides.substr(comma + 1);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw FormatError("tracker override '" + std::string(item) + "' needs k=v");
        const auto k = trim(item.substr(0, eq));
        const auto v = trim(item.substr(eq + 1));
        if (k == "lambda") p.lambda = parse_double(k, v);
        else if (k == "eta") p.eta = parse_double(k, v);
        else if (k == "scales") p.scale_count = parse_int(k, v);
        else if (k == "scale_step") p.scale_step = parse_double(k, v);
        else if (k == "padding") p.padding = parse_double(k, v);
        else if (k == "sigma_factor") p.sigma_factor = parse_double(k, v);
        else if (k == "scale_sigma") p.scale_sigma = parse_double(k, v);
        else if (k == "template_area") p.template_area = parse_int(k, v);
        else if (k == "scale_template_area") p.scale_template_area = parse_int(k, v);
        else if (k == "min_size") p.min_size = parse_double(k, v);
        else if (k == "features") p.features = feature_kind(v);
        else throw FormatError("unknown tracker parameter '" + std::string(k) + "'");
    }
}

BoundingBox parse_box(std::string_view text) {
    int v[4];
    for (int i = 0; i < 4; ++i) {
        const auto comma = text.find(',');
        if ((i < 3) == (comma == std::string_view::npos)) throw FormatError("box must be x,y,w,h");
        v[i] = parse_int("box", trim(text.substr(0, comma)));
        text = i < 3 ? text.substr(comma + 1) : std::string_view{};
    }
    if (v[2] <= 0 || v[3] <= 0) throw FormatError("box width and height must be positive");
    return {v[0], v[1], v[2], v[3]};
}

}  // namespace gpilot::pipeline
