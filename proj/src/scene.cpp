#include "gpilot/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "json.hpp"

#include "gpilot/errors.hpp"

namespace gpilot::scene {

const char* to_string(ArmPose pose) {
    switch (pose) {
        case ArmPose::Left: return "left";
        case ArmPose::Right: return "right";
        case ArmPose::FrontHigh: return "front_high";
        case ArmPose::FrontLow: return "front_low";
        case ArmPose::Rest: break;
    }
    return "rest";
}

ArmPose arm_pose_from_string(std::string_view s) {
    if (s == "rest") return ArmPose::Rest;
    if (s == "left") return ArmPose::Left;
    if (s == "right") return ArmPose::Right;
    if (s == "front_high") return ArmPose::FrontHigh;
    if (s == "front_low") return ArmPose::FrontLow;
    throw FormatError("unknown arm pose '" + std::string(s) + "'");
}

namespace {

constexpr double kHandRadius = 0.05;
constexpr double kSleeveRadius = 0.045;
constexpr double kFrontHighFraction = 0.38;  // of body height, measured from the top
constexpr double kFrontLowFraction = 0.54;
constexpr double kRestHandFraction = 0.60;
// Cascade detections come out about this much larger than the head disk, so
// the disk is sized to make face-box based body ratios land on the figure.
constexpr double kFaceBoxPerHead = 1.3;

struct Segment {
    double ax, ay, bx, by;
};

double dist2_to_segment(const Segment& s, double px, double py) {
    const double vx = s.bx - s.ax;
    const double vy = s.by - s.ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - s.ax) * vx + (py - s.ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (s.ax + t * vx);
    const double dy = py - (s.ay + t * vy);
    return dx * dx + dy * dy;
}

// Everything needed to shade one point of the body plane.
struct Figure {
    double H, D, W, shoulder_h;
    double torso_half;
    Segment sleeves[2];
    double hands[2][2];  // (lateral, height) of each hand center
    Palette palette;

    Figure(const SceneSpec& spec, const FigureGeometry& g) : palette(spec.palette) {
        H = spec.user_height;
        D = g.head_diameter;
        W = g.box_width;
        shoulder_h = g.shoulder_height;
        torso_half = 0.2 * H / 1.75;
        const double joint_h = shoulder_h - 0.02;
        const double joint_lat = torso_half;
        const double rest_h = H * (1.0 - kRestHandFraction);
        const double rest_lat = torso_half + 0.07;

        // Index 0 is the image-left arm, 1 the image-right arm.
        double hl[2] = {-rest_lat, rest_lat};
        double hh[2] = {rest_h, rest_h};
        if (g.has_hand) {
            const int active = spec.arm == ArmPose::Left ? 0 : 1;
            hl[active] = g.hand_lateral;
            hh[active] = g.hand_height;
        }
        for (int i = 0; i < 2; ++i) {
            const double side = i == 0 ? -1.0 : 1.0;
            sleeves[i] = {side * joint_lat, joint_h, hl[i], hh[i]};
            hands[i][0] = hl[i];
            hands[i][1] = hh[i];
        }
    }

    Rgb shade(double lat, double h, Rgb background) const {
        for (const auto& hand : hands) {
            const double dx = lat - hand[0];
            const double dy = h - hand[1];
            if (dx * dx + dy * dy <= kHandRadius * kHandRadius) return palette.skin;
        }
        for (const auto& s : sleeves)
            if (dist2_to_segment(s, lat, h) <= kSleeveRadius * kSleeveRadius) return palette.clothing;

        const double head_cy = H - D / 2.0;
        const double r = D / 2.0;
        if (lat * lat + (h - head_cy) * (h - head_cy) <= r * r) {
            if (h > H - 0.17 * D) return palette.hair;
            const double eye_h = H - 0.40 * D;
            if (std::abs(std::abs(lat) - 0.2 * D) <= 0.09 * D && std::abs(h - eye_h) <= 0.05 * D) return palette.face_marks;
            if (std::abs(lat) <= 0.17 * D && std::abs(h - (H - 0.74 * D)) <= 0.035 * D) return palette.face_marks;
            return palette.skin;
        }
        if (std::abs(lat) <= 0.13 * D && h >= shoulder_h && h <= H - D + 0.02) return palette.skin;
        if (std::abs(lat) <= torso_half && h >= 0.5 * H && h <= shoulder_h + 0.02) return palette.clothing;
        if (std::abs(lat) >= 0.02 && std::abs(lat) <= torso_half - 0.03 && h >= 0.0 && h < 0.5 * H) return palette.trousers;
        return background;
    }
};

// Body plane basis: origin at the user's ground point, normal toward the
// drone, lateral axis toward the camera's image right.
struct BodyPlane {
    Vec3 origin;
    Vec3 normal;
    Vec3 lateral;

    BodyPlane(const Vec3& user, const sim::DroneState& drone) : origin(user) {
        double bx = drone.position.x - user.x;
        double by = drone.position.y - user.y;
        const double n = std::hypot(bx, by);
        if (n == 0.0) throw FrustumError("drone stands on the user");
        bx /= n;
        by /= n;
        normal = {bx, by, 0.0};
        lateral = {-by, bx, 0.0};
    }

    Vec3 point(double lat, double height) const { return origin + lateral * lat + Vec3{0, 0, height}; }
};

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

}  // namespace

FigureGeometry figure_geometry(const SceneSpec& spec) {
    FigureGeometry g{};
    const double H = spec.user_height;
    const double face_unit = H / 7.5;
    g.head_diameter = face_unit / kFaceBoxPerHead;
    g.box_width = 3.0 * face_unit;
    g.shoulder_height = 0.8 * H;
    g.hand_radius = kHandRadius;
    g.has_hand = spec.arm != ArmPose::Rest;
    switch (spec.arm) {
        case ArmPose::Left:
        case ArmPose::Right: {
            const double side = spec.arm == ArmPose::Right ? 1.0 : -1.0;
            const double L = spec.arm_length_ratio * g.box_width;
            g.hand_lateral = side * L * std::cos(spec.arm_angle);
            g.hand_height = g.shoulder_height + L * std::sin(spec.arm_angle);
            break;
        }
        case ArmPose::FrontHigh:
        case ArmPose::FrontLow: {
            const double frac = spec.arm == ArmPose::FrontHigh ? kFrontHighFraction : kFrontLowFraction;
            g.hand_lateral = spec.front_lateral;
            g.hand_height = spec.front_height.value_or(H * (1.0 - frac));
            break;
        }
        case ArmPose::Rest:
            break;
    }
    return g;
}

Projection project(const CameraSpec& camera, const sim::DroneState& drone, const Vec3& world) {
    const auto axes = sim::camera_axes(drone.yaw);
    const Vec3 rel = world - drone.position;
    const double depth = dot(rel, axes.forward);
    if (!(depth > 1e-6)) throw FrustumError("point lies behind the camera");
    return {camera.width / 2.0 + camera.focal_px * dot(rel, axes.right) / depth,
            camera.height / 2.0 + camera.focal_px * dot(rel, axes.down) / depth, depth};
}

Rendered render(const SceneSpec& spec, const sim::DroneState& drone, std::uint32_t timestamp_ms) {
    const auto& cam = spec.camera;
    const auto g = figure_geometry(spec);
    const BodyPlane plane(spec.user_position, drone);
    const Figure fig(spec, g);
    const auto axes = sim::camera_axes(drone.yaw);

    auto to_px = [&](double lat, double h) {
        const auto p = project(cam, drone, plane.point(lat, h));
        return PixelCoord{static_cast<int>(std::floor(p.u)), static_cast<int>(std::floor(p.v))};
    };
    auto box_of = [&](double lat0, double lat1, double h0, double h1) {
        const auto a = project(cam, drone, plane.point(lat0, h1));
        const auto b = project(cam, drone, plane.point(lat1, h0));
        const auto c = project(cam, drone, plane.point(lat0, h0));
        const auto d = project(cam, drone, plane.point(lat1, h1));
        const double u0 = std::min({a.u, b.u, c.u, d.u});
        const double u1 = std::max({a.u, b.u, c.u, d.u});
        const double v0 = std::min({a.v, b.v, c.v, d.v});
        const double v1 = std::max({a.v, b.v, c.v, d.v});
        const int x0 = static_cast<int>(std::floor(u0));
        const int y0 = static_cast<int>(std::floor(v0));
        return BoundingBox{x0, y0, static_cast<int>(std::ceil(u1)) - x0, static_cast<int>(std::ceil(v1)) - y0};
    };

    Rendered out;
    const double H = spec.user_height;
    const double reach = spec.arm_length_ratio * g.box_width + 2 * kHandRadius + 0.3;
    const BoundingBox paint = intersect(box_of(-reach, reach, -0.05, H + reach), {0, 0, cam.width, cam.height});

    out.frame = Frame(cam.width, cam.height, timestamp_ms, spec.palette.background);
    for (int y = paint.y; y < paint.bottom(); ++y) {
        for (int x = paint.x; x < paint.right(); ++x) {
            const Vec3 ray = axes.forward + axes.right * ((x + 0.5 - cam.width / 2.0) / cam.focal_px) +
                             axes.down * ((y + 0.5 - cam.height / 2.0) / cam.focal_px);
            const double denom = dot(ray, plane.normal);
            if (std::abs(denom) < 1e-12) continue;
            const double t = dot(plane.origin - drone.position, plane.normal) / denom;
            if (t <= 0) continue;
            const Vec3 hit = drone.position + ray * t - plane.origin;
            out.frame.set(x, y, fig.shade(dot(hit, plane.lateral), hit.z, spec.palette.background));
        }
    }

    if (spec.noise_seed) {
        std::mt19937_64 rng(*spec.noise_seed);
        std::uniform_int_distribution<int> noise(-spec.noise_amplitude, spec.noise_amplitude);
        for (auto& c : out.frame.pixels()) c = static_cast<std::uint8_t>(std::clamp(c + noise(rng), 0, 255));
    }

    auto& t = out.truth;
    t.shoulder_center = to_px(0.0, g.shoulder_height);
    if (g.has_hand) {
        t.hand = to_px(g.hand_lateral, g.hand_height);
        t.gesture_vector = *t.hand - t.shoulder_center;
    }
    const double D = g.head_diameter;
    t.face_box = box_of(-D / 2, D / 2, H - D, H);
    t.body_box = box_of(-g.box_width / 2, g.box_width / 2, 0.0, H);
    return out;
}

// ---------------------------------------------------------------------------
// Scenario files

SceneSpec Scenario::scene_at(int frame) const {
    SceneSpec s = scene;
    for (const auto& k : timeline) {
        if (k.frame > frame) break;
        s.arm = k.arm;
        s.arm_angle = k.arm_angle;
        s.front_lateral = k.front_lateral;
        s.front_height = k.front_height;
    }
    return s;
}

namespace {

Vec3 vec3_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("scenario: expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Rgb rgb_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("scenario: expected an [r,g,b] array");
    return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("scenario: ") + e.what());
    }
    Scenario sc;
    try {
        auto& s = sc.scene;
        if (j.contains("user_position")) s.user_position = vec3_from(j["user_position"]);
        s.user_height = j.value("user_height", s.user_height);
        s.arm_length_ratio = j.value("arm_length_ratio", s.arm_length_ratio);
        if (j.contains("noise_seed") && !j["noise_seed"].is_null()) s.noise_seed = j["noise_seed"].get<std::uint64_t>();
        s.noise_amplitude = j.value("noise_amplitude", s.noise_amplitude);
        if (j.contains("camera")) {
            const auto& c = j["camera"];
            s.camera.focal_px = c.value("focal_px", s.camera.focal_px);
            s.camera.width = c.value("width", s.camera.width);
            s.camera.height = c.value("height", s.camera.height);
        }
        if (j.contains("palette")) {
            const auto& p = j["palette"];
            auto& pal = s.palette;
            if (p.contains("skin")) pal.skin = rgb_from(p["skin"]);
            if (p.contains("clothing")) pal.clothing = rgb_from(p["clothing"]);
            if (p.contains("trousers")) pal.trousers = rgb_from(p["trousers"]);
            if (p.contains("background")) pal.background = rgb_from(p["background"]);
            if (p.contains("face_marks")) pal.face_marks = rgb_from(p["face_marks"]);
            if (p.contains("hair")) pal.hair = rgb_from(p["hair"]);
        }
        sc.drone.position = {0.0, 0.0, 1.3};
        std::optional<double> yaw;
        if (j.contains("drone")) {
            const auto& d = j["drone"];
            if (d.contains("position")) sc.drone.position = vec3_from(d["position"]);
            if (d.contains("yaw_deg")) yaw = d["yaw_deg"].get<double>() * kDeg;
            else if (d.contains("yaw")) yaw = d["yaw"].get<double>();
        }
        sc.drone.yaw = yaw.value_or(std::atan2(s.user_position.y - sc.drone.position.y,
                                               s.user_position.x - sc.drone.position.x));
        if (j.contains("sim")) {
            const auto& m = j["sim"];
            sc.sim.tau = m.value("tau", sc.sim.tau);
            sc.sim.v_max = m.value("v_max", sc.sim.v_max);
            sc.sim.omega_max = m.value("omega_max", sc.sim.omega_max);
            sc.sim.depth_speed = m.value("depth_speed", sc.sim.depth_speed);
        }
        sc.frames = j.value("frames", sc.frames);
        sc.frame_interval_ms = j.value("frame_interval_ms", sc.frame_interval_ms);
        if (j.contains("timeline")) {
            for (const auto& k : j["timeline"]) {
                Keyframe kf;
                kf.frame = k.value("frame", 0);
                kf.arm = arm_pose_from_string(k.value("arm", std::string("rest")));
                kf.arm_angle = k.value("angle_deg", 0.0) * kDeg;
                kf.front_lateral = k.value("front_lateral", 0.0);
                if (k.contains("front_height")) kf.front_height = k["front_height"].get<double>();
                sc.timeline.push_back(kf);
            }
            std::stable_sort(sc.timeline.begin(), sc.timeline.end(),
                             [](const Keyframe& a, const Keyframe& b) { return a.frame < b.frame; });
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("scenario: ") + e.what());
    }
    if (sc.frames < 0 || sc.frame_interval_ms == 0) throw FormatError("scenario: frames and interval must be positive");
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_scenario(text);
}

}  // namespace gpilot::scene
