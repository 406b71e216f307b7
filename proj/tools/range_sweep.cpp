// Distance sweep over the synthetic scene: face auto-init and gesture recognition per range.
// Prints a markdown table.

#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "gpilot/errors.hpp"
#include "gpilot/pipeline.hpp"

using namespace gpilot;
using std::numbers::pi;

namespace {

constexpr int kTrials = 5;

bool face_found(double dist, std::uint64_t seed) {
    scene::SceneSpec s;
    s.noise_seed = seed;
    const sim::DroneState d{{0.0, 4.0 - dist, 1.3}, pi / 2, {}};
    const auto r = scene::render(s, d);
    for (const auto& b : haar::detect_faces(haar::mini_face_cascade(), r.frame))
        if (iou(b, r.truth.face_box) > 0.3) return true;
    return false;
}

// 31 frames of a held pose from a tracker started on the true body box.
command::PilotCommand held_gesture(double dist, scene::ArmPose arm, double angle, std::uint64_t seed) {
    scene::Scenario sc;
    sc.frames = 31;
    sc.drone = {{0.0, 4.0 - dist, 1.3}, pi / 2, {}};
    sc.scene.noise_seed = seed;
    sc.timeline.push_back({0, arm, angle, 0.0, std::nullopt});
    auto cfg = pipeline::config_for(sc, {});
    cfg.init_box = scene::render(sc.scene_at(0), sc.drone).truth.body_box;
    pipeline::Session s(cfg, nullptr, std::shared_ptr<const skin::SkinModel>(&skin::default_skin_model(), [](auto*) {}));
    return pipeline::run_scenario(s, sc).back().command;
}

bool planar_ok(const command::PilotCommand& c, double dir) {
    if (c.kind != command::CommandKind::Planar) return false;
    return std::abs(sim::wrap_angle(std::atan2(-c.vector.y, c.vector.x) - dir)) <= 10.0 * pi / 180;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    fmt::print("| distance m | body box px | face init | right arm 15 deg | left arm 15 deg | come closer | go further |\n");
    fmt::print("|---|---|---|---|---|---|---|\n");
    for (double dist = 1.5; dist <= 12.01; dist += 0.5) {
        const sim::DroneState d{{0.0, 4.0 - dist, 1.3}, pi / 2, {}};
        try {
            scene::render(scene::SceneSpec{}, d);
        } catch (const FrustumError&) {
            fmt::print("| {:.1f} | out of frame | | | | | |\n", dist);
            continue;
        }
        const auto box = scene::render(scene::SceneSpec{}, d).truth.body_box;
        int face = 0, right = 0, left = 0, closer = 0, further = 0;
        for (int k = 0; k < kTrials; ++k) {
            const std::uint64_t seed = 100 * static_cast<std::uint64_t>(dist * 2) + k;
            face += face_found(dist, seed);
            right += planar_ok(held_gesture(dist, scene::ArmPose::Right, pi / 12, seed), pi / 12);
            left += planar_ok(held_gesture(dist, scene::ArmPose::Left, pi / 12, seed), 11 * pi / 12);
            const auto c = held_gesture(dist, scene::ArmPose::FrontHigh, 0.0, seed);
            closer += c.kind == command::CommandKind::Depth && c.vector.z < 0;
            const auto f = held_gesture(dist, scene::ArmPose::FrontLow, 0.0, seed);
            further += f.kind == command::CommandKind::Depth && f.vector.z > 0;
        }
        fmt::print("| {:.1f} | {}x{} | {}/{} | {}/{} | {}/{} | {}/{} | {}/{} |\n", dist, box.width, box.height, face, kTrials,
                   right, kTrials, left, kTrials, closer, kTrials, further, kTrials);
        std::fflush(stdout);
    }
}
