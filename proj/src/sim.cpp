#include "gpilot/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gpilot/errors.hpp"

namespace gpilot::sim {

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a <= 0.0) a += two_pi;
    return a - std::numbers::pi;
}

CameraAxes camera_axes(double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {{c, s, 0.0}, {s, -c, 0.0}, {0.0, 0.0, -1.0}};
}

Vec3 camera_to_body(const command::PilotCommand& cmd, double yaw, const SimParams& params) {
    using command::CommandKind;
    const auto axes = camera_axes(yaw);
    switch (cmd.kind) {
        case CommandKind::Planar: {
            const Vec3 dir = axes.right * cmd.vector.x + axes.down * cmd.vector.y;
            const double n = dir.norm();
            if (n == 0.0) return {};
            return dir * (params.v_max * command::speed_norm(cmd) / n);
        }
        case CommandKind::Depth:
            return axes.forward * (-cmd.vector.z * params.v_max * params.depth_speed);
        case CommandKind::None:
            break;
    }
    return {};
}

DroneState step(const DroneState& state, const Vec3& v_cmd, const Vec3& user_position, double dt,
                const SimParams& params) {
    if (!(dt > 0.0)) throw ContractError("step: dt must be positive");
    DroneState next = state;

    const double alpha = std::min(1.0, dt / params.tau);
    next.velocity = state.velocity + (v_cmd - state.velocity) * alpha;
    if (const double speed = next.velocity.norm(); speed > params.v_max) next.velocity = next.velocity * (params.v_max / speed);

    next.position = state.position + next.velocity * dt;
    if (next.position.z < 0.0) {
        next.position.z = 0.0;
        next.velocity.z = std::max(0.0, next.velocity.z);
    }

    const double dx = user_position.x - next.position.x;
    const double dy = user_position.y - next.position.y;
    if (dx != 0.0 || dy != 0.0) {
        const double error = wrap_angle(std::atan2(dy, dx) - state.yaw);
        const double max_turn = params.omega_max * dt;
        next.yaw = wrap_angle(state.yaw + std::clamp(error, -max_turn, max_turn));
    }
    return next;
}

}  // namespace gpilot::sim
