#pragma once

#include "gpilot/command.hpp"
#include "gpilot/geometry.hpp"

namespace gpilot::sim {

/// World frame is ENU: x east, y north, z up. Yaw is measured from +x toward +y.
struct DroneState {
    Vec3 position;
    double yaw = 0.0;
    Vec3 velocity;

    friend bool operator==(const DroneState&, const DroneState&) = default;
};

struct SimParams {
    double tau = 0.5;        // velocity time constant, s
    double v_max = 1.0;      // m/s
    double omega_max = 1.0;  // yaw rate limit, rad/s
    double depth_speed = 0.5;  // fraction of v_max for come-closer / go-further
};

/// Camera axes expressed in world coordinates for a level camera at `yaw`.
struct CameraAxes {
    Vec3 forward;  // +z_cam, into the scene
    Vec3 right;    // +x_cam, image right
    Vec3 down;     // +y_cam, image down
};
CameraAxes camera_axes(double yaw);

/// World-frame velocity for a command: image right and image up map onto the
/// camera's right and world up, depth moves along the optical axis (+1 away
/// from the user the camera faces). Speed follows command::speed_norm.
Vec3 camera_to_body(const command::PilotCommand& cmd, double yaw, const SimParams& params = {});

/// First-order velocity tracking, ground clamp, and yaw slewing toward the user.
DroneState step(const DroneState& state, const Vec3& velocity_command, const Vec3& user_position, double dt,
                const SimParams& params = {});

double wrap_angle(double a);

}  // namespace gpilot::sim
