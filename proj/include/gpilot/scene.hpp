#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpilot/frame.hpp"
#include "gpilot/geometry.hpp"
#include "gpilot/sim.hpp"

namespace gpilot::scene {

enum class ArmPose { Rest, Left, Right, FrontHigh, FrontLow };

const char* to_string(ArmPose pose);
ArmPose arm_pose_from_string(std::string_view s);

struct Palette {
    Rgb skin{224, 172, 140};
    Rgb clothing{40, 60, 140};
    Rgb trousers{50, 50, 60};
    Rgb background{100, 120, 100};
    Rgb face_marks{40, 25, 20};
    Rgb hair{35, 25, 20};
};

struct CameraSpec {
    double focal_px = 640.0;  // about 53 degrees horizontal field of view at 640 px
    int width = 640;
    int height = 480;
};

/// A standing stick figure facing the drone. Body proportions follow the
/// face-to-body ratios the detector assumes: the whole-body box is 7.5 face
/// boxes tall and 3 wide, shoulders at 20% of the box height.
struct SceneSpec {
    Vec3 user_position{0.0, 4.0, 0.0};  // ground point under the user, world meters
    double user_height = 1.75;
    ArmPose arm = ArmPose::Rest;
    double arm_angle = 0.0;          // radians above horizontal, stretched-out poses
    double arm_length_ratio = 1.2;   // shoulder-center-to-hand distance / body box width
    double front_lateral = 0.0;      // front-of-body hand offset toward image right, meters
    std::optional<double> front_height;  // hand center height above ground, meters
    Palette palette;
    CameraSpec camera;
    std::optional<std::uint64_t> noise_seed;
    int noise_amplitude = 8;         // uniform +/- per channel when noise_seed is set
};

struct GroundTruth {
    PixelCoord shoulder_center;              // p_uc
    std::optional<PixelCoord> hand;
    PixelCoord gesture_vector;               // hand - shoulder_center, zero without a hand
    BoundingBox face_box;
    BoundingBox body_box;
};

struct Rendered {
    Frame frame;
    GroundTruth truth;
};

/// Body-plane geometry in meters (lateral toward image right, height above ground).
struct FigureGeometry {
    double head_diameter;
    double box_width;
    double shoulder_height;
    double hand_radius;
    double hand_lateral;
    double hand_height;
    bool has_hand;
};
FigureGeometry figure_geometry(const SceneSpec& spec);

/// Pinhole projection of a world point for a camera at the drone pose.
/// Returns continuous pixel coordinates; throws FrustumError behind the camera.
struct Projection {
    double u;
    double v;
    double depth;
};
Projection project(const CameraSpec& camera, const sim::DroneState& drone, const Vec3& world);

Rendered render(const SceneSpec& spec, const sim::DroneState& drone, std::uint32_t timestamp_ms = 0);

struct Keyframe {
    int frame = 0;
    ArmPose arm = ArmPose::Rest;
    double arm_angle = 0.0;  // radians
    double front_lateral = 0.0;
    std::optional<double> front_height;
};

/// Scene plus initial drone pose and a timeline of arm poses; each keyframe
/// holds until the next one.
struct Scenario {
    SceneSpec scene;
    sim::DroneState drone;
    sim::SimParams sim;
    int frames = 120;
    std::uint32_t frame_interval_ms = 40;
    std::vector<Keyframe> timeline;

    SceneSpec scene_at(int frame) const;
};

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace gpilot::scene
