#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "gpilot/command.hpp"
#include "gpilot/dsst.hpp"
#include "gpilot/frame.hpp"
#include "gpilot/haar.hpp"
#include "gpilot/hand.hpp"
#include "gpilot/scene.hpp"
#include "gpilot/sim.hpp"
#include "gpilot/skin.hpp"

namespace gpilot::pipeline {

struct PipelineConfig {
    hand::HandParams hand;
    hand::AnchorParams anchors;
    command::CommandParams command;
    std::size_t buffer_length = 60;
    std::uint32_t rate_limit_ms = 600;
    std::uint32_t command_hold_ms = 1000;  // an emitted velocity is flown this long unless replaced
    dsst::TrackerParams tracker;
    skin::SkinParams skin;
    sim::SimParams sim;
    haar::DetectParams detect;
    haar::BodyRatios body_ratios;
    int init_max_frames = 100;  // 0 waits forever
    std::optional<BoundingBox> init_box;
    Vec3 user_position{0.0, 4.0, 0.0};
    sim::DroneState initial_drone{{0.0, 0.0, 0.0}, 1.5707963267948966, {}};
};

nlohmann::json to_json(const PipelineConfig& config);
/// Overrides the fields present in `j`; unknown keys are a FormatError.
void apply_json(PipelineConfig& config, const nlohmann::json& j);
/// Parses "k=v,k=v" tracker overrides (lambda, eta, scales, scale_step,
/// padding, sigma_factor, scale_sigma, template_area, scale_template_area,
/// min_size, features).
void apply_tracker_overrides(dsst::TrackerParams& params, std::string_view overrides);
BoundingBox parse_box(std::string_view text);

enum class SessionState { AwaitingInit, Tracking, Lost };
const char* to_string(SessionState state);

struct StageTimes {
    double detect_ms = 0;
    double track_ms = 0;
    double skin_ms = 0;
    double hand_ms = 0;
    double command_ms = 0;
    double total_ms = 0;
};

struct FrameReport {
    std::uint32_t timestamp_ms = 0;
    std::uint64_t index = 0;
    SessionState state = SessionState::AwaitingInit;
    std::optional<BoundingBox> user_box;
    double scale = 1.0;
    hand::HandDetection detection;
    command::PilotCommand command;  // generated this frame, before rate limiting
    bool emitted = false;
    Vec3 velocity_command;          // world-frame setpoint flown this frame
    sim::DroneState drone;          // after this frame's step
    std::optional<std::string> error;
    double processing_ms = 0.0;     // wall clock, left out of the JSON unless asked for
};

nlohmann::json to_json(const FrameReport& report, bool with_timing = false);
/// One compact JSON line, no trailing newline.
std::string to_jsonl(const FrameReport& report, bool with_timing = false);
nlohmann::json tracker_json(const FrameReport& report);
nlohmann::json hand_json(const FrameReport& report);

/// Per-frame loop for one user and one simulated drone:
/// detect face (until init) -> track -> skin -> erase -> hands -> buffers ->
/// command -> rate limit -> camera_to_body -> sim step.
class Session {
public:
    Session(PipelineConfig config, std::shared_ptr<const haar::Cascade> cascade,
            std::shared_ptr<const skin::SkinModel> skin_model);

    /// Throws InitializationError when no face was found within
    /// init_max_frames. Tracking loss yields a terminal report with state Lost;
    /// later frames are reported as Lost without processing.
    FrameReport process(const Frame& frame);

    /// Re-initializes the tracker on the next frame from `box`.
    void set_init_box(const BoundingBox& box);
    /// Drone back to its initial state, buffers and rate limiter cleared.
    void reset();

    SessionState state() const { return state_; }
    const sim::DroneState& drone() const { return drone_; }
    const PipelineConfig& config() const { return config_; }
    const command::StateBuffers& buffers() const { return buffers_; }
    const std::optional<skin::SkinMask>& last_mask() const { return last_mask_; }
    const StageTimes& last_times() const { return times_; }

private:
    bool try_initialize(const Frame& frame);

    PipelineConfig config_;
    std::shared_ptr<const haar::Cascade> cascade_;
    std::shared_ptr<const skin::SkinModel> skin_model_;
    SessionState state_ = SessionState::AwaitingInit;
    std::optional<BoundingBox> pending_box_;
    std::optional<dsst::TrackerState> tracker_;
    command::StateBuffers buffers_;
    command::RateLimiter limiter_;
    sim::DroneState drone_;
    Vec3 active_velocity_;
    std::optional<std::uint32_t> hold_until_;
    std::optional<std::uint32_t> last_timestamp_;
    std::uint64_t frames_seen_ = 0;
    std::uint64_t frames_without_init_ = 0;
    std::optional<skin::SkinMask> last_mask_;
    StageTimes times_;
};

/// Copies the scenario's user position, initial drone pose and simulator
/// parameters into `base`.
PipelineConfig config_for(const scene::Scenario& scenario, PipelineConfig base);

using FrameSink = std::function<void(const Frame& frame, const FrameReport& report)>;

/// Closed loop: each frame is rendered from the session's current drone pose.
/// Stops after a Lost report. Returns one report per processed frame.
std::vector<FrameReport> run_scenario(Session& session, const scene::Scenario& scenario, const FrameSink& sink = {});

/// Box, planar arrow from p_uc, cross (come closer) or circle (go further).
Frame annotate(const Frame& frame, const FrameReport& report, const hand::AnchorParams& anchors = {});

namespace color {
inline constexpr Rgb box{0, 255, 0};
inline constexpr Rgb command{255, 0, 0};
}  // namespace color

}  // namespace gpilot::pipeline
