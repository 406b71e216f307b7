#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "gpilot/frame.hpp"
#include "gpilot/geometry.hpp"

namespace gpilot::haar {

struct WeightedRect {
    BoundingBox rect;  // in base-window coordinates
    double weight = 0.0;
};

struct HaarFeature {
    std::vector<WeightedRect> rects;  // 2 or 3
    bool tilted = false;
};

/// Depth-one decision tree: value < threshold * stddev picks left, else right.
struct Stump {
    int feature = 0;
    double threshold = 0.0;
    double left = 0.0;
    double right = 0.0;
};

struct CascadeStage {
    std::vector<Stump> stumps;
    double threshold = 0.0;  // stage passes iff sum of stump outputs >= threshold
};

struct Cascade {
    int window_width = 0;
    int window_height = 0;
    std::vector<CascadeStage> stages;
    std::vector<HaarFeature> features;
    /// Stage count declared by the file itself (<stageNum>), or -1 when absent.
    int declared_stage_count = -1;

    std::size_t stump_count() const;
};

/// Parses both the current OpenCV cascade layout (<cascade> with
/// <stages>/<features>) and the legacy <trees> layout, stumps only.
Cascade parse_cascade(std::string_view document);
Cascade load_cascade(const std::filesystem::path& path);

/// Small stump cascade tuned to the synthetic renderer's face pattern
/// (data/mini_face_cascade.xml, compiled in).
std::string_view mini_face_cascade_xml();
const Cascade& mini_face_cascade();

/// Summed-area tables with a zero first row and column: sums(x, y) is the
/// total of all pixels strictly above and to the left of (x, y).
class IntegralImage {
public:
    IntegralImage() = default;
    explicit IntegralImage(const GrayImage& image);

    int width() const { return width_; }    // source width
    int height() const { return height_; }  // source height

    std::int64_t sum_at(int x, int y) const { return sums_[index(x, y)]; }
    std::int64_t squared_sum_at(int x, int y) const { return squared_[index(x, y)]; }

    std::int64_t rect_sum(const BoundingBox& r) const {
        return sums_[index(r.right(), r.bottom())] - sums_[index(r.x, r.bottom())] -
               sums_[index(r.right(), r.y)] + sums_[index(r.x, r.y)];
    }
    std::int64_t rect_squared_sum(const BoundingBox& r) const {
        return squared_[index(r.right(), r.bottom())] - squared_[index(r.x, r.bottom())] -
               squared_[index(r.right(), r.y)] + squared_[index(r.x, r.y)];
    }

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * (width_ + 1) + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::int64_t> sums_;
    std::vector<std::int64_t> squared_;
};

IntegralImage integral(const GrayImage& image);

/// Cascade with every feature rectangle resized for one pyramid level.
/// Rectangle weights are rebalanced after rounding so each feature still
/// responds with zero to a flat window.
struct ScaledCascade {
    struct Rect {
        BoundingBox rect;
        double weight;
    };
    struct Feature {
        std::vector<Rect> rects;
    };

    const Cascade* cascade = nullptr;
    double scale = 1.0;
    int window_width = 0;
    int window_height = 0;
    BoundingBox norm_rect;  // window interior used for variance normalization
    std::vector<Feature> features;

    ScaledCascade(const Cascade& c, double scale);

    /// Per-window normalization (mean and stddev over norm_rect) from raw sums.
    /// Returns false for windows whose stddev is too small to classify.
    bool normalization(std::int64_t sum, std::int64_t squared_sum, double& stddev) const;

    /// True when the window whose top-left corner is (x, y) passes every stage.
    bool evaluate(const IntegralImage& ii, int x, int y) const;
};

struct DetectParams {
    double scale_step = 1.1;
    int min_window = 24;      // smallest window width considered, pixels
    int min_neighbors = 3;    // raw hits a cluster needs to be reported
    double group_eps = 0.2;   // rectangle similarity tolerance for clustering
    int min_step = 2;         // sliding stride floor, pixels
};

/// All windows passing the cascade, before grouping.
std::vector<BoundingBox> detect_raw(const Cascade& cascade, const GrayImage& image, const DetectParams& params);

/// Clusters similar rectangles (transitive closure of the similarity relation)
/// and returns one averaged box per cluster with >= min_neighbors members,
/// with boxes nested inside a stronger cluster removed. Largest first.
std::vector<BoundingBox> group_rectangles(const std::vector<BoundingBox>& raw, int min_neighbors, double eps);

std::vector<BoundingBox> detect_faces(const Cascade& cascade, const Frame& frame, const DetectParams& params = {});

struct BodyRatios {
    double width = 3.0;   // body width / face width
    double height = 7.5;  // body height / face height
};

/// Whole-body box: width_ratio * face width centered on the face center,
/// height_ratio * face height starting at the face top, clipped to the frame.
BoundingBox user_box_from_face(const BoundingBox& face, int frame_width, int frame_height,
                               const BodyRatios& ratios = {});

}  // namespace gpilot::haar
