#pragma once

#include <vector>

#include "gpilot/fft.hpp"
#include "gpilot/frame.hpp"
#include "gpilot/geometry.hpp"

namespace gpilot::dsst {

/// Grayscale raster normalized to [0, 1].
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

FloatImage to_float_gray(const Frame& frame);

/// d channels of identical width x height, channel-major.
struct FeatureMap {
    int width = 0;
    int height = 0;
    std::vector<std::vector<double>> channels;
    bool windowed = false;

    int depth() const { return static_cast<int>(channels.size()); }
};

enum class FeatureKind {
    Gray,          // d = 1, intensity mapped to [-0.5, 0.5]
    GrayGradient,  // gray plus 8 gradient-orientation channels, d = 9
};

/// Symmetric Hann taper of length n that never vanishes at the ends.
std::vector<double> hann(int n);

struct Sample {
    double center_x = 0.0;
    double center_y = 0.0;
    double patch_width = 0.0;   // source pixels covered
    double patch_height = 0.0;
    int out_width = 0;          // model resolution
    int out_height = 0;
};

/// Resamples the source rectangle described by `sample` to out_width x
/// out_height (box-averaged bilinear taps, edge pixels replicated outside
/// the image) and converts it to feature channels, optionally tapered by a
/// 2-D cosine window.
FeatureMap extract_features(const FloatImage& image, const Sample& sample, FeatureKind kind, bool cosine_window);

/// Resampled intensity only, in [0, 1]; shared by both feature paths.
std::vector<double> resample(const FloatImage& image, const Sample& sample);

/// Correlation filter in the Fourier domain: per-channel numerators A^l,
/// shared real denominator B (without lambda), and desired response G.
struct FilterModel {
    int width = 0;
    int height = 0;
    std::vector<Spectrum> numerators;
    std::vector<double> denominator;
    Spectrum g_spectrum;
    double lambda = 0.01;
    double eta = 0.025;
};

/// Gaussian of the given sigma with its peak at (width/2, height/2), integer division.
std::vector<double> gaussian_response(int width, int height, double sigma);

/// A^l = conj(G) F^l, B = sum_k conj(F^k) F^k for an explicit desired response.
FilterModel train_init(const FeatureMap& features, const std::vector<double>& desired, double lambda,
                       double eta = 0.025);

/// Same with a Gaussian desired response, sigma = sigma_factor * sqrt(width * height).
FilterModel train_init(const FeatureMap& features, double lambda, double sigma_factor, double eta = 0.025);

/// Filter H^l = A^l / (B + lambda) evaluated per frequency.
std::vector<Spectrum> filter_spectra(const FilterModel& model);

struct Response {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    double imag_ratio = 0.0;  // max |Im| / max |Re| before the imaginary part was dropped
};

/// y = IDFT( sum_l conj(A^l) Z^l / (B + lambda) ).
Response score(const FilterModel& model, const FeatureMap& features);

/// Linear interpolation of the model toward the one trained on `features`.
FilterModel update(const FilterModel& model, const FeatureMap& features);

/// Position of the maximum; ties go to the smallest row, then smallest column.
PixelCoord argmax(const Response& response);

struct TrackerParams {
    double lambda = 0.01;
    double eta = 0.025;
    int scale_count = 33;
    double scale_step = 1.02;
    double padding = 2.0;
    double sigma_factor = 1.0 / 16.0;
    double scale_sigma = 1.0;          // in scale bins
    int template_area = 4096;          // max pixels of the translation model grid
    int scale_template_area = 512;     // max pixels per scale sample
    double min_size = 4.0;             // smaller targets count as lost
    FeatureKind features = FeatureKind::Gray;
};

struct TrackerState {
    TrackerParams params;
    FilterModel translation_model;
    FilterModel scale_model;
    double center_x = 0.0;
    double center_y = 0.0;
    double base_width = 0.0;   // target size at initialization
    double base_height = 0.0;
    double scale_factor = 1.0;
    int template_width = 0;
    int template_height = 0;
    int scale_template_width = 0;
    int scale_template_height = 0;
    int frame_width = 0;
    int frame_height = 0;

    double width() const { return base_width * scale_factor; }
    double height() const { return base_height * scale_factor; }
    BoundingBox box() const;
};

/// Trains both models on the initial target box.
TrackerState init_tracker(const Frame& frame, const BoundingBox& target, const TrackerParams& params = {});

/// Translation search, then scale search, then model updates. Throws
/// TrackingLostError when the target shrinks below params.min_size.
BoundingBox track(TrackerState& state, const Frame& frame);

// Feature builders used by the tracker, exposed for tests and benchmarks.
FeatureMap translation_features(const TrackerState& state, const FloatImage& image);
FeatureMap scale_features(const TrackerState& state, const FloatImage& image);

}  // namespace gpilot::dsst
