#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "gpilot/frame.hpp"
#include "gpilot/geometry.hpp"

namespace gpilot::skin {

/// Histogram lookup table of P(skin | quantized RGB).
class SkinModel {
public:
    SkinModel() = default;
    SkinModel(int bins_per_channel, std::vector<float> table);

    int bins() const { return bins_; }
    std::span<const float> table() const { return table_; }

    std::size_t cell_index(Rgb c) const {
        // floor(c * bins / 256); bins is a power of two so this never leaves [0, bins).
        const auto q = [this](std::uint8_t v) { return static_cast<std::size_t>(v) * bins_ / 256; };
        return (q(c.r) * bins_ + q(c.g)) * bins_ + q(c.b);
    }
    float probability(Rgb c) const { return table_[cell_index(c)]; }

private:
    int bins_ = 0;
    std::vector<float> table_;
};

/// Per-cell skin / (skin + nonskin) with add-one smoothing on both counts,
/// so cells without samples come out at exactly 0.5.
SkinModel train_skin_model(std::span<const Rgb> skin, std::span<const Rgb> nonskin, int bins = 64);

inline float skin_probability(const SkinModel& model, Rgb pixel) { return model.probability(pixel); }

/// Model shipped with the library: trained on the full RGB cube labeled by
/// a fixed chromaticity rule, so every cell has samples.
const SkinModel& default_skin_model();

// "SKN1", u32 bins, bins^3 little-endian float32.
void write_skin_model(const SkinModel& model, std::ostream& out);
SkinModel read_skin_model(std::istream& in);
void save_skin_model(const SkinModel& model, const std::filesystem::path& path);
SkinModel load_skin_model(const std::filesystem::path& path);

/// Binary mask over `region` (frame coordinates); bits are row-major region.width x region.height.
struct SkinMask {
    BoundingBox region;
    std::vector<std::uint8_t> bits;

    SkinMask() = default;
    explicit SkinMask(const BoundingBox& r)
        : region(r), bits(static_cast<std::size_t>(std::max(r.width, 0)) * std::max(r.height, 0), 0) {}

    /// Lookup by absolute frame coordinate; 0 outside the region.
    std::uint8_t at(int x, int y) const {
        if (!region.contains(x, y)) return 0;
        return bits[static_cast<std::size_t>(y - region.y) * region.width + (x - region.x)];
    }
    void set(int x, int y, std::uint8_t v) {
        if (region.contains(x, y)) bits[static_cast<std::size_t>(y - region.y) * region.width + (x - region.x)] = v;
    }
    std::size_t count() const;

    friend bool operator==(const SkinMask&, const SkinMask&) = default;
};

struct SkinParams {
    double threshold = 0.5;
    double side_extension = 1.0;  // of user_box width, each side
    double top_extension = 0.5;   // of user_box height, above
    double erase_top = 0.25;      // rows [0, erase_top*h) of the user box are cleared
    double erase_bottom = 0.55;   // rows [erase_bottom*h, h) are cleared
};

BoundingBox skin_region(const BoundingBox& user_box, int frame_width, int frame_height, const SkinParams& params = {});

SkinMask detect_skin(const SkinModel& model, const Frame& frame, const BoundingBox& user_box,
                     const SkinParams& params = {});

/// Clears face/neck and legs/feet rows inside user_box; everything else untouched.
SkinMask erase_body_regions(SkinMask mask, const BoundingBox& user_box, const SkinParams& params = {});

/// Debug rasters: likelihood (gray), binary mask, and the frame with R set to 255 on skin pixels.
struct SkinDump {
    Frame likelihood;
    Frame mask;
    Frame overlay;
};
SkinDump render_skin_dump(const SkinModel& model, const Frame& frame, const SkinMask& mask);

}  // namespace gpilot::skin
