#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpilot/geometry.hpp"

namespace gpilot {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend constexpr bool operator==(Rgb, Rgb) = default;
};

/// Owned RGB8 raster, row-major, plus a millisecond timestamp relative to
/// stream start. The pixel buffer always holds exactly 3*width*height bytes.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, std::uint32_t timestamp_ms = 0, Rgb fill = {});
    Frame(int width, int height, std::uint32_t timestamp_ms, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint32_t timestamp_ms() const { return timestamp_ms_; }
    void set_timestamp_ms(std::uint32_t t) { timestamp_ms_ = t; }
    bool empty() const { return width_ == 0 || height_ == 0; }
    BoundingBox bounds() const { return {0, 0, width_, height_}; }

    Rgb at(int x, int y) const {
        const auto* p = &pixels_[3 * (static_cast<std::size_t>(y) * width_ + x)];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) {
        auto* p = &pixels_[3 * (static_cast<std::size_t>(y) * width_ + x)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }
    /// Bounds-checked write; silently ignores out-of-frame coordinates.
    void plot(int x, int y, Rgb c) {
        if (x >= 0 && y >= 0 && x < width_ && y < height_) set(x, y, c);
    }

    std::span<const std::uint8_t> pixels() const { return pixels_; }
    std::span<std::uint8_t> pixels() { return pixels_; }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::uint32_t timestamp_ms_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Single-channel 8-bit raster (luma), row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// ITU-R BT.601 luma, rounded to nearest.
GrayImage to_gray(const Frame& frame);

// PPM (binary P6, maxval 255).
Frame read_ppm(const std::filesystem::path& path);
Frame decode_ppm(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>");
void write_ppm(const Frame& frame, const std::filesystem::path& path);

struct SequenceOptions {
    std::string pattern = "*.ppm";
    std::uint32_t frame_interval_ms = 40;
};

/// Frames from every file in `directory` whose name matches the glob, in
/// lexicographic filename order, timestamped 0, interval, 2*interval, ...
std::vector<Frame> load_sequence(const std::filesystem::path& directory,
                                 const SequenceOptions& options = {});

// Wire format: "GPF1", u32 width, u32 height, u32 timestamp_ms (little-endian),
// then 3*width*height bytes of RGB8.
inline constexpr std::size_t kWireHeaderSize = 16;
inline constexpr std::uint64_t kDefaultMaxWirePixels = 4096ull * 4096ull;

std::size_t wire_size(const Frame& frame);

struct WireHeader {
    std::uint32_t width;
    std::uint32_t height;
    std::uint32_t timestamp_ms;
};

/// Validates the first kWireHeaderSize bytes (magic, nonzero area, pixel budget).
WireHeader decode_wire_header(std::span<const std::uint8_t> bytes, std::uint64_t max_pixels = kDefaultMaxWirePixels);

Frame read_wire_frame(std::istream& in, std::uint64_t max_pixels = kDefaultMaxWirePixels);
/// Like read_wire_frame but returns nullopt on a clean end of stream at a frame boundary.
std::optional<Frame> try_read_wire_frame(std::istream& in,
                                         std::uint64_t max_pixels = kDefaultMaxWirePixels);
void write_wire_frame(const Frame& frame, std::ostream& out);

Frame decode_wire_frame(std::span<const std::uint8_t> bytes,
                        std::uint64_t max_pixels = kDefaultMaxWirePixels);
std::vector<std::uint8_t> encode_wire_frame(const Frame& frame);

}  // namespace gpilot
