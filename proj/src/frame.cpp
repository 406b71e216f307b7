#include "gpilot/frame.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "gpilot/errors.hpp"

namespace gpilot {

namespace {

constexpr std::array<char, 4> kWireMagic = {'G', 'P', 'F', '1'};

std::uint32_t load_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
    p[2] = static_cast<std::uint8_t>(v >> 16);
    p[3] = static_cast<std::uint8_t>(v >> 24);
}

WireHeader parse_header(const std::uint8_t* h, std::uint64_t max_pixels) {
    if (std::memcmp(h, kWireMagic.data(), kWireMagic.size()) != 0)
        throw ProtocolError("wire frame: bad magic");
    WireHeader header{load_u32_le(h + 4), load_u32_le(h + 8), load_u32_le(h + 12)};
    if (header.width == 0 || header.height == 0)
        throw ProtocolError("wire frame: zero-area frame");
    if (static_cast<std::uint64_t>(header.width) * header.height > max_pixels)
        throw ResourceError("wire frame: " + std::to_string(header.width) + "x" +
                            std::to_string(header.height) + " exceeds the configured pixel limit");
    return header;
}

std::array<std::uint8_t, kWireHeaderSize> make_header(const Frame& frame) {
    if (frame.empty()) throw ContractError("cannot encode a zero-area frame");
    std::array<std::uint8_t, kWireHeaderSize> h{};
    std::memcpy(h.data(), kWireMagic.data(), kWireMagic.size());
    store_u32_le(h.data() + 4, static_cast<std::uint32_t>(frame.width()));
    store_u32_le(h.data() + 8, static_cast<std::uint32_t>(frame.height()));
    store_u32_le(h.data() + 12, frame.timestamp_ms());
    return h;
}

}  // namespace

Frame::Frame(int width, int height, std::uint32_t timestamp_ms, Rgb fill)
    : width_(width), height_(height), timestamp_ms_(timestamp_ms) {
    if (width < 0 || height < 0) throw ContractError("negative frame dimensions");
    pixels_.resize(3 * static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
    }
}

Frame::Frame(int width, int height, std::uint32_t timestamp_ms, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), timestamp_ms_(timestamp_ms), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0) throw ContractError("negative frame dimensions");
    if (pixels_.size() != 3 * static_cast<std::size_t>(width) * height)
        throw ContractError("pixel buffer length must be 3*width*height");
}

GrayImage to_gray(const Frame& frame) {
    GrayImage gray(frame.width(), frame.height());
    const auto px = frame.pixels();
    for (std::size_t i = 0; i < gray.data.size(); ++i) {
        const int r = px[3 * i], g = px[3 * i + 1], b = px[3 * i + 2];
        gray.data[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
    }
    return gray;
}

// ---------------------------------------------------------------------------
// PPM

Frame decode_ppm(std::span<const std::uint8_t> bytes, const std::string& name) {
    std::size_t pos = 0;
    auto fail = [&](const std::string& msg) -> FormatError {
        return FormatError(name + ": " + msg);
    };
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw fail("malformed PPM header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            if (v > (1L << 24)) throw fail("PPM dimension out of range");
        }
        return v;
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw fail("not a binary PPM (P6) file");
    pos = 2;
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (w <= 0 || h <= 0) throw fail("PPM has zero area");
    if (maxval != 255) throw fail("only maxval 255 PPM files are supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("malformed PPM header");
    ++pos;
    const std::size_t n = 3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < n) throw fail("truncated PPM pixel data");
    std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return Frame(static_cast<int>(w), static_cast<int>(h), 0, std::move(pixels));
}

Frame read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_ppm(bytes, path.string());
}

void write_ppm(const Frame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << "P6\n" << frame.width() << ' ' << frame.height() << "\n255\n";
    const auto px = frame.pixels();
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) throw InputError("write failed for " + path.string());
}

std::vector<Frame> load_sequence(const std::filesystem::path& directory, const SequenceOptions& options) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(directory)) throw InputError("not a directory: " + directory.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (fnmatch(options.pattern.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (const auto& file : files) {
        Frame f = read_ppm(file);
        if (!frames.empty() && (f.width() != frames.front().width() || f.height() != frames.front().height()))
            throw FormatError(file.string() + ": dimensions " + std::to_string(f.width()) + "x" +
                              std::to_string(f.height()) + " differ from the sequence's " +
                              std::to_string(frames.front().width()) + "x" +
                              std::to_string(frames.front().height()));
        f.set_timestamp_ms(static_cast<std::uint32_t>(frames.size()) * options.frame_interval_ms);
        frames.push_back(std::move(f));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Wire format

std::size_t wire_size(const Frame& frame) { return kWireHeaderSize + frame.pixels().size(); }

std::optional<Frame> try_read_wire_frame(std::istream& in, std::uint64_t max_pixels) {
    std::array<std::uint8_t, kWireHeaderSize> h{};
    in.read(reinterpret_cast<char*>(h.data()), h.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) return std::nullopt;
    if (got < h.size()) {
        // Check magic on whatever arrived so garbage is reported as such.
        if (std::memcmp(h.data(), kWireMagic.data(), std::min(got, kWireMagic.size())) != 0)
            throw ProtocolError("wire frame: bad magic");
        throw TruncationError("wire frame: truncated header");
    }
    const auto header = parse_header(h.data(), max_pixels);
    const std::size_t n = 3 * static_cast<std::size_t>(header.width) * header.height;
    std::vector<std::uint8_t> pixels(n);
    in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw TruncationError("wire frame: expected " + std::to_string(n) + " payload bytes, got " +
                              std::to_string(in.gcount()));
    return Frame(static_cast<int>(header.width), static_cast<int>(header.height), header.timestamp_ms,
                 std::move(pixels));
}

Frame read_wire_frame(std::istream& in, std::uint64_t max_pixels) {
    auto f = try_read_wire_frame(in, max_pixels);
    if (!f) throw TruncationError("wire frame: end of stream before header");
    return std::move(*f);
}

void write_wire_frame(const Frame& frame, std::ostream& out) {
    const auto h = make_header(frame);
    out.write(reinterpret_cast<const char*>(h.data()), h.size());
    const auto px = frame.pixels();
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) throw InputError("wire frame: sink write failed");
}

WireHeader decode_wire_header(std::span<const std::uint8_t> bytes, std::uint64_t max_pixels) {
    if (bytes.size() < kWireHeaderSize) throw TruncationError("wire frame: truncated header");
    return parse_header(bytes.data(), max_pixels);
}

Frame decode_wire_frame(std::span<const std::uint8_t> bytes, std::uint64_t max_pixels) {
    if (bytes.size() < kWireHeaderSize) {
        if (std::memcmp(bytes.data(), kWireMagic.data(), std::min(bytes.size(), kWireMagic.size())) != 0)
            throw ProtocolError("wire frame: bad magic");
        throw TruncationError("wire frame: truncated header");
    }
    const auto header = parse_header(bytes.data(), max_pixels);
    const std::size_t n = 3 * static_cast<std::size_t>(header.width) * header.height;
    if (bytes.size() - kWireHeaderSize < n)
        throw TruncationError("wire frame: expected " + std::to_string(n) + " payload bytes, got " +
                              std::to_string(bytes.size() - kWireHeaderSize));
    if (bytes.size() - kWireHeaderSize > n) throw ProtocolError("wire frame: trailing bytes after payload");
    std::vector<std::uint8_t> pixels(bytes.begin() + kWireHeaderSize, bytes.end());
    return Frame(static_cast<int>(header.width), static_cast<int>(header.height), header.timestamp_ms,
                 std::move(pixels));
}

std::vector<std::uint8_t> encode_wire_frame(const Frame& frame) {
    const auto h = make_header(frame);
    const auto px = frame.pixels();
    std::vector<std::uint8_t> out(h.size() + px.size());
    std::copy(h.begin(), h.end(), out.begin());
    std::copy(px.begin(), px.end(), out.begin() + static_cast<std::ptrdiff_t>(h.size()));
    return out;
}

}  // namespace gpilot
