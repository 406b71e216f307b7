#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "doctest.h"

#include "gpilot/errors.hpp"
#include "gpilot/frame.hpp"

using namespace gpilot;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("gpilot_frame_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Frame random_frame(std::mt19937_64& rng, int w, int h, std::uint32_t t) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(3 * w * h));
    for (auto& b : px) b = static_cast<std::uint8_t>(rng());
    return Frame(w, h, t, std::move(px));
}

std::string le32(std::uint32_t v) {
    std::string s(4, '\0');
    for (int i = 0; i < 4; ++i) s[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
    return s;
}

}  // namespace

TEST_CASE("frame buffer holds exactly 3*w*h bytes") {
    const Frame f(5, 3, 7, Rgb{1, 2, 3});
    CHECK(f.pixels().size() == 45);
    CHECK(f.at(4, 2) == Rgb{1, 2, 3});
    CHECK(f.timestamp_ms() == 7);
    CHECK_THROWS_AS(Frame(2, 2, 0, std::vector<std::uint8_t>(11)), ContractError);
}

TEST_CASE("wire: minimal 2x1 frame decodes") {
    std::string bytes = "GPF1" + le32(2) + le32(1) + le32(5);
    bytes += std::string{'\x01', '\x02', '\x03', '\x04', '\x05', '\x06'};
    std::istringstream in(bytes);
    const auto f = read_wire_frame(in);
    CHECK(f.width() == 2);
    CHECK(f.height() == 1);
    CHECK(f.timestamp_ms() == 5);
    CHECK(f.at(1, 0) == Rgb{4, 5, 6});
}

TEST_CASE("wire: bad magic is a protocol error") {
    std::istringstream in("GPF2" + le32(1) + le32(1) + le32(0) + "abc");
    CHECK_THROWS_AS(read_wire_frame(in), ProtocolError);
}

TEST_CASE("wire: short payload is a truncation error") {
    std::istringstream in("GPF1" + le32(2) + le32(1) + le32(0) + "12345");
    CHECK_THROWS_AS(read_wire_frame(in), TruncationError);
    std::istringstream header_only("GPF1" + le32(2));
    CHECK_THROWS_AS(read_wire_frame(header_only), TruncationError);
}

TEST_CASE("wire: frames above the pixel budget are a resource error") {
    std::istringstream in("GPF1" + le32(4097) + le32(4096) + le32(0));
    CHECK_THROWS_AS(read_wire_frame(in), ResourceError);
    std::istringstream small("GPF1" + le32(3) + le32(3) + le32(0) + std::string(27, 'x'));
    CHECK_THROWS_AS(read_wire_frame(small, 8), ResourceError);
}

TEST_CASE("wire: zero-area frames are rejected before writing") {
    std::ostringstream out;
    CHECK_THROWS_AS(write_wire_frame(Frame{}, out), ContractError);
    CHECK(out.str().empty());
}

TEST_CASE("wire: 640x480 frame occupies 16 + 921600 bytes") {
    const Frame f(640, 480, 0);
    std::ostringstream out;
    write_wire_frame(f, out);
    CHECK(out.str().size() == 16 + 921600);
    CHECK(wire_size(f) == 16 + 921600);
    CHECK(encode_wire_frame(f).size() == 16 + 921600);
}

TEST_CASE("wire: round trip is the identity on random frames") {
    std::mt19937_64 rng(11);
    std::stringstream stream;
    std::vector<Frame> frames;
    for (int i = 0; i < 50; ++i) {
        const int w = 1 + static_cast<int>(rng() % 17);
        const int h = 1 + static_cast<int>(rng() % 13);
        frames.push_back(random_frame(rng, w, h, static_cast<std::uint32_t>(rng())));
        write_wire_frame(frames.back(), stream);
        CHECK(decode_wire_frame(encode_wire_frame(frames.back())) == frames.back());
    }
    for (const auto& f : frames) CHECK(read_wire_frame(stream) == f);
    CHECK_FALSE(try_read_wire_frame(stream).has_value());
}

TEST_CASE("wire: try_read distinguishes clean end from a torn header") {
    std::istringstream empty("");
    CHECK_FALSE(try_read_wire_frame(empty).has_value());
    std::istringstream torn("GP");
    CHECK_THROWS_AS(try_read_wire_frame(torn), TruncationError);
}

TEST_CASE("ppm: write then read returns the same pixels") {
    TempDir dir;
    std::mt19937_64 rng(3);
    const auto f = random_frame(rng, 9, 4, 0);
    write_ppm(f, dir.path / "a.ppm");
    CHECK(read_ppm(dir.path / "a.ppm") == f);
}

TEST_CASE("ppm: header comments and whitespace are accepted") {
    const std::string text = "P6\n# comment\n2 1\n255\n";
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    for (std::uint8_t b : {10, 20, 30, 40, 50, 60}) bytes.push_back(b);
    const auto f = decode_ppm(bytes);
    CHECK(f.width() == 2);
    CHECK(f.at(1, 0) == Rgb{40, 50, 60});
}

TEST_CASE("ppm: unsupported or broken files are format errors") {
    const std::string p3 = "P3\n1 1\n255\n0 0 0\n";
    CHECK_THROWS_AS(decode_ppm(std::vector<std::uint8_t>(p3.begin(), p3.end())), FormatError);
    const std::string deep = "P6\n1 1\n65535\n";
    CHECK_THROWS_AS(decode_ppm(std::vector<std::uint8_t>(deep.begin(), deep.end())), FormatError);
    const std::string short_payload = "P6\n2 2\n255\nabc";
    CHECK_THROWS(decode_ppm(std::vector<std::uint8_t>(short_payload.begin(), short_payload.end())));
}

TEST_CASE("load_sequence: three frames get timestamps 0, 40, 80 in filename order") {
    TempDir dir;
    for (int i : {2, 0, 1}) write_ppm(Frame(640, 480, 0, Rgb{static_cast<std::uint8_t>(i), 0, 0}), dir.path / ("f" + std::to_string(i) + ".ppm"));
    std::ofstream(dir.path / "notes.txt") << "ignored";
    const auto frames = load_sequence(dir.path);
    REQUIRE(frames.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(frames[static_cast<std::size_t>(i)].timestamp_ms() == static_cast<std::uint32_t>(40 * i));
        CHECK(frames[static_cast<std::size_t>(i)].at(0, 0).r == i);
    }
    CHECK(load_sequence(dir.path, {"*.ppm", 100})[2].timestamp_ms() == 200);
    CHECK(load_sequence(dir.path, {"f1*", 40}).size() == 1);
}

TEST_CASE("load_sequence: empty directory gives no frames") {
    TempDir dir;
    CHECK(load_sequence(dir.path).empty());
}

TEST_CASE("load_sequence: mixed dimensions name the offending file") {
    TempDir dir;
    write_ppm(Frame(640, 480), dir.path / "a.ppm");
    write_ppm(Frame(320, 240), dir.path / "b.ppm");
    try {
        load_sequence(dir.path);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("b.ppm") != std::string::npos);
    }
}

TEST_CASE("load_sequence: missing directory is an input error") {
    CHECK_THROWS_AS(load_sequence("/nonexistent/gpilot/frames"), InputError);
}

TEST_CASE("load_sequence is deterministic") {
    TempDir dir;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 4; ++i) write_ppm(random_frame(rng, 8, 6, 0), dir.path / ("x" + std::to_string(i) + ".ppm"));
    CHECK(load_sequence(dir.path) == load_sequence(dir.path));
}

TEST_CASE("to_gray uses rounded BT.601 luma") {
    Frame f(3, 1);
    f.set(0, 0, {255, 0, 0});
    f.set(1, 0, {0, 255, 0});
    f.set(2, 0, {255, 255, 255});
    const auto g = to_gray(f);
    CHECK(g.at(0, 0) == 76);   // 0.299 * 255 = 76.2
    CHECK(g.at(1, 0) == 150);  // 0.587 * 255 = 149.7
    CHECK(g.at(2, 0) == 255);
}

TEST_CASE("wire header alone is enough to refuse an oversized frame") {
    const auto bytes = encode_wire_frame(Frame(64, 32, 9));
    const auto h = decode_wire_header(bytes);
    CHECK(h.width == 64);
    CHECK(h.height == 32);
    CHECK(h.timestamp_ms == 9);
    CHECK_THROWS_AS(decode_wire_header(bytes, 64 * 32 - 1), ResourceError);
    CHECK_THROWS_AS(decode_wire_header(std::span(bytes).first(15)), TruncationError);
}
