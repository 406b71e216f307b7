#include <cmath>
#include <random>

#include "doctest.h"

#include "gpilot/command.hpp"

using namespace gpilot;
using namespace gpilot::command;
using hand::HandDetection;
using hand::HandKind;

namespace {

StateBuffers fill(std::size_t n_out, PixelCoord out, std::size_t n_front = 0, PixelCoord front = {}) {
    StateBuffers b;
    for (std::size_t i = 0; i < b.capacity; ++i) {
        b.out.push_back(i < n_out ? out : PixelCoord{});
        b.front.push_back(i < n_front ? front : PixelCoord{});
    }
    return b;
}

}  // namespace

TEST_CASE("trace: 31 copies of (100,-10) give planar without snap") {
    const auto c = generate_command(fill(31, {100, -10}));
    CHECK(c.kind == CommandKind::Planar);
    CHECK(c.vector == Vec3{100.0, -10.0, 0.0});
}

TEST_CASE("trace: 40 copies of (8,-90) snap to straight up") {
    const auto c = generate_command(fill(40, {8, -90}));
    CHECK(c.kind == CommandKind::Planar);
    CHECK(c.vector == Vec3{0.0, -90.0, 0.0});
}

TEST_CASE("trace: 31 front entries above the center give come closer") {
    const auto c = generate_command(fill(0, {}, 31, {3, -25}));
    CHECK(c.kind == CommandKind::Depth);
    CHECK(c.vector == Vec3{0.0, 0.0, -1.0});
}

TEST_CASE("trace: exactly 30 out entries fall through to go further") {
    const auto c = generate_command(fill(30, {50, 5}, 31, {0, 12}));
    CHECK(c.kind == CommandKind::Depth);
    CHECK(c.vector == Vec3{0.0, 0.0, 1.0});
}

TEST_CASE("30 front entries are not enough") {
    CHECK(generate_command(fill(0, {}, 30, {0, -5})).kind == CommandKind::None);
    CHECK(generate_command(fill(0, {}, 30, {0, 5})).kind == CommandKind::None);
    CHECK(generate_command(StateBuffers{}).kind == CommandKind::None);
}

TEST_CASE("push_frame keeps the newest 60 entries") {
    StateBuffers b;
    for (int i = 1; i <= 61; ++i) push_frame(b, {HandKind::StretchedOut, {i, 0}, 0.0});
    CHECK(b.out.size() == 60);
    CHECK(b.front.size() == 60);
    CHECK(b.out.front() == PixelCoord{2, 0});
    CHECK(b.out.back() == PixelCoord{61, 0});
}

TEST_CASE("push_frame writes zero into the buffer of the other kind") {
    StateBuffers b;
    push_frame(b, {HandKind::StretchedOut, {5, 6}, 1.0});
    CHECK(b.out.back() == PixelCoord{5, 6});
    CHECK(b.front.back() == PixelCoord{});
    push_frame(b, {HandKind::FrontOfBody, {1, -9}, 1.0});
    CHECK(b.out.back() == PixelCoord{});
    CHECK(b.front.back() == PixelCoord{1, -9});
    push_frame(b, HandDetection{});
    CHECK(b.out.back() == PixelCoord{});
    CHECK(b.front.back() == PixelCoord{});
}

TEST_CASE("planar vector is the mean of the nonzero entries") {
    StateBuffers b;
    for (int i = 0; i < 60; ++i) push_frame(b, i >= 20 ? HandDetection{HandKind::StretchedOut, {100 + i, -i}, 0.0} : HandDetection{});
    // i in 20..59: mean x = 139.5, mean y = -39.5
    const auto c = generate_command(b);
    CHECK(c.kind == CommandKind::Planar);
    CHECK(c.vector.x == doctest::Approx(139.5));
    CHECK(c.vector.y == doctest::Approx(-39.5));
}

TEST_CASE("snap fires exactly when |y| > |0.5 x| on random means") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> coord(-200, 200);
    for (int i = 0; i < 1000; ++i) {
        PixelCoord p{coord(rng), coord(rng)};
        if (p.is_zero()) p.x = 1;
        const auto c = generate_command(fill(31 + static_cast<std::size_t>(rng() % 30), p));
        REQUIRE(c.kind == CommandKind::Planar);
        const bool snap = std::abs(p.y) > std::abs(0.5 * p.x);
        CHECK(c.vector.y == p.y);
        CHECK(c.vector.x == (snap ? 0.0 : p.x));
        CHECK(c.vector.z == 0.0);
    }
}

TEST_CASE("planar takes priority over front entries") {
    const auto c = generate_command(fill(31, {-80, 0}, 60, {0, -20}));
    CHECK(c.kind == CommandKind::Planar);
}

TEST_CASE("kind none exactly when neither count exceeds 30") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 500; ++i) {
        StateBuffers b;
        int n_out = 0, n_hi = 0, n_lo = 0;
        for (int k = 0; k < 60; ++k) {
            const auto r = rng() % 4;
            if (r == 0) {
                push_frame(b, {HandKind::StretchedOut, {1 + static_cast<int>(rng() % 50), -5}, 0.0});
                ++n_out;
            } else if (r == 1) {
                push_frame(b, {HandKind::FrontOfBody, {0, -1}, 0.0});
                ++n_hi;
            } else if (r == 2) {
                push_frame(b, {HandKind::FrontOfBody, {0, 1}, 0.0});
                ++n_lo;
            } else {
                push_frame(b, {});
            }
        }
        const auto c = generate_command(b);
        CHECK((c.kind == CommandKind::None) == (n_out <= 30 && n_hi <= 30 && n_lo <= 30));
    }
}

TEST_CASE("averaging: one changed entry moves the mean by at most its change over n") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        StateBuffers b;
        for (int k = 0; k < 60; ++k) b.out.push_back({1 + static_cast<int>(rng() % 100), -1 - static_cast<int>(rng() % 100)});
        b.front.assign(60, {});
        CommandParams p;
        p.lambda4 = 1e9;  // keep x even when it would snap
        const auto c0 = generate_command(b, p);
        const auto k = rng() % 60;
        const PixelCoord old = b.out[k];
        b.out[k] = {1 + static_cast<int>(rng() % 100), -1 - static_cast<int>(rng() % 100)};
        const auto c1 = generate_command(b, p);
        CHECK(std::abs(c1.vector.x - c0.vector.x) <= std::abs(b.out[k].x - old.x) / 60.0 + 1e-9);
        CHECK(std::abs(c1.vector.y - c0.vector.y) <= std::abs(b.out[k].y - old.y) / 60.0 + 1e-9);
    }
}

TEST_CASE("rate limit: 0..1200 ms every 100 ms emits at 0, 600, 1200") {
    std::vector<std::uint32_t> t;
    for (std::uint32_t v = 0; v <= 1200; v += 100) t.push_back(v);
    const auto admitted = rate_limit(t);
    REQUIRE(admitted.size() == 3);
    CHECK(t[admitted[0]] == 0);
    CHECK(t[admitted[1]] == 600);
    CHECK(t[admitted[2]] == 1200);
}

TEST_CASE("rate limit: a single command passes immediately") {
    const std::vector<std::uint32_t> t{12345};
    CHECK(rate_limit(t) == std::vector<std::size_t>{0});
}

TEST_CASE("rate limit: 10 s of 25 Hz candidates give at most 17 emissions") {
    std::vector<std::uint32_t> t;
    for (std::uint32_t v = 0; v < 10000; v += 40) t.push_back(v);
    const auto admitted = rate_limit(t);
    CHECK(admitted.size() <= 17);
    for (std::size_t i = 1; i < admitted.size(); ++i) CHECK(t[admitted[i]] - t[admitted[i - 1]] >= 600);
}

TEST_CASE("rate limiter reset admits the next command") {
    RateLimiter r;
    CHECK(r.admit(0));
    CHECK_FALSE(r.admit(599));
    r.reset();
    CHECK(r.admit(600 - 1));
    CHECK(r.interval_ms() == 600);
}

TEST_CASE("speed norm and magnitude") {
    PilotCommand planar{CommandKind::Planar, {30.0, -40.0, 0.0}, 0.0};
    set_magnitude(planar, 100);
    CHECK(planar.magnitude_norm == doctest::Approx(0.5));
    CHECK(speed_norm(planar) == doctest::Approx(0.5));
    set_magnitude(planar, 25);
    CHECK(speed_norm(planar) == 1.0);

    PilotCommand depth{CommandKind::Depth, {0.0, 0.0, 1.0}, 0.0};
    set_magnitude(depth, 100);
    CHECK(depth.magnitude_norm == 0.0);
    CHECK(speed_norm(depth) == 0.5);
    CHECK(speed_norm(PilotCommand{}) == 0.0);
    CHECK(std::string(to_string(CommandKind::Depth)) == "depth");
}
