#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "posegen/posemap.hpp"

using namespace posegen;

namespace {

KeypointSet all_visible(int h, int w, std::mt19937_64& rng, double grid = 1.0) {
    KeypointSet k;
    k.frame = {h, w};
    std::uniform_int_distribution<int> xs(0, static_cast<int>(w / grid) - 1), ys(0, static_cast<int>(h / grid) - 1);
    for (auto& p : k.points) p = {static_cast<float>(xs(rng) * grid), static_cast<float>(ys(rng) * grid), 1.0f};
    return k;
}

KeypointSet swap_labels(const KeypointSet& k) {
    KeypointSet s = k;
    for (int j = 0; j < kNumKeypoints; ++j) s.points[static_cast<std::size_t>(mirrored_joint(j))] = k.points[static_cast<std::size_t>(j)];
    return s;
}

std::set<std::array<float, 3>> palette_colors() {
    std::set<std::array<float, 3>> s;
    for (const auto& l : limb_table()) s.insert(l.rgb());
    return s;
}

std::string keypoint_json(int n, float conf = 1.0f) {
    std::string s = R"({"version": 1, "frame_size": [64, 64], "keypoints": [)";
    for (int i = 0; i < n; ++i) s += (i ? "," : "") + std::string("[1.0, 2.0, ") + std::to_string(conf) + "]";
    return s + "]}";
}

}  // namespace

TEST_SUITE("posemap") {

TEST_CASE("limb table matches the frozen palette fixture") {
    const auto golden = oracle::palette_fixture();
    REQUIRE(golden.size() == kNumLimbs);
    const auto& t = limb_table();
    for (int i = 0; i < kNumLimbs; ++i) {
        CAPTURE(i);
        CHECK(t[i].color.r == golden[i][0]);
        CHECK(t[i].color.g == golden[i][1]);
        CHECK(t[i].color.b == golden[i][2]);
    }
    CHECK(t[0].rgb() == std::array<float, 3>{1.0f, 0.0f, 0.0f});
}

TEST_CASE("limb table structure") {
    std::set<std::pair<int, int>> pairs;
    for (const auto& l : limb_table()) {
        CHECK(l.joint_a >= 0);
        CHECK(l.joint_b < kNumKeypoints);
        pairs.insert({std::min(l.joint_a, l.joint_b), std::max(l.joint_a, l.joint_b)});
    }
    CHECK(pairs.size() == kNumLimbs);
    CHECK(palette_colors().size() == kNumLimbs);
}

TEST_CASE("mirrored joints") {
    const std::vector<std::pair<int, int>> swaps{{2, 5}, {3, 6}, {4, 7}, {8, 11}, {9, 12}, {10, 13}, {14, 15}, {16, 17}};
    for (auto [a, b] : swaps) {
        CHECK(mirrored_joint(a) == b);
        CHECK(mirrored_joint(b) == a);
    }
    CHECK(mirrored_joint(0) == 0);
    CHECK(mirrored_joint(1) == 1);
}

TEST_CASE("keypoint json schema") {
    const auto k = parse_keypoints(keypoint_json(18));
    CHECK(k.frame == FrameSize{64, 64});
    CHECK(k.points[17] == Keypoint{1.0f, 2.0f, 1.0f});
    CHECK_THROWS_AS(parse_keypoints(keypoint_json(17)), SchemaError);
    CHECK_THROWS_AS(parse_keypoints(keypoint_json(18, -0.1f)), SchemaError);
    CHECK_THROWS_AS(parse_keypoints(keypoint_json(18, 1.5f)), SchemaError);
    CHECK_THROWS_AS(parse_keypoints("{not json"), ParseError);
    try {
        parse_keypoints(R"({"version": 1, "frame_size": [64, 64], "keypoints": "x"})");
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("keypoints") != std::string::npos);
    }
    try {
        parse_keypoints(R"({"version": 1, "keypoints": []})");
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("frame_size") != std::string::npos);
    }
}

TEST_CASE("keypoint json round trip") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    KeypointSet k;
    k.frame = {120, 80};
    for (auto& p : k.points) p = {u(rng) * 80, u(rng) * 120, u(rng)};
    CHECK(parse_keypoints(keypoints_to_json(k)) == k);
}

TEST_CASE("all invisible rasterizes to black") {
    KeypointSet k;
    k.frame = {64, 64};
    for (auto& p : k.points) p = {10, 10, 0.0f};
    const auto m = rasterize_pose(k, 64, 64, 2, 0.1f);
    CHECK(std::all_of(m.pixels.data.begin(), m.pixels.data.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("single limb matches the brute-force segment oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        KeypointSet k;
        k.frame = {48, 40};
        std::uniform_int_distribution<int> qx(-20, 2 * 40 + 20), qy(-20, 2 * 48 + 20);
        // half-pixel coordinates, some off-frame
        k.points[0] = {qx(rng) / 2.0f, qy(rng) / 2.0f, 1.0f};
        k.points[1] = {qx(rng) / 2.0f, qy(rng) / 2.0f, 1.0f};
        const int width = 1 + trial % 6;
        const auto m = rasterize_pose(k, 48, 40, width, 0.5f);
        const auto expect = oracle::segment_pixels(k.points[1].x, k.points[1].y, k.points[0].x, k.points[0].y,
                                                   width, 48, 40);
        std::size_t drawn = 0;
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 40; ++x) drawn += m.pixels.at(0, y, x) + m.pixels.at(1, y, x) + m.pixels.at(2, y, x) > 0;
        CAPTURE(trial);
        CHECK(drawn == expect.size());
        for (auto [y, x] : expect) {
            const auto c = limb_table()[12].rgb();
            CHECK(m.pixels.at(0, y, x) == c[0]);
            CHECK(m.pixels.at(1, y, x) == c[1]);
            CHECK(m.pixels.at(2, y, x) == c[2]);
        }
    }
}

TEST_CASE("golden pose maps are bit-exact") {
    const auto dir = oracle::fixtures_dir();
    const auto standing = load_keypoints(dir / "canonical_standing.keypoints.json");
    const auto got = rasterize_pose(standing, 256, 256, 4, kDefaultVisThreshold);
    CHECK(got.pixels == read_image(dir / "canonical_standing_256.png"));

    const auto raised = load_keypoints(dir / "raised_arm.keypoints.json");
    const auto got2 = rasterize_pose(raised, 128, 96);
    CHECK(got2.pixels == read_image(dir / "raised_arm_128x96.png"));
}

TEST_CASE("pose map colors come from the palette") {
    const auto palette = palette_colors();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto k = all_visible(64, 48, rng);
        const auto m = rasterize_pose(k, 64, 48, 1 + trial % 5, 0.1f);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 48; ++x) {
                const std::array<float, 3> c{m.pixels.at(0, y, x), m.pixels.at(1, y, x), m.pixels.at(2, y, x)};
                if (c == std::array<float, 3>{0, 0, 0}) continue;
                CHECK(palette.count(c) == 1);
            }
    }
}

TEST_CASE("rasterization is deterministic") {
    std::mt19937_64 rng(9);
    const auto k = all_visible(100, 100, rng, 0.25);
    CHECK(rasterize_pose(k, 100, 100).pixels == rasterize_pose(k, 100, 100).pixels);
}

TEST_CASE("hflip then rasterize equals mirrored raster") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const int h = 32 + 4 * (trial % 5), w = 24 + 3 * (trial % 7);
        // coordinates on a 1/8 grid, so the flip is exact in float
        const auto k = all_visible(h, w, rng, 0.125);
        const auto lw = 1 + trial % 4;
        const auto flipped = rasterize_pose(transform_keypoints(k, HFlip{}), h, w, lw, 0.1f);
        CAPTURE(trial);
        CHECK(flipped.pixels == hflip(rasterize_pose(swap_labels(k), h, w, lw, 0.1f).pixels));
    }
}

TEST_CASE("integer scaling scales limb endpoints") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto k = all_visible(40, 30, rng);
        for (int f : {2, 3, 4}) {
            KeypointSet ks = k;
            ks.frame = {40 * f, 30 * f};
            for (auto& p : ks.points) p = {p.x * f, p.y * f, p.confidence};
            const auto big = rasterize_pose(ks, 40 * f, 30 * f, 2, 0.1f);
            for (int j = 0; j < kNumKeypoints; ++j) {
                const auto a = raster_point(k.points[j], k.frame, 40, 30);
                const auto b = raster_point(ks.points[j], ks.frame, 40 * f, 30 * f);
                CHECK(b[0] == a[0] * f);
                CHECK(b[1] == a[1] * f);
                const int px = static_cast<int>(b[0] / 2), py = static_cast<int>(b[1] / 2);
                CHECK(big.pixels.at(0, py, px) + big.pixels.at(1, py, px) + big.pixels.at(2, py, px) > 0);
            }
        }
    }
}

TEST_CASE("hflip moves x to width-1-x and swaps labels") {
    KeypointSet k;
    k.frame = {50, 100};
    k.points[2] = {10, 20, 1.0f};
    k.points[5] = {70, 21, 0.5f};
    const auto f = transform_keypoints(k, HFlip{});
    CHECK(f.points[5] == Keypoint{89, 20, 1.0f});
    CHECK(f.points[2] == Keypoint{29, 21, 0.5f});
    CHECK(transform_keypoints(f, HFlip{}) == k);
}

TEST_CASE("rotation and crop") {
    std::mt19937_64 rng(8);
    const auto k = all_visible(60, 80, rng);
    CHECK(transform_keypoints(k, Rotate{0.0}) == k);

    // 90 degrees counterclockwise about the center maps (x,y) to (cx+(y-cy), cy-(x-cx))
    const auto r = transform_keypoints(k, Rotate{90.0});
    const double cx = 39.5, cy = 29.5;
    for (int j = 0; j < kNumKeypoints; ++j) {
        CHECK(r.points[j].x == doctest::Approx(cx + (k.points[j].y - cy)).epsilon(1e-5));
        CHECK(r.points[j].y == doctest::Approx(cy - (k.points[j].x - cx)).epsilon(1e-5));
    }
    const auto back = transform_keypoints(transform_keypoints(k, Rotate{25.0}), Rotate{-25.0});
    for (int j = 0; j < kNumKeypoints; ++j) {
        CHECK(back.points[j].x == doctest::Approx(k.points[j].x).epsilon(1e-4));
        CHECK(back.points[j].y == doctest::Approx(k.points[j].y).epsilon(1e-4));
    }

    KeypointSet c;
    c.frame = {60, 80};
    c.points[0] = {15, 15, 1.0f};
    c.points[1] = {5, 15, 1.0f};
    const auto cropped = transform_keypoints(c, CropBox{10, 10, 20, 20});
    CHECK(cropped.frame == FrameSize{20, 20});
    CHECK(cropped.points[0] == Keypoint{5, 5, 1.0f});
    CHECK(cropped.points[1].confidence == 0.0f);
    CHECK_THROWS_AS(transform_keypoints(c, CropBox{0, 0, 0, 10}), std::invalid_argument);
}

TEST_CASE("default line width") {
    CHECK(default_line_width(256) == 4);
    CHECK(default_line_width(128) == 2);
    CHECK(default_line_width(64) == 1);
    CHECK(default_line_width(16) == 1);
    CHECK(default_line_width(512) == 8);
}

}
