#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "vad/error.hpp"
#include "vad/motion.hpp"

using namespace vad;
namespace fs = std::filesystem;

TEST_CASE("dynamic image: constant clip gives zero") {
    FrameClip clip(3, 2, 2);
    std::fill(clip.data.begin(), clip.data.end(), 77.0f);
    const auto img = compute_dynamic_image(clip);
    for (double v : img.pixels) CHECK(v == 0.0);
}

TEST_CASE("dynamic image: linear ramp gives 4J") {
    FrameClip clip(3, 2, 3);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t c = 0; c < 3; ++c) clip.at(k, i, j, c) = static_cast<float>((k + 1) * (i + j + c + 1));
    const auto img = compute_dynamic_image(clip);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t c = 0; c < 3; ++c) CHECK(img.at(i, j, c) == doctest::Approx(4.0 * (i + j + c + 1)));
}

TEST_CASE("dynamic image: matches scalar loop on random 16-frame clips") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto clip = testing::random_clip(16, 8, 8, seed);
        const auto img = compute_dynamic_image(clip);
        const auto ref = testing::dynamic_image_oracle(clip);
        CHECK(testing::max_rel_error(img.pixels, ref) < 1e-9);
    }
}

TEST_CASE("dynamic image: invariant to a constant offset and linear") {
    const auto a = testing::random_clip(16, 4, 5, 1);
    const auto b = testing::random_clip(16, 4, 5, 2);
    FrameClip shifted = a;
    for (std::size_t k = 0; k < 16; ++k)
        for (std::size_t p = 0; p < a.frame_size(); ++p) shifted.data[k * a.frame_size() + p] = a.data[k * a.frame_size() + p] * 0.5f + static_cast<float>(p % 7);
    FrameClip half = a;
    for (auto& v : half.data) v *= 0.5f;
    CHECK(testing::max_rel_error(compute_dynamic_image(shifted).pixels, compute_dynamic_image(half).pixels) < 1e-6);

    FrameClip mix = a;
    for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = 0.25f * a.data[i] + 0.5f * b.data[i];
    const auto da = compute_dynamic_image(a), db = compute_dynamic_image(b), dm = compute_dynamic_image(mix);
    std::vector<double> expect(da.pixels.size());
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = 0.25 * da.pixels[i] + 0.5 * db.pixels[i];
    CHECK(testing::max_abs_error(dm.pixels, expect) < 1e-6 * 255 * 16);
}

TEST_CASE("dynamic image: empty clip is rejected") {
    FrameClip clip;
    CHECK_THROWS_AS(compute_dynamic_image(clip), InvalidInput);
}

TEST_CASE("star image: static clip gives zero") {
    auto clip = testing::random_clip(1, 4, 4, 3);
    FrameClip stat(16, 4, 4);
    for (std::size_t k = 0; k < 16; ++k) std::copy(clip.data.begin(), clip.data.end(), stat.data.begin() + k * stat.frame_size());
    for (double v : compute_star_image(stat).pixels) CHECK(v == 0.0);
}

TEST_CASE("star image: black to red transition in the first third") {
    FrameClip clip(6, 2, 2);
    // pixel (1,0) turns red at frame 1, inside sub-video 0 (frames 0-1)
    for (std::size_t k = 1; k < 6; ++k) clip.at(k, 1, 0, 0) = 255.0f;
    const auto img = compute_star_image(clip);
    CHECK(img.at(1, 0, 0) == doctest::Approx(255.0));
    CHECK(img.at(1, 0, 1) == 0.0);
    CHECK(img.at(1, 0, 2) == 0.0);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            if (!(i == 1 && j == 0))
                for (std::size_t c = 0; c < 3; ++c) CHECK(img.at(i, j, c) == 0.0);
    CHECK(testing::max_rel_error(img.pixels, testing::star_image_oracle(clip)) < 1e-12);
}

TEST_CASE("star image: matches scalar loop and is non-negative") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        const auto clip = testing::random_clip(16, 8, 8, seed);
        const auto img = compute_star_image(clip);
        CHECK(testing::max_rel_error(img.pixels, testing::star_image_oracle(clip)) < 1e-9);
        for (double v : img.pixels) CHECK(v >= 0.0);
    }
}

TEST_CASE("star image: reversal swaps R and B when N is a multiple of 3") {
    const auto clip = testing::random_clip(15, 5, 4, 21);
    FrameClip rev = clip;
    for (std::size_t k = 0; k < 15; ++k) {
        std::copy(clip.frame(14 - k).begin(), clip.frame(14 - k).end(), rev.data.begin() + k * clip.frame_size());
    }
    const auto a = compute_star_image(clip), b = compute_star_image(rev);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(a.at(i, j, 0) == doctest::Approx(b.at(i, j, 2)).epsilon(1e-9));
            CHECK(a.at(i, j, 1) == doctest::Approx(b.at(i, j, 1)).epsilon(1e-9));
            CHECK(a.at(i, j, 2) == doctest::Approx(b.at(i, j, 0)).epsilon(1e-9));
        }
}

TEST_CASE("star image: fewer than 6 frames is rejected") {
    CHECK_THROWS_AS(compute_star_image(testing::random_clip(5, 2, 2, 0)), InvalidInput);
}

TEST_CASE("split_subclips lengths") {
    const auto lengths = [](std::size_t n, std::size_t parts) {
        std::vector<std::size_t> out;
        for (const auto& p : split_subclips(testing::random_clip(n, 1, 1, 0), parts)) out.push_back(p.frames);
        return out;
    };
    CHECK(lengths(16, 3) == std::vector<std::size_t>{5, 5, 6});
    CHECK(lengths(15, 3) == std::vector<std::size_t>{5, 5, 5});
    CHECK_THROWS_AS(lengths(2, 3), InvalidInput);

    const auto clip = testing::random_clip(16, 2, 2, 4);
    std::vector<float> joined;
    for (const auto& p : split_subclips(clip, 3)) joined.insert(joined.end(), p.data.begin(), p.data.end());
    CHECK(joined == clip.data);
}

TEST_CASE("normalize_motion_image") {
    MotionImage img;
    img.height = 1;
    img.width = 1;
    img.pixels = {-1, 0, 3};
    const auto n = normalize_motion_image(img);
    CHECK(n.pixels[0] == 0.0);
    CHECK(n.pixels[1] == 63.75);
    CHECK(n.pixels[2] == 255.0);

    img.pixels = {5, 5, 5};
    for (double v : normalize_motion_image(img).pixels) CHECK(v == 0.0);

    img.pixels = {0, NAN, 1};
    CHECK_THROWS_AS(normalize_motion_image(img), InvalidInput);

    const auto r = normalize_motion_image(compute_dynamic_image(testing::random_clip(16, 6, 6, 9)));
    CHECK(*std::min_element(r.pixels.begin(), r.pixels.end()) == 0.0);
    CHECK(*std::max_element(r.pixels.begin(), r.pixels.end()) == 255.0);
}

TEST_CASE("clip validation rejects out-of-range intensities") {
    auto clip = testing::random_clip(2, 2, 2, 0);
    clip.data[3] = 300.0f;
    CHECK_THROWS_AS(compute_dynamic_image(clip), InvalidInput);
}

TEST_CASE("containers round-trip") {
    const auto dir = testing::temp_dir("motion_io");
    auto clip = testing::random_clip(4, 3, 5, 7);
    for (auto& v : clip.data) v = std::round(v);
    write_clip_container(dir / "c.vadc", clip);
    const auto back = read_clip_container(dir / "c.vadc");
    CHECK(back.frames == 4);
    CHECK(back.height == 3);
    CHECK(back.width == 5);
    CHECK(back.data == clip.data);

    const auto img = compute_star_image(testing::random_clip(16, 3, 4, 8));
    write_motion_container(dir / "m.vadm", img);
    const auto img2 = read_motion_container(dir / "m.vadm");
    REQUIRE(img2.pixels.size() == img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(img2.pixels[i] == static_cast<double>(static_cast<float>(img.pixels[i])));

    const auto rgb = to_rgb8(normalize_motion_image(img));
    write_ppm(dir / "x.ppm", rgb);
    const auto rgb2 = read_ppm(dir / "x.ppm");
    CHECK(rgb2.bytes == rgb.bytes);

    // truncated containers fail loudly
    const auto bytes = testing::read_bytes(dir / "c.vadc");
    testing::write_bytes(dir / "t.vadc", std::vector<char>(bytes.begin(), bytes.end() - 5));
    CHECK_THROWS_AS(read_clip_container(dir / "t.vadc"), DataError);
    testing::write_bytes(dir / "bad.vadc", std::vector<char>{'V', 'A', 'D', 'X', 1, 0});
    CHECK_THROWS_AS(read_clip_container(dir / "bad.vadc"), DataError);
}

TEST_CASE("frame directory reads PPMs in lexicographic order") {
    const auto dir = testing::temp_dir("frames");
    const auto clip = moving_square_clip(3, 6, 7, 1);
    for (std::size_t k = 0; k < 3; ++k) {
        RgbImage img{6, 7, {}};
        for (float v : clip.frame(k)) img.bytes.push_back(static_cast<std::uint8_t>(v));
        write_ppm(dir / ("f" + std::to_string(k) + ".ppm"), img);
    }
    const auto back = read_frame_directory(dir);
    CHECK(back.frames == 3);
    for (std::size_t i = 0; i < back.data.size(); ++i) CHECK(back.data[i] == std::floor(clip.data[i]));
}
