#pragma once

// Compact motion representations of short video clips (star RGB image and
// dynamic image), plus the frame and motion-image containers they read and
// write.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vad {

/// A fixed-length run of RGB frames, stored frame-major then row-major with
/// interleaved channels. Intensities are raw values in [0, 255].
struct FrameClip {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> data;
    std::string clip_id;

    FrameClip() = default;
    FrameClip(std::size_t n, std::size_t h, std::size_t w, std::string id = {});

    std::size_t frame_size() const { return height * width * 3; }
    std::size_t index(std::size_t k, std::size_t i, std::size_t j, std::size_t ch) const {
        return ((k * height + i) * width + j) * 3 + ch;
    }
    float& at(std::size_t k, std::size_t i, std::size_t j, std::size_t ch) { return data[index(k, i, j, ch)]; }
    float at(std::size_t k, std::size_t i, std::size_t j, std::size_t ch) const { return data[index(k, i, j, ch)]; }

    std::span<const float> frame(std::size_t k) const {
        return std::span<const float>(data).subspan(k * frame_size(), frame_size());
    }

    /// Throws InvalidInput unless the buffer size, dimensions and intensity
    /// range are consistent.
    void validate() const;
};

enum class MotionKind { Star, Dynamic };

std::string to_string(MotionKind kind);
MotionKind parse_motion_kind(const std::string& name);

struct MotionImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;  // H x W x 3, interleaved
    MotionKind kind = MotionKind::Dynamic;
    std::string source_clip_id;

    double& at(std::size_t i, std::size_t j, std::size_t ch) { return pixels[(i * width + j) * 3 + ch]; }
    double at(std::size_t i, std::size_t j, std::size_t ch) const { return pixels[(i * width + j) * 3 + ch]; }
};

/// Weighted frame sum with alpha_k = 2k - N - 1 (k is 1-based). Unnormalized.
MotionImage compute_dynamic_image(const FrameClip& clip);

/// Star RGB image: each temporal third of the clip is accumulated into one
/// channel (R earliest, B latest). Per pixel and sub-video,
///   M = sum_k (1 - lambda_k / 2) * | ||I_k|| - ||I_{k-1}|| |
/// where lambda_k is the cosine similarity of the consecutive RGB vectors
/// (taken as 0 when either vector is zero). Requires N >= 6.
MotionImage compute_star_image(const FrameClip& clip);

/// Contiguous, order-preserving split. The first parts-1 pieces get
/// floor(N/parts) frames and the last piece takes the remainder.
std::vector<FrameClip> split_subclips(const FrameClip& clip, std::size_t parts);

/// Per-image min-max rescale to [0, 255]; a constant image maps to zeros.
MotionImage normalize_motion_image(const MotionImage& img);

MotionImage compute_motion_image(const FrameClip& clip, MotionKind kind);

/// Procedural clip with a bright square moving over a textured background.
/// Used to exercise the motion path without real video.
FrameClip moving_square_clip(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed);

// ---- I/O -------------------------------------------------------------------

struct RgbImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> bytes;  // H x W x 3
};

RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

/// Rounds a normalized motion image to 8-bit.
RgbImage to_rgb8(const MotionImage& normalized);

/// "VADC" raw clip container: magic, u16 version=1, u32 N, H, W (LE), then
/// N*H*W*3 bytes of row-major RGB.
FrameClip read_clip_container(const std::filesystem::path& path);
void write_clip_container(const std::filesystem::path& path, const FrameClip& clip);

/// Loads every *.ppm in a directory, lexicographically ordered, as one video.
FrameClip read_frame_directory(const std::filesystem::path& dir);

/// "VADM" unnormalized motion image: magic, u16 version=1, u32 H, W, then
/// H*W*3 f32 little-endian.
MotionImage read_motion_container(const std::filesystem::path& path);
void write_motion_container(const std::filesystem::path& path, const MotionImage& img);

/// Frames [first, first+count) of a longer clip.
FrameClip slice_frames(const FrameClip& video, std::size_t first, std::size_t count, std::string clip_id);

}  // namespace vad
