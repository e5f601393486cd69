#include "vad/motion.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "vad/binary_io.hpp"
#include "vad/error.hpp"

namespace vad {

FrameClip::FrameClip(std::size_t n, std::size_t h, std::size_t w, std::string id)
    : frames(n), height(h), width(w), data(n * h * w * 3, 0.0f), clip_id(std::move(id)) {}

void FrameClip::validate() const {
    if (frames == 0 || height == 0 || width == 0) {
        throw InvalidInput("clip '" + clip_id + "' is empty");
    }
    if (data.size() != frames * frame_size()) {
        throw InvalidInput("clip '" + clip_id + "' buffer does not match N*H*W*3");
    }
    for (float v : data) {
        if (!std::isfinite(v) || v < 0.0f || v > 255.0f) {
            throw InvalidInput("clip '" + clip_id + "' has intensity outside [0, 255]");
        }
    }
}

std::string to_string(MotionKind kind) {
    return kind == MotionKind::Star ? "star" : "dynamic";
}

MotionKind parse_motion_kind(const std::string& name) {
    if (name == "star") return MotionKind::Star;
    if (name == "dynamic") return MotionKind::Dynamic;
    throw InvalidInput("unknown motion representation '" + name + "'");
}

MotionImage compute_dynamic_image(const FrameClip& clip) {
    clip.validate();
    MotionImage out;
    out.height = clip.height;
    out.width = clip.width;
    out.kind = MotionKind::Dynamic;
    out.source_clip_id = clip.clip_id;
    out.pixels.assign(clip.frame_size(), 0.0);

    const auto n = static_cast<long>(clip.frames);
    for (long k = 1; k <= n; ++k) {
        const double alpha = static_cast<double>(2 * k - n - 1);
        if (alpha == 0.0) continue;
        const auto frame = clip.frame(static_cast<std::size_t>(k - 1));
        for (std::size_t p = 0; p < frame.size(); ++p) {
            out.pixels[p] += alpha * frame[p];
        }
    }
    return out;
}

namespace {

// Accumulates one sub-video into a single channel of `out`.
void accumulate_star_channel(const FrameClip& sub, std::size_t channel, MotionImage& out) {
    const std::size_t pixels = sub.height * sub.width;
    for (std::size_t k = 1; k < sub.frames; ++k) {
        const auto prev = sub.frame(k - 1);
        const auto cur = sub.frame(k);
        for (std::size_t p = 0; p < pixels; ++p) {
            const double a0 = prev[3 * p], a1 = prev[3 * p + 1], a2 = prev[3 * p + 2];
            const double b0 = cur[3 * p], b1 = cur[3 * p + 1], b2 = cur[3 * p + 2];
            const double na = std::sqrt(a0 * a0 + a1 * a1 + a2 * a2);
            const double nb = std::sqrt(b0 * b0 + b1 * b1 + b2 * b2);
            const double lambda = (na > 0.0 && nb > 0.0) ? (a0 * b0 + a1 * b1 + a2 * b2) / (na * nb) : 0.0;
            out.pixels[3 * p + channel] += (1.0 - 0.5 * lambda) * std::abs(nb - na);
        }
    }
}

}  // namespace

MotionImage compute_star_image(const FrameClip& clip) {
    clip.validate();
    if (clip.frames < 6) {
        throw InvalidInput("star representation needs at least 6 frames, got " + std::to_string(clip.frames));
    }
    MotionImage out;
    out.height = clip.height;
    out.width = clip.width;
    out.kind = MotionKind::Star;
    out.source_clip_id = clip.clip_id;
    out.pixels.assign(clip.frame_size(), 0.0);

    const auto thirds = split_subclips(clip, 3);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        accumulate_star_channel(thirds[ch], ch, out);
    }
    return out;
}

FrameClip slice_frames(const FrameClip& video, std::size_t first, std::size_t count, std::string clip_id) {
    if (first + count > video.frames) {
        throw InvalidInput("frame slice out of range");
    }
    FrameClip out(count, video.height, video.width, std::move(clip_id));
    const auto begin = video.data.begin() + static_cast<std::ptrdiff_t>(first * video.frame_size());
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(count * video.frame_size()), out.data.begin());
    return out;
}

std::vector<FrameClip> split_subclips(const FrameClip& clip, std::size_t parts) {
    if (parts == 0) throw InvalidInput("split_subclips: parts must be >= 1");
    if (parts > clip.frames) {
        throw InvalidInput("split_subclips: " + std::to_string(parts) + " parts from " +
                           std::to_string(clip.frames) + " frames");
    }
    const std::size_t base = clip.frames / parts;
    std::vector<FrameClip> out;
    out.reserve(parts);
    std::size_t first = 0;
    for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t len = (p + 1 == parts) ? clip.frames - first : base;
        out.push_back(slice_frames(clip, first, len, clip.clip_id + "/" + std::to_string(p)));
        first += len;
    }
    return out;
}

MotionImage normalize_motion_image(const MotionImage& img) {
    if (img.pixels.empty()) return img;
    for (double v : img.pixels) {
        if (!std::isfinite(v)) throw InvalidInput("motion image has non-finite pixels");
    }
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const double lo = *lo_it, hi = *hi_it;
    MotionImage out = img;
    if (hi == lo) {
        std::fill(out.pixels.begin(), out.pixels.end(), 0.0);
        return out;
    }
    const double scale = 255.0 / (hi - lo);
    for (double& v : out.pixels) v = (v - lo) * scale;
    return out;
}

MotionImage compute_motion_image(const FrameClip& clip, MotionKind kind) {
    return kind == MotionKind::Star ? compute_star_image(clip) : compute_dynamic_image(clip);
}

FrameClip moving_square_clip(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 12.0);
    std::uniform_int_distribution<std::size_t> pos_y(0, h > 1 ? h - 1 : 0), pos_x(0, w > 1 ? w - 1 : 0);
    FrameClip clip(n, h, w, "square-" + std::to_string(seed));
    const std::size_t side = std::max<std::size_t>(1, std::min(h, w) / 4);
    const std::size_t y0 = pos_y(rng), x0 = pos_x(rng);
    const int dy = (rng() & 1U) ? 1 : -1, dx = (rng() & 1U) ? 1 : -1;
    const float colour[3] = {230.0f, 60.0f + static_cast<float>(rng() % 120), 40.0f};

    for (std::size_t k = 0; k < n; ++k) {
        const auto cy = static_cast<long>(y0) + dy * static_cast<long>(k);
        const auto cx = static_cast<long>(x0) + dx * static_cast<long>(k);
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                const double bg = 40.0 + 100.0 * static_cast<double>(i + j) / static_cast<double>(h + w);
                const auto wy = ((static_cast<long>(i) - cy) % static_cast<long>(h) + static_cast<long>(h)) %
                                static_cast<long>(h);
                const auto wx = ((static_cast<long>(j) - cx) % static_cast<long>(w) + static_cast<long>(w)) %
                                static_cast<long>(w);
                const bool inside = wy < static_cast<long>(side) && wx < static_cast<long>(side);
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const double v = inside ? colour[ch] : bg + jitter(rng) + 10.0 * static_cast<double>(ch);
                    clip.at(k, i, j, ch) = static_cast<float>(std::clamp(v, 0.0, 255.0));
                }
            }
        }
    }
    return clip;
}

// ---- PPM -------------------------------------------------------------------

namespace {

std::string next_ppm_token(std::istream& is) {
    std::string token;
    char c = 0;
    while (is.get(c)) {
        if (c == '#') {
            std::string ignored;
            std::getline(is, ignored);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(c);
    }
    return token;
}

std::size_t parse_ppm_number(const std::string& token, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const auto v = std::stoul(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw DataError("malformed PPM header in " + path.string());
    }
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
    auto is = io::open_in(path);
    if (next_ppm_token(is) != "P6") throw DataError(path.string() + " is not a binary PPM (P6)");
    RgbImage img;
    img.width = parse_ppm_number(next_ppm_token(is), path);
    img.height = parse_ppm_number(next_ppm_token(is), path);
    const auto maxval = parse_ppm_number(next_ppm_token(is), path);
    if (maxval == 0 || maxval > 255) throw DataError("only 8-bit PPM supported: " + path.string());
    img.bytes.resize(img.width * img.height * 3);
    if (!is.read(reinterpret_cast<char*>(img.bytes.data()), static_cast<std::streamsize>(img.bytes.size()))) {
        throw DataError("truncated PPM payload in " + path.string());
    }
    if (maxval != 255) {
        for (auto& b : img.bytes) b = static_cast<std::uint8_t>(std::lround(b * 255.0 / static_cast<double>(maxval)));
    }
    return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
    auto os = io::open_out(path);
    os << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.bytes.data()), static_cast<std::streamsize>(image.bytes.size()));
    if (!os) throw DataError("failed writing " + path.string());
}

RgbImage to_rgb8(const MotionImage& normalized) {
    RgbImage out;
    out.height = normalized.height;
    out.width = normalized.width;
    out.bytes.resize(normalized.pixels.size());
    for (std::size_t p = 0; p < normalized.pixels.size(); ++p) {
        out.bytes[p] = static_cast<std::uint8_t>(std::lround(std::clamp(normalized.pixels[p], 0.0, 255.0)));
    }
    return out;
}

FrameClip read_frame_directory(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .ppm frames in " + dir.string());

    const auto first = read_ppm(files.front());
    FrameClip clip(files.size(), first.height, first.width, dir.filename().string());
    for (std::size_t k = 0; k < files.size(); ++k) {
        const auto img = k == 0 ? first : read_ppm(files[k]);
        if (img.height != clip.height || img.width != clip.width) {
            throw DataError("frame size mismatch at " + files[k].string());
        }
        std::transform(img.bytes.begin(), img.bytes.end(),
                       clip.data.begin() + static_cast<std::ptrdiff_t>(k * clip.frame_size()),
                       [](std::uint8_t b) { return static_cast<float>(b); });
    }
    return clip;
}

// ---- VADC / VADM -----------------------------------------------------------

FrameClip read_clip_container(const std::filesystem::path& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, "VADC", 1, path.string());
    const auto n = io::get<std::uint32_t>(is, "VADC header");
    const auto h = io::get<std::uint32_t>(is, "VADC header");
    const auto w = io::get<std::uint32_t>(is, "VADC header");
    FrameClip clip(n, h, w, path.stem().string());
    std::vector<std::uint8_t> raw(clip.data.size());
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw DataError("truncated VADC payload in " + path.string());
    }
    std::transform(raw.begin(), raw.end(), clip.data.begin(), [](std::uint8_t b) { return static_cast<float>(b); });
    return clip;
}

void write_clip_container(const std::filesystem::path& path, const FrameClip& clip) {
    clip.validate();
    auto os = io::open_out(path);
    io::put_magic(os, "VADC", 1);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(clip.frames));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(clip.height));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(clip.width));
    std::vector<std::uint8_t> raw(clip.data.size());
    std::transform(clip.data.begin(), clip.data.end(), raw.begin(),
                   [](float v) { return static_cast<std::uint8_t>(std::lround(v)); });
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw DataError("failed writing " + path.string());
}

MotionImage read_motion_container(const std::filesystem::path& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, "VADM", 1, path.string());
    MotionImage img;
    img.height = io::get<std::uint32_t>(is, "VADM header");
    img.width = io::get<std::uint32_t>(is, "VADM header");
    std::vector<float> raw(img.height * img.width * 3);
    io::get_f32(is, raw, path.string());
    img.pixels.assign(raw.begin(), raw.end());
    img.source_clip_id = path.stem().string();
    return img;
}

void write_motion_container(const std::filesystem::path& path, const MotionImage& img) {
    auto os = io::open_out(path);
    io::put_magic(os, "VADM", 1);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(img.height));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(img.width));
    std::vector<float> raw(img.pixels.begin(), img.pixels.end());
    io::put_f32(os, raw);
    if (!os) throw DataError("failed writing " + path.string());
}

}  // namespace vad
