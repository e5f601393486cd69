#include "vad/data_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "vad/binary_io.hpp"
#include "vad/error.hpp"

namespace vad {

using nlohmann::json;

// ---- VADF ------------------------------------------------------------------

void write_features(const std::filesystem::path& path, std::span<const ClipFeature> features) {
    const std::size_t dim = features.empty() ? 0 : features.front().values.size();
    json index = json::array();
    for (const auto& f : features) {
        if (f.values.size() != dim) {
            throw InvalidInput("write_features: clip '" + f.clip_id + "' has dim " + std::to_string(f.values.size()) +
                               ", expected " + std::to_string(dim));
        }
        index.push_back({{"clip_id", f.clip_id},
                         {"video_id", f.video_id},
                         {"start_frame", f.frame_span.start},
                         {"end_frame", f.frame_span.end}});
    }
    auto os = io::open_out(path);
    io::put_magic(os, "VADF", 1);
    io::put<std::uint64_t>(os, features.size());
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(dim));
    for (const auto& f : features) io::put_f32(os, f.values);
    const auto text = index.dump();
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw DataError("failed writing " + path.string());
}

std::vector<ClipFeature> read_features(const std::filesystem::path& path) {
    auto is = io::open_in(path);
    const auto what = path.string();
    io::expect_magic(is, "VADF", 1, what);
    const auto count = io::get<std::uint64_t>(is, what);
    const auto dim = io::get<std::uint32_t>(is, what);

    std::vector<ClipFeature> out(count);
    for (auto& f : out) {
        f.values.resize(dim);
        io::get_f32(is, f.values, what);
    }
    json index;
    try {
        index = json::parse(io::read_rest(is));
    } catch (const json::exception& e) {
        throw DataError(what + ": bad feature index: " + e.what());
    }
    if (!index.is_array() || index.size() != count) {
        throw DataError(what + ": feature index has " + std::to_string(index.size()) + " entries, payload has " +
                        std::to_string(count));
    }
    try {
        for (std::size_t i = 0; i < count; ++i) {
            const auto& e = index[i];
            out[i].clip_id = e.at("clip_id").get<std::string>();
            out[i].video_id = e.at("video_id").get<std::string>();
            out[i].frame_span = {e.at("start_frame").get<std::size_t>(), e.at("end_frame").get<std::size_t>()};
        }
    } catch (const json::exception& e) {
        throw DataError(what + ": bad feature index entry: " + e.what());
    }
    return out;
}

// ---- standardization -------------------------------------------------------

FeatureStats fit_standardizer(std::span<const ClipFeature> features) {
    if (features.size() < 2) throw InvalidInput("fit_standardizer needs at least 2 vectors");
    const std::size_t dim = features.front().values.size();
    FeatureStats stats;
    stats.count = features.size();
    stats.mean.assign(dim, 0.0);
    stats.std.assign(dim, 0.0);
    for (const auto& f : features) {
        if (f.values.size() != dim) throw InvalidInput("fit_standardizer: inconsistent dimensionality");
        for (std::size_t j = 0; j < dim; ++j) stats.mean[j] += f.values[j];
    }
    const double n = static_cast<double>(features.size());
    for (auto& m : stats.mean) m /= n;
    for (const auto& f : features) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = f.values[j] - stats.mean[j];
            stats.std[j] += d * d;
        }
    }
    for (auto& s : stats.std) s = std::max(std::sqrt(s / n), FeatureStats::kStdFloor);
    return stats;
}

std::vector<ClipFeature> apply_standardizer(std::span<const ClipFeature> features, const FeatureStats& stats) {
    std::vector<ClipFeature> out(features.begin(), features.end());
    for (auto& f : out) {
        if (f.values.size() != stats.dim()) {
            throw InvalidInput("apply_standardizer: clip '" + f.clip_id + "' has dim " +
                               std::to_string(f.values.size()) + ", stats have " + std::to_string(stats.dim()));
        }
        for (std::size_t j = 0; j < f.values.size(); ++j) {
            f.values[j] = static_cast<float>((f.values[j] - stats.mean[j]) / stats.std[j]);
        }
    }
    return out;
}

std::string stats_to_json(const FeatureStats& stats) {
    return json{{"mean", stats.mean}, {"std", stats.std}, {"count", stats.count}}.dump();
}

FeatureStats stats_from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        FeatureStats s;
        s.mean = j.at("mean").get<std::vector<double>>();
        s.std = j.at("std").get<std::vector<double>>();
        s.count = j.at("count").get<std::size_t>();
        if (s.mean.size() != s.std.size()) throw DataError("stats mean/std length mismatch");
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad standardizer stats: ") + e.what());
    }
}

// ---- batching --------------------------------------------------------------

std::vector<std::size_t> align_conditions(std::span<const ClipFeature> features,
                                          std::span<const ConditionVector> conditions) {
    std::unordered_map<std::string, std::size_t> by_id;
    by_id.reserve(conditions.size());
    for (std::size_t i = 0; i < conditions.size(); ++i) by_id.emplace(conditions[i].clip_id, i);
    std::vector<std::size_t> out;
    out.reserve(features.size());
    for (const auto& f : features) {
        const auto it = by_id.find(f.clip_id);
        if (it == by_id.end()) throw DataError("no condition vector for clip '" + f.clip_id + "'");
        out.push_back(it->second);
    }
    return out;
}

std::vector<Batch> build_batches(std::span<const ClipFeature> features,
                                 const std::vector<ConditionVector>* conditions, std::size_t batch_size,
                                 std::uint64_t seed, std::size_t epoch, bool drop_last) {
    if (batch_size == 0) throw InvalidInput("batch size must be positive");
    std::vector<std::size_t> cond_index;
    if (conditions != nullptr) cond_index = align_conditions(features, *conditions);

    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed + epoch);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Batch> batches;
    for (std::size_t first = 0; first < order.size(); first += batch_size) {
        const std::size_t len = std::min(batch_size, order.size() - first);
        if (drop_last && len < batch_size) break;
        Batch b;
        b.features.assign(order.begin() + static_cast<std::ptrdiff_t>(first),
                          order.begin() + static_cast<std::ptrdiff_t>(first + len));
        if (conditions != nullptr) {
            b.conditions.reserve(len);
            for (auto i : b.features) b.conditions.push_back(cond_index[i]);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

// ---- manifests -------------------------------------------------------------

namespace {

std::atomic<std::size_t> g_label_reads{0};

}  // namespace

std::size_t label_reads() { return g_label_reads.load(); }

std::size_t DatasetManifest::clip_count() const {
    std::size_t n = 0;
    for (const auto& v : videos) n += v.clips.size();
    return n;
}

std::size_t DatasetManifest::frame_count() const {
    std::size_t n = 0;
    for (const auto& v : videos) n += v.num_frames;
    return n;
}

bool DatasetManifest::has_labels() const {
    return !videos.empty() && std::all_of(videos.begin(), videos.end(), [](const auto& v) { return v.labels.has_value(); });
}

DatasetManifest read_manifest(const std::filesystem::path& path, LabelPolicy policy) {
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    DatasetManifest m;
    m.base_dir = path.parent_path();
    try {
        const auto split = j.at("split").get<std::string>();
        if (split != "train" && split != "test") throw DataError(path.string() + ": unknown split '" + split + "'");
        m.split = split == "train" ? Split::Train : Split::Test;
        m.feature_file = j.at("features").get<std::string>();
        if (j.contains("conditions")) {
            m.condition_files = j.at("conditions").get<std::map<std::string, std::string>>();
        }
        for (const auto& jv : j.at("videos")) {
            VideoEntry v;
            v.video_id = jv.at("video_id").get<std::string>();
            v.num_frames = jv.at("num_frames").get<std::size_t>();
            for (const auto& jc : jv.at("clips")) {
                ClipEntry c;
                c.clip_id = jc.at("clip_id").get<std::string>();
                c.frame_span = {jc.at("start_frame").get<std::size_t>(), jc.at("end_frame").get<std::size_t>()};
                c.feature_index = jc.at("feature_index").get<std::size_t>();
                if (jc.contains("condition_index")) c.condition_index = jc.at("condition_index").get<std::size_t>();
                if (c.frame_span.end < c.frame_span.start || c.frame_span.end >= v.num_frames) {
                    throw DataError(path.string() + ": clip '" + c.clip_id + "' span outside its video");
                }
                v.clips.push_back(std::move(c));
            }
            if (policy == LabelPolicy::Load && jv.contains("labels")) {
                ++g_label_reads;
                auto labels = jv.at("labels").get<std::vector<int>>();
                if (labels.size() != v.num_frames) {
                    throw DataError(path.string() + ": video '" + v.video_id + "' label count " +
                                    std::to_string(labels.size()) + " != " + std::to_string(v.num_frames) + " frames");
                }
                std::vector<std::uint8_t> bits(labels.size());
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    if (labels[i] != 0 && labels[i] != 1) throw DataError(path.string() + ": labels must be 0/1");
                    bits[i] = static_cast<std::uint8_t>(labels[i]);
                }
                v.labels = std::move(bits);
            }
            m.videos.push_back(std::move(v));
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    json videos = json::array();
    for (const auto& v : manifest.videos) {
        json clips = json::array();
        for (const auto& c : v.clips) {
            json jc{{"clip_id", c.clip_id},
                    {"start_frame", c.frame_span.start},
                    {"end_frame", c.frame_span.end},
                    {"feature_index", c.feature_index}};
            if (c.condition_index) jc["condition_index"] = *c.condition_index;
            clips.push_back(std::move(jc));
        }
        json jv{{"video_id", v.video_id}, {"num_frames", v.num_frames}, {"clips", std::move(clips)}};
        if (v.labels) jv["labels"] = std::vector<int>(v.labels->begin(), v.labels->end());
        videos.push_back(std::move(jv));
    }
    json j{{"manifest_version", 1},
           {"split", manifest.split == Split::Train ? "train" : "test"},
           {"features", manifest.feature_file},
           {"videos", std::move(videos)}};
    if (!manifest.condition_files.empty()) j["conditions"] = manifest.condition_files;
    io::write_text(path, j.dump(1));
}

std::filesystem::path resolve_data_path(const DatasetManifest& manifest, const std::string& file) {
    std::filesystem::path p(file);
    if (p.is_absolute()) return p;
    if (const char* root = std::getenv("VAD_DATA_ROOT"); root != nullptr && *root != '\0') {
        return std::filesystem::path(root) / p;
    }
    return manifest.base_dir / p;
}

void write_label_sidecar(const std::filesystem::path& path, const LabelMap& labels) {
    json j = json::object();
    for (const auto& [video, bits] : labels) j[video] = std::vector<int>(bits.begin(), bits.end());
    io::write_text(path, j.dump());
}

LabelMap read_label_sidecar(const std::filesystem::path& path) {
    try {
        const auto j = json::parse(io::read_text(path));
        LabelMap out;
        for (const auto& [video, arr] : j.items()) {
            const auto ints = arr.get<std::vector<int>>();
            out[video] = std::vector<std::uint8_t>(ints.begin(), ints.end());
        }
        return out;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

LoadedDataset load_dataset(const std::filesystem::path& manifest_path, const std::optional<std::string>& condition_stream,
                           LabelPolicy policy) {
    LoadedDataset out;
    out.manifest = read_manifest(manifest_path, policy);
    const auto& m = out.manifest;

    const auto all_features = read_features(resolve_data_path(m, m.feature_file));
    std::vector<ConditionVector> all_conditions;
    if (condition_stream) {
        const auto it = m.condition_files.find(*condition_stream);
        if (it == m.condition_files.end()) {
            throw DataError(manifest_path.string() + ": no condition stream '" + *condition_stream + "'");
        }
        all_conditions = read_features(resolve_data_path(m, it->second));
    }

    out.features.reserve(m.clip_count());
    for (const auto& v : m.videos) {
        for (const auto& c : v.clips) {
            if (c.feature_index >= all_features.size()) {
                throw DataError("clip '" + c.clip_id + "' feature_index out of range");
            }
            auto f = all_features[c.feature_index];
            f.clip_id = c.clip_id;
            f.video_id = v.video_id;
            f.frame_span = c.frame_span;
            out.features.push_back(std::move(f));
            if (condition_stream) {
                if (!c.condition_index || *c.condition_index >= all_conditions.size()) {
                    throw DataError("clip '" + c.clip_id + "' has no condition record in stream '" +
                                    *condition_stream + "'");
                }
                auto cond = all_conditions[*c.condition_index];
                if (cond.clip_id != c.clip_id) {
                    throw DataError("condition record for clip '" + c.clip_id + "' is labelled '" + cond.clip_id + "'");
                }
                out.conditions.push_back(std::move(cond));
            }
        }
    }
    if (!out.features.empty()) {
        const auto dim = out.features.front().values.size();
        for (const auto& f : out.features) {
            if (f.values.size() != dim) throw DataError("inconsistent feature dimensionality");
        }
    }
    return out;
}

// ---- toy condition encoder -------------------------------------------------

std::size_t toy_grid_size(std::size_t condition_dim) {
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(condition_dim) / 6.0)));
}

std::vector<double> toy_condition_stats(const MotionImage& img, std::size_t condition_dim) {
    if (condition_dim < 6) throw InvalidInput("toy condition encoder needs c >= 6");
    const std::size_t g = toy_grid_size(condition_dim);
    std::vector<double> out;
    out.reserve(6 * g * g);
    for (std::size_t gy = 0; gy < g; ++gy) {
        // pixel i falls in cell floor(i g / H)
        const std::size_t y0 = (gy * img.height + g - 1) / g, y1 = ((gy + 1) * img.height + g - 1) / g;
        for (std::size_t gx = 0; gx < g; ++gx) {
            const std::size_t x0 = (gx * img.width + g - 1) / g, x1 = ((gx + 1) * img.width + g - 1) / g;
            const double n = static_cast<double>((y1 - y0) * (x1 - x0));
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double sum = 0.0;
                for (std::size_t i = y0; i < y1; ++i) {
                    for (std::size_t j = x0; j < x1; ++j) sum += img.at(i, j, ch);
                }
                const double mean = n > 0 ? sum / n : 0.0;
                double sq = 0.0;
                for (std::size_t i = y0; i < y1; ++i) {
                    for (std::size_t j = x0; j < x1; ++j) sq += (img.at(i, j, ch) - mean) * (img.at(i, j, ch) - mean);
                }
                out.push_back(mean);
                out.push_back(n > 0 ? std::sqrt(sq / n) : 0.0);
            }
        }
    }
    out.resize(condition_dim, 0.0);
    return out;
}

ConditionVector toy_condition_encoder(const MotionImage& img, std::size_t condition_dim,
                                      const FeatureStats& corpus_scaling) {
    const auto raw = toy_condition_stats(img, condition_dim);
    if (corpus_scaling.dim() != condition_dim) {
        throw InvalidInput("toy encoder scaling has dim " + std::to_string(corpus_scaling.dim()));
    }
    ConditionVector out;
    out.clip_id = img.source_clip_id;
    out.values.resize(condition_dim);
    for (std::size_t j = 0; j < condition_dim; ++j) {
        out.values[j] = static_cast<float>((raw[j] - corpus_scaling.mean[j]) / corpus_scaling.std[j]);
    }
    return out;
}

}  // namespace vad
