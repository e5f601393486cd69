#pragma once

// Feature and condition storage, dataset manifests, standardization,
// batching, the synthetic dataset generator and the toy condition encoder.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vad/motion.hpp"

namespace vad {

inline constexpr std::size_t kClipLength = 16;

struct FrameSpan {
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // inclusive
    std::size_t length() const { return end - start + 1; }
    friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

/// One clip-level vector. Used both for diffusion inputs and for condition
/// vectors; condition records only need a matching clip_id.
struct ClipFeature {
    std::vector<float> values;
    std::string clip_id;
    std::string video_id;
    FrameSpan frame_span;
};

using ConditionVector = ClipFeature;

/// "VADF": magic, u16 version=1, u64 count, u32 dim, count*dim f32 LE
/// row-major, then a JSON index [{clip_id, video_id, start_frame, end_frame}].
void write_features(const std::filesystem::path& path, std::span<const ClipFeature> features);
std::vector<ClipFeature> read_features(const std::filesystem::path& path);

// ---- standardization -------------------------------------------------------

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> std;  // population std, floored at kStdFloor
    std::size_t count = 0;

    static constexpr double kStdFloor = 1e-6;
    std::size_t dim() const { return mean.size(); }
};

FeatureStats fit_standardizer(std::span<const ClipFeature> features);
std::vector<ClipFeature> apply_standardizer(std::span<const ClipFeature> features, const FeatureStats& stats);

std::string stats_to_json(const FeatureStats& stats);
FeatureStats stats_from_json(const std::string& text);

// ---- batching --------------------------------------------------------------

struct Batch {
    std::vector<std::size_t> features;
    std::vector<std::size_t> conditions;  // empty when unconditioned
};

/// Pairs each feature with the condition sharing its clip_id. Throws
/// DataError naming the first clip without a condition.
std::vector<std::size_t> align_conditions(std::span<const ClipFeature> features,
                                          std::span<const ConditionVector> conditions);

/// Shuffled batches for one epoch; the permutation is seeded with seed+epoch.
std::vector<Batch> build_batches(std::span<const ClipFeature> features,
                                 const std::vector<ConditionVector>* conditions, std::size_t batch_size,
                                 std::uint64_t seed, std::size_t epoch, bool drop_last);

// ---- manifests -------------------------------------------------------------

enum class Split { Train, Test };

struct ClipEntry {
    std::string clip_id;
    FrameSpan frame_span;
    std::size_t feature_index = 0;
    std::optional<std::size_t> condition_index;
};

struct VideoEntry {
    std::string video_id;
    std::size_t num_frames = 0;
    std::vector<ClipEntry> clips;
    std::optional<std::vector<std::uint8_t>> labels;  // per frame, 0 normal / 1 anomalous
};

/// Whether frame labels are parsed. Training code reads manifests with Strip,
/// which never touches the label arrays.
enum class LabelPolicy { Strip, Load };

struct DatasetManifest {
    Split split = Split::Test;
    std::string feature_file;
    std::map<std::string, std::string> condition_files;  // stream name -> file
    std::vector<VideoEntry> videos;
    std::filesystem::path base_dir;  // directory relative paths resolve against

    std::size_t clip_count() const;
    std::size_t frame_count() const;
    bool has_labels() const;
};

DatasetManifest read_manifest(const std::filesystem::path& path, LabelPolicy policy);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Number of label arrays parsed by read_manifest since process start.
std::size_t label_reads();

/// Relative paths resolve against $VAD_DATA_ROOT when set, otherwise against
/// the manifest's own directory.
std::filesystem::path resolve_data_path(const DatasetManifest& manifest, const std::string& file);

/// Per-frame labels of one video keyed by video_id (the ground-truth sidecar).
using LabelMap = std::map<std::string, std::vector<std::uint8_t>>;
void write_label_sidecar(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_label_sidecar(const std::filesystem::path& path);

/// Features (and optionally one condition stream) ordered as the manifest
/// lists its clips.
struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<ClipFeature> features;
    std::vector<ConditionVector> conditions;  // empty unless a stream was requested
};

LoadedDataset load_dataset(const std::filesystem::path& manifest_path, const std::optional<std::string>& condition_stream,
                           LabelPolicy policy);

// ---- synthetic data --------------------------------------------------------

struct SyntheticSpec {
    std::size_t feature_dim = 128;
    std::size_t condition_dim = 32;
    std::size_t latent_dim = 8;
    std::size_t n_normal = 7373;
    std::size_t n_anomalous = 819;
    std::size_t n_test = 4096;  // test split size, same anomaly rate
    double anomaly_offset_magnitude = 2.0;
    double observation_noise_std = 0.12;
    double condition_noise_std = 0.1;
    bool condition_informative = false;
    double domain_shift = 0.0;  // perturbation of the feature map (cross-domain pairs)
    std::size_t clips_per_video = 16;
    std::uint64_t seed = 1;

    double anomaly_rate() const;
    void validate() const;
};

std::string synthetic_spec_to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const std::string& text);

struct SyntheticSplit {
    std::vector<ClipFeature> features;
    std::vector<ConditionVector> conditions;
    std::vector<std::uint8_t> clip_labels;
    DatasetManifest manifest;  // labels attached for the test split only
    LabelMap frame_labels;
};

struct SyntheticData {
    SyntheticSpec spec;
    SyntheticSplit train;
    SyntheticSplit test;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

struct SyntheticPaths {
    std::filesystem::path train_manifest;
    std::filesystem::path test_manifest;
    std::filesystem::path train_truth;  // sealed sidecar, evaluation tooling only
};

/// Writes both splits as VADF files plus manifests. The train manifest
/// carries no labels; its ground truth goes to train_truth.json.
SyntheticPaths write_synthetic(const SyntheticData& data, const std::filesystem::path& out_dir);

// ---- toy condition encoder -------------------------------------------------

std::size_t toy_grid_size(std::size_t condition_dim);

/// Per-cell, per-channel (mean, population std) over a g x g grid with
/// g = ceil(sqrt(c / 6)), truncated or zero-padded to c values.
std::vector<double> toy_condition_stats(const MotionImage& img, std::size_t condition_dim);

/// Raw statistics scaled with constants fit on the training corpus.
ConditionVector toy_condition_encoder(const MotionImage& img, std::size_t condition_dim,
                                      const FeatureStats& corpus_scaling);

}  // namespace vad
