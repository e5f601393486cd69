#pragma once

// Orchestration behind the command-line tool: configuration, training,
// scoring, evaluation, sweeps, cross-dataset evaluation and reports.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vad/data_io.hpp"
#include "vad/denoiser.hpp"
#include "vad/diffusion.hpp"
#include "vad/scoring.hpp"

namespace vad {

enum class ConditionSource { None, Star, Dynamic, External };

std::string to_string(ConditionSource source);
ConditionSource parse_condition_source(const std::string& name);

struct RunConfig {
    // data
    std::string train_manifest;
    std::string test_manifest;
    ConditionSource condition_source = ConditionSource::None;
    bool role_swap = false;  // condition stream becomes the diffusion input and vice versa

    // model
    std::size_t embed_dim = 256;
    double embed_std = 0.2;
    std::vector<std::size_t> encoder_widths{1024, 512, 256};
    std::vector<std::size_t> decoder_widths{256, 512, 1024};

    // diffusion
    NoiseParams noise;
    double sigma_min = 0.01;
    double sigma_max = 80.0;
    double rho = 7.0;
    std::size_t steps = 10;
    std::size_t lms_order = 4;
    std::optional<std::size_t> start_t;  // unset: 1 when conditioned, 4 otherwise

    // training
    std::size_t epochs = 30;
    std::size_t batch_size = 256;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;

    // scoring / evaluation
    double threshold_k = 1.0;
    std::size_t eval_batch = 8192;
    bool shuffle_eval = false;
    std::uint64_t score_seed = 0;
    bool use_ema = true;
    bool normalize_per_batch = false;

    std::string cache_dir = ".vad_cache";

    bool conditioned() const { return condition_source != ConditionSource::None; }
    std::size_t start_index() const;
    SigmaSchedule schedule() const;
    SamplerConfig sampler() const;
    void validate() const;
};

/// Flat dotted key/value representation, e.g. "noise.p_mean" -> "-1.2".
using KeyValues = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment.
KeyValues parse_key_values(const std::string& text);
/// Applies overrides on top of cfg; unknown keys raise ConfigError.
void apply_key_values(RunConfig& cfg, const KeyValues& kv);
/// Canonical form with normalized numbers.
KeyValues to_key_values(const RunConfig& cfg);
std::string to_config_text(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path, const KeyValues& overrides = {});

/// FNV-1a over the canonical key/value form: independent of key order and
/// number spelling, sensitive to every field.
std::string config_fingerprint(const RunConfig& cfg);
/// Same over the fields that affect training only.
std::string training_fingerprint(const RunConfig& cfg);

// ---- data --------------------------------------------------------------------

struct ModelData {
    DatasetManifest manifest;
    std::vector<ClipFeature> inputs;
    std::vector<ConditionVector> conditions;  // empty when unconditioned
};

/// Loads the diffusion input and the condition stream named by the config,
/// swapping their roles when cfg.role_swap is set.
ModelData load_model_data(const std::filesystem::path& manifest, const RunConfig& cfg, LabelPolicy policy);

struct TrainingStats {
    FeatureStats input;
    std::optional<FeatureStats> condition;
};

void write_training_stats(const std::filesystem::path& path, const TrainingStats& stats);
TrainingStats read_training_stats(const std::filesystem::path& path);

// ---- commands ----------------------------------------------------------------

struct TrainResult {
    std::filesystem::path checkpoint;
    std::filesystem::path stats;
    std::filesystem::path log;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_lr;
    std::uint64_t steps = 0;
};

/// Trains on cfg.train_manifest (labels are never read) and writes
/// checkpoint.vadw, stats.json and train_log.csv to out_dir.
TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Reuses a cached training run keyed by training_fingerprint(cfg).
TrainResult train_cached(const RunConfig& cfg);

struct ScoreResult {
    std::vector<ScoreRecord> records;
    std::vector<ThresholdStats> batches;
    double seconds = 0;
};

/// Reconstructs every clip at cfg.start_index() and writes the score CSV
/// plus a .meta.json sidecar next to it.
ScoreResult cmd_score(const std::filesystem::path& checkpoint, const std::filesystem::path& stats,
                      const std::filesystem::path& manifest, const RunConfig& cfg,
                      const std::filesystem::path& out_csv);

struct EvalOptions {
    double threshold_k = 1.0;
    std::size_t eval_batch = 8192;
    bool normalize_per_batch = false;
    bool invert_labels = false;
    std::optional<std::uint64_t> permute_labels_seed;  // permutation control
    std::optional<std::filesystem::path> roc_csv;
};

EvalOptions eval_options(const RunConfig& cfg);

struct EvalReport {
    double frame_auc = 0;
    std::map<std::string, std::optional<double>> per_video_auc;
    double mean_mse_normal = 0;
    double mean_mse_anomalous = 0;
    std::vector<ThresholdStats> thresholds;
    double flagged_fraction = 0;
    std::string config_fingerprint;
    std::size_t clips = 0;
    std::size_t frames = 0;
    double score_seconds = 0;
    std::uint64_t train_steps = 0;
};

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

EvalReport cmd_eval(const std::filesystem::path& score_csv, const std::filesystem::path& manifest,
                    const EvalOptions& options);

struct SweepGrid {
    std::vector<double> p_mean;
    std::vector<double> p_std;
    std::vector<std::size_t> start_t;
};

struct SweepCell {
    double p_mean;
    double p_std;
    std::size_t start_t;
    double auc;
    std::string fingerprint;
};

/// Trains once per (p_mean, p_std) through the cache, scores every start_t
/// and writes sweep.csv and sweep_plot.csv to out_dir.
std::vector<SweepCell> cmd_sweep(const RunConfig& cfg, const SweepGrid& grid, const std::filesystem::path& out_dir);

/// Scores manifest_b with a model and standardization stats from domain A.
EvalReport cmd_cross_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& stats_a,
                          const std::filesystem::path& manifest_b, const RunConfig& cfg,
                          const std::filesystem::path& out_dir);

struct ExtractOptions {
    MotionKind kind = MotionKind::Star;
    std::size_t condition_dim = 0;  // > 0: also write toy-encoder statistics
    bool write_raw = false;         // also write unnormalized VADM files
};

struct ExtractSummary {
    std::size_t videos = 0;
    std::size_t images = 0;
    std::vector<std::string> warnings;
};

/// One motion image per 16-frame non-overlapping window, written as
/// out_dir/<video_id>/clip_%06d.ppm. Videos are subdirectories of PPM frames
/// or .vadc containers.
ExtractSummary cmd_extract_motion(const std::filesystem::path& frames_root, const std::filesystem::path& out_dir,
                                  const ExtractOptions& options);

/// Writes an identity-denoiser checkpoint (test hook) for the given dims.
void write_identity_checkpoint(const std::filesystem::path& path, std::size_t feature_dim, std::size_t condition_dim);

/// Renders reports (*.json) and sweep tables (sweep.csv) into summary.md and
/// SVG charts under out_dir. Returns the written files.
std::vector<std::filesystem::path> cmd_report(const std::vector<std::filesystem::path>& inputs,
                                              const std::filesystem::path& out_dir);

}  // namespace vad
