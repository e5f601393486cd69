#pragma once

// Reconstruction errors to anomaly decisions: per-clip MSE, the batch
// threshold mean + k * std, clip-to-frame broadcasting and ROC-AUC.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vad/data_io.hpp"

namespace vad {

struct ScoreRecord {
    std::string clip_id;
    std::string video_id;
    FrameSpan frame_span;
    double mse = 0;
    std::optional<std::uint8_t> label_pred;
    std::optional<std::uint8_t> label_true;
};

double reconstruction_error(std::span<const double> x0, std::span<const double> x_rec);

struct ThresholdStats {
    double mean = 0;
    double std = 0;  // population
    double threshold = 0;
};

ThresholdStats batch_threshold_stats(std::span<const double> errors, double k);
double batch_threshold(std::span<const double> errors, double k);

/// 1 iff error > threshold; ties are normal.
std::vector<std::uint8_t> classify(std::span<const double> errors, double threshold);

/// Thresholds consecutive batches of `batch_size` records independently (the
/// last batch may be short) and fills label_pred. Returns per-batch stats.
std::vector<ThresholdStats> threshold_in_batches(std::vector<ScoreRecord>& records, double k, std::size_t batch_size);

struct FrameScores {
    std::vector<double> scores;
    std::vector<std::uint8_t> predicted;  // empty unless every record has label_pred
};

/// Broadcasts each clip's MSE to the frames it covers. Uncovered frames take
/// the nearest preceding clip's value (the first clip's, before any clip).
/// Throws InvalidInput on overlapping spans or unknown videos.
std::map<std::string, FrameScores> frame_scores(std::span<const ScoreRecord> records,
                                                const std::map<std::string, std::size_t>& video_lengths);

/// Mann-Whitney AUC with average ranks for ties.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

/// ROC curve points, one per distinct score, from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// CSV header: clip_id,video_id,start_frame,end_frame,mse,label_pred,label_true
void write_score_csv(const std::filesystem::path& path, std::span<const ScoreRecord> records);
std::vector<ScoreRecord> read_score_csv(const std::filesystem::path& path);

}  // namespace vad
