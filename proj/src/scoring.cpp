#include "vad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "vad/binary_io.hpp"
#include "vad/error.hpp"

namespace vad {

double reconstruction_error(std::span<const double> x0, std::span<const double> x_rec) {
    if (x0.size() != x_rec.size()) throw InvalidInput("reconstruction_error: dimension mismatch");
    if (x0.empty()) throw InvalidInput("reconstruction_error: empty vectors");
    double sum = 0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double d = x0[i] - x_rec[i];
        sum += d * d;
    }
    return sum / static_cast<double>(x0.size());
}

ThresholdStats batch_threshold_stats(std::span<const double> errors, double k) {
    if (errors.empty()) throw InvalidInput("batch_threshold: empty batch");
    const double n = static_cast<double>(errors.size());
    ThresholdStats s;
    s.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
    double sq = 0;
    for (double e : errors) sq += (e - s.mean) * (e - s.mean);
    s.std = std::sqrt(sq / n);
    s.threshold = s.mean + k * s.std;
    return s;
}

double batch_threshold(std::span<const double> errors, double k) {
    return batch_threshold_stats(errors, k).threshold;
}

std::vector<std::uint8_t> classify(std::span<const double> errors, double threshold) {
    std::vector<std::uint8_t> out(errors.size());
    std::transform(errors.begin(), errors.end(), out.begin(),
                   [threshold](double e) { return static_cast<std::uint8_t>(e > threshold ? 1 : 0); });
    return out;
}

std::vector<ThresholdStats> threshold_in_batches(std::vector<ScoreRecord>& records, double k, std::size_t batch_size) {
    if (batch_size == 0) throw InvalidInput("threshold batch size must be positive");
    std::vector<ThresholdStats> stats;
    for (std::size_t first = 0; first < records.size(); first += batch_size) {
        const std::size_t last = std::min(records.size(), first + batch_size);
        std::vector<double> errors;
        errors.reserve(last - first);
        for (std::size_t i = first; i < last; ++i) errors.push_back(records[i].mse);
        stats.push_back(batch_threshold_stats(errors, k));
        const auto labels = classify(errors, stats.back().threshold);
        for (std::size_t i = first; i < last; ++i) records[i].label_pred = labels[i - first];
    }
    return stats;
}

std::map<std::string, FrameScores> frame_scores(std::span<const ScoreRecord> records,
                                                const std::map<std::string, std::size_t>& video_lengths) {
    std::map<std::string, std::vector<const ScoreRecord*>> by_video;
    for (const auto& r : records) {
        if (!video_lengths.contains(r.video_id)) throw InvalidInput("score for unknown video '" + r.video_id + "'");
        by_video[r.video_id].push_back(&r);
    }
    const bool with_labels =
        !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) { return r.label_pred.has_value(); });

    std::map<std::string, FrameScores> out;
    for (auto& [video, clips] : by_video) {
        std::sort(clips.begin(), clips.end(), [](const ScoreRecord* a, const ScoreRecord* b) {
            return a->frame_span.start < b->frame_span.start;
        });
        const std::size_t length = video_lengths.at(video);
        for (std::size_t i = 0; i < clips.size(); ++i) {
            if (clips[i]->frame_span.end >= length || clips[i]->frame_span.end < clips[i]->frame_span.start) {
                throw InvalidInput("clip '" + clips[i]->clip_id + "' lies outside video '" + video + "'");
            }
            if (i > 0 && clips[i]->frame_span.start <= clips[i - 1]->frame_span.end) {
                throw InvalidInput("overlapping clip spans in video '" + video + "'");
            }
        }
        FrameScores fs;
        fs.scores.resize(length);
        if (with_labels) fs.predicted.resize(length);
        std::size_t next = 0;
        const ScoreRecord* current = clips.front();
        for (std::size_t frame = 0; frame < length; ++frame) {
            while (next < clips.size() && clips[next]->frame_span.start <= frame) current = clips[next++];
            fs.scores[frame] = current->mse;
            if (with_labels) fs.predicted[frame] = *current->label_pred;
        }
        out.emplace(video, std::move(fs));
    }
    return out;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw InvalidInput("roc_auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        // 1-based ranks i+1 .. j share their average.
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                positive_rank_sum += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw InvalidInput("AUC is undefined with a single class");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (positive_rank_sum - np * (np + 1) / 2) / (np * nn);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw InvalidInput("roc_curve: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto n_pos = static_cast<double>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
    const auto n_neg = static_cast<double>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw InvalidInput("ROC is undefined with a single class");

    std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] != 0 ? tp : fp) += 1;
            ++j;
        }
        out.push_back({scores[order[i]], fp / n_neg, tp / n_pos});
        i = j;
    }
    return out;
}

// ---- CSV -------------------------------------------------------------------

namespace {

constexpr const char* kScoreHeader = "clip_id,video_id,start_frame,end_frame,mse,label_pred,label_true";

std::string optional_label(const std::optional<std::uint8_t>& v) {
    return v ? std::to_string(static_cast<int>(*v)) : std::string();
}

std::optional<std::uint8_t> parse_label(const std::string& s, const std::string& where) {
    if (s.empty()) return std::nullopt;
    if (s == "0") return std::uint8_t{0};
    if (s == "1") return std::uint8_t{1};
    throw DataError(where + ": label must be 0, 1 or empty, got '" + s + "'");
}

}  // namespace

void write_score_csv(const std::filesystem::path& path, std::span<const ScoreRecord> records) {
    std::ostringstream os;
    os << kScoreHeader << '\n' << std::setprecision(17);
    for (const auto& r : records) {
        if (r.clip_id.find(',') != std::string::npos || r.video_id.find(',') != std::string::npos) {
            throw InvalidInput("identifiers may not contain commas: " + r.clip_id);
        }
        os << r.clip_id << ',' << r.video_id << ',' << r.frame_span.start << ',' << r.frame_span.end << ',' << r.mse
           << ',' << optional_label(r.label_pred) << ',' << optional_label(r.label_true) << '\n';
    }
    io::write_text(path, os.str());
}

std::vector<ScoreRecord> read_score_csv(const std::filesystem::path& path) {
    std::istringstream is(io::read_text(path));
    std::string line;
    if (!std::getline(is, line) || line != kScoreHeader) throw DataError(path.string() + ": unexpected score header");
    std::vector<ScoreRecord> out;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cols.push_back(cell);
        if (!line.empty() && line.back() == ',') cols.emplace_back();
        const auto where = path.string() + ":" + std::to_string(line_no);
        if (cols.size() != 7) throw DataError(where + ": expected 7 columns");
        try {
            ScoreRecord r;
            r.clip_id = cols[0];
            r.video_id = cols[1];
            r.frame_span = {std::stoul(cols[2]), std::stoul(cols[3])};
            r.mse = std::stod(cols[4]);
            r.label_pred = parse_label(cols[5], where);
            r.label_true = parse_label(cols[6], where);
            if (!(r.mse >= 0) || !std::isfinite(r.mse)) throw DataError(where + ": mse must be finite and >= 0");
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw DataError(where + ": malformed number");
        }
    }
    return out;
}

}  // namespace vad
