#include "vad/pipeline.hpp"

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vad/binary_io.hpp"
#include "vad/error.hpp"
#include "vad/rng.hpp"

namespace vad {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- data --------------------------------------------------------------------

namespace {

std::string stream_name(ConditionSource source) {
    return to_string(source);
}

Mat<float> to_matrix(std::span<const ClipFeature> items) {
    if (items.empty()) return {};
    const auto dim = static_cast<Eigen::Index>(items.front().values.size());
    Mat<float> m(dim, static_cast<Eigen::Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) {
        m.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vec<float>>(items[i].values.data(), dim);
    }
    return m;
}

Mat<float> gather(const Mat<float>& m, std::span<const std::size_t> columns) {
    Mat<float> out(m.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(columns[i]));
    }
    return out;
}

}  // namespace

ModelData load_model_data(const fs::path& manifest, const RunConfig& cfg, LabelPolicy policy) {
    std::optional<std::string> stream;
    if (cfg.conditioned()) stream = stream_name(cfg.condition_source);
    auto loaded = load_dataset(manifest, stream, policy);

    ModelData out;
    out.manifest = std::move(loaded.manifest);
    if (cfg.role_swap) {
        if (!cfg.conditioned()) throw ConfigError("role swap needs a condition stream");
        out.inputs = std::move(loaded.conditions);
        out.conditions = std::move(loaded.features);
        for (std::size_t i = 0; i < out.inputs.size(); ++i) {
            out.inputs[i].video_id = out.conditions[i].video_id;
            out.inputs[i].frame_span = out.conditions[i].frame_span;
        }
    } else {
        out.inputs = std::move(loaded.features);
        out.conditions = std::move(loaded.conditions);
    }
    if (out.inputs.empty()) throw DataError(manifest.string() + " lists no clips");
    return out;
}

void write_training_stats(const fs::path& path, const TrainingStats& stats) {
    json j{{"input", json::parse(stats_to_json(stats.input))}};
    if (stats.condition) j["condition"] = json::parse(stats_to_json(*stats.condition));
    io::write_text(path, j.dump());
}

TrainingStats read_training_stats(const fs::path& path) {
    if (!fs::exists(path)) {
        throw DataError("standardization stats not found: " + path.string() + " (stats are never refit on test data)");
    }
    try {
        const auto j = json::parse(io::read_text(path));
        TrainingStats s;
        s.input = stats_from_json(j.at("input").dump());
        if (j.contains("condition")) s.condition = stats_from_json(j.at("condition").dump());
        return s;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

// ---- training ----------------------------------------------------------------

namespace {

NetworkShape network_shape(const RunConfig& cfg, std::size_t feature_dim, std::size_t condition_dim) {
    NetworkShape shape;
    shape.feature_dim = feature_dim;
    shape.condition_dim = condition_dim;
    shape.embed_dim = cfg.embed_dim;
    shape.embed_std = cfg.embed_std;
    shape.encoder_widths = cfg.encoder_widths;
    shape.decoder_widths = cfg.decoder_widths;
    return shape;
}

std::string checkpoint_metadata(const RunConfig& cfg) {
    return json{{"sigma_data", cfg.noise.sigma_data},
                {"p_mean", cfg.noise.p_mean},
                {"p_std", cfg.noise.p_std},
                {"condition_source", to_string(cfg.condition_source)},
                {"role_swap", cfg.role_swap},
                {"training_fingerprint", training_fingerprint(cfg)}}
        .dump();
}

void write_train_log(const fs::path& path, const TrainResult& r) {
    std::ostringstream os;
    os << "epoch,mean_loss,lr\n";
    os.precision(10);
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) os << e << ',' << r.epoch_loss[e] << ',' << r.epoch_lr[e] << '\n';
    io::write_text(path, os.str());
}

void read_train_log(const fs::path& path, TrainResult& r) {
    std::istringstream is(io::read_text(path));
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string epoch, loss, lr;
        std::getline(ls, epoch, ',');
        std::getline(ls, loss, ',');
        std::getline(ls, lr, ',');
        r.epoch_loss.push_back(std::stod(loss));
        r.epoch_lr.push_back(std::stod(lr));
    }
}

}  // namespace

TrainResult cmd_train(const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    if (cfg.train_manifest.empty()) throw ConfigError("data.train_manifest is not set");
    auto data = load_model_data(cfg.train_manifest, cfg, LabelPolicy::Strip);

    TrainingStats stats;
    stats.input = fit_standardizer(data.inputs);
    const Mat<float> x_all = to_matrix(apply_standardizer(data.inputs, stats.input));
    Mat<float> c_all;
    if (cfg.conditioned()) {
        stats.condition = fit_standardizer(data.conditions);
        c_all = to_matrix(apply_standardizer(data.conditions, *stats.condition));
    }

    const auto shape = network_shape(cfg, static_cast<std::size_t>(x_all.rows()),
                                     cfg.conditioned() ? static_cast<std::size_t>(c_all.rows()) : 0);
    auto params = init_params<float>(shape, cfg.seed);
    auto optim = make_optimizer(params, cfg.optimizer);

    // Feature rows are already aligned with their condition rows.
    std::mt19937_64 noise_rng(derive_seed(cfg.seed, 0x6e6f697365));
    std::normal_distribution<float> normal(0.0f, 1.0f);

    TrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = build_batches(data.inputs, cfg.conditioned() ? &data.conditions : nullptr, cfg.batch_size,
                                           cfg.seed, epoch, false);
        const double lr = scheduled_learning_rate(cfg.optimizer, optim.step);
        double loss_sum = 0;
        std::size_t samples = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            const Mat<float> x0 = gather(x_all, batch.features);
            Mat<float> cond;
            if (cfg.conditioned()) cond = gather(c_all, batch.features);
            std::vector<double> sigmas(batch.features.size());
            for (auto& s : sigmas) s = sample_training_sigma(cfg.noise, noise_rng);
            Mat<float> eps(x0.rows(), x0.cols());
            for (Eigen::Index j = 0; j < eps.cols(); ++j) {
                for (Eigen::Index i = 0; i < eps.rows(); ++i) eps(i, j) = normal(noise_rng);
            }
            const auto lg = training_loss_and_grad<float>(params, x0, cfg.conditioned() ? &cond : nullptr, sigmas, eps,
                                                          cfg.noise.sigma_data);
            if (!std::isfinite(lg.loss)) {
                const auto [lo, hi] = std::minmax_element(sigmas.begin(), sigmas.end());
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b) + " (sigma draws in [" + std::to_string(*lo) + ", " +
                                   std::to_string(*hi) + "])");
            }
            optimizer_step<float>(optim, params, lg.grads);
            loss_sum += lg.loss * static_cast<double>(batch.features.size());
            samples += batch.features.size();
        }
        result.epoch_loss.push_back(samples ? loss_sum / static_cast<double>(samples) : 0.0);
        result.epoch_lr.push_back(lr);
    }
    result.steps = optim.step;

    Checkpoint ckpt;
    ckpt.kind = CheckpointKind::Network;
    ckpt.params = std::move(params);
    ckpt.ema = std::move(optim.ema);
    ckpt.use_ema = cfg.use_ema;
    ckpt.step = optim.step;
    ckpt.seed = cfg.seed;
    ckpt.metadata_json = checkpoint_metadata(cfg);

    fs::create_directories(out_dir);
    result.checkpoint = out_dir / "checkpoint.vadw";
    result.stats = out_dir / "stats.json";
    result.log = out_dir / "train_log.csv";
    write_checkpoint(result.checkpoint, ckpt);
    write_training_stats(result.stats, stats);
    write_train_log(result.log, result);
    return result;
}

namespace {

// Exclusive advisory lock on a file, released on destruction.
class FileLock {
public:
    explicit FileLock(const fs::path& path) : fd_(::open(path.c_str(), O_RDWR | O_CREAT, 0644)) {
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) throw DataError("cannot lock " + path.string());
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_;
};

}  // namespace

TrainResult train_cached(const RunConfig& cfg) {
    const fs::path root = cfg.cache_dir;
    fs::create_directories(root);
    const auto key = training_fingerprint(cfg);
    const auto dir = root / key;
    FileLock lock(root / (key + ".lock"));
    if (fs::exists(dir / "checkpoint.vadw") && fs::exists(dir / "stats.json")) {
        TrainResult r;
        r.checkpoint = dir / "checkpoint.vadw";
        r.stats = dir / "stats.json";
        r.log = dir / "train_log.csv";
        if (fs::exists(r.log)) read_train_log(r.log, r);
        return r;
    }
    const auto tmp = root / (key + ".tmp");
    fs::remove_all(tmp);
    auto r = cmd_train(cfg, tmp);
    fs::remove_all(dir);
    fs::rename(tmp, dir);
    r.checkpoint = dir / "checkpoint.vadw";
    r.stats = dir / "stats.json";
    r.log = dir / "train_log.csv";
    return r;
}

// ---- scoring -----------------------------------------------------------------

void write_identity_checkpoint(const fs::path& path, std::size_t feature_dim, std::size_t condition_dim) {
    NetworkShape shape;
    shape.feature_dim = feature_dim;
    shape.condition_dim = condition_dim;
    shape.embed_dim = 2;
    shape.encoder_widths = {1};
    shape.decoder_widths = {1};
    Checkpoint ckpt;
    ckpt.kind = CheckpointKind::Identity;
    ckpt.params = init_params<float>(shape, 0);
    ckpt.use_ema = false;
    write_checkpoint(path, ckpt);
}

ScoreResult cmd_score(const fs::path& checkpoint, const fs::path& stats_path, const fs::path& manifest,
                      const RunConfig& cfg, const fs::path& out_csv) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto ckpt = read_checkpoint(checkpoint);
    const auto stats = read_training_stats(stats_path);
    const auto manifest_view = read_manifest(manifest, LabelPolicy::Load);
    auto data = load_model_data(manifest, cfg, LabelPolicy::Load);

    const auto& shape = ckpt.params.shape;
    const std::size_t dim = data.inputs.front().values.size();
    if (stats.input.dim() != dim) {
        throw DataError("feature dimension " + std::to_string(dim) + " does not match the training domain (" +
                        std::to_string(stats.input.dim()) + ")");
    }
    if (shape.feature_dim != dim) {
        throw DataError("checkpoint expects " + std::to_string(shape.feature_dim) + "-dim features, manifest has " +
                        std::to_string(dim));
    }
    if (ckpt.kind == CheckpointKind::Network && shape.condition_dim > 0 && !cfg.conditioned()) {
        throw DataError("checkpoint was trained with a condition stream; set condition.source");
    }
    if (cfg.conditioned() && ckpt.kind == CheckpointKind::Network) {
        if (shape.condition_dim == 0) throw DataError("checkpoint was trained without conditions");
        if (!stats.condition || stats.condition->dim() != data.conditions.front().values.size() ||
            shape.condition_dim != stats.condition->dim()) {
            throw DataError("condition dimension does not match the checkpoint");
        }
    }
    double sigma_data = cfg.noise.sigma_data;
    if (const auto meta = json::parse(ckpt.metadata_json); meta.contains("sigma_data")) {
        sigma_data = meta.at("sigma_data").get<double>();
    }

    const Mat<float> x_all = to_matrix(apply_standardizer(data.inputs, stats.input));
    Mat<float> c_all;
    const bool use_cond = cfg.conditioned() && ckpt.kind == CheckpointKind::Network;
    if (use_cond) c_all = to_matrix(apply_standardizer(data.conditions, *stats.condition));

    const auto params = ckpt.scoring_params();
    const auto schedule = cfg.schedule();
    const auto sampler = cfg.sampler();

    ScoreResult result;
    result.records.resize(data.inputs.size());
    constexpr Eigen::Index kChunk = 1024;
    for (Eigen::Index first = 0; first < x_all.cols(); first += kChunk) {
        const Eigen::Index n = std::min(kChunk, x_all.cols() - first);
        const Eigen::MatrixXd x0 = x_all.middleCols(first, n).cast<double>();
        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
        for (Eigen::Index j = 0; j < n; ++j) {
            seeds[static_cast<std::size_t>(j)] = derive_seed(cfg.score_seed, static_cast<std::uint64_t>(first + j));
        }
        Mat<float> cond;
        if (use_cond) cond = c_all.middleCols(first, n);
        const DenoiseFn denoiser = ckpt.kind == CheckpointKind::Identity
                                       ? identity_denoiser()
                                       : network_denoiser<float>(params, sigma_data, use_cond ? &cond : nullptr);
        const Eigen::MatrixXd rec = reconstruct(denoiser, x0, schedule, sampler, seeds);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto i = static_cast<std::size_t>(first + j);
            auto& r = result.records[i];
            r.clip_id = data.inputs[i].clip_id;
            r.video_id = data.inputs[i].video_id;
            r.frame_span = data.inputs[i].frame_span;
            r.mse = (x0.col(j) - rec.col(j)).squaredNorm() / static_cast<double>(x0.rows());
            if (!std::isfinite(r.mse)) throw NumericError("non-finite reconstruction for clip '" + r.clip_id + "'");
        }
    }

    // Clip ground truth: anomalous if any covered frame is.
    std::map<std::string, const VideoEntry*> videos;
    for (const auto& v : manifest_view.videos) videos[v.video_id] = &v;
    for (auto& r : result.records) {
        const auto* v = videos.at(r.video_id);
        if (!v->labels) continue;
        std::uint8_t label = 0;
        for (std::size_t f = r.frame_span.start; f <= r.frame_span.end; ++f) label |= (*v->labels)[f];
        r.label_true = label;
    }

    if (cfg.shuffle_eval) {
        std::mt19937_64 rng(derive_seed(cfg.score_seed, 0x73687566));
        std::shuffle(result.records.begin(), result.records.end(), rng);
    }
    result.batches = threshold_in_batches(result.records, cfg.threshold_k, cfg.eval_batch);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    write_score_csv(out_csv, result.records);
    json thresholds = json::array();
    for (const auto& t : result.batches) thresholds.push_back({{"mean", t.mean}, {"std", t.std}, {"threshold", t.threshold}});
    json meta{{"config_fingerprint", config_fingerprint(cfg)},
              {"start_t", cfg.start_index()},
              {"k", cfg.threshold_k},
              {"eval_batch", cfg.eval_batch},
              {"train_steps", ckpt.step},
              {"thresholds", thresholds}};
    // Wall-clock time is kept out of the CSV so reruns stay byte-identical.
    meta["seconds"] = result.seconds;
    io::write_text(fs::path(out_csv.string() + ".meta.json"), meta.dump(1));
    return result;
}

// ---- evaluation --------------------------------------------------------------

EvalOptions eval_options(const RunConfig& cfg) {
    EvalOptions o;
    o.threshold_k = cfg.threshold_k;
    o.eval_batch = cfg.eval_batch;
    o.normalize_per_batch = cfg.normalize_per_batch;
    return o;
}

std::string report_to_json(const EvalReport& r) {
    json per_video = json::object();
    for (const auto& [video, auc] : r.per_video_auc) per_video[video] = auc ? json(*auc) : json(nullptr);
    json thresholds = json::array();
    for (const auto& t : r.thresholds) thresholds.push_back({{"mean", t.mean}, {"std", t.std}, {"threshold", t.threshold}});
    return json{{"report_version", 1},
                {"frame_auc", r.frame_auc},
                {"per_video_auc", per_video},
                {"mean_mse_normal", r.mean_mse_normal},
                {"mean_mse_anomalous", r.mean_mse_anomalous},
                {"thresholds", thresholds},
                {"flagged_fraction", r.flagged_fraction},
                {"config_fingerprint", r.config_fingerprint},
                {"clips", r.clips},
                {"frames", r.frames},
                {"score_seconds", r.score_seconds},
                {"train_steps", r.train_steps}}
        .dump(1);
}

EvalReport report_from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        if (j.at("report_version").get<int>() != 1) throw DataError("unsupported report_version");
        EvalReport r;
        r.frame_auc = j.at("frame_auc").get<double>();
        for (const auto& [video, auc] : j.at("per_video_auc").items()) {
            r.per_video_auc[video] = auc.is_null() ? std::nullopt : std::optional<double>(auc.get<double>());
        }
        r.mean_mse_normal = j.at("mean_mse_normal").get<double>();
        r.mean_mse_anomalous = j.at("mean_mse_anomalous").get<double>();
        for (const auto& t : j.at("thresholds")) {
            r.thresholds.push_back({t.at("mean").get<double>(), t.at("std").get<double>(), t.at("threshold").get<double>()});
        }
        r.flagged_fraction = j.at("flagged_fraction").get<double>();
        r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        r.clips = j.at("clips").get<std::size_t>();
        r.frames = j.at("frames").get<std::size_t>();
        r.score_seconds = j.at("score_seconds").get<double>();
        r.train_steps = j.at("train_steps").get<std::uint64_t>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad report: ") + e.what());
    }
}

EvalReport cmd_eval(const fs::path& score_csv, const fs::path& manifest_path, const EvalOptions& options) {
    const auto manifest = read_manifest(manifest_path, LabelPolicy::Load);
    if (!manifest.has_labels()) throw DataError(manifest_path.string() + " carries no frame labels");
    auto records = read_score_csv(score_csv);
    if (records.empty()) throw DataError(score_csv.string() + " has no scores");

    if (options.normalize_per_batch) {
        for (std::size_t first = 0; first < records.size(); first += options.eval_batch) {
            const std::size_t last = std::min(records.size(), first + options.eval_batch);
            std::vector<double> errs;
            for (std::size_t i = first; i < last; ++i) errs.push_back(records[i].mse);
            const auto s = batch_threshold_stats(errs, 0.0);
            for (std::size_t i = first; i < last; ++i) {
                records[i].mse = s.std > 0 ? (records[i].mse - s.mean) / s.std : 0.0;
            }
        }
    }

    EvalReport report;
    report.thresholds = threshold_in_batches(records, options.threshold_k, options.eval_batch);
    report.clips = records.size();
    const auto flagged = std::count_if(records.begin(), records.end(), [](const auto& r) { return *r.label_pred == 1; });
    report.flagged_fraction = static_cast<double>(flagged) / static_cast<double>(records.size());

    std::map<std::string, std::size_t> lengths;
    for (const auto& v : manifest.videos) lengths[v.video_id] = v.num_frames;
    const auto frames = frame_scores(records, lengths);

    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const auto& v : manifest.videos) {
        const auto it = frames.find(v.video_id);
        if (it == frames.end()) continue;  // video without scored clips
        scores.insert(scores.end(), it->second.scores.begin(), it->second.scores.end());
        labels.insert(labels.end(), v.labels->begin(), v.labels->end());
    }
    if (options.invert_labels) {
        for (auto& l : labels) l = static_cast<std::uint8_t>(1 - l);
    }
    if (options.permute_labels_seed) {
        std::mt19937_64 rng(*options.permute_labels_seed);
        std::shuffle(labels.begin(), labels.end(), rng);
    }
    report.frames = scores.size();
    report.frame_auc = roc_auc(scores, labels);

    std::size_t offset = 0;
    for (const auto& v : manifest.videos) {
        if (!frames.contains(v.video_id)) continue;
        const std::span<const double> s(scores.data() + offset, v.num_frames);
        const std::span<const std::uint8_t> l(labels.data() + offset, v.num_frames);
        offset += v.num_frames;
        const bool both = std::any_of(l.begin(), l.end(), [](auto x) { return x == 1; }) &&
                          std::any_of(l.begin(), l.end(), [](auto x) { return x == 0; });
        report.per_video_auc[v.video_id] = both ? std::optional<double>(roc_auc(s, l)) : std::nullopt;
    }

    std::map<std::string, const VideoEntry*> videos;
    for (const auto& v : manifest.videos) videos[v.video_id] = &v;
    double sum[2] = {0, 0};
    std::size_t count[2] = {0, 0};
    for (const auto& r : records) {
        std::uint8_t label = 0;
        const auto& bits = *videos.at(r.video_id)->labels;
        for (std::size_t f = r.frame_span.start; f <= r.frame_span.end; ++f) label |= bits[f];
        sum[label] += r.mse;
        ++count[label];
    }
    report.mean_mse_normal = count[0] ? sum[0] / static_cast<double>(count[0]) : 0.0;
    report.mean_mse_anomalous = count[1] ? sum[1] / static_cast<double>(count[1]) : 0.0;

    const fs::path meta_path(score_csv.string() + ".meta.json");
    if (fs::exists(meta_path)) {
        const auto meta = json::parse(io::read_text(meta_path));
        report.config_fingerprint = meta.value("config_fingerprint", "");
        report.score_seconds = meta.value("seconds", 0.0);
        report.train_steps = meta.value("train_steps", std::uint64_t{0});
    }

    if (options.roc_csv) {
        std::ostringstream os;
        os.precision(12);
        os << "threshold,fpr,tpr\n";
        for (const auto& p : roc_curve(scores, labels)) os << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
        io::write_text(*options.roc_csv, os.str());
    }
    return report;
}

// ---- sweep / cross-domain ----------------------------------------------------

std::vector<SweepCell> cmd_sweep(const RunConfig& cfg, const SweepGrid& grid, const fs::path& out_dir) {
    if (grid.p_mean.empty() || grid.p_std.empty() || grid.start_t.empty()) throw ConfigError("sweep grid has an empty axis");
    if (cfg.test_manifest.empty()) throw ConfigError("data.test_manifest is not set");
    fs::create_directories(out_dir);
    std::vector<SweepCell> cells;
    for (double p_mean : grid.p_mean) {
        for (double p_std : grid.p_std) {
            RunConfig train_cfg = cfg;
            train_cfg.noise.p_mean = p_mean;
            train_cfg.noise.p_std = p_std;
            train_cfg.validate();
            const auto trained = train_cached(train_cfg);
            for (std::size_t t : grid.start_t) {
                RunConfig cell_cfg = train_cfg;
                cell_cfg.start_t = t;
                cell_cfg.validate();
                const auto fp = config_fingerprint(cell_cfg);
                const auto csv = out_dir / "cells" / (fp + ".csv");
                cmd_score(trained.checkpoint, trained.stats, cfg.test_manifest, cell_cfg, csv);
                const auto report = cmd_eval(csv, cfg.test_manifest, eval_options(cell_cfg));
                io::write_text(out_dir / "cells" / (fp + ".json"), report_to_json(report));
                cells.push_back({p_mean, p_std, t, report.frame_auc, fp});
            }
        }
    }

    std::ostringstream table;
    table.precision(10);
    table << "p_mean,p_std,start_t,auc,fingerprint\n";
    for (const auto& c : cells) table << c.p_mean << ',' << c.p_std << ',' << c.start_t << ',' << c.auc << ',' << c.fingerprint << '\n';
    io::write_text(out_dir / "sweep.csv", table.str());

    // Plot data: one column per noise setting, one row per start index.
    std::ostringstream plot;
    plot.precision(10);
    plot << "start_t";
    for (double pm : grid.p_mean) {
        for (double ps : grid.p_std) plot << ",auc(p_mean=" << pm << " p_std=" << ps << ")";
    }
    plot << '\n';
    for (std::size_t t : grid.start_t) {
        plot << t;
        for (double pm : grid.p_mean) {
            for (double ps : grid.p_std) {
                const auto it = std::find_if(cells.begin(), cells.end(), [&](const SweepCell& c) {
                    return c.p_mean == pm && c.p_std == ps && c.start_t == t;
                });
                plot << ',' << it->auc;
            }
        }
        plot << '\n';
    }
    io::write_text(out_dir / "sweep_plot.csv", plot.str());
    return cells;
}

EvalReport cmd_cross_eval(const fs::path& checkpoint, const fs::path& stats_a, const fs::path& manifest_b,
                          const RunConfig& cfg, const fs::path& out_dir) {
    if (!fs::exists(stats_a)) {
        throw DataError("training-domain stats missing: " + stats_a.string() + " (refusing to refit on the test domain)");
    }
    fs::create_directories(out_dir);
    const auto csv = out_dir / "scores.csv";
    try {
        cmd_score(checkpoint, stats_a, manifest_b, cfg, csv);
    } catch (const DataError& e) {
        throw DataError(std::string("cross-domain: ") + e.what());
    }
    auto options = eval_options(cfg);
    auto report = cmd_eval(csv, manifest_b, options);
    io::write_text(out_dir / "report.json", report_to_json(report));
    return report;
}

// ---- motion extraction -------------------------------------------------------

ExtractSummary cmd_extract_motion(const fs::path& frames_root, const fs::path& out_dir, const ExtractOptions& options) {
    if (!fs::is_directory(frames_root)) throw DataError("frames root is not a directory: " + frames_root.string());
    if (options.condition_dim > 0 && options.condition_dim < 6) throw InvalidInput("condition dim must be >= 6");
    std::vector<fs::path> sources;
    for (const auto& entry : fs::directory_iterator(frames_root)) {
        if (entry.is_directory() || entry.path().extension() == ".vadc") sources.push_back(entry.path());
    }
    std::sort(sources.begin(), sources.end());

    ExtractSummary summary;
    std::vector<ConditionVector> conditions;
    for (const auto& src : sources) {
        const FrameClip video = fs::is_directory(src) ? read_frame_directory(src) : read_clip_container(src);
        const std::string video_id = fs::is_directory(src) ? src.filename().string() : src.stem().string();
        ++summary.videos;
        if (video.frames < kClipLength) {
            summary.warnings.push_back(video_id + ": " + std::to_string(video.frames) + " frames, shorter than one clip; skipped");
            continue;
        }
        if (video.frames % kClipLength != 0) {
            summary.warnings.push_back(video_id + ": trailing " + std::to_string(video.frames % kClipLength) +
                                       " frames do not fill a clip; ignored");
        }
        for (std::size_t w = 0; w < video.frames / kClipLength; ++w) {
            char name[32];
            std::snprintf(name, sizeof(name), "clip_%06zu", w);
            const std::string clip_id = video_id + "/" + name;
            const auto clip = slice_frames(video, w * kClipLength, kClipLength, clip_id);
            const auto raw = compute_motion_image(clip, options.kind);
            const auto norm = normalize_motion_image(raw);
            write_ppm(out_dir / video_id / (std::string(name) + ".ppm"), to_rgb8(norm));
            if (options.write_raw) write_motion_container(out_dir / video_id / (std::string(name) + ".vadm"), raw);
            if (options.condition_dim > 0) {
                ConditionVector cv;
                const auto stats = toy_condition_stats(norm, options.condition_dim);
                cv.values.assign(stats.begin(), stats.end());
                cv.clip_id = clip_id;
                cv.video_id = video_id;
                cv.frame_span = {w * kClipLength, w * kClipLength + kClipLength - 1};
                conditions.push_back(std::move(cv));
            }
            ++summary.images;
        }
    }
    if (options.condition_dim > 0) {
        write_features(out_dir / ("conditions_" + to_string(options.kind) + ".vadf"), conditions);
    }
    return summary;
}

}  // namespace vad
