#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <random>

#include <json.hpp>

#include "vad/data_io.hpp"
#include "vad/error.hpp"
#include "vad/rng.hpp"

namespace vad {

using nlohmann::json;

double SyntheticSpec::anomaly_rate() const {
    const auto total = n_normal + n_anomalous;
    return total == 0 ? 0.0 : static_cast<double>(n_anomalous) / static_cast<double>(total);
}

void SyntheticSpec::validate() const {
    if (feature_dim == 0 || condition_dim == 0 || latent_dim == 0) throw InvalidInput("synthetic dims must be >= 1");
    if (latent_dim > feature_dim) throw InvalidInput("latent_dim must not exceed feature_dim");
    if (n_normal + n_anomalous < 2) throw InvalidInput("synthetic train split needs at least 2 clips");
    if (n_test == 0) throw InvalidInput("synthetic test split is empty");
    if (clips_per_video == 0) throw InvalidInput("clips_per_video must be >= 1");
    if (anomaly_offset_magnitude < 0 || observation_noise_std < 0 || condition_noise_std < 0 || domain_shift < 0) {
        throw InvalidInput("synthetic magnitudes must be non-negative");
    }
}

std::string synthetic_spec_to_json(const SyntheticSpec& s) {
    return json{{"feature_dim", s.feature_dim},
                {"condition_dim", s.condition_dim},
                {"latent_dim", s.latent_dim},
                {"n_normal", s.n_normal},
                {"n_anomalous", s.n_anomalous},
                {"n_test", s.n_test},
                {"anomaly_offset_magnitude", s.anomaly_offset_magnitude},
                {"observation_noise_std", s.observation_noise_std},
                {"condition_noise_std", s.condition_noise_std},
                {"condition_informative", s.condition_informative},
                {"domain_shift", s.domain_shift},
                {"clips_per_video", s.clips_per_video},
                {"seed", s.seed}}
        .dump(1);
}

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        SyntheticSpec s;
        s.feature_dim = j.value("feature_dim", s.feature_dim);
        s.condition_dim = j.value("condition_dim", s.condition_dim);
        s.latent_dim = j.value("latent_dim", s.latent_dim);
        s.n_normal = j.value("n_normal", s.n_normal);
        s.n_anomalous = j.value("n_anomalous", s.n_anomalous);
        s.n_test = j.value("n_test", s.n_test);
        s.anomaly_offset_magnitude = j.value("anomaly_offset_magnitude", s.anomaly_offset_magnitude);
        s.observation_noise_std = j.value("observation_noise_std", s.observation_noise_std);
        s.condition_noise_std = j.value("condition_noise_std", s.condition_noise_std);
        s.condition_informative = j.value("condition_informative", s.condition_informative);
        s.domain_shift = j.value("domain_shift", s.domain_shift);
        s.clips_per_video = j.value("clips_per_video", s.clips_per_video);
        s.seed = j.value("seed", s.seed);
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad synthetic spec: ") + e.what());
    }
}

namespace {

Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = normal(rng);
    }
    return m;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    // Fix the sign ambiguity so the basis is a continuous function of m.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
        if (r(c, c) < 0) q.col(c) = -q.col(c);
    }
    return q;
}

struct Maps {
    Eigen::MatrixXd feature;    // f x d, orthonormal columns
    Eigen::MatrixXd shifted;    // test-split map, equals feature without a shift
    Eigen::MatrixXd condition;  // c x d
};

Maps make_maps(const SyntheticSpec& spec) {
    std::mt19937_64 rng(derive_seed(spec.seed, 0x6d617073));  // "maps"
    Maps maps;
    const auto base = gaussian_matrix(spec.feature_dim, spec.latent_dim, rng, 1.0);
    maps.condition = gaussian_matrix(spec.condition_dim, spec.latent_dim, rng, 1.0 / std::sqrt(double(spec.latent_dim)));
    // Drawn even when unused so that both domains share every other stream.
    const auto perturbation = gaussian_matrix(spec.feature_dim, spec.latent_dim, rng, 1.0);
    maps.feature = orthonormal_columns(base);
    maps.shifted = maps.feature;
    if (spec.domain_shift > 0) {
        maps.shifted = orthonormal_columns(maps.feature +
                                           spec.domain_shift / std::sqrt(double(spec.feature_dim)) * perturbation);
    }
    return maps;
}

SyntheticSplit make_split(const SyntheticSpec& spec, const Maps& maps, Split split, std::size_t n_total,
                          std::size_t n_anomalous, std::uint64_t stream) {
    std::mt19937_64 rng(derive_seed(spec.seed, stream));
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto f = static_cast<Eigen::Index>(spec.feature_dim);
    const auto c = static_cast<Eigen::Index>(spec.condition_dim);
    const auto d = static_cast<Eigen::Index>(spec.latent_dim);
    const std::string prefix = split == Split::Train ? "train" : "test";

    // Exactly n_anomalous anomalies at shuffled positions.
    std::vector<std::uint8_t> labels(n_total, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_anomalous), 1);
    std::shuffle(labels.begin(), labels.end(), rng);

    SyntheticSplit out;
    out.clip_labels = labels;
    out.features.reserve(n_total);
    out.conditions.reserve(n_total);
    out.manifest.split = split;
    out.manifest.feature_file = prefix + "_features.vadf";
    out.manifest.condition_files["external"] = prefix + "_conditions.vadf";

    // Conditions use their own stream so features do not depend on the
    // condition settings.
    std::mt19937_64 cond_rng(derive_seed(spec.seed, stream ^ 0x636f6e64));
    auto draw_from = [&](std::mt19937_64& g, Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(g);
        return v;
    };
    auto draw = [&](Eigen::Index n) { return draw_from(rng, n); };

    const std::size_t per_video = spec.clips_per_video;
    for (std::size_t i = 0; i < n_total; ++i) {
        const std::size_t video = i / per_video, slot = i % per_video;
        const std::string video_id = prefix + "_v" + std::to_string(video);
        const std::string clip_id = video_id + "_c" + std::to_string(slot);
        const FrameSpan span{slot * kClipLength, slot * kClipLength + kClipLength - 1};
        const bool anomalous = labels[i] != 0;

        const Eigen::VectorXd z = draw(d);
        const Eigen::MatrixXd& feature_map = split == Split::Train ? maps.feature : maps.shifted;
        Eigen::VectorXd x = feature_map * z + spec.observation_noise_std * draw(f);
        if (anomalous) {
            Eigen::VectorXd dir = draw(f);
            x += spec.anomaly_offset_magnitude * dir / dir.norm();
        }
        Eigen::VectorXd cond;
        if (spec.condition_informative) {
            const Eigen::VectorXd source = anomalous ? draw_from(cond_rng, d) : z;
            cond = maps.condition * source + spec.condition_noise_std * draw_from(cond_rng, c);
        } else {
            cond = draw_from(cond_rng, c);
        }

        ClipFeature feat;
        feat.values.assign(x.data(), x.data() + x.size());
        feat.clip_id = clip_id;
        feat.video_id = video_id;
        feat.frame_span = span;
        ConditionVector cv = feat;
        cv.values.assign(cond.data(), cond.data() + cond.size());
        out.features.push_back(std::move(feat));
        out.conditions.push_back(std::move(cv));

        if (slot == 0) {
            VideoEntry v;
            v.video_id = video_id;
            out.manifest.videos.push_back(std::move(v));
        }
        auto& v = out.manifest.videos.back();
        v.num_frames += kClipLength;
        v.clips.push_back(ClipEntry{clip_id, span, i, i});
        auto& frame_bits = out.frame_labels[video_id];
        frame_bits.insert(frame_bits.end(), kClipLength, labels[i]);
    }
    if (split == Split::Test) {
        for (auto& v : out.manifest.videos) v.labels = out.frame_labels.at(v.video_id);
    }
    return out;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto maps = make_maps(spec);
    SyntheticData data;
    data.spec = spec;
    const std::size_t n_train = spec.n_normal + spec.n_anomalous;
    const auto n_test_anomalous =
        static_cast<std::size_t>(std::llround(spec.anomaly_rate() * static_cast<double>(spec.n_test)));
    // A shifted domain draws a fresh test population.
    const std::uint64_t test_stream = spec.domain_shift > 0 ? 0x73686966 : 0x74657374;
    data.train = make_split(spec, maps, Split::Train, n_train, spec.n_anomalous, 0x747261696e);
    data.test = make_split(spec, maps, Split::Test, spec.n_test, n_test_anomalous, test_stream);
    return data;
}

SyntheticPaths write_synthetic(const SyntheticData& data, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    SyntheticPaths paths;
    paths.train_manifest = out_dir / "train_manifest.json";
    paths.test_manifest = out_dir / "test_manifest.json";
    paths.train_truth = out_dir / "train_truth.json";

    for (const auto* split : {&data.train, &data.test}) {
        write_features(out_dir / split->manifest.feature_file, split->features);
        write_features(out_dir / split->manifest.condition_files.at("external"), split->conditions);
    }
    write_manifest(paths.train_manifest, data.train.manifest);
    write_manifest(paths.test_manifest, data.test.manifest);
    write_label_sidecar(paths.train_truth, data.train.frame_labels);
    std::ofstream(out_dir / "synthetic_spec.json") << synthetic_spec_to_json(data.spec);
    return paths;
}

}  // namespace vad
