// Acceptance suite: one PASS/FAIL line per criterion.
//
//   vad_acceptance [--quick]
//
// --quick runs only the oracle checks. VAD_ACCEPT_CACHE reuses trained models
// between runs (default: a fresh directory). VAD_REAL_TRAIN_MANIFEST and
// VAD_REAL_TEST_MANIFEST point the real-data check at user feature files.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vad/diffusion.hpp"
#include "vad/error.hpp"
#include "vad/motion.hpp"
#include "vad/pipeline.hpp"
#include "vad/scoring.hpp"

using namespace vad;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    double budget_seconds = 0;  // 0: no budget
    double charged_seconds = -1;  // overrides the measured time when >= 0
};

int failures = 0;

void run(const std::string& name, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.charged_seconds >= 0) secs = o.charged_seconds;
    if (o.budget_seconds > 0 && secs > o.budget_seconds) {
        o.pass = false;
        o.detail += "; over the time budget";
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

// ---- oracle checks -----------------------------------------------------------

Outcome edm_identities() {
    double worst = 0;
    for (double sd : {1.0, 0.5, 2.0}) {
        for (int k = 0; k < 1000; ++k) {
            const double sigma = std::pow(10.0, -3.0 + 6.0 * k / 999.0);
            const auto c = precondition_coeffs(sigma, sd);
            const double total = sigma * sigma + sd * sd;
            worst = std::max(worst, std::fabs(c.c_in * c.c_in * total - 1.0));
            worst = std::max(worst, std::fabs(c.c_skip * total / (sd * sd) - 1.0));
            worst = std::max(worst, std::fabs(c.c_out * c.c_out * total / (sigma * sigma * sd * sd) - 1.0));
            worst = std::max(worst, std::fabs(c.c_skip + c.c_out * c.c_out / (sd * sd) - 1.0));
            worst = std::max(worst, std::fabs(loss_weight(sigma, sd) * c.c_out * c.c_out - 1.0));
            worst = std::max(worst, std::fabs(*c.c_noise - std::log(sigma) / 4.0));
        }
    }
    return {worst < 1e-12, "max deviation " + fmt("%.2e", worst) + " over 3x1000 sigma", 1.0};
}

Outcome gradient_check() {
    NetworkShape shape;
    shape.feature_dim = 8;
    shape.condition_dim = 3;
    shape.embed_dim = 6;
    shape.encoder_widths = {7, 5};
    shape.decoder_widths = {5, 6};
    auto p = init_params<double>(shape, 5);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0.0, 0.4);
    for (auto& v : p.values) v = n(rng);
    const Mat<double> x = gaussian(8, 4, 1);
    const Mat<double> cond = gaussian(3, 4, 2);
    const Mat<double> up = gaussian(8, 4, 3);
    const std::vector<double> cn{0.4, -0.7, 1.3, 0.0};
    auto objective = [&](const DenoiserParams<double>& q, const Mat<double>& xin) {
        return (forward<double>(q, xin, cn, &cond).array() * up.array()).sum();
    };
    ForwardCache<double> cache;
    forward<double>(p, x, cn, &cond, &cache);
    Mat<double> dx;
    const auto grads = backward<double>(p, cache, up, &dx);
    const double h = 1e-5;
    double worst = 0;
    auto rel = [](double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-6}); };
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        const double keep = p.values[i];
        p.values[i] = keep + h;
        const double fp = objective(p, x);
        p.values[i] = keep - h;
        const double fm = objective(p, x);
        p.values[i] = keep;
        worst = std::max(worst, rel((fp - fm) / (2 * h), grads[i]));
    }
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            Mat<double> xp = x, xm = x;
            xp(r, c) += h;
            xm(r, c) -= h;
            worst = std::max(worst, rel((objective(p, xp) - objective(p, xm)) / (2 * h), dx(r, c)));
        }

    // full training loss through the preconditioning
    NetworkShape plain = shape;
    plain.condition_dim = 0;
    auto q = init_params<double>(plain, 8);
    for (auto& v : q.values) v = n(rng);
    const Mat<double> x0 = gaussian(8, 5, 4);
    const Mat<double> eps = gaussian(8, 5, 5);
    const std::vector<double> sig{0.05, 0.4, 1.0, 3.0, 20.0};
    const auto lg = training_loss_and_grad<double>(q, x0, nullptr, sig, eps, 1.0);
    for (std::size_t i = 0; i < q.values.size(); ++i) {
        const double keep = q.values[i];
        q.values[i] = keep + h;
        const double fp = training_loss_and_grad<double>(q, x0, nullptr, sig, eps, 1.0).loss;
        q.values[i] = keep - h;
        const double fm = training_loss_and_grad<double>(q, x0, nullptr, sig, eps, 1.0).loss;
        q.values[i] = keep;
        worst = std::max(worst, rel((fp - fm) / (2 * h), lg.grads[i]));
    }
    return {worst < 1e-4,
            "max relative error " + fmt("%.2e", worst) + " over " + std::to_string(p.size() + q.size() + 32) +
                " coordinates",
            10.0};
}

Outcome sampler_oracle() {
    const auto sched = karras_schedule(0.01, 80.0, 10, 7.0);
    const Eigen::MatrixXd x0 = gaussian(16, 8, 1);
    const DenoiseFn oracle = [&](const Eigen::MatrixXd&, double) -> Eigen::MatrixXd { return x0; };
    std::vector<std::uint64_t> seeds(8);
    for (std::size_t k = 0; k < 8; ++k) seeds[k] = 100 + k;
    double worst = 0;
    for (std::size_t order = 1; order <= 4; ++order) {
        for (std::size_t t = 0; t < 10; ++t) {
            const auto rec = reconstruct(oracle, x0, sched, SamplerConfig{order, t}, seeds);
            worst = std::max(worst, (rec - x0).cwiseAbs().maxCoeff());
        }
    }

    // order 1 against a hand-written Euler loop on a nonlinear denoiser
    const DenoiseFn bent = [](const Eigen::MatrixXd& x, double s) -> Eigen::MatrixXd {
        return (x.array() / (1.0 + s)).tanh().matrix();
    };
    bool euler_equal = true;
    for (std::size_t start = 0; start < 10; ++start) {
        const Eigen::MatrixXd xs = gaussian(16, 8, 50 + start, sched.sigmas[start]);
        Eigen::MatrixXd x = xs;
        for (std::size_t i = start; i + 1 < sched.sigmas.size(); ++i) {
            const Eigen::MatrixXd d = (x - bent(x, sched.sigmas[i])) / sched.sigmas[i];
            x += (sched.sigmas[i + 1] - sched.sigmas[i]) * d;
        }
        euler_equal = euler_equal && lms_sample(bent, xs, sched, SamplerConfig{1, start}) == x;
    }
    return {worst < 1e-6 && euler_equal,
            "max |x_rec - x0| " + fmt("%.2e", worst) + " over orders 1-4, t 0-9; order-1 LMS " +
                (euler_equal ? "bitwise equal to" : "differs from") + " Euler",
            5.0};
}

Outcome motion_oracles() {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto clip = testing::random_clip(16, 8, 8, seed);
        worst = std::max(worst, testing::max_rel_error(compute_dynamic_image(clip).pixels, testing::dynamic_image_oracle(clip)));
        worst = std::max(worst, testing::max_rel_error(compute_star_image(clip).pixels, testing::star_image_oracle(clip)));
    }
    bool zero = true;
    for (float level : {0.0f, 37.0f, 255.0f}) {
        FrameClip flat(16, 8, 8);
        std::fill(flat.data.begin(), flat.data.end(), level);
        for (double v : compute_dynamic_image(flat).pixels) zero = zero && v == 0.0;
        for (double v : compute_star_image(flat).pixels) zero = zero && v == 0.0;
    }
    return {worst < 1e-5 && zero,
            "max relative error " + fmt("%.2e", worst) + " on 10 clips each; constant clips " +
                (zero ? "exactly zero" : "not zero"),
            5.0};
}

Outcome noise_distribution() {
    NoiseParams noise;
    std::mt19937_64 rng(2024);
    std::vector<double> logs(100000);
    for (auto& v : logs) v = std::log(sample_training_sigma(noise, rng));
    const double ks = testing::ks_normal(logs, noise.p_mean, noise.p_std);
    return {ks < 0.01, "KS statistic " + fmt("%.4f", ks) + " at 1e5 draws", 5.0};
}

Outcome threshold_arithmetic() {
    bool ok = true;
    ok = ok && batch_threshold(std::vector<double>{0, 2}, 0.0) == 1.0;
    for (double k : {0.0, 1.0, 3.7}) ok = ok && batch_threshold(std::vector<double>{4.25, 4.25, 4.25, 4.25}, k) == 4.25;
    ok = ok && batch_threshold(std::vector<double>{1, 2, 3, 4}, 1.0) == 2.5 + std::sqrt(1.25);
    ok = ok && classify(std::vector<double>{0, 2}, 1.0) == std::vector<std::uint8_t>{0, 1};
    ok = ok && classify(std::vector<double>{1.5, 1.5, 1.5}, 1.5) == std::vector<std::uint8_t>{0, 0, 0};
    std::vector<double> errs{0.5, 1.2, 2.0, 0.9};
    const auto base = classify(errs, 1.0);
    errs[0] = 10.0;
    const auto raised = classify(errs, 1.0);
    for (std::size_t i = 1; i < errs.size(); ++i) ok = ok && raised[i] == base[i];
    return {ok, ok ? "all fixed cases exact" : "a fixed case differs"};
}

Outcome auc_oracle() {
    std::mt19937_64 rng(77);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 200;
        std::vector<double> s(n);
        std::vector<std::uint8_t> l(n);
        std::uniform_int_distribution<int> coarse(0, 20);
        std::normal_distribution<double> fine(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            l[i] = rng() % 3 == 0;
            s[i] = trial % 2 ? coarse(rng) : fine(rng) + 0.5 * l[i];
        }
        l[0] = 1;
        l[1] = 0;
        worst = std::max(worst, std::fabs(roc_auc(s, l) - testing::pair_auc_oracle(s, l)));
    }
    return {worst <= 1e-12, "max |AUC - pair oracle| " + fmt("%.2e", worst) + " over 100 instances of 200"};
}

// ---- synthetic detection -----------------------------------------------------

constexpr std::size_t kUncondStart = 6;
constexpr std::size_t kCondStart = 1;
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

struct SeedRun {
    std::uint64_t seed;
    SyntheticPaths a;
    SyntheticPaths b;  // same seed, shifted test map
    TrainResult uncond;
    TrainResult cond;
    double uncond_train_s = 0;
    double cond_train_s = 0;
    double uncond_auc = 0;
    double cond_auc = 0;
    double uncond_score_s = 0;
    double cond_score_s = 0;
    fs::path uncond_csv;
};

RunConfig base_config(const SyntheticPaths& data, const fs::path& cache, std::uint64_t seed, bool conditioned) {
    RunConfig cfg;
    cfg.train_manifest = data.train_manifest.string();
    cfg.test_manifest = data.test_manifest.string();
    cfg.cache_dir = cache.string();
    cfg.seed = seed;
    cfg.condition_source = conditioned ? ConditionSource::External : ConditionSource::None;
    cfg.start_t = conditioned ? kCondStart : kUncondStart;
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<SeedRun> train_all(const fs::path& work, const fs::path& cache) {
    std::vector<SeedRun> runs;
    for (auto seed : kSeeds) {
        SeedRun r;
        r.seed = seed;
        SyntheticSpec spec;  // f=128, c=32, d=8, 7373 + 819 train, 4096 test, offset 2.0
        spec.seed = seed;
        spec.condition_informative = true;
        const auto dir = work / ("seed" + std::to_string(seed));
        r.a = write_synthetic(generate_synthetic(spec), dir / "A");
        spec.domain_shift = 1.0;
        r.b = write_synthetic(generate_synthetic(spec), dir / "B");

        auto t0 = std::chrono::steady_clock::now();
        r.uncond = train_cached(base_config(r.a, cache, seed, false));
        r.uncond_train_s = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        r.cond = train_cached(base_config(r.a, cache, seed, true));
        r.cond_train_s = seconds_since(t0);

        for (bool conditioned : {false, true}) {
            const auto cfg = base_config(r.a, cache, seed, conditioned);
            const auto& tr = conditioned ? r.cond : r.uncond;
            const auto csv = dir / (conditioned ? "cond.csv" : "uncond.csv");
            t0 = std::chrono::steady_clock::now();
            cmd_score(tr.checkpoint, tr.stats, cfg.test_manifest, cfg, csv);
            const double auc = cmd_eval(csv, cfg.test_manifest, eval_options(cfg)).frame_auc;
            (conditioned ? r.cond_auc : r.uncond_auc) = auc;
            (conditioned ? r.cond_score_s : r.uncond_score_s) = seconds_since(t0);
            if (!conditioned) r.uncond_csv = csv;
        }
        std::printf("  seed %llu: unconditional AUC %.4f (t=%zu, train %.0f s), conditioned AUC %.4f (t=%zu, train %.0f s)\n",
                    static_cast<unsigned long long>(seed), r.uncond_auc, kUncondStart, r.uncond_train_s, r.cond_auc,
                    kCondStart, r.cond_train_s);
        std::fflush(stdout);
        runs.push_back(std::move(r));
    }
    return runs;
}

// ---- real-data path ----------------------------------------------------------

// Stand-in for user feature files: moving-square videos, star conditions from
// extract-motion, and clip features from a fixed random projection of the
// dynamic image. Test videos carry a flicker burst labelled anomalous.
std::pair<fs::path, fs::path> standin_real_data(const fs::path& dir) {
    constexpr std::size_t kFeat = 512, kH = 16, kW = 16, kLen = 16;
    std::mt19937_64 proj_rng(5);
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(double(kH * kW * 3)));
    Eigen::MatrixXd proj(kFeat, kH * kW * 3);
    for (Eigen::Index j = 0; j < proj.cols(); ++j)
        for (Eigen::Index i = 0; i < proj.rows(); ++i) proj(i, j) = n(proj_rng);

    fs::path manifests[2];
    for (int split = 0; split < 2; ++split) {
        const bool test = split == 1;
        const auto root = dir / (test ? "test" : "train");
        fs::create_directories(root / "videos");
        DatasetManifest m;
        m.split = test ? Split::Test : Split::Train;
        std::vector<ClipFeature> feats;
        for (std::size_t v = 0; v < (test ? 8u : 24u); ++v) {
            char vid_buf[16];
            std::snprintf(vid_buf, sizeof(vid_buf), "v%02zu", v);  // extraction order is lexicographic
            const std::string vid = vid_buf;
            auto video = moving_square_clip(kLen * 6, kH, kW, 1000 * split + v);
            VideoEntry ve;
            ve.video_id = vid;
            ve.num_frames = video.frames;
            std::vector<std::uint8_t> labels(video.frames, 0);
            if (test && v % 2 == 0) {
                std::mt19937_64 r(v);
                std::uniform_real_distribution<float> u(0.0f, 255.0f);
                for (std::size_t k = 2 * kLen; k < 4 * kLen; ++k) {
                    for (std::size_t i = 0; i < video.frame_size(); ++i) video.data[k * video.frame_size() + i] = u(r);
                    labels[k] = 1;
                }
            }
            write_clip_container(root / "videos" / (vid + ".vadc"), video);
            for (std::size_t w = 0; w < video.frames / kLen; ++w) {
                char name[32];
                std::snprintf(name, sizeof(name), "clip_%06zu", w);
                const std::string id = vid + "/" + name;
                const auto img = normalize_motion_image(compute_dynamic_image(slice_frames(video, w * kLen, kLen, id)));
                const Eigen::VectorXd f = proj * Eigen::Map<const Eigen::VectorXd>(img.pixels.data(), img.pixels.size());
                ClipFeature cf;
                cf.values.assign(f.data(), f.data() + f.size());
                cf.clip_id = id;
                cf.video_id = vid;
                cf.frame_span = {w * kLen, w * kLen + kLen - 1};
                ve.clips.push_back({id, cf.frame_span, feats.size(), feats.size()});
                feats.push_back(std::move(cf));
            }
            if (test) ve.labels = labels;
            m.videos.push_back(std::move(ve));
        }
        ExtractOptions opts;
        opts.condition_dim = 32;
        cmd_extract_motion(root / "videos", root / "motion", opts);
        write_features(root / "features.vadf", feats);
        m.feature_file = "features.vadf";
        m.condition_files["star"] = "motion/conditions_star.vadf";
        manifests[split] = root / "manifest.json";
        write_manifest(manifests[split], m);
    }
    return {manifests[0], manifests[1]};
}

Outcome real_data_path(const fs::path& work) {
    const char* tr = std::getenv("VAD_REAL_TRAIN_MANIFEST");
    const char* te = std::getenv("VAD_REAL_TEST_MANIFEST");
    RunConfig cfg;
    cfg.condition_source = ConditionSource::Star;
    cfg.cache_dir = (work / "real_cache").string();
    std::string source;
    if (tr && te) {
        cfg.train_manifest = tr;
        cfg.test_manifest = te;
        source = "user feature files";
    } else {
        const auto [a, b] = standin_real_data(work / "real");
        cfg.train_manifest = a.string();
        cfg.test_manifest = b.string();
        cfg.embed_dim = 32;
        cfg.encoder_widths = {128, 64};
        cfg.decoder_widths = {64, 128};
        cfg.epochs = 20;
        cfg.batch_size = 32;
        source = "stand-in 512-d features with star conditions (no user files supplied)";
    }
    const auto run = cmd_train(cfg, work / "real_run");
    cmd_score(run.checkpoint, run.stats, cfg.test_manifest, cfg, work / "real_scores.csv");
    const auto rep = cmd_eval(work / "real_scores.csv", cfg.test_manifest, eval_options(cfg));
    const bool emitted = std::isfinite(rep.frame_auc) && rep.frame_auc >= 0 && rep.frame_auc <= 1;
    return {emitted, "not gated; " + source + " -> frame AUC " + fmt("%.4f", rep.frame_auc)};
}

}  // namespace

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::string(argv[1]) == "--quick";

    run("edm_identities", edm_identities);
    run("gradient_correctness", gradient_check);
    run("sampler_oracle", sampler_oracle);
    run("motion_oracles", motion_oracles);
    run("noise_distribution", noise_distribution);
    run("threshold_arithmetic", threshold_arithmetic);
    run("auc_oracle", auc_oracle);
    if (quick) return failures ? 1 : 0;

    const auto work = testing::temp_dir("acceptance");
    const char* cache_env = std::getenv("VAD_ACCEPT_CACHE");
    const fs::path cache = cache_env ? fs::path(cache_env) : work / "cache";

    std::printf("  training 3 seeds x (unconditional, conditioned), 30 epochs each\n");
    std::fflush(stdout);
    const auto runs = train_all(work, cache);
    const auto& first = runs.front();

    run("unconditional_detection", [&] {
        const auto cfg = base_config(first.a, cache, first.seed, false);
        auto perm = eval_options(cfg);
        perm.permute_labels_seed = 99;
        const double control = cmd_eval(first.uncond_csv, cfg.test_manifest, perm).frame_auc;
        Outcome o;
        o.pass = first.uncond_auc >= 0.85 && std::fabs(control - 0.5) <= 0.05;
        o.detail = "seed 1 frame AUC " + fmt("%.4f", first.uncond_auc) + " (>= 0.85), permuted-label control " +
                   fmt("%.4f", control);
        o.budget_seconds = 600;
        o.charged_seconds = first.uncond_train_s + first.uncond_score_s;
        return o;
    });

    run("conditioning_benefit", [&] {
        std::vector<double> gaps, cond, uncond;
        double secs = 0;
        for (const auto& r : runs) {
            gaps.push_back(r.cond_auc - r.uncond_auc);
            cond.push_back(r.cond_auc);
            uncond.push_back(r.uncond_auc);
            secs += r.uncond_train_s + r.cond_train_s + r.uncond_score_s + r.cond_score_s;
        }
        Outcome o;
        o.pass = median(gaps) >= 0.02;
        o.detail = "median gap " + fmt("%.4f", median(gaps)) + " (conditioned median " + fmt("%.4f", median(cond)) +
                   ", unconditional median " + fmt("%.4f", median(uncond)) + ")";
        o.budget_seconds = 1200;
        o.charged_seconds = secs;
        return o;
    });

    run("start_t_monotonicity", [&] {
        auto cfg = base_config(first.a, cache, first.seed, false);
        std::vector<double> mse, sigma;
        const auto sched = cfg.schedule();
        std::string trace;
        for (std::size_t t = 1; t <= 9; ++t) {
            cfg.start_t = t;
            const auto res = cmd_score(first.uncond.checkpoint, first.uncond.stats, cfg.test_manifest, cfg,
                                       work / ("mono_" + std::to_string(t) + ".csv"));
            double m = 0;
            for (const auto& rec : res.records) m += rec.mse;
            mse.push_back(m / res.records.size());
            sigma.push_back(sched.sigmas[t]);
            trace += (t > 1 ? " " : "") + fmt("%.3g", mse.back());
        }
        const double rho = testing::spearman(mse, sigma);
        return Outcome{rho >= 0.9, "Spearman(MSE, sigma_t) " + fmt("%.3f", rho) + "; mean MSE t=1..9: " + trace, 120};
    });

    run("cross_domain_robustness", [&] {
        std::vector<double> cond, uncond;
        double secs = 0;
        std::string trace;
        for (const auto& r : runs) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto ucfg = base_config(r.a, cache, r.seed, false);
            const auto ccfg = base_config(r.a, cache, r.seed, true);
            const auto dir = r.a.train_manifest.parent_path().parent_path();
            uncond.push_back(cmd_cross_eval(r.uncond.checkpoint, r.uncond.stats, r.b.test_manifest, ucfg, dir / "x_uncond").frame_auc);
            cond.push_back(cmd_cross_eval(r.cond.checkpoint, r.cond.stats, r.b.test_manifest, ccfg, dir / "x_cond").frame_auc);
            secs += seconds_since(t0) + r.uncond_train_s + r.cond_train_s;
            trace += " seed " + std::to_string(r.seed) + ": " + fmt("%.4f", cond.back()) + " vs " + fmt("%.4f", uncond.back()) + ";";
        }
        Outcome o;
        o.pass = median(cond) >= median(uncond);
        o.detail = "shifted-domain median AUC conditioned " + fmt("%.4f", median(cond)) + " vs unconditional " +
                   fmt("%.4f", median(uncond)) + " (" + trace.substr(1, trace.size() - 2) + ")";
        o.budget_seconds = 1200;
        o.charged_seconds = secs;
        return o;
    });

    run("real_data_path", [&] { return real_data_path(work); });

    std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
