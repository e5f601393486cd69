#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "vad/data_io.hpp"
#include "vad/diffusion.hpp"
#include "vad/error.hpp"
#include "vad/motion.hpp"
#include "vad/pipeline.hpp"
#include "vad/rng.hpp"
#include "vad/scoring.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (N, H, W, 3) array -> clip
vad::FrameClip clip_from_array(const Array& frames) {
    if (frames.ndim() != 4 || frames.shape(3) != 3) throw vad::InvalidInput("frames must have shape (N, H, W, 3)");
    vad::FrameClip clip;
    clip.frames = static_cast<std::size_t>(frames.shape(0));
    clip.height = static_cast<std::size_t>(frames.shape(1));
    clip.width = static_cast<std::size_t>(frames.shape(2));
    clip.data.assign(frames.data(), frames.data() + frames.size());
    return clip;
}

Array image_to_array(const vad::MotionImage& img) {
    Array out({img.height, img.width, std::size_t{3}});
    std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
    return out;
}

vad::MotionImage image_from_array(const Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw vad::InvalidInput("image must have shape (H, W, 3)");
    vad::MotionImage img;
    img.height = static_cast<std::size_t>(a.shape(0));
    img.width = static_cast<std::size_t>(a.shape(1));
    img.pixels.assign(a.data(), a.data() + a.size());
    return img;
}

// Trained network loaded from a checkpoint; rows of x are samples.
class Model {
public:
    Model(const std::filesystem::path& path, std::optional<bool> use_ema) : ckpt_(vad::read_checkpoint(path)) {
        if (use_ema) ckpt_.use_ema = *use_ema;
        params_ = ckpt_.scoring_params();
    }

    Eigen::MatrixXd denoise(const Eigen::MatrixXd& x, double sigma, std::optional<Eigen::MatrixXd> cond) const {
        if (ckpt_.kind == vad::CheckpointKind::Identity) return x;
        const vad::Mat<float> xt = x.transpose().cast<float>();
        vad::Mat<float> ct;
        if (cond) ct = cond->transpose().cast<float>();
        const std::vector<double> sigmas(static_cast<std::size_t>(xt.cols()), sigma);
        const auto out = vad::denoise<float>(params_, xt, sigmas, sigma_data(), cond ? &ct : nullptr);
        return out.cast<double>().transpose();
    }

    double sigma_data() const {
        const auto meta = nlohmann::json::parse(ckpt_.metadata_json);
        return meta.value("sigma_data", 1.0);
    }
    std::size_t feature_dim() const { return params_.shape.feature_dim; }
    std::size_t condition_dim() const { return params_.shape.condition_dim; }
    std::uint64_t step() const { return ckpt_.step; }

private:
    vad::Checkpoint ckpt_;
    vad::DenoiserParams<float> params_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Conditioned diffusion video anomaly detection";

    const auto base = py::register_exception<vad::Error>(m, "VadError");
    py::register_exception<vad::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<vad::DataError>(m, "DataError", base.ptr());
    py::register_exception<vad::NumericError>(m, "NumericError", base.ptr());
    py::register_exception<vad::InvalidInput>(m, "InvalidInput", base.ptr());

    // motion
    m.def("dynamic_image", [](const Array& frames) { return image_to_array(vad::compute_dynamic_image(clip_from_array(frames))); });
    m.def("star_image", [](const Array& frames) { return image_to_array(vad::compute_star_image(clip_from_array(frames))); });
    m.def("normalize_image", [](const Array& img) { return image_to_array(vad::normalize_motion_image(image_from_array(img))); });
    m.def("toy_condition_stats", [](const Array& img, std::size_t c) { return vad::toy_condition_stats(image_from_array(img), c); });

    // diffusion
    m.def("precondition", [](double sigma, double sigma_data) {
        const auto p = vad::precondition_coeffs(sigma, sigma_data);
        py::dict d;
        d["c_skip"] = p.c_skip;
        d["c_out"] = p.c_out;
        d["c_in"] = p.c_in;
        d["c_noise"] = p.c_noise ? py::cast(*p.c_noise) : py::none();
        return d;
    }, py::arg("sigma"), py::arg("sigma_data") = 1.0);
    m.def("karras_schedule", [](double sigma_min, double sigma_max, std::size_t steps, double rho) {
        return vad::karras_schedule(sigma_min, sigma_max, steps, rho).sigmas;
    }, py::arg("sigma_min") = 0.01, py::arg("sigma_max") = 80.0, py::arg("steps") = 10, py::arg("rho") = 7.0);
    m.def("sample_training_sigmas", [](std::size_t n, double p_mean, double p_std, std::uint64_t seed) {
        vad::NoiseParams noise{p_mean, p_std, 1.0};
        std::mt19937_64 rng(seed);
        std::vector<double> out(n);
        for (auto& s : out) s = vad::sample_training_sigma(noise, rng);
        return out;
    }, py::arg("n"), py::arg("p_mean") = -1.2, py::arg("p_std") = 1.2, py::arg("seed") = 0);

    // scoring
    m.def("roc_auc", [](std::vector<double> scores, std::vector<std::uint8_t> labels) { return vad::roc_auc(scores, labels); });
    m.def("batch_threshold", [](std::vector<double> errors, double k) { return vad::batch_threshold(errors, k); },
          py::arg("errors"), py::arg("k") = 1.0);
    m.def("classify", [](std::vector<double> errors, double threshold) { return vad::classify(errors, threshold); });

    // data
    m.def("generate_synthetic", [](const std::string& out_dir, const std::string& spec_json) {
        const auto spec = vad::synthetic_spec_from_json(spec_json);
        const auto paths = vad::write_synthetic(vad::generate_synthetic(spec), out_dir);
        return py::make_tuple(paths.train_manifest, paths.test_manifest);
    }, py::arg("out_dir"), py::arg("spec_json") = "{}");
    m.def("read_features", [](const std::filesystem::path& path) {
        const auto items = vad::read_features(path);
        const std::size_t dim = items.empty() ? 0 : items.front().values.size();
        Array values({items.size(), dim});
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < items.size(); ++i) {
            std::copy(items[i].values.begin(), items[i].values.end(), values.mutable_data() + i * dim);
            ids.push_back(items[i].clip_id);
        }
        return py::make_tuple(values, ids);
    });

    // pipeline
    m.def("load_config", [](const std::string& path, const std::map<std::string, std::string>& overrides) {
        return vad::to_key_values(vad::load_config(path, overrides));
    }, py::arg("path") = "", py::arg("overrides") = std::map<std::string, std::string>{});
    m.def("config_fingerprint", [](const std::map<std::string, std::string>& kv) {
        vad::RunConfig cfg;
        vad::apply_key_values(cfg, kv);
        return vad::config_fingerprint(cfg);
    });
    m.def("train", [](const std::map<std::string, std::string>& kv, const std::string& out_dir) {
        vad::RunConfig cfg;
        vad::apply_key_values(cfg, kv);
        const auto r = vad::cmd_train(cfg, out_dir);
        py::dict d;
        d["checkpoint"] = r.checkpoint;
        d["stats"] = r.stats;
        d["epoch_loss"] = r.epoch_loss;
        d["steps"] = r.steps;
        return d;
    });
    m.def("score", [](const std::string& checkpoint, const std::string& stats, const std::string& manifest,
                      const std::map<std::string, std::string>& kv, const std::string& out_csv) {
        vad::RunConfig cfg;
        vad::apply_key_values(cfg, kv);
        return vad::cmd_score(checkpoint, stats, manifest, cfg, out_csv).records.size();
    });
    m.def("evaluate", [](const std::string& scores, const std::string& manifest, double k, bool invert) {
        vad::EvalOptions options;
        options.threshold_k = k;
        options.invert_labels = invert;
        return nlohmann::json::parse(vad::report_to_json(vad::cmd_eval(scores, manifest, options))).dump();
    }, py::arg("scores"), py::arg("manifest"), py::arg("k") = 1.0, py::arg("invert_labels") = false);
    m.def("write_identity_checkpoint", &vad::write_identity_checkpoint, py::arg("path"), py::arg("feature_dim"),
          py::arg("condition_dim") = 0);

    py::class_<Model>(m, "Model")
        .def(py::init<const std::filesystem::path&, std::optional<bool>>(), py::arg("path"), py::arg("use_ema") = py::none())
        .def("denoise", &Model::denoise, py::arg("x"), py::arg("sigma"), py::arg("cond") = py::none())
        .def_property_readonly("feature_dim", &Model::feature_dim)
        .def_property_readonly("condition_dim", &Model::condition_dim)
        .def_property_readonly("step", &Model::step)
        .def_property_readonly("sigma_data", &Model::sigma_data);
}
