#include "vad/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vad/error.hpp"
#include "vad/rng.hpp"

namespace vad {

void NetworkShape::validate() const {
    if (feature_dim == 0) throw InvalidInput("network feature_dim must be >= 1");
    if (embed_dim == 0 || embed_dim % 2 != 0) throw InvalidInput("embed_dim must be a positive even number");
    if (encoder_widths.empty() || decoder_widths.empty()) throw InvalidInput("encoder and decoder need hidden layers");
    const auto zero = [](std::size_t w) { return w == 0; };
    if (std::any_of(encoder_widths.begin(), encoder_widths.end(), zero) ||
        std::any_of(decoder_widths.begin(), decoder_widths.end(), zero)) {
        throw InvalidInput("hidden widths must be >= 1");
    }
}

namespace {

std::string layer_name(const NetworkShape& shape, std::size_t layer) {
    const auto n_enc = shape.encoder_widths.size();
    return layer < n_enc ? "enc" + std::to_string(layer) : "dec" + std::to_string(layer - n_enc);
}

std::size_t layer_width(const NetworkShape& shape, std::size_t layer) {
    const auto n_enc = shape.encoder_widths.size();
    return layer < n_enc ? shape.encoder_widths[layer] : shape.decoder_widths[layer - n_enc];
}

std::size_t layer_fan_in(const NetworkShape& shape, std::size_t layer) {
    return layer == 0 ? shape.feature_dim : layer_width(shape, layer - 1);
}

// Slot indices derived from the declaration order in param_layout.
struct SlotIndex {
    static std::size_t weight(std::size_t layer) { return 4 * layer; }
    static std::size_t bias(std::size_t layer) { return 4 * layer + 1; }
    static std::size_t film_weight(std::size_t layer) { return 4 * layer + 2; }
    static std::size_t film_bias(std::size_t layer) { return 4 * layer + 3; }
    static std::size_t enc_proj(const NetworkShape& s) { return 4 * s.hidden_layers(); }
    static std::size_t dec_proj(const NetworkShape& s) { return 4 * s.hidden_layers() + 1; }
    static std::size_t out_weight(const NetworkShape& s) {
        return 4 * s.hidden_layers() + (s.condition_dim > 0 ? 2 : 0);
    }
    static std::size_t out_bias(const NetworkShape& s) { return out_weight(s) + 1; }
};

template <class T>
Mat<T> silu(const Mat<T>& m) {
    return (m.array() / (T(1) + (-m.array()).exp())).matrix();
}

// d silu / dm = s (1 + m (1 - s)), s = sigmoid(m)
template <class T>
Mat<T> silu_grad(const Mat<T>& m) {
    const auto s = (T(1) / (T(1) + (-m.array()).exp())).eval();
    return (s * (T(1) + m.array() * (T(1) - s))).matrix();
}

}  // namespace

std::vector<TensorSlot> param_layout(const NetworkShape& shape) {
    shape.validate();
    std::vector<TensorSlot> slots;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        slots.push_back({std::move(name), rows, cols, offset});
        offset += rows * cols;
    };
    for (std::size_t l = 0; l < shape.hidden_layers(); ++l) {
        const auto name = layer_name(shape, l);
        const auto w = layer_width(shape, l);
        add(name + ".weight", w, layer_fan_in(shape, l));
        add(name + ".bias", w, 1);
        add(name + ".film.weight", 2 * w, shape.embed_dim);
        add(name + ".film.bias", 2 * w, 1);
    }
    if (shape.condition_dim > 0) {
        add("cond.enc_proj", shape.feature_dim, shape.condition_dim);
        add("cond.dec_proj", shape.bottleneck(), shape.condition_dim);
    }
    add("out.weight", shape.feature_dim, shape.decoder_widths.back());
    add("out.bias", shape.feature_dim, 1);
    return slots;
}

template <class T>
const TensorSlot& DenoiserParams<T>::slot(const std::string& name) const {
    const auto it = std::find_if(layout.begin(), layout.end(), [&](const TensorSlot& s) { return s.name == name; });
    if (it == layout.end()) throw InvalidInput("no parameter tensor named '" + name + "'");
    return *it;
}

template <class T>
DenoiserParams<T> init_params(const NetworkShape& shape, std::uint64_t seed) {
    DenoiserParams<T> p;
    p.shape = shape;
    p.layout = param_layout(shape);
    p.values.assign(p.layout.back().offset + p.layout.back().size(), T(0));

    std::mt19937_64 rng(derive_seed(seed, 0x77656967));  // weights
    auto fill_uniform = [&](const TensorSlot& s) {
        const double bound = std::sqrt(1.0 / static_cast<double>(s.cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        auto t = p.tensor(s);
        for (Eigen::Index c = 0; c < t.cols(); ++c) {
            for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = static_cast<T>(static_cast<float>(dist(rng)));
        }
    };
    for (std::size_t l = 0; l < shape.hidden_layers(); ++l) fill_uniform(p.layout[SlotIndex::weight(l)]);
    fill_uniform(p.layout[SlotIndex::out_weight(shape)]);

    std::mt19937_64 freq_rng(derive_seed(seed, 0x66726571));  // frequencies
    std::normal_distribution<double> normal(0.0, shape.embed_std);
    p.frequencies.resize(shape.embed_dim / 2);
    for (auto& f : p.frequencies) f = static_cast<T>(static_cast<float>(normal(freq_rng)));
    return p;
}

template <class T>
Mat<T> embed_timestep(std::span<const T> frequencies, std::span<const T> c_noise) {
    const auto half = static_cast<Eigen::Index>(frequencies.size());
    Mat<T> out(2 * half, static_cast<Eigen::Index>(c_noise.size()));
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index b = 0; b < out.cols(); ++b) {
        for (Eigen::Index k = 0; k < half; ++k) {
            const double phase = two_pi * static_cast<double>(frequencies[k]) * static_cast<double>(c_noise[b]);
            out(k, b) = static_cast<T>(std::cos(phase));
            out(half + k, b) = static_cast<T>(std::sin(phase));
        }
    }
    return out;
}

template <class T>
Mat<T> forward(const DenoiserParams<T>& params, const Mat<T>& x_in, std::span<const T> c_noise, const Mat<T>* cond,
               ForwardCache<T>* cache) {
    const auto& shape = params.shape;
    const auto batch = x_in.cols();
    if (static_cast<std::size_t>(x_in.rows()) != shape.feature_dim) {
        throw InvalidInput("forward: input has " + std::to_string(x_in.rows()) + " rows, network expects " +
                           std::to_string(shape.feature_dim));
    }
    if (static_cast<Eigen::Index>(c_noise.size()) != batch) throw InvalidInput("forward: c_noise/batch size mismatch");
    if (cond != nullptr) {
        if (shape.condition_dim == 0) throw InvalidInput("forward: network has no condition projections");
        if (static_cast<std::size_t>(cond->rows()) != shape.condition_dim || cond->cols() != batch) {
            throw InvalidInput("forward: condition shape mismatch");
        }
    }

    ForwardCache<T> local;
    ForwardCache<T>& c = cache != nullptr ? *cache : local;
    const auto layers = shape.hidden_layers();
    c.inputs.resize(layers);
    c.affine.resize(layers);
    c.film.resize(layers);
    c.modulated.resize(layers);
    c.hidden.resize(layers);
    c.embedding = embed_timestep<T>(params.frequencies, c_noise);
    c.condition = cond != nullptr ? *cond : Mat<T>();

    const auto n_enc = shape.encoder_widths.size();
    Mat<T> x = x_in;
    if (cond != nullptr) x.noalias() += params.tensor(params.layout[SlotIndex::enc_proj(shape)]) * (*cond);

    for (std::size_t l = 0; l < layers; ++l) {
        if (l == n_enc && cond != nullptr) {
            x.noalias() += params.tensor(params.layout[SlotIndex::dec_proj(shape)]) * (*cond);
        }
        const auto w = static_cast<Eigen::Index>(layer_width(shape, l));
        c.inputs[l] = std::move(x);
        c.affine[l].noalias() = params.tensor(params.layout[SlotIndex::weight(l)]) * c.inputs[l];
        c.affine[l].colwise() += params.tensor(params.layout[SlotIndex::bias(l)]).col(0);
        c.film[l].noalias() = params.tensor(params.layout[SlotIndex::film_weight(l)]) * c.embedding;
        c.film[l].colwise() += params.tensor(params.layout[SlotIndex::film_bias(l)]).col(0);
        c.modulated[l] = (c.affine[l].array() * (T(1) + c.film[l].topRows(w).array()) + c.film[l].bottomRows(w).array())
                             .matrix();
        c.hidden[l] = silu<T>(c.modulated[l]);
        x = c.hidden[l];
    }
    Mat<T> y = params.tensor(params.layout[SlotIndex::out_weight(shape)]) * x;
    y.colwise() += params.tensor(params.layout[SlotIndex::out_bias(shape)]).col(0);
    return y;
}

template <class T>
Buffer<T> backward(const DenoiserParams<T>& params, const ForwardCache<T>& cache, const Mat<T>& upstream,
                        Mat<T>* input_grad) {
    const auto& shape = params.shape;
    Buffer<T> grads(params.size(), T(0));
    auto g = [&](std::size_t slot) {
        const auto& s = params.layout[slot];
        return Eigen::Map<Mat<T>>(grads.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                                  static_cast<Eigen::Index>(s.cols));
    };
    const bool conditioned = cache.condition.size() > 0;
    const auto layers = shape.hidden_layers();
    const auto n_enc = shape.encoder_widths.size();

    g(SlotIndex::out_weight(shape)).noalias() = upstream * cache.hidden[layers - 1].transpose();
    g(SlotIndex::out_bias(shape)) = upstream.rowwise().sum();
    Mat<T> dx = params.tensor(params.layout[SlotIndex::out_weight(shape)]).transpose() * upstream;

    for (std::size_t l = layers; l-- > 0;) {
        const auto w = static_cast<Eigen::Index>(layer_width(shape, l));
        const Mat<T> dm = (dx.array() * silu_grad<T>(cache.modulated[l]).array()).matrix();
        Mat<T> dfilm(2 * w, dm.cols());
        dfilm.topRows(w) = (dm.array() * cache.affine[l].array()).matrix();
        dfilm.bottomRows(w) = dm;
        const Mat<T> da = (dm.array() * (T(1) + cache.film[l].topRows(w).array())).matrix();

        g(SlotIndex::film_weight(l)).noalias() = dfilm * cache.embedding.transpose();
        g(SlotIndex::film_bias(l)) = dfilm.rowwise().sum();
        g(SlotIndex::weight(l)).noalias() = da * cache.inputs[l].transpose();
        g(SlotIndex::bias(l)) = da.rowwise().sum();
        dx.noalias() = params.tensor(params.layout[SlotIndex::weight(l)]).transpose() * da;

        if (l == n_enc && conditioned) g(SlotIndex::dec_proj(shape)).noalias() = dx * cache.condition.transpose();
    }
    if (conditioned) g(SlotIndex::enc_proj(shape)).noalias() = dx * cache.condition.transpose();
    if (input_grad != nullptr) *input_grad = std::move(dx);
    return grads;
}

// ---- optimizer -------------------------------------------------------------

double scheduled_learning_rate(const OptimizerConfig& config, std::uint64_t step) {
    return config.learning_rate / std::pow(1.0 + static_cast<double>(step) / config.inv_gamma, config.power);
}

double ema_decay_at(const OptimizerConfig& config, std::uint64_t step) {
    if (config.ema_warmup <= 0) return config.ema_decay;
    const double warm = 1.0 - std::pow(1.0 + static_cast<double>(step), -config.ema_warmup);
    return std::min(config.ema_decay, warm);
}

template <class T>
OptimizerState<T> make_optimizer(const DenoiserParams<T>& params, const OptimizerConfig& config) {
    OptimizerState<T> s;
    s.config = config;
    s.first_moment.assign(params.size(), T(0));
    s.second_moment.assign(params.size(), T(0));
    s.ema = params.values;
    return s;
}

template <class T>
void optimizer_step(OptimizerState<T>& state, DenoiserParams<T>& params, std::span<const T> grads) {
    const auto n = params.size();
    if (grads.size() != n || state.first_moment.size() != n) throw InvalidInput("optimizer_step: shape mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(static_cast<double>(grads[i]))) {
            throw NumericError("non-finite gradient at optimizer step " + std::to_string(state.step) + " (index " +
                               std::to_string(i) + ")");
        }
    }
    const auto& cfg = state.config;
    const double lr = scheduled_learning_rate(cfg, state.step);
    const double t = static_cast<double>(state.step + 1);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    const auto b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const auto decay = static_cast<T>(1.0 - lr * cfg.weight_decay);
    const auto step_size = static_cast<T>(lr / bc1);
    const auto inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
    const auto eps = static_cast<T>(cfg.eps);
    const auto ema_keep = static_cast<T>(ema_decay_at(cfg, state.step));

    for (std::size_t i = 0; i < n; ++i) {
        const T gi = grads[i];
        T& m = state.first_moment[i];
        T& v = state.second_moment[i];
        m = b1 * m + (T(1) - b1) * gi;
        v = b2 * v + (T(1) - b2) * gi * gi;
        T& p = params.values[i];
        p *= decay;
        p -= step_size * m / (std::sqrt(v) * inv_sqrt_bc2 + eps);
        state.ema[i] = ema_keep * state.ema[i] + (T(1) - ema_keep) * p;
    }
    ++state.step;
}

#define VAD_INSTANTIATE(T)                                                                                       \
    template struct DenoiserParams<T>;                                                                           \
    template DenoiserParams<T> init_params<T>(const NetworkShape&, std::uint64_t);                               \
    template Mat<T> embed_timestep<T>(std::span<const T>, std::span<const T>);                                   \
    template Mat<T> forward<T>(const DenoiserParams<T>&, const Mat<T>&, std::span<const T>, const Mat<T>*,       \
                               ForwardCache<T>*);                                                                \
    template Buffer<T> backward<T>(const DenoiserParams<T>&, const ForwardCache<T>&, const Mat<T>&, Mat<T>*); \
    template OptimizerState<T> make_optimizer<T>(const DenoiserParams<T>&, const OptimizerConfig&);             \
    template void optimizer_step<T>(OptimizerState<T>&, DenoiserParams<T>&, std::span<const T>);

VAD_INSTANTIATE(float)
VAD_INSTANTIATE(double)

#undef VAD_INSTANTIATE

}  // namespace vad
