#pragma once

// The trainable inner network: an encoder-decoder MLP whose hidden layers
// are modulated (FiLM) by a Fourier embedding of the noise level, with the
// condition vector added to the encoder input and to the bottleneck.
//
// Activations are laid out one sample per column.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vad {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
// flat parameter storage; aligned so vectorized reductions do not depend on the heap address
template <class T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

struct NetworkShape {
    std::size_t feature_dim = 0;
    std::size_t condition_dim = 0;  // 0: no condition projections
    std::size_t embed_dim = 256;
    double embed_std = 0.2;
    std::vector<std::size_t> encoder_widths{1024, 512, 256};
    std::vector<std::size_t> decoder_widths{256, 512, 1024};

    std::size_t bottleneck() const { return encoder_widths.back(); }
    std::size_t hidden_layers() const { return encoder_widths.size() + decoder_widths.size(); }
    void validate() const;
    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct TensorSlot {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;
    std::size_t size() const { return rows * cols; }
};

/// Trainable tensors in declaration order:
///   per hidden layer: weight, bias, film.weight, film.bias
///   cond.enc_proj, cond.dec_proj (when condition_dim > 0)
///   out.weight, out.bias
std::vector<TensorSlot> param_layout(const NetworkShape& shape);

template <class T>
struct DenoiserParams {
    NetworkShape shape;
    std::vector<TensorSlot> layout;
    Buffer<T> values;            // every trainable tensor, flattened column-major
    std::vector<T> frequencies;  // fixed Fourier frequencies, embed_dim / 2

    std::size_t size() const { return values.size(); }
    const TensorSlot& slot(const std::string& name) const;

    Eigen::Map<Mat<T>> tensor(const TensorSlot& s) {
        return {values.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
    }
    Eigen::Map<const Mat<T>> tensor(const TensorSlot& s) const {
        return {values.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
    }
    Eigen::Map<Mat<T>> tensor(const std::string& name) { return tensor(slot(name)); }
    Eigen::Map<const Mat<T>> tensor(const std::string& name) const { return tensor(slot(name)); }

    template <class U>
    DenoiserParams<U> cast() const {
        DenoiserParams<U> out;
        out.shape = shape;
        out.layout = layout;
        out.values.assign(values.begin(), values.end());
        out.frequencies.assign(frequencies.begin(), frequencies.end());
        return out;
    }
};

/// Uniform(+-sqrt(1/fan_in)) weights, zero biases, zero FiLM generators (FiLM
/// starts as identity) and zero condition projections (conditioning starts
/// as a no-op). Deterministic in the seed.
template <class T>
DenoiserParams<T> init_params(const NetworkShape& shape, std::uint64_t seed);

/// [cos(2 pi F c), sin(2 pi F c)] for each column's c_noise.
template <class T>
Mat<T> embed_timestep(std::span<const T> frequencies, std::span<const T> c_noise);

template <class T>
struct ForwardCache {
    Mat<T> embedding;
    Mat<T> condition;
    std::vector<Mat<T>> inputs;  // per hidden layer, the layer input
    std::vector<Mat<T>> affine;  // W x + b
    std::vector<Mat<T>> film;    // [delta; shift]
    std::vector<Mat<T>> modulated;
    std::vector<Mat<T>> hidden;  // SiLU output
};

/// x_in: feature_dim x B (already scaled by c_in), c_noise: B values,
/// cond: condition_dim x B or nullptr.
template <class T>
Mat<T> forward(const DenoiserParams<T>& params, const Mat<T>& x_in, std::span<const T> c_noise, const Mat<T>* cond,
               ForwardCache<T>* cache = nullptr);

/// Parameter gradients of sum(upstream .* forward(...)), summed over the
/// batch, in the layout of params.values. Optionally returns d/dx_in.
template <class T>
Buffer<T> backward(const DenoiserParams<T>& params, const ForwardCache<T>& cache, const Mat<T>& upstream,
                        Mat<T>* input_grad = nullptr);

// ---- optimizer -------------------------------------------------------------

struct OptimizerConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
    double inv_gamma = 2000.0;
    double power = 1.0;
    double ema_decay = 0.999;
    double ema_warmup = 2.0 / 3.0;  // 0 disables the warmup
};

/// base / (1 + step / inv_gamma)^power
double scheduled_learning_rate(const OptimizerConfig& config, std::uint64_t step);

/// min(ema_decay, 1 - (1 + step)^-ema_warmup); ema_decay when warmup is 0.
double ema_decay_at(const OptimizerConfig& config, std::uint64_t step);

template <class T>
struct OptimizerState {
    OptimizerConfig config;
    Buffer<T> first_moment;
    Buffer<T> second_moment;
    Buffer<T> ema;
    std::uint64_t step = 0;
};

template <class T>
OptimizerState<T> make_optimizer(const DenoiserParams<T>& params, const OptimizerConfig& config);

/// Adam with bias correction, decoupled weight decay, inverse-LR schedule,
/// then the EMA shadow update. Throws NumericError (naming the step) and
/// leaves everything untouched if any gradient is non-finite.
template <class T>
void optimizer_step(OptimizerState<T>& state, DenoiserParams<T>& params, std::span<const T> grads);

// ---- checkpoint ------------------------------------------------------------

enum class CheckpointKind {
    Network,
    Identity,  // test hook: D(x, sigma) = x at every noise level
};

struct Checkpoint {
    CheckpointKind kind = CheckpointKind::Network;
    DenoiserParams<float> params;
    Buffer<float> ema;  // empty when no shadow was stored
    bool use_ema = true;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    std::string metadata_json = "{}";  // diffusion/training settings

    /// The parameter set scoring should use.
    DenoiserParams<float> scoring_params() const;
};

/// "VADW": magic, u16 version=1, u32 header length, JSON header, then the
/// frequencies, the parameters and (optionally) the EMA shadow, all f32 LE.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace vad
