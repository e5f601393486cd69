#pragma once

// EDM-style preconditioning, training noise, the weighted denoising loss,
// the Karras sigma schedule, the linear multistep (LMS) reverse sampler and
// partial-noising reconstruction.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "vad/denoiser.hpp"

namespace vad {

struct PreconditionCoeffs {
    double c_skip = 0;
    double c_out = 0;
    double c_in = 0;
    std::optional<double> c_noise;  // ln(sigma)/4, absent at sigma = 0

    /// c_noise, or NumericError when sigma was 0.
    double noise_input() const;
};

PreconditionCoeffs precondition_coeffs(double sigma, double sigma_data);

/// lambda(sigma) = (sigma^2 + sigma_data^2) / (sigma * sigma_data)^2 = 1 / c_out^2
double loss_weight(double sigma, double sigma_data);

struct NoiseParams {
    double p_mean = -1.2;
    double p_std = 1.2;
    double sigma_data = 1.0;
    void validate() const;
};

/// exp(p_mean + p_std * z), z ~ N(0, 1).
double sample_training_sigma(const NoiseParams& noise, std::mt19937_64& rng);

struct SigmaSchedule {
    std::vector<double> sigmas;  // steps + 1 values, strictly decreasing, last is 0
    double sigma_min = 0;
    double sigma_max = 0;
    double rho = 7;
    std::size_t steps() const { return sigmas.size() - 1; }
};

/// sigma_i = (max^(1/rho) + i/(T-1) (min^(1/rho) - max^(1/rho)))^rho for
/// i < T, then 0. With T = 1 the schedule is [sigma_max, 0].
SigmaSchedule karras_schedule(double sigma_min, double sigma_max, std::size_t steps, double rho = 7.0);

struct SamplerConfig {
    std::size_t lms_order = 4;
    std::size_t start_index = 1;
    void validate(const SigmaSchedule& schedule) const;
};

// ---- denoising ---------------------------------------------------------------

/// D(x; sigma) over the columns of x at one noise level.
using DenoiseFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& x, double sigma)>;

/// c_skip x + c_out G(c_in x; c_noise, cond), one sigma per column.
template <class T>
Mat<T> denoise(const DenoiserParams<T>& params, const Mat<T>& x, std::span<const double> sigmas, double sigma_data,
               const Mat<T>* cond);

/// Adapts a network (evaluated in its own precision) to DenoiseFn. cond may
/// be null; when given it must have one column per sample.
template <class T>
DenoiseFn network_denoiser(const DenoiserParams<T>& params, double sigma_data, const Mat<T>* cond);

/// D(x; sigma) = x, the checkpoint test hook.
DenoiseFn identity_denoiser();

/// lambda(sigma) ||D(x0 + sigma eps; sigma) - x0||^2 for a single sample.
double training_loss(const DenoiserParams<double>& params, const Eigen::VectorXd& x0, const Eigen::VectorXd* cond,
                     double sigma, const Eigen::VectorXd& eps, double sigma_data);

template <class T>
struct LossAndGrad {
    double loss = 0;  // mean over the batch of the per-sample loss
    Buffer<T> grads;
};

/// Batch loss (mean of per-sample losses) and its parameter gradient.
template <class T>
LossAndGrad<T> training_loss_and_grad(const DenoiserParams<T>& params, const Mat<T>& x0, const Mat<T>* cond,
                                      std::span<const double> sigmas, const Mat<T>& eps, double sigma_data);

// ---- sampling ----------------------------------------------------------------

/// Integral over [sigma_i, sigma_{i+1}] of the Lagrange basis polynomial for
/// history point i-j among the `order` most recent nodes, by adaptive
/// Gauss-Kronrod quadrature.
double lms_coefficient(std::span<const double> sigmas, std::size_t i, std::size_t order, std::size_t j);

/// Runs the reverse ODE from schedule index config.start_index to the end
/// with LMS of order min(lms_order, steps taken so far + 1).
Eigen::MatrixXd lms_sample(const DenoiseFn& denoiser, Eigen::MatrixXd x_start, const SigmaSchedule& schedule,
                           const SamplerConfig& config);

/// x0 + sigma_t z with z ~ N(0, I); sigma_t = 0 returns x0 unchanged.
Eigen::VectorXd partial_noise(const Eigen::VectorXd& x0, double sigma_t, std::mt19937_64& rng);

/// Column-wise partial noising, column k drawing from its own seed.
Eigen::MatrixXd partial_noise(const Eigen::MatrixXd& x0, double sigma_t, std::span<const std::uint64_t> column_seeds);

/// partial_noise at sigma[start_index] followed by lms_sample.
Eigen::MatrixXd reconstruct(const DenoiseFn& denoiser, const Eigen::MatrixXd& x0, const SigmaSchedule& schedule,
                            const SamplerConfig& config, std::span<const std::uint64_t> column_seeds);

}  // namespace vad
