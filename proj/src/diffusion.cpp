#include "vad/diffusion.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>

#include "vad/error.hpp"

namespace vad {

double PreconditionCoeffs::noise_input() const {
    if (!c_noise) throw NumericError("c_noise is undefined at sigma = 0");
    return *c_noise;
}

PreconditionCoeffs precondition_coeffs(double sigma, double sigma_data) {
    if (!(sigma >= 0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be finite and >= 0");
    if (!(sigma_data > 0)) throw InvalidInput("sigma_data must be > 0");
    const double total = sigma * sigma + sigma_data * sigma_data;
    PreconditionCoeffs c;
    c.c_skip = sigma_data * sigma_data / total;
    c.c_out = sigma * sigma_data / std::sqrt(total);
    c.c_in = 1.0 / std::sqrt(total);
    if (sigma > 0) c.c_noise = std::log(sigma) / 4.0;
    return c;
}

double loss_weight(double sigma, double sigma_data) {
    if (!(sigma > 0)) throw NumericError("loss weight undefined at sigma = 0");
    return (sigma * sigma + sigma_data * sigma_data) / ((sigma * sigma_data) * (sigma * sigma_data));
}

void NoiseParams::validate() const {
    if (!(p_std > 0)) throw ConfigError("noise.p_std must be > 0");
    if (!(sigma_data > 0)) throw ConfigError("noise.sigma_data must be > 0");
    if (!std::isfinite(p_mean)) throw ConfigError("noise.p_mean must be finite");
}

double sample_training_sigma(const NoiseParams& noise, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return std::exp(noise.p_mean + noise.p_std * normal(rng));
}

SigmaSchedule karras_schedule(double sigma_min, double sigma_max, std::size_t steps, double rho) {
    if (!(sigma_min > 0) || !(sigma_max > sigma_min)) {
        throw InvalidInput("karras_schedule needs 0 < sigma_min < sigma_max");
    }
    if (steps == 0) throw InvalidInput("karras_schedule needs at least one step");
    if (!(rho > 0)) throw InvalidInput("karras_schedule needs rho > 0");
    SigmaSchedule s;
    s.sigma_min = sigma_min;
    s.sigma_max = sigma_max;
    s.rho = rho;
    s.sigmas.resize(steps + 1);
    if (steps == 1) {
        s.sigmas[0] = sigma_max;
    } else {
        const double lo = std::pow(sigma_min, 1.0 / rho), hi = std::pow(sigma_max, 1.0 / rho);
        for (std::size_t i = 0; i < steps; ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(steps - 1);
            s.sigmas[i] = std::pow(hi + frac * (lo - hi), rho);
        }
        // pow round-trips are not exact; pin the endpoints.
        s.sigmas[0] = sigma_max;
        s.sigmas[steps - 1] = sigma_min;
    }
    s.sigmas[steps] = 0.0;
    return s;
}

void SamplerConfig::validate(const SigmaSchedule& schedule) const {
    if (lms_order < 1 || lms_order > 4) throw ConfigError("sampler.lms_order must be in [1, 4]");
    if (start_index >= schedule.steps()) {
        throw ConfigError("sampler.start_t must be in [0, " + std::to_string(schedule.steps()) + ")");
    }
}

// ---- denoising ---------------------------------------------------------------

template <class T>
Mat<T> denoise(const DenoiserParams<T>& params, const Mat<T>& x, std::span<const double> sigmas, double sigma_data,
               const Mat<T>* cond) {
    const auto batch = x.cols();
    if (static_cast<Eigen::Index>(sigmas.size()) != batch) throw InvalidInput("denoise: one sigma per column");
    Mat<T> scaled(x.rows(), batch);
    std::vector<T> c_noise(static_cast<std::size_t>(batch));
    std::vector<PreconditionCoeffs> coeffs(static_cast<std::size_t>(batch));
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto k = static_cast<std::size_t>(b);
        if (!(sigmas[k] > 0)) throw NumericError("network evaluated at sigma <= 0");
        coeffs[k] = precondition_coeffs(sigmas[k], sigma_data);
        c_noise[k] = static_cast<T>(coeffs[k].noise_input());
        scaled.col(b) = x.col(b) * static_cast<T>(coeffs[k].c_in);
    }
    Mat<T> out = forward<T>(params, scaled, c_noise, cond);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto& c = coeffs[static_cast<std::size_t>(b)];
        out.col(b) = static_cast<T>(c.c_skip) * x.col(b) + static_cast<T>(c.c_out) * out.col(b);
    }
    return out;
}

template <class T>
DenoiseFn network_denoiser(const DenoiserParams<T>& params, double sigma_data, const Mat<T>* cond) {
    return [&params, sigma_data, cond](const Eigen::MatrixXd& x, double sigma) -> Eigen::MatrixXd {
        const std::vector<double> sigmas(static_cast<std::size_t>(x.cols()), sigma);
        const Mat<T> xt = x.cast<T>();
        return denoise<T>(params, xt, sigmas, sigma_data, cond).template cast<double>();
    };
}

DenoiseFn identity_denoiser() {
    return [](const Eigen::MatrixXd& x, double) { return x; };
}

double training_loss(const DenoiserParams<double>& params, const Eigen::VectorXd& x0, const Eigen::VectorXd* cond,
                     double sigma, const Eigen::VectorXd& eps, double sigma_data) {
    if (!(sigma > 0)) throw NumericError("training loss undefined at sigma = 0");
    const Eigen::MatrixXd x = x0 + sigma * eps;
    const double s[1] = {sigma};
    Eigen::MatrixXd c;
    if (cond != nullptr) c = *cond;
    const Eigen::MatrixXd d = denoise<double>(params, x, s, sigma_data, cond != nullptr ? &c : nullptr);
    return loss_weight(sigma, sigma_data) * (d.col(0) - x0).squaredNorm();
}

template <class T>
LossAndGrad<T> training_loss_and_grad(const DenoiserParams<T>& params, const Mat<T>& x0, const Mat<T>* cond,
                                      std::span<const double> sigmas, const Mat<T>& eps, double sigma_data) {
    const auto batch = x0.cols();
    if (static_cast<Eigen::Index>(sigmas.size()) != batch || eps.cols() != batch || eps.rows() != x0.rows()) {
        throw InvalidInput("training batch shape mismatch");
    }
    Mat<T> scaled(x0.rows(), batch);
    Mat<T> noisy(x0.rows(), batch);
    std::vector<T> c_noise(static_cast<std::size_t>(batch));
    std::vector<PreconditionCoeffs> coeffs(static_cast<std::size_t>(batch));
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto k = static_cast<std::size_t>(b);
        if (!(sigmas[k] > 0)) throw NumericError("training sigma must be > 0");
        coeffs[k] = precondition_coeffs(sigmas[k], sigma_data);
        c_noise[k] = static_cast<T>(coeffs[k].noise_input());
        noisy.col(b) = x0.col(b) + static_cast<T>(sigmas[k]) * eps.col(b);
        scaled.col(b) = noisy.col(b) * static_cast<T>(coeffs[k].c_in);
    }
    ForwardCache<T> cache;
    const Mat<T> g = forward<T>(params, scaled, c_noise, cond, &cache);

    // With lambda = 1/c_out^2 the per-sample loss is ||G - target||^2 where
    // target = (x0 - c_skip x) / c_out.
    Mat<T> residual(x0.rows(), batch);
    double total = 0;
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto& c = coeffs[static_cast<std::size_t>(b)];
        residual.col(b) = g.col(b) - (x0.col(b) - static_cast<T>(c.c_skip) * noisy.col(b)) / static_cast<T>(c.c_out);
        total += static_cast<double>(residual.col(b).squaredNorm());
    }
    LossAndGrad<T> out;
    out.loss = total / static_cast<double>(batch);
    const Mat<T> upstream = residual * static_cast<T>(2.0 / static_cast<double>(batch));
    out.grads = backward<T>(params, cache, upstream);
    return out;
}

// ---- sampling ----------------------------------------------------------------

double lms_coefficient(std::span<const double> sigmas, std::size_t i, std::size_t order, std::size_t j) {
    if (order == 0 || j >= order || order > i + 1 || i + 1 >= sigmas.size()) {
        throw InvalidInput("lms_coefficient: invalid (i, order, j)");
    }
    // constant basis
    if (order == 1) return sigmas[i + 1] - sigmas[i];
    auto basis = [&](double s) {
        double prod = 1.0;
        for (std::size_t m = 0; m < order; ++m) {
            if (m == j) continue;
            prod *= (s - sigmas[i - m]) / (sigmas[i - j] - sigmas[i - m]);
        }
        return prod;
    };
    const double a = sigmas[i], b = sigmas[i + 1];
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(basis, lo, hi, 15, 1e-12);
    return a <= b ? value : -value;
}

Eigen::MatrixXd lms_sample(const DenoiseFn& denoiser, Eigen::MatrixXd x, const SigmaSchedule& schedule,
                           const SamplerConfig& config) {
    config.validate(schedule);
    const auto& sig = schedule.sigmas;
    const std::size_t last = schedule.steps();
    std::vector<Eigen::MatrixXd> history;  // most recent derivative last
    for (std::size_t i = config.start_index; i < last; ++i) {
        if (!(sig[i] > 0)) throw NumericError("sigma reached 0 before the final step (index " + std::to_string(i) + ")");
        const Eigen::MatrixXd denoised = denoiser(x, sig[i]);
        history.push_back((x - denoised) / sig[i]);
        if (history.size() > config.lms_order) history.erase(history.begin());
        const std::size_t order = std::min(config.lms_order, i - config.start_index + 1);
        for (std::size_t j = 0; j < order; ++j) {
            x += lms_coefficient(sig, i, order, j) * history[history.size() - 1 - j];
        }
    }
    return x;
}

Eigen::VectorXd partial_noise(const Eigen::VectorXd& x0, double sigma_t, std::mt19937_64& rng) {
    if (!(sigma_t >= 0)) throw InvalidInput("partial_noise: sigma must be >= 0");
    if (sigma_t == 0) return x0;
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd out = x0;
    for (Eigen::Index k = 0; k < out.size(); ++k) out(k) += sigma_t * normal(rng);
    return out;
}

Eigen::MatrixXd partial_noise(const Eigen::MatrixXd& x0, double sigma_t, std::span<const std::uint64_t> column_seeds) {
    if (static_cast<Eigen::Index>(column_seeds.size()) != x0.cols()) {
        throw InvalidInput("partial_noise: one seed per column");
    }
    Eigen::MatrixXd out(x0.rows(), x0.cols());
    for (Eigen::Index b = 0; b < x0.cols(); ++b) {
        std::mt19937_64 rng(column_seeds[static_cast<std::size_t>(b)]);
        out.col(b) = partial_noise(Eigen::VectorXd(x0.col(b)), sigma_t, rng);
    }
    return out;
}

Eigen::MatrixXd reconstruct(const DenoiseFn& denoiser, const Eigen::MatrixXd& x0, const SigmaSchedule& schedule,
                            const SamplerConfig& config, std::span<const std::uint64_t> column_seeds) {
    config.validate(schedule);
    const double sigma_t = schedule.sigmas[config.start_index];
    return lms_sample(denoiser, partial_noise(x0, sigma_t, column_seeds), schedule, config);
}

#define VAD_INSTANTIATE(T)                                                                                   \
    template Mat<T> denoise<T>(const DenoiserParams<T>&, const Mat<T>&, std::span<const double>, double,     \
                               const Mat<T>*);                                                               \
    template DenoiseFn network_denoiser<T>(const DenoiserParams<T>&, double, const Mat<T>*);                 \
    template LossAndGrad<T> training_loss_and_grad<T>(const DenoiserParams<T>&, const Mat<T>&, const Mat<T>*, \
                                                      std::span<const double>, const Mat<T>&, double);

VAD_INSTANTIATE(float)
VAD_INSTANTIATE(double)

#undef VAD_INSTANTIATE

}  // namespace vad
