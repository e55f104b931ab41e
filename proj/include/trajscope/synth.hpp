#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "trajscope/analysis.hpp"
#include "trajscope/dataset.hpp"
#include "trajscope/trajectory.hpp"

namespace trajscope {

/// Isotropic Gaussian mixture: component i is N(means.col(i), scales(i) * I).
struct GaussianMixture {
    Eigen::VectorXd weights;
    Eigen::MatrixXd means;  // dim x components
    Eigen::VectorXd scales;  // per-component variance

    Eigen::Index dim() const noexcept { return means.rows(); }
    Eigen::Index components() const noexcept { return means.cols(); }
    void validate() const;

    /// Components centred on random corners of [-spread, spread]^dim.
    static GaussianMixture hypercube(Eigen::Index dim, Eigen::Index components, double spread, double scale,
                                     std::uint64_t seed);
};

/// E[x0 | x_t] for x0 ~ mix and x_t = sqrt(abar) x0 + sqrt(1 - abar) eps.
Eigen::VectorXd gmm_posterior_mean(const Eigen::Ref<const Eigen::VectorXd>& x_t, double alpha_bar,
                                   const GaussianMixture& mix);

/// Clean-sample predictor used by the sampler; `step` is the diffusion time t.
using Denoiser = std::function<Eigen::VectorXd(const Eigen::VectorXd& x_t, double alpha_bar, int step)>;

Denoiser exact_denoiser(GaussianMixture mix);

/// Imperfect model: at every step the component means are displaced by
/// `magnitude` times a fixed per-(step, component) Gaussian direction, so
/// consecutive predictions disagree more as the magnitude grows.
Denoiser perturbed_denoiser(GaussianMixture mix, double magnitude, std::uint64_t model_seed);

/// Deterministic DDIM run from a seeded standard-normal x_T. Records the
/// clean estimate at every t = T .. 1 (T states, T - 1 updates).
DenoisedSequence ddim_sample(const Denoiser& denoiser, Eigen::Index dim, const NoiseSchedule& schedule,
                             std::uint64_t seed);
DenoisedSequence ddim_sample(const GaussianMixture& mix, const NoiseSchedule& schedule, std::uint64_t seed);

/// Noise level sqrt((1 - abar) / abar) of the later state of each adjacent
/// pair, aligned with the T - 1 trajectory entries of ddim_sample.
std::vector<double> ddim_pair_sigmas(const NoiseSchedule& schedule);

/// RMSE trajectories of `runs` independent samples (seeds derived from `seed`).
std::vector<std::vector<double>> rmse_runs(const Denoiser& denoiser, Eigen::Index dim, const NoiseSchedule& schedule,
                                           std::size_t runs, std::uint64_t seed, std::size_t threads = 1);

/// Subtracts a ramp growing to `depth` over `width` steps after the 1-based
/// `position`, then fades it out over `recovery` steps. Values are clamped
/// to [0, 1] when `clamp` is set.
std::vector<double> inject_decline(std::span<const double> values, std::size_t position, double depth,
                                   std::size_t width, std::size_t recovery = 0, bool clamp = true);

struct SynthConfig {
    std::size_t n_natural = 255;
    std::size_t n_artifact = 255;
    std::size_t length = 49;
    double base_level = 0.92;
    double base_amplitude = 0.3;
    double base_tau = 8.0;
    double noise_scale = 0.0;   // 0: calibrate to target_dmax_natural
    double depth_scale = 0.0;   // 0: calibrate to target_dmax_artifact
    double depth_jitter = 0.3;  // per-trajectory depth factor in [1 - j, 1 + j]
    double depth_multiplier = 1.0;  // applied after calibration
    Window drop_window;             // drops stay inside; also the calibration window
    std::size_t min_width = 3, max_width = 6;
    std::size_t min_recovery = 1, max_recovery = 3;
    double target_dmax_natural = 0.017;
    double target_dmax_artifact = 0.027;
    std::size_t prompts = 0;  // > 0 assigns group ids round-robin
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthResult {
    Dataset data;
    double noise_scale = 0.0;
    double depth_scale = 0.0;
    double mean_dmax_natural = 0.0;
    double mean_dmax_artifact = 0.0;
};

/// Smooth rising base curves plus Gaussian noise; artifact trajectories get
/// one injected decline inside the drop window. Unless fixed in the config,
/// the noise and depth scales are solved by bisection so the class-mean
/// windowed max decline hits the targets. Throws CalibrationError when a
/// target cannot be reached.
SynthResult synth_dataset(const SynthConfig& config);

}  // namespace trajscope
