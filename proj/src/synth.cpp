#include "trajscope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "trajscope/error.hpp"
#include "trajscope/parallel.hpp"
#include "trajscope/rng.hpp"

namespace trajscope {

void GaussianMixture::validate() const {
    const auto k = components();
    require(k >= 1, "mixture needs at least one component");
    require(weights.size() == k && scales.size() == k, "mixture weights, means and scales disagree in count");
    require(dim() >= 1, "mixture dimension must be positive");
    require((weights.array() > 0.0).all(), "mixture weights must be positive");
    require(std::abs(weights.sum() - 1.0) <= 1e-12, "mixture weights must sum to 1");
    require((scales.array() > 0.0).all(), "mixture component variances must be positive");
}

GaussianMixture GaussianMixture::hypercube(Eigen::Index dim, Eigen::Index components, double spread, double scale,
                                           std::uint64_t seed) {
    Rng rng(seed, 0x6d6978);
    GaussianMixture mix;
    mix.weights = Eigen::VectorXd::Constant(components, 1.0 / static_cast<double>(components));
    mix.scales = Eigen::VectorXd::Constant(components, scale);
    mix.means.resize(dim, components);
    for (Eigen::Index c = 0; c < components; ++c)
        for (Eigen::Index d = 0; d < dim; ++d) mix.means(d, c) = rng.uniform() < 0.5 ? -spread : spread;
    mix.validate();
    return mix;
}

Eigen::VectorXd gmm_posterior_mean(const Eigen::Ref<const Eigen::VectorXd>& x_t, double alpha_bar,
                                   const GaussianMixture& mix) {
    mix.validate();
    require(x_t.size() == mix.dim(), "x_t dimension does not match the mixture");
    require(alpha_bar > 0.0 && alpha_bar <= 1.0, "alpha_bar must lie in (0, 1]");

    const double root = std::sqrt(alpha_bar);
    const auto k = mix.components();
    const auto d = static_cast<double>(mix.dim());
    Eigen::VectorXd log_resp(k);
    Eigen::MatrixXd post(mix.dim(), k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double var = alpha_bar * mix.scales(i) + (1.0 - alpha_bar);
        const Eigen::VectorXd resid = x_t - root * mix.means.col(i);
        log_resp(i) = std::log(mix.weights(i)) - 0.5 * d * std::log(var) - 0.5 * resid.squaredNorm() / var;
        post.col(i) = mix.means.col(i) + (root * mix.scales(i) / var) * resid;
    }
    const Eigen::VectorXd resp = (log_resp.array() - log_resp.maxCoeff()).exp().matrix();
    return post * (resp / resp.sum());
}

Denoiser exact_denoiser(GaussianMixture mix) {
    mix.validate();
    return [mix = std::move(mix)](const Eigen::VectorXd& x, double abar, int) {
        return gmm_posterior_mean(x, abar, mix);
    };
}

Denoiser perturbed_denoiser(GaussianMixture mix, double magnitude, std::uint64_t model_seed) {
    mix.validate();
    require(magnitude >= 0.0, "perturbation magnitude must be non-negative");
    return [mix = std::move(mix), magnitude, model_seed](const Eigen::VectorXd& x, double abar, int step) {
        GaussianMixture shifted = mix;
        Rng rng(model_seed, static_cast<std::uint64_t>(step));
        const double norm = 1.0 / std::sqrt(static_cast<double>(mix.dim()));
        for (Eigen::Index c = 0; c < shifted.components(); ++c)
            for (Eigen::Index d = 0; d < shifted.dim(); ++d) shifted.means(d, c) += magnitude * norm * rng.normal();
        return gmm_posterior_mean(x, abar, shifted);
    };
}

DenoisedSequence ddim_sample(const Denoiser& denoiser, Eigen::Index dim, const NoiseSchedule& schedule,
                             std::uint64_t seed) {
    schedule.validate();
    require(schedule.kind == ScheduleKind::DdimLinearBeta, "ddim_sample needs a ddim schedule");
    require(dim >= 1, "sample dimension must be positive");
    const int steps = schedule.total_steps;
    if (!(alpha_bar(schedule, steps) > 0.0))
        fail(ErrorKind::InvalidSchedule, "alpha_bar at the final step is zero; sampling cannot start");

    // Cumulative products for t = 1..T, computed once.
    std::vector<double> abar(static_cast<std::size_t>(steps) + 1, 1.0);
    for (int t = 1; t <= steps; ++t) abar[t] = abar[t - 1] * (1.0 - schedule.betas[t - 1]);

    Rng rng(seed);
    Eigen::VectorXd x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = rng.normal();

    DenoisedSequence seq;
    seq.total_steps = steps;
    seq.space_tag = "synthetic";
    seq.states.reserve(static_cast<std::size_t>(steps));
    for (int t = steps; t >= 1; --t) {
        Eigen::VectorXd x0 = denoiser(x, abar[t], t);
        if (t > 1) {
            const Eigen::VectorXd eps = (x - std::sqrt(abar[t]) * x0) / std::sqrt(1.0 - abar[t]);
            x = std::sqrt(abar[t - 1]) * x0 + std::sqrt(1.0 - abar[t - 1]) * eps;
        }
        seq.states.emplace_back(std::move(x0));
    }
    return seq;
}

DenoisedSequence ddim_sample(const GaussianMixture& mix, const NoiseSchedule& schedule, std::uint64_t seed) {
    return ddim_sample(exact_denoiser(mix), mix.dim(), schedule, seed);
}

std::vector<double> ddim_pair_sigmas(const NoiseSchedule& schedule) {
    require(schedule.total_steps >= 2, "schedule needs at least 2 steps");
    std::vector<double> out;
    for (int t = schedule.total_steps - 1; t >= 1; --t) {
        const double a = alpha_bar(schedule, t);
        require(a > 0.0, "alpha_bar must be positive");
        out.push_back(std::sqrt((1.0 - a) / a));
    }
    return out;
}

std::vector<std::vector<double>> rmse_runs(const Denoiser& denoiser, Eigen::Index dim, const NoiseSchedule& schedule,
                                           std::size_t runs, std::uint64_t seed, std::size_t threads) {
    std::vector<std::vector<double>> out(runs);
    const auto metric = rmse_metric();
    parallel_for(runs, threads, [&](std::size_t r) {
        out[r] = compute_trajectory(ddim_sample(denoiser, dim, schedule, derive_seed(seed, r)), metric).values;
    });
    return out;
}

std::vector<double> inject_decline(std::span<const double> values, std::size_t position, double depth,
                                   std::size_t width, std::size_t recovery, bool clamp) {
    require(depth >= 0.0, "decline depth must be non-negative");
    require(width >= 1, "decline width must be positive");
    require(position >= 1 && position + width + recovery <= values.size(), "decline does not fit the trajectory");
    std::vector<double> out(values.begin(), values.end());
    const std::size_t peak = position - 1;
    for (std::size_t k = 1; k <= width; ++k) out[peak + k] -= depth * static_cast<double>(k) / width;
    for (std::size_t k = 1; k <= recovery; ++k)
        out[peak + width + k] -= depth * (1.0 - static_cast<double>(k) / (recovery + 1));
    if (clamp)
        for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
}

void SynthConfig::validate() const {
    require(n_natural >= 1 && n_artifact >= 1, "both classes need at least one trajectory");
    require(length >= 4, "trajectory length must be at least 4");
    require(drop_window.start >= 1 && drop_window.start <= drop_window.end && drop_window.end <= length,
            "drop window must lie within [1, length]");
    require(!drop_window.diffusion_order, "drop window is given in sampling order");
    require(min_width >= 1 && min_width <= max_width, "invalid drop width range");
    require(min_recovery <= max_recovery, "invalid recovery range");
    require(drop_window.end - drop_window.start + 1 >= 1 + max_width + max_recovery,
            "drop window too narrow for the widest decline");
    require(noise_scale >= 0.0 && depth_scale >= 0.0, "scales must be non-negative");
    require(depth_jitter >= 0.0 && depth_jitter < 1.0, "depth jitter must lie in [0, 1)");
    require(depth_multiplier >= 0.0, "depth multiplier must be non-negative");
}

namespace {

// Random draws for one trajectory; rendering is a pure function of these and
// the two scales, which makes the calibration searches monotone and cheap.
struct Draw {
    double amplitude = 0.0;
    double tau = 1.0;
    std::vector<double> noise;
    bool artifact = false;
    std::size_t position = 0, width = 0, recovery = 0;
    double depth_factor = 1.0;
};

Draw make_draw(const SynthConfig& cfg, bool artifact, std::size_t index) {
    Rng rng(cfg.seed, (artifact ? 0x100000000ULL : 0ULL) + index);
    Draw d;
    d.artifact = artifact;
    d.amplitude = cfg.base_amplitude * rng.uniform(0.8, 1.2);
    d.tau = cfg.base_tau * rng.uniform(0.8, 1.2);
    d.noise.resize(cfg.length);
    for (auto& n : d.noise) n = rng.normal();
    if (artifact) {
        d.width = static_cast<std::size_t>(rng.between(std::int64_t(cfg.min_width), std::int64_t(cfg.max_width)));
        d.recovery =
            static_cast<std::size_t>(rng.between(std::int64_t(cfg.min_recovery), std::int64_t(cfg.max_recovery)));
        const std::size_t last = cfg.drop_window.end - d.width - d.recovery;
        d.position = static_cast<std::size_t>(rng.between(std::int64_t(cfg.drop_window.start), std::int64_t(last)));
        d.depth_factor = rng.uniform(1.0 - cfg.depth_jitter, 1.0 + cfg.depth_jitter);
    }
    return d;
}

std::vector<double> render(const SynthConfig& cfg, const Draw& d, double noise_scale, double depth_scale) {
    std::vector<double> z(cfg.length);
    for (std::size_t j = 0; j < cfg.length; ++j)
        z[j] = cfg.base_level - d.amplitude * std::exp(-static_cast<double>(j) / d.tau) + noise_scale * d.noise[j];
    if (d.artifact) return inject_decline(z, d.position, depth_scale * d.depth_factor, d.width, d.recovery, true);
    for (auto& v : z) v = std::clamp(v, 0.0, 1.0);
    return z;
}

double mean_dmax(const SynthConfig& cfg, const std::vector<Draw>& draws, double noise_scale, double depth_scale) {
    double sum = 0.0;
    for (const auto& d : draws) sum += max_decline(render(cfg, d, noise_scale, depth_scale), cfg.drop_window);
    return sum / static_cast<double>(draws.size());
}

// Smallest x in [0, inf) with f(x) >= target, for nondecreasing f.
template <typename F>
double solve_increasing(F f, double target, double initial_hi, const char* what) {
    if (f(0.0) >= target)
        fail(ErrorKind::CalibrationError, std::string(what) + " target is below the noise floor");
    double lo = 0.0, hi = initial_hi;
    while (f(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e3) fail(ErrorKind::CalibrationError, std::string(what) + " target is unreachable");
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

SynthResult synth_dataset(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<Draw> natural, artifact;
    for (std::size_t i = 0; i < cfg.n_natural; ++i) natural.push_back(make_draw(cfg, false, i));
    for (std::size_t i = 0; i < cfg.n_artifact; ++i) artifact.push_back(make_draw(cfg, true, i));

    SynthResult out;
    out.noise_scale = cfg.noise_scale;
    if (out.noise_scale == 0.0) {
        require(cfg.target_dmax_natural > 0.0, "natural target must be positive");
        out.noise_scale = solve_increasing([&](double s) { return mean_dmax(cfg, natural, s, 0.0); },
                                           cfg.target_dmax_natural, 1e-3, "natural max-decline");
    }
    out.depth_scale = cfg.depth_scale;
    if (out.depth_scale == 0.0) {
        require(cfg.target_dmax_artifact > 0.0, "artifact target must be positive");
        out.depth_scale = solve_increasing([&](double d) { return mean_dmax(cfg, artifact, out.noise_scale, d); },
                                           cfg.target_dmax_artifact, 1e-2, "artifact max-decline");
    }
    const double depth = out.depth_scale * cfg.depth_multiplier;
    out.mean_dmax_natural = mean_dmax(cfg, natural, out.noise_scale, 0.0);
    out.mean_dmax_artifact = mean_dmax(cfg, artifact, out.noise_scale, depth);

    const auto within = [](double got, double want) { return std::abs(got - want) <= 0.1 * want; };
    if (cfg.noise_scale == 0.0 && !within(out.mean_dmax_natural, cfg.target_dmax_natural))
        fail(ErrorKind::CalibrationError, "natural class mean max-decline missed its target");
    if (cfg.depth_scale == 0.0 && cfg.depth_multiplier == 1.0 &&
        !within(out.mean_dmax_artifact, cfg.target_dmax_artifact))
        fail(ErrorKind::CalibrationError, "artifact class mean max-decline missed its target");

    char id[32];
    std::size_t index = 0;
    const auto emit = [&](const Draw& d, const char* prefix, std::size_t i, double dscale) {
        std::snprintf(id, sizeof id, "%s-%04zu", prefix, i);
        LabeledTrajectory t;
        t.id = id;
        t.label = d.artifact ? Label::Artifact : Label::Natural;
        t.values = render(cfg, d, out.noise_scale, dscale);
        if (cfg.prompts > 0) {
            char group[32];
            std::snprintf(group, sizeof group, "prompt-%03zu", index % cfg.prompts);
            t.group = group;
        }
        ++index;
        out.data.push_back(std::move(t));
    };
    for (std::size_t i = 0; i < natural.size(); ++i) emit(natural[i], "nat", i, 0.0);
    for (std::size_t i = 0; i < artifact.size(); ++i) emit(artifact[i], "art", i, depth);
    return out;
}

}  // namespace trajscope
