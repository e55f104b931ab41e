#include "trajscope/trajectory.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace trajscope {

Tensor::Tensor(std::vector<std::int64_t> shape_, VectorXd values_)
    : shape(std::move(shape_)), values(std::move(values_)) {
    std::int64_t n = 1;
    for (auto d : shape) {
        require(d >= 0, "tensor dimension must be non-negative");
        n *= d;
    }
    require(n == values.size(), "tensor shape does not match value count");
}

Tensor::Tensor(VectorXd flat) : shape{flat.size()}, values(std::move(flat)) {}

void DenoisedSequence::validate() const {
    require(states.size() >= 2, "denoised sequence needs at least 2 states");
    require(total_steps > 0, "total_steps must be positive");
    require(states.size() <= static_cast<std::size_t>(total_steps),
            "denoised sequence has more states than total_steps");
    for (const auto& s : states) require(s.same_shape(states.front()), "denoised states differ in shape");
}

const char* to_string(Orientation o) noexcept {
    return o == Orientation::Similarity ? "similarity" : "dissimilarity";
}

Orientation orientation_from_string(const std::string& s) {
    if (s == "similarity") return Orientation::Similarity;
    if (s == "dissimilarity") return Orientation::Dissimilarity;
    fail(ErrorKind::SchemaError, "orientation must be \"similarity\" or \"dissimilarity\", got \"" + s + "\"");
}

void SimilarityTrajectory::validate() const {
    for (double v : values) require(std::isfinite(v), "trajectory value is not finite");
}

std::vector<double> SimilarityTrajectory::diffusion_order() const { return {values.rbegin(), values.rend()}; }

double rmse(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
    require(a.size() == b.size(), "rmse operands differ in size");
    require(a.size() > 0, "rmse of empty tensors");
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double rmse(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "rmse operands differ in shape");
    return rmse(a.values, b.values);
}

SimilarityMetric rmse_metric() {
    return {"rmse", Orientation::Dissimilarity,
            [](std::size_t, const Tensor& a, const Tensor& b) { return rmse(a, b); }};
}

SimilarityMetric inverted_score_metric(std::vector<double> base_scores, std::string id) {
    return {std::move(id), Orientation::Similarity,
            [scores = std::move(base_scores)](std::size_t pair, const Tensor&, const Tensor&) {
                require(pair < scores.size(), "no precomputed score for pair " + std::to_string(pair));
                const double d = scores[pair];
                if (!(d >= 0.0 && d <= 1.0))
                    fail(ErrorKind::RangeError, "precomputed score " + std::to_string(d) + " outside [0,1]");
                return 1.0 - d;
            }};
}

SimilarityTrajectory compute_trajectory(const DenoisedSequence& seq, const SimilarityMetric& metric) {
    seq.validate();
    SimilarityTrajectory out;
    out.total_steps = seq.total_steps;
    out.metric_id = metric.id;
    out.orientation = metric.orientation;
    out.values.reserve(seq.states.size() - 1);
    for (std::size_t i = 0; i + 1 < seq.states.size(); ++i)
        out.values.push_back(metric.score(i, seq.states[i], seq.states[i + 1]));
    out.validate();
    return out;
}

SimilarityTrajectory trajectory_from_precomputed(std::span<const double> base_scores, int total_steps,
                                                 std::string id) {
    require(!base_scores.empty(), "no precomputed scores");
    require(base_scores.size() < static_cast<std::size_t>(total_steps),
            "more scores than adjacent pairs allowed by total_steps");
    const auto metric = inverted_score_metric({base_scores.begin(), base_scores.end()}, std::move(id));
    const Tensor none;
    SimilarityTrajectory out;
    out.total_steps = total_steps;
    out.metric_id = metric.id;
    out.orientation = metric.orientation;
    for (std::size_t i = 0; i < base_scores.size(); ++i) out.values.push_back(metric.score(i, none, none));
    return out;
}

NoiseSchedule NoiseSchedule::linear_ramp(int total_steps) {
    require(total_steps > 0, "schedule needs a positive step count");
    std::vector<double> betas(static_cast<std::size_t>(total_steps));
    for (int i = 1; i <= total_steps; ++i) betas[i - 1] = static_cast<double>(i) / total_steps;
    return from_betas(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
    NoiseSchedule s;
    s.kind = ScheduleKind::DdimLinearBeta;
    s.total_steps = static_cast<int>(betas.size());
    s.betas = std::move(betas);
    s.validate();
    return s;
}

NoiseSchedule NoiseSchedule::cosine(int total_steps, double offset, double max_beta) {
    require(total_steps > 0, "schedule needs a positive step count");
    const auto f = [&](double t) {
        const double c = std::cos((t / total_steps + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
        return c * c;
    };
    std::vector<double> betas(static_cast<std::size_t>(total_steps));
    for (int i = 1; i <= total_steps; ++i)
        betas[i - 1] = std::min(1.0 - f(i) / f(i - 1), max_beta);
    // Cosine betas are increasing except for float noise near t = 0.
    for (std::size_t i = 1; i < betas.size(); ++i) betas[i] = std::max(betas[i], betas[i - 1]);
    return from_betas(std::move(betas));
}

NoiseSchedule NoiseSchedule::heun(std::vector<double> sigmas) {
    NoiseSchedule s;
    s.kind = ScheduleKind::HeunSigma;
    s.total_steps = static_cast<int>(sigmas.size());
    s.sigmas = std::move(sigmas);
    s.validate();
    return s;
}

void NoiseSchedule::validate() const {
    require(total_steps > 0, "schedule needs a positive step count");
    if (kind == ScheduleKind::DdimLinearBeta) {
        require(betas.size() == static_cast<std::size_t>(total_steps), "beta count must equal total_steps");
        for (std::size_t i = 0; i < betas.size(); ++i) {
            require(betas[i] > 0.0 && betas[i] <= 1.0, "beta must lie in (0, 1]");
            require(i == 0 || betas[i] >= betas[i - 1], "betas must be nondecreasing");
        }
    } else {
        require(sigmas.size() == static_cast<std::size_t>(total_steps), "sigma count must equal total_steps");
        for (std::size_t i = 0; i < sigmas.size(); ++i) {
            require(sigmas[i] >= 0.0 && std::isfinite(sigmas[i]), "sigma must be finite and non-negative");
            require(i == 0 || sigmas[i] <= sigmas[i - 1], "sigmas must be nonincreasing");
        }
    }
}

double alpha_bar(const NoiseSchedule& schedule, int t) {
    require(schedule.kind == ScheduleKind::DdimLinearBeta, "alpha_bar needs a ddim schedule");
    require(t >= 1 && t <= schedule.total_steps, "step index out of range");
    double prod = 1.0;
    for (int i = 0; i < t; ++i) prod *= 1.0 - schedule.betas[i];
    return prod;
}

VectorXd ddim_denoised(const Eigen::Ref<const VectorXd>& x_t, const Eigen::Ref<const VectorXd>& eps,
                       double alpha_bar_t) {
    require(x_t.size() == eps.size(), "ddim_denoised operands differ in size");
    require(alpha_bar_t > 0.0 && alpha_bar_t <= 1.0, "alpha_bar must lie in (0, 1]");
    return (x_t - std::sqrt(1.0 - alpha_bar_t) * eps) / std::sqrt(alpha_bar_t);
}

VectorXd heun_denoised(const Eigen::Ref<const VectorXd>& x_t, const Eigen::Ref<const VectorXd>& n1,
                       const Eigen::Ref<const VectorXd>& n2, double sigma_t) {
    require(x_t.size() == n1.size() && x_t.size() == n2.size(), "heun_denoised operands differ in size");
    require(sigma_t >= 0.0, "sigma must be non-negative");
    return x_t - 0.5 * sigma_t * (n1 + n2);
}

}  // namespace trajscope
