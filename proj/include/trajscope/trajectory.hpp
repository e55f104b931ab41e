#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trajscope/error.hpp"

namespace trajscope {

using VectorXd = Eigen::VectorXd;

/// Dense tensor stored as a flat column vector plus its logical shape.
struct Tensor {
    std::vector<std::int64_t> shape;
    VectorXd values;

    Tensor() = default;
    Tensor(std::vector<std::int64_t> shape_, VectorXd values_);
    explicit Tensor(VectorXd flat);

    std::int64_t size() const noexcept { return values.size(); }
    bool same_shape(const Tensor& other) const noexcept { return shape == other.shape; }
};

/// Denoised estimates recorded during one sampling run, in sampling order
/// (front = earliest step, i.e. the noisiest).
struct DenoisedSequence {
    std::vector<Tensor> states;
    int total_steps = 0;
    std::string space_tag = "synthetic";

    void validate() const;
};

enum class Orientation { Similarity, Dissimilarity };

const char* to_string(Orientation o) noexcept;
Orientation orientation_from_string(const std::string& s);

/// Time series of scores between adjacent denoised states. values[i]
/// compares states[i] and states[i + 1] in sampling order.
struct SimilarityTrajectory {
    std::vector<double> values;
    int total_steps = 0;
    std::string metric_id;
    Orientation orientation = Orientation::Similarity;

    std::size_t size() const noexcept { return values.size(); }
    void validate() const;

    /// Values re-indexed by diffusion time t = T-1 ... 1; entry for t is
    /// the score between the estimates at t and t - 1.
    std::vector<double> diffusion_order() const;
};

/// A pairwise score function. `pair` is the index of the adjacent pair in
/// sampling order; tensor-based metrics ignore it, precomputed metrics use it.
struct SimilarityMetric {
    std::string id;
    Orientation orientation = Orientation::Similarity;
    std::function<double(std::size_t pair, const Tensor& a, const Tensor& b)> score;
};

double rmse(const Tensor& a, const Tensor& b);
double rmse(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);

SimilarityMetric rmse_metric();

/// Adapts externally computed distances d in [0, 1] (one per adjacent pair)
/// into a similarity 1 - d. Out-of-range scores raise RangeError when read.
SimilarityMetric inverted_score_metric(std::vector<double> base_scores, std::string id = "one_minus_precomputed");

SimilarityTrajectory compute_trajectory(const DenoisedSequence& seq, const SimilarityMetric& metric);

/// Shortcut for the precomputed path: no tensors are involved.
SimilarityTrajectory trajectory_from_precomputed(std::span<const double> base_scores, int total_steps,
                                                 std::string id = "one_minus_precomputed");

enum class ScheduleKind { DdimLinearBeta, HeunSigma };

struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::DdimLinearBeta;
    std::vector<double> betas;   // ddim: beta_1 .. beta_T
    std::vector<double> sigmas;  // heun: sigma per step, nonincreasing
    int total_steps = 0;

    /// beta_i = i / T. Note alpha_bar(T) is exactly zero under this rule.
    static NoiseSchedule linear_ramp(int total_steps);
    static NoiseSchedule from_betas(std::vector<double> betas);
    /// Betas derived from a squared-cosine alpha_bar curve; alpha_bar(T) > 0.
    static NoiseSchedule cosine(int total_steps, double offset = 0.008, double max_beta = 0.999);
    static NoiseSchedule heun(std::vector<double> sigmas);

    void validate() const;
};

/// Cumulative product prod_{i=1..t} (1 - beta_i), 1 <= t <= T.
double alpha_bar(const NoiseSchedule& schedule, int t);

/// Clean-sample estimate from a noisy state and its predicted noise under
/// x_t = sqrt(abar) x0 + sqrt(1 - abar) eps.
VectorXd ddim_denoised(const Eigen::Ref<const VectorXd>& x_t, const Eigen::Ref<const VectorXd>& eps,
                       double alpha_bar_t);

/// Heun estimate x_t - sigma/2 (n1 + n2) with unit-variance noise predictions.
VectorXd heun_denoised(const Eigen::Ref<const VectorXd>& x_t, const Eigen::Ref<const VectorXd>& n1,
                       const Eigen::Ref<const VectorXd>& n2, double sigma_t);

}  // namespace trajscope
