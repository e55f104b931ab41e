#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajscope/dataset.hpp"
#include "trajscope/trajectory.hpp"
#include "trajscope/wavelet.hpp"

namespace trajscope {

struct SegmentSet {
    std::string label;
    std::vector<double> values;
};

struct StatBundle {
    double entropy = 0, p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0;
    double mean = 0, std = 0;
    double mean_crossings = 0, zero_crossings = 0;

    static constexpr std::array<const char*, 10> names = {
        "entropy", "p5", "p25", "p50", "p75", "p95", "mean", "std", "mean_crossings", "zero_crossings"};

    std::array<double, 10> as_array() const {
        return {entropy, p5, p25, p50, p75, p95, mean, std, mean_crossings, zero_crossings};
    }
};

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;
    std::size_t source_length = 0;
};

struct FeatureConfig {
    int k = 5;      // neighbours for the kNN probability feature
    int bins = 10;  // entropy histogram bins
};

/// Thirds by floor(L/3), floor(2L/3), plus the whole series as S4.
std::vector<SegmentSet> segment_time(std::span<const double> values);
std::vector<SegmentSet> segment_time(const SimilarityTrajectory& traj);

/// Linear interpolation between closest ranks; p in [0, 100].
double percentile(std::span<const double> values, double p);
/// Shannon entropy (bits) of an equal-width histogram over [min, max].
double entropy(std::span<const double> values, int bins);
std::size_t mean_crossings(std::span<const double> values);
std::size_t zero_crossings(std::span<const double> values);
double population_std(std::span<const double> values);

StatBundle stat_bundle(std::span<const double> values, int bins);
inline StatBundle stat_bundle(const SegmentSet& set, int bins) { return stat_bundle(set.values, bins); }

/// Fraction of artifact labels among the k training trajectories nearest to
/// `query` in Euclidean distance. Equal distances prefer the lower index.
/// `exclude` drops one training index (leave-one-out).
double knn_probability(std::span<const LabeledTrajectory> train, std::span<const double> query, int k,
                       std::optional<std::size_t> exclude = std::nullopt);

/// Names in feature order for a trajectory of the given length decomposed
/// to `haar_levels` levels (full depth when omitted).
std::vector<std::string> feature_names(std::size_t length, std::optional<std::size_t> haar_levels = std::nullopt);

FeatureVector build_feature_vector(const SimilarityTrajectory& traj, const HaarDecomposition<double>& decomp,
                                   double knn_prob, int bins);

/// All statistic features of one trajectory (everything except knn_prob).
std::vector<double> statistic_features(std::span<const double> values, int bins);

/// Feature rows for a whole dataset with kNN probabilities computed
/// leave-one-out against the dataset itself. Rows follow dataset order.
struct FeatureMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // one row per trajectory
};

FeatureMatrix dataset_features(const Dataset& data, const FeatureConfig& config, std::size_t threads = 1);

}  // namespace trajscope
