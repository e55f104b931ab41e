#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajscope/dataset.hpp"
#include "trajscope/features.hpp"
#include "trajscope/forest.hpp"
#include "trajscope/trajectory.hpp"

namespace trajscope {

/// Inclusive 1-based position range. `diffusion_order` means positions count
/// along diffusion time (t = T-1 first), i.e. reversed sampling order.
struct Window {
    std::size_t start = 13;
    std::size_t end = 34;
    bool diffusion_order = false;

    /// Half-open [first, last) range of 0-based sampling-order indices.
    std::pair<std::size_t, std::size_t> sampling_range(std::size_t length) const;
    static Window parse(const std::string& spec);  // "a:b"
};

/// Largest z_s - z_e over strictly decreasing runs z_s > ... > z_e, scanning
/// only values inside [first, last). Linear time.
double max_decline(std::span<const double> values);
double max_decline(const SimilarityTrajectory& traj, std::optional<Window> window = std::nullopt);
double max_decline(std::span<const double> values, const Window& window);

/// Mean and standard error (sample std / sqrt(n)).
struct MeanSem {
    double mean = 0.0;
    double sem = 0.0;
    std::size_t n = 0;
};
MeanSem mean_sem(std::span<const double> values);

struct DeclineReport {
    Window window;
    std::vector<std::string> ids;
    std::vector<Label> labels;
    std::vector<double> dmax;
    MeanSem natural;
    MeanSem artifact;

    double gap() const { return artifact.mean - natural.mean; }
};

/// Trajectories are similarity-oriented values.
DeclineReport group_decline_stats(const Dataset& data, const Window& window);

/// fold[i] = fold of example i. Classes are shuffled separately and dealt
/// round-robin, so each fold's class counts differ by at most one.
std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t folds, std::uint64_t seed);

struct PipelineConfig {
    FeatureConfig features;
    TrainConfig forest;
};

struct CvReport {
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
    double sem = 0.0;
    std::vector<std::size_t> assignment;  // fold per dataset index
};

/// Stratified k-fold cross-validation of the full pipeline. Per fold, the
/// training rows get leave-one-out kNN probabilities within the training
/// split and test rows use the whole training split.
CvReport stratified_kfold_cv(const Dataset& data, std::size_t folds, std::uint64_t seed, const PipelineConfig& config,
                             std::size_t threads = 1);

/// Forest plus the kNN reference set needed to rebuild the knn_prob feature.
struct TrajectoryClassifier {
    ForestModel forest;
    FeatureConfig features;
    Dataset reference;

    double probability(std::span<const double> values) const;
};

TrajectoryClassifier train_classifier(const Dataset& data, const PipelineConfig& config, std::size_t threads = 1);

struct ScoredItem {
    std::string id;
    std::string group;
    double probability = 0.0;
};

struct PairSelection {
    std::string group;
    std::string highest;
    std::string lowest;
    double highest_probability = 0.0;
    double lowest_probability = 0.0;
};

/// Per group: the item most likely and the item least likely to carry
/// artifacts. Probability ties go to the lexicographically lower id; the
/// lowest pick excludes the highest pick. Groups come out sorted by name.
std::vector<PairSelection> pair_selection(std::span<const ScoredItem> items);
std::vector<PairSelection> pair_selection(const Dataset& data, const TrajectoryClassifier& model,
                                          std::size_t threads = 1);

}  // namespace trajscope
