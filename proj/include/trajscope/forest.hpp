#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajscope/dataset.hpp"
#include "trajscope/features.hpp"

namespace trajscope {

struct MaxFeatures {
    enum class Rule { Sqrt, All, Fixed };
    Rule rule = Rule::Sqrt;
    std::size_t count = 0;  // used by Fixed

    std::size_t resolve(std::size_t n_features) const;
    std::string to_string() const;
    static MaxFeatures parse(const std::string& s);
};

struct TrainConfig {
    std::size_t n_trees = 1000;
    MaxFeatures max_features;
    std::size_t min_samples_split = 2;
    std::optional<std::size_t> max_depth;
    std::uint64_t seed = 0;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double natural = 0.0;   // bootstrap-weighted class counts
    double artifact = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    const TreeNode& leaf_for(std::span<const double> x) const;
    double artifact_fraction(std::span<const double> x) const;
    std::size_t depth() const;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<std::string> feature_names;
    TrainConfig config;
    std::vector<double> importances;  // mean decrease in Gini impurity, sums to 1
};

/// Gini impurity 1 - sum p_c^2 of weighted class counts.
double gini(double natural, double artifact);

/// Bagged CART forest. Rows of `features` are examples. Each tree draws its
/// bootstrap and feature subsets from a generator seeded by (config.seed,
/// tree index), so the result is independent of `threads`.
ForestModel train_forest(const Eigen::MatrixXd& features, std::span<const Label> labels, const TrainConfig& config,
                         std::vector<std::string> feature_names = {}, std::size_t threads = 1);

double predict_proba(const ForestModel& model, std::span<const double> row);
double predict_proba(const ForestModel& model, const FeatureVector& fv);

Label predict_label(const ForestModel& model, const FeatureVector& fv, double threshold = 0.5);
inline Label label_for(double probability, double threshold = 0.5) {
    return probability >= threshold ? Label::Artifact : Label::Natural;
}

/// Forest importances over raw trajectory positions; entry i belongs to
/// 1-based sampling position i + 1.
std::vector<double> timestep_importance(const Dataset& data, const TrainConfig& config, std::size_t threads = 1);

}  // namespace trajscope
