#include "trajscope/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trajscope/error.hpp"
#include "trajscope/parallel.hpp"
#include "trajscope/rng.hpp"

namespace trajscope {

std::size_t MaxFeatures::resolve(std::size_t n_features) const {
    switch (rule) {
        case Rule::Sqrt:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(double(n_features)))));
        case Rule::All: return n_features;
        case Rule::Fixed:
            require(count >= 1 && count <= n_features, "max_features count must lie in [1, feature count]");
            return count;
    }
    return n_features;
}

std::string MaxFeatures::to_string() const {
    switch (rule) {
        case Rule::Sqrt: return "sqrt";
        case Rule::All: return "all";
        case Rule::Fixed: return std::to_string(count);
    }
    return "sqrt";
}

MaxFeatures MaxFeatures::parse(const std::string& s) {
    if (s == "sqrt") return {};
    if (s == "all") return {Rule::All, 0};
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used == s.size() && v > 0) return {Rule::Fixed, static_cast<std::size_t>(v)};
    } catch (...) {
    }
    fail(ErrorKind::InvalidInput, "max_features must be sqrt, all, or a positive count: " + s);
}

double gini(double natural, double artifact) {
    const double w = natural + artifact;
    if (w <= 0.0) return 0.0;
    const double p0 = natural / w, p1 = artifact / w;
    return 1.0 - p0 * p0 - p1 * p1;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf())
        node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold
                                                   ? node->left
                                                   : node->right)];
    return *node;
}

double DecisionTree::artifact_fraction(std::span<const double> x) const {
    const auto& leaf = leaf_for(x);
    return leaf.artifact / (leaf.natural + leaf.artifact);
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

namespace {

struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double score = -1.0;  // sum over children of (sum_c w_c^2) / w; higher is better
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, std::span<const Label> y, const TrainConfig& config, std::size_t mtry,
                std::uint64_t tree_index)
        : x_(x), y_(y), config_(config), mtry_(mtry), rng_(config.seed, tree_index),
          importance_(static_cast<std::size_t>(x.cols()), 0.0) {}

    DecisionTree build() {
        const auto n = static_cast<std::size_t>(x_.rows());
        weight_.assign(n, 0.0);
        for (std::size_t draw = 0; draw < n; ++draw) weight_[rng_.below(n)] += 1.0;
        total_weight_ = static_cast<double>(n);

        std::vector<std::size_t> samples;
        for (std::size_t i = 0; i < n; ++i)
            if (weight_[i] > 0.0) samples.push_back(i);

        features_.resize(static_cast<std::size_t>(x_.cols()));
        std::iota(features_.begin(), features_.end(), std::size_t{0});

        tree_.nodes.clear();
        grow(samples, 0);
        return std::move(tree_);
    }

    const std::vector<double>& importance() const { return importance_; }

private:
    std::int32_t grow(std::vector<std::size_t>& samples, std::size_t depth) {
        TreeNode node;
        for (auto i : samples) (y_[i] == Label::Artifact ? node.artifact : node.natural) += weight_[i];
        const auto id = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.push_back(node);

        const double w = node.natural + node.artifact;
        const bool pure = node.natural == 0.0 || node.artifact == 0.0;
        const bool depth_capped = config_.max_depth && depth >= *config_.max_depth;
        if (pure || depth_capped || w < static_cast<double>(config_.min_samples_split)) return id;

        const Split split = best_split(samples, node);
        if (split.feature < 0) return id;

        const double parent_score = (node.natural * node.natural + node.artifact * node.artifact) / w;
        importance_[static_cast<std::size_t>(split.feature)] += (split.score - parent_score) / total_weight_;

        std::vector<std::size_t> left, right;
        for (auto i : samples)
            (x_(static_cast<Eigen::Index>(i), split.feature) <= split.threshold ? left : right).push_back(i);
        samples.clear();
        samples.shrink_to_fit();

        const auto l = grow(left, depth + 1);
        const auto r = grow(right, depth + 1);
        auto& stored = tree_.nodes[static_cast<std::size_t>(id)];
        stored.feature = split.feature;
        stored.threshold = split.threshold;
        stored.left = l;
        stored.right = r;
        return id;
    }

    Split best_split(const std::vector<std::size_t>& samples, const TreeNode& node) {
        // Partial Fisher-Yates: the first mtry entries become the candidates.
        for (std::size_t i = 0; i < mtry_; ++i) {
            const auto j = i + rng_.below(features_.size() - i);
            std::swap(features_[i], features_[j]);
        }
        Split best;
        for (std::size_t c = 0; c < mtry_; ++c) {
            const auto f = static_cast<Eigen::Index>(features_[c]);
            column_.clear();
            for (auto i : samples) column_.emplace_back(x_(static_cast<Eigen::Index>(i), f), i);
            std::sort(column_.begin(), column_.end());

            double l0 = 0.0, l1 = 0.0;
            for (std::size_t k = 0; k + 1 < column_.size(); ++k) {
                const auto i = column_[k].second;
                (y_[i] == Label::Artifact ? l1 : l0) += weight_[i];
                const double lo = column_[k].first, hi = column_[k + 1].first;
                if (!(lo < hi)) continue;
                const double r0 = node.natural - l0, r1 = node.artifact - l1;
                const double score = (l0 * l0 + l1 * l1) / (l0 + l1) + (r0 * r0 + r1 * r1) / (r0 + r1);
                double threshold = lo + (hi - lo) / 2.0;
                if (!(threshold < hi)) threshold = lo;
                if (better(score, static_cast<std::int32_t>(f), threshold, best))
                    best = {static_cast<std::int32_t>(f), threshold, score};
            }
        }
        return best;
    }

    static bool better(double score, std::int32_t feature, double threshold, const Split& best) {
        if (best.feature < 0 || score > best.score) return true;
        if (score < best.score) return false;
        if (feature != best.feature) return feature < best.feature;
        return threshold < best.threshold;
    }

    const Eigen::MatrixXd& x_;
    std::span<const Label> y_;
    const TrainConfig& config_;
    std::size_t mtry_;
    Rng rng_;
    std::vector<double> weight_;
    double total_weight_ = 0.0;
    std::vector<std::size_t> features_;
    std::vector<std::pair<double, std::size_t>> column_;
    std::vector<double> importance_;
    DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const Eigen::MatrixXd& features, std::span<const Label> labels, const TrainConfig& config,
                         std::vector<std::string> feature_names, std::size_t threads) {
    const auto n = static_cast<std::size_t>(features.rows());
    const auto f = static_cast<std::size_t>(features.cols());
    require(n >= 2, "training needs at least 2 examples");
    require(labels.size() == n, "label count does not match feature rows");
    require(f >= 1, "training needs at least one feature");
    require(config.n_trees >= 1, "n_trees must be positive");
    require(config.min_samples_split >= 1, "min_samples_split must be positive");
    require(!config.max_depth || *config.max_depth >= 1, "max_depth must be positive");
    require(features.allFinite(), "features contain non-finite values");
    const auto artifacts = std::count(labels.begin(), labels.end(), Label::Artifact);
    require(artifacts > 0 && static_cast<std::size_t>(artifacts) < n, "training labels must contain both classes");

    if (feature_names.empty())
        for (std::size_t i = 0; i < f; ++i) feature_names.push_back("f" + std::to_string(i));
    require(feature_names.size() == f, "feature name count does not match feature columns");
    const std::size_t mtry = config.max_features.resolve(f);

    ForestModel model;
    model.config = config;
    model.feature_names = std::move(feature_names);
    model.trees.resize(config.n_trees);
    std::vector<std::vector<double>> per_tree(config.n_trees);
    parallel_for(config.n_trees, threads, [&](std::size_t t) {
        TreeBuilder builder(features, labels, config, mtry, t);
        model.trees[t] = builder.build();
        per_tree[t] = builder.importance();
    });

    model.importances.assign(f, 0.0);
    for (const auto& imp : per_tree)
        for (std::size_t j = 0; j < f; ++j) model.importances[j] += imp[j];
    const double total = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
    if (total > 0.0)
        for (auto& v : model.importances) v /= total;
    return model;
}

double predict_proba(const ForestModel& model, std::span<const double> row) {
    require(row.size() == model.feature_names.size(), "feature count does not match the model");
    require(!model.trees.empty(), "model has no trees");
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.artifact_fraction(row);
    return sum / static_cast<double>(model.trees.size());
}

double predict_proba(const ForestModel& model, const FeatureVector& fv) {
    require(fv.names == model.feature_names, "feature names or order do not match the model");
    return predict_proba(model, fv.values);
}

Label predict_label(const ForestModel& model, const FeatureVector& fv, double threshold) {
    return label_for(predict_proba(model, fv), threshold);
}

std::vector<double> timestep_importance(const Dataset& data, const TrainConfig& config, std::size_t threads) {
    const std::size_t length = common_length(data);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(length));
    std::vector<Label> labels;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < length; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i].values[j];
        labels.push_back(data[i].label);
    }
    for (std::size_t j = 1; j <= length; ++j) names.push_back("z" + std::to_string(j));
    return train_forest(x, labels, config, std::move(names), threads).importances;
}

}  // namespace trajscope
