#include "trajscope/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trajscope/parallel.hpp"

namespace trajscope {
namespace {

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

std::vector<SegmentSet> segment_time(std::span<const double> values) {
    const std::size_t L = values.size();
    require(L >= 4, "time segmentation needs at least 4 values");
    const std::size_t n1 = L / 3;
    const std::size_t n2 = 2 * L / 3;
    const auto slice = [&](std::size_t from, std::size_t to) {
        return std::vector<double>(values.begin() + from, values.begin() + to);
    };
    return {{"S1", slice(0, n1)}, {"S2", slice(n1, n2)}, {"S3", slice(n2, L)}, {"S4", slice(0, L)}};
}

std::vector<SegmentSet> segment_time(const SimilarityTrajectory& traj) { return segment_time(traj.values); }

double percentile(std::span<const double> values, double p) {
    require(!values.empty(), "percentile of an empty set");
    require(p >= 0.0 && p <= 100.0, "percentile rank must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double entropy(std::span<const double> values, int bins) {
    require(bins > 0, "entropy needs a positive bin count");
    require(!values.empty(), "entropy of an empty set");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return 0.0;

    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
        ++counts[std::min(b, counts.size() - 1)];
    }
    double e = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / values.size();
        e -= p * std::log2(p);
    }
    return e;
}

std::size_t mean_crossings(std::span<const double> values) {
    if (values.size() < 2) return 0;
    const double mu = mean_of(values);
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if ((values[i + 1] - mu) * (values[i] - mu) < 0.0) ++count;
    return count;
}

std::size_t zero_crossings(std::span<const double> values) {
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if (values[i + 1] * values[i] < 0.0) ++count;
    return count;
}

double population_std(std::span<const double> values) {
    require(!values.empty(), "standard deviation of an empty set");
    const double mu = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mu) * (v - mu);
    return std::sqrt(ss / values.size());
}

StatBundle stat_bundle(std::span<const double> values, int bins) {
    require(!values.empty(), "statistics of an empty set");
    StatBundle b;
    b.entropy = entropy(values, bins);
    b.p5 = percentile(values, 5);
    b.p25 = percentile(values, 25);
    b.p50 = percentile(values, 50);
    b.p75 = percentile(values, 75);
    b.p95 = percentile(values, 95);
    b.mean = mean_of(values);
    b.std = population_std(values);
    b.mean_crossings = static_cast<double>(mean_crossings(values));
    b.zero_crossings = static_cast<double>(zero_crossings(values));
    return b;
}

double knn_probability(std::span<const LabeledTrajectory> train, std::span<const double> query, int k,
                       std::optional<std::size_t> exclude) {
    require(k > 0, "k must be positive");
    const std::size_t usable = train.size() - (exclude && *exclude < train.size() ? 1 : 0);
    require(static_cast<std::size_t>(k) <= usable, "k exceeds the number of training trajectories");

    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (exclude && *exclude == i) continue;
        const auto& v = train[i].values;
        require(v.size() == query.size(), "kNN trajectories differ in length");
        double d = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) d += (v[j] - query[j]) * (v[j] - query[j]);
        dist.emplace_back(d, i);
    }
    // Pair ordering breaks distance ties by training index.
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    int artifacts = 0;
    for (int i = 0; i < k; ++i)
        if (train[dist[static_cast<std::size_t>(i)].second].label == Label::Artifact) ++artifacts;
    return static_cast<double>(artifacts) / k;
}

std::vector<std::string> feature_names(std::size_t length, std::optional<std::size_t> haar_levels) {
    std::vector<std::string> sets = {"S1", "S2", "S3", "S4"};
    const std::size_t levels = haar_levels.value_or(haar_level_count(length));
    for (std::size_t j = 1; j <= levels; ++j) sets.push_back("haar_d" + std::to_string(j));
    std::vector<std::string> names;
    names.reserve(sets.size() * StatBundle::names.size() + 1);
    for (const auto& s : sets)
        for (const char* stat : StatBundle::names) names.push_back(s + "_" + stat);
    names.emplace_back("knn_prob");
    return names;
}

namespace {

void append_bundle(std::vector<double>& out, std::span<const double> set, int bins) {
    const auto arr = stat_bundle(set, bins).as_array();
    out.insert(out.end(), arr.begin(), arr.end());
}

std::vector<double> features_from(std::span<const double> values, const HaarDecomposition<double>& decomp,
                                  int bins) {
    std::vector<double> out;
    for (const auto& seg : segment_time(values)) append_bundle(out, seg.values, bins);
    for (const auto& set : detail_sets(decomp))
        append_bundle(out, std::span<const double>(set.values.data(), static_cast<std::size_t>(set.values.size())),
                      bins);
    return out;
}

}  // namespace

std::vector<double> statistic_features(std::span<const double> values, int bins) {
    Eigen::Map<const Eigen::VectorXd> series(values.data(), static_cast<Eigen::Index>(values.size()));
    return features_from(values, haar_decompose(series), bins);
}

FeatureVector build_feature_vector(const SimilarityTrajectory& traj, const HaarDecomposition<double>& decomp,
                                   double knn_prob, int bins) {
    require(knn_prob >= 0.0 && knn_prob <= 1.0, "knn probability must lie in [0, 1]");
    validate(decomp);
    require(decomp.original_length == traj.size(), "decomposition length does not match trajectory");

    FeatureVector fv;
    fv.source_length = traj.size();
    fv.names = feature_names(traj.size(), decomp.depth());
    fv.values = features_from(traj.values, decomp, bins);
    fv.values.push_back(knn_prob);
    return fv;
}

FeatureMatrix dataset_features(const Dataset& data, const FeatureConfig& config, std::size_t threads) {
    const std::size_t length = common_length(data);
    FeatureMatrix fm;
    fm.names = feature_names(length);
    fm.values.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(fm.names.size()));
    parallel_for(data.size(), threads, [&](std::size_t i) {
        const auto stats = statistic_features(data[i].values, config.bins);
        const double knn = knn_probability(data, data[i].values, config.k, i);
        const auto row = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < stats.size(); ++j) fm.values(row, static_cast<Eigen::Index>(j)) = stats[j];
        fm.values(row, static_cast<Eigen::Index>(stats.size())) = knn;
    });
    return fm;
}

}  // namespace trajscope
