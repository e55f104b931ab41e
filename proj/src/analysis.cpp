#include "trajscope/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trajscope/error.hpp"
#include "trajscope/parallel.hpp"
#include "trajscope/rng.hpp"

namespace trajscope {

std::pair<std::size_t, std::size_t> Window::sampling_range(std::size_t length) const {
    require(start >= 1 && start <= end && end <= length,
            "window " + std::to_string(start) + ":" + std::to_string(end) + " outside trajectory of length " +
                std::to_string(length));
    if (!diffusion_order) return {start - 1, end};
    return {length - end, length - start + 1};
}

Window Window::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    require(colon != std::string::npos, "window must look like a:b");
    Window w;
    try {
        w.start = std::stoul(spec.substr(0, colon));
        w.end = std::stoul(spec.substr(colon + 1));
    } catch (...) {
        fail(ErrorKind::InvalidInput, "window must look like a:b, got " + spec);
    }
    require(w.start >= 1 && w.start <= w.end, "window needs 1 <= a <= b");
    return w;
}

double max_decline(std::span<const double> values) {
    double best = 0.0;
    std::size_t run_start = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1])
            best = std::max(best, values[run_start] - values[i]);
        else
            run_start = i;
    }
    return best;
}

double max_decline(std::span<const double> values, const Window& window) {
    const auto [first, last] = window.sampling_range(values.size());
    return max_decline(values.subspan(first, last - first));
}

double max_decline(const SimilarityTrajectory& traj, std::optional<Window> window) {
    if (traj.orientation != Orientation::Similarity)
        fail(ErrorKind::OrientationError, "max_decline needs a similarity-oriented trajectory");
    require(!traj.values.empty(), "max_decline of an empty trajectory");
    if (!window) return max_decline(traj.values);
    return max_decline(traj.values, *window);
}

MeanSem mean_sem(std::span<const double> values) {
    require(!values.empty(), "mean of an empty group");
    MeanSem out;
    out.n = values.size();
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.sem = std::sqrt(ss / (values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
    }
    return out;
}

DeclineReport group_decline_stats(const Dataset& data, const Window& window) {
    DeclineReport report;
    report.window = window;
    std::vector<double> natural, artifact;
    for (const auto& t : data) {
        const double d = max_decline(t.values, window);
        report.ids.push_back(t.id);
        report.labels.push_back(t.label);
        report.dmax.push_back(d);
        (t.label == Label::Artifact ? artifact : natural).push_back(d);
    }
    require(!natural.empty(), "no natural trajectories");
    require(!artifact.empty(), "no artifact trajectories");
    report.natural = mean_sem(natural);
    report.artifact = mean_sem(artifact);
    return report;
}

std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t folds, std::uint64_t seed) {
    require(folds >= 2, "cross-validation needs at least 2 folds");
    std::vector<std::size_t> assignment(labels.size(), 0);
    Rng rng(seed, 0x5f01d5);
    std::size_t next = 0;
    for (Label cls : {Label::Natural, Label::Artifact}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) members.push_back(i);
        require(members.size() >= folds,
                std::string("class ") + to_string(cls) + " has fewer examples than folds");
        rng.shuffle(members.begin(), members.end());
        for (auto i : members) assignment[i] = next++ % folds;
    }
    return assignment;
}

namespace {

std::vector<Label> labels_of(const Dataset& data) {
    std::vector<Label> out;
    out.reserve(data.size());
    for (const auto& t : data) out.push_back(t.label);
    return out;
}

// Statistic features plus a placeholder knn column, one row per trajectory.
Eigen::MatrixXd statistic_matrix(const Dataset& data, int bins, std::size_t threads) {
    const std::size_t length = common_length(data);
    const auto width = static_cast<Eigen::Index>(feature_names(length).size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()), width);
    parallel_for(data.size(), threads, [&](std::size_t i) {
        const auto stats = statistic_features(data[i].values, bins);
        for (std::size_t j = 0; j < stats.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = stats[j];
        m(static_cast<Eigen::Index>(i), width - 1) = 0.0;
    });
    return m;
}

}  // namespace

CvReport stratified_kfold_cv(const Dataset& data, std::size_t folds, std::uint64_t seed, const PipelineConfig& config,
                             std::size_t threads) {
    const std::size_t length = common_length(data);
    const auto labels = labels_of(data);
    CvReport report;
    report.folds = folds;
    report.seed = seed;
    report.assignment = stratified_folds(labels, folds, seed);

    const Eigen::MatrixXd stats = statistic_matrix(data, config.features.bins, threads);
    const auto knn_col = stats.cols() - 1;
    const auto names = feature_names(length);

    for (std::size_t fold = 0; fold < folds; ++fold) {
        Dataset train, test;
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (report.assignment[i] == fold) {
                test.push_back(data[i]);
                test_rows.push_back(i);
            } else {
                train.push_back(data[i]);
                train_rows.push_back(i);
            }
        }
        Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train.size()), stats.cols());
        std::vector<Label> y_train;
        for (std::size_t r = 0; r < train.size(); ++r) {
            x_train.row(static_cast<Eigen::Index>(r)) = stats.row(static_cast<Eigen::Index>(train_rows[r]));
            y_train.push_back(train[r].label);
        }
        parallel_for(train.size(), threads, [&](std::size_t r) {
            x_train(static_cast<Eigen::Index>(r), knn_col) =
                knn_probability(train, train[r].values, config.features.k, r);
        });

        TrainConfig forest_config = config.forest;
        forest_config.seed = derive_seed(config.forest.seed, fold);
        const ForestModel model = train_forest(x_train, y_train, forest_config, names, threads);

        std::vector<int> correct(test.size(), 0);
        parallel_for(test.size(), threads, [&](std::size_t r) {
            Eigen::RowVectorXd row = stats.row(static_cast<Eigen::Index>(test_rows[r]));
            row(knn_col) = knn_probability(train, test[r].values, config.features.k);
            const double p = predict_proba(model, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
            correct[r] = label_for(p) == test[r].label ? 1 : 0;
        });
        report.fold_accuracy.push_back(static_cast<double>(std::accumulate(correct.begin(), correct.end(), 0)) /
                                       static_cast<double>(test.size()));
    }
    const MeanSem ms = mean_sem(report.fold_accuracy);
    report.mean_accuracy = ms.mean;
    report.sem = ms.sem;
    return report;
}

double TrajectoryClassifier::probability(std::span<const double> values) const {
    auto row = statistic_features(values, features.bins);
    row.push_back(knn_probability(reference, values, features.k));
    return predict_proba(forest, row);
}

TrajectoryClassifier train_classifier(const Dataset& data, const PipelineConfig& config, std::size_t threads) {
    const FeatureMatrix fm = dataset_features(data, config.features, threads);
    TrajectoryClassifier out;
    out.features = config.features;
    out.reference = data;
    out.forest = train_forest(fm.values, labels_of(data), config.forest, fm.names, threads);
    return out;
}

std::vector<PairSelection> pair_selection(std::span<const ScoredItem> items) {
    std::map<std::string, std::vector<const ScoredItem*>> groups;
    for (const auto& item : items) groups[item.group].push_back(&item);

    std::vector<PairSelection> out;
    for (auto& [group, members] : groups) {
        require(members.size() >= 2, "group " + group + " needs at least 2 trajectories");
        std::sort(members.begin(), members.end(), [](auto* a, auto* b) { return a->id < b->id; });
        const ScoredItem* hi = members.front();
        for (auto* m : members)
            if (m->probability > hi->probability) hi = m;
        const ScoredItem* lo = nullptr;
        for (auto* m : members) {
            if (m == hi) continue;
            if (!lo || m->probability < lo->probability) lo = m;
        }
        out.push_back({group, hi->id, lo->id, hi->probability, lo->probability});
    }
    return out;
}

std::vector<PairSelection> pair_selection(const Dataset& data, const TrajectoryClassifier& model,
                                          std::size_t threads) {
    std::vector<ScoredItem> items(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        items[i] = {data[i].id, data[i].group, model.probability(data[i].values)};
    });
    return pair_selection(items);
}

}  // namespace trajscope
