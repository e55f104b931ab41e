#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "trajscope/analysis.hpp"
#include "trajscope/dataset.hpp"
#include "trajscope/features.hpp"
#include "trajscope/forest.hpp"
#include "trajscope/modeleval.hpp"
#include "trajscope/trajectory.hpp"
#include "trajscope/wavelet.hpp"

namespace trajscope::io {

using json = nlohmann::json;

inline constexpr const char* kTrajectorySchema = "simtraj/1";
inline constexpr const char* kModelSchema = "rfmodel/1";
inline constexpr const char* kAggregateSchema = "agg/1";
inline constexpr const char* kCvSchema = "cvreport/1";
inline constexpr const char* kDeclineSchema = "decline/1";
inline constexpr const char* kImportanceSchema = "importance/1";
inline constexpr const char* kCompareSchema = "dominance/1";
inline constexpr const char* kHaarSchema = "haar/1";
inline constexpr const char* kManifestSchema = "runmanifest/1";

std::string read_text(const std::filesystem::path& path);
/// Writes via a sibling temp file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);
json read_json(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

json to_json(const SimilarityTrajectory& traj);
SimilarityTrajectory trajectory_from_json(const json& j);

json to_json(const DenoisedSequence& seq);
DenoisedSequence sequence_from_json(const json& j);

json to_json(const HaarDecomposition<double>& d);

/// Dataset manifest, one JSON object per line.
std::string to_jsonl(const Dataset& data);
Dataset dataset_from_jsonl(const std::string& text);

std::string feature_csv(const FeatureMatrix& fm, const Dataset& data);

json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const json& j);
json to_json(const ForestModel& model);
ForestModel forest_from_json(const json& j);
/// rfmodel/1 plus the "knn_reference" block.
json to_json(const TrajectoryClassifier& model);
TrajectoryClassifier classifier_from_json(const json& j);

json to_json(const CvReport& report);
std::string cv_csv(const CvReport& report);

json to_json(const DeclineReport& report);
std::string decline_csv(const DeclineReport& report);

json importance_json(const std::vector<double>& importances, const TrainConfig& config);
std::string importance_csv(const std::vector<double>& importances);

json to_json(const AggregateTrajectory& agg, double signal_std);
AggregateTrajectory aggregate_from_json(const json& j);
std::string aggregate_csv(const AggregateTrajectory& agg);

json to_json(const DominanceReport& rep);

std::string pairs_csv(const std::vector<PairSelection>& pairs);

}  // namespace trajscope::io
