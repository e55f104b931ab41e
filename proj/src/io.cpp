#include "trajscope/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "trajscope/error.hpp"

namespace trajscope::io {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void schema_fail(const std::string& field, const std::string& what) {
    fail(ErrorKind::SchemaError, "field \"" + field + "\": " + what);
}

const json& field(const json& j, const std::string& name) {
    if (!j.is_object()) schema_fail(name, "enclosing value is not an object");
    const auto it = j.find(name);
    if (it == j.end()) schema_fail(name, "missing");
    return *it;
}

template <typename T>
T get(const json& j, const std::string& name) {
    const json& v = field(j, name);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        schema_fail(name, "has the wrong type");
    }
}

std::vector<double> number_list(const json& j, const std::string& name) {
    const json& v = field(j, name);
    if (!v.is_array()) schema_fail(name, "must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) schema_fail(name, "must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

void expect_schema(const json& j, const char* schema) {
    const auto got = get<std::string>(j, "schema");
    if (got != schema) schema_fail("schema", "expected \"" + std::string(schema) + "\", got \"" + got + "\"");
}

}  // namespace

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::IoError, "cannot write " + tmp.string());
        out << content;
        if (!out) fail(ErrorKind::IoError, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::SchemaError, path.string() + " is not valid JSON: " + e.what());
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json to_json(const SimilarityTrajectory& traj) {
    return {{"schema", kTrajectorySchema},
            {"total_steps", traj.total_steps},
            {"metric_id", traj.metric_id},
            {"orientation", to_string(traj.orientation)},
            {"values", traj.values}};
}

SimilarityTrajectory trajectory_from_json(const json& j) {
    expect_schema(j, kTrajectorySchema);
    SimilarityTrajectory t;
    t.total_steps = get<int>(j, "total_steps");
    t.metric_id = get<std::string>(j, "metric_id");
    t.orientation = orientation_from_string(get<std::string>(j, "orientation"));
    t.values = number_list(j, "values");
    if (t.total_steps <= 0) schema_fail("total_steps", "must be positive");
    if (t.values.size() + 1 > static_cast<std::size_t>(t.total_steps))
        schema_fail("values", "longer than total_steps - 1");
    t.validate();
    return t;
}

json to_json(const DenoisedSequence& seq) {
    json states = json::array();
    for (const auto& s : seq.states)
        states.push_back({{"shape", s.shape}, {"data", std::vector<double>(s.values.begin(), s.values.end())}});
    return {{"schema", kTrajectorySchema},
            {"total_steps", seq.total_steps},
            {"space_tag", seq.space_tag},
            {"states", states}};
}

DenoisedSequence sequence_from_json(const json& j) {
    expect_schema(j, kTrajectorySchema);
    DenoisedSequence seq;
    seq.total_steps = get<int>(j, "total_steps");
    if (j.contains("space_tag")) seq.space_tag = get<std::string>(j, "space_tag");
    const json& states = field(j, "states");
    if (!states.is_array()) schema_fail("states", "must be an array");
    for (const auto& s : states) {
        const auto shape = get<std::vector<std::int64_t>>(s, "shape");
        const auto data = number_list(s, "data");
        seq.states.emplace_back(shape, Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size())));
    }
    seq.validate();
    return seq;
}

json to_json(const HaarDecomposition<double>& d) {
    json levels = json::array();
    for (const auto& lv : d.levels)
        levels.push_back({{"approx", std::vector<double>(lv.approx.begin(), lv.approx.end())},
                          {"detail", std::vector<double>(lv.detail.begin(), lv.detail.end())},
                          {"padded", lv.padded}});
    return {{"schema", kHaarSchema}, {"original_length", d.original_length}, {"levels", levels}};
}

std::string to_jsonl(const Dataset& data) {
    std::string out;
    for (const auto& t : data) {
        json j = {{"id", t.id}, {"label", to_string(t.label)}, {"trajectory", t.values}};
        if (!t.group.empty()) j["prompt"] = t.group;
        out += j.dump();
        out += '\n';
    }
    return out;
}

Dataset dataset_from_jsonl(const std::string& text) {
    Dataset data;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            fail(ErrorKind::SchemaError, "manifest line " + std::to_string(line_no) + " is not valid JSON");
        }
        try {
            LabeledTrajectory t;
            t.id = get<std::string>(j, "id");
            t.label = label_from_string(get<std::string>(j, "label"));
            t.values = number_list(j, "trajectory");
            if (j.contains("prompt")) t.group = get<std::string>(j, "prompt");
            data.push_back(std::move(t));
        } catch (const Error& e) {
            fail(ErrorKind::SchemaError, "manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return data;
}

std::string feature_csv(const FeatureMatrix& fm, const Dataset& data) {
    std::string out = "id";
    for (const auto& n : fm.names) out += "," + n;
    out += ",label\n";
    for (Eigen::Index r = 0; r < fm.values.rows(); ++r) {
        out += data[static_cast<std::size_t>(r)].id;
        for (Eigen::Index c = 0; c < fm.values.cols(); ++c) out += "," + format_double(fm.values(r, c));
        out += ",";
        out += to_string(data[static_cast<std::size_t>(r)].label);
        out += "\n";
    }
    return out;
}

json to_json(const TrainConfig& c) {
    return {{"n_trees", c.n_trees},
            {"max_features", c.max_features.to_string()},
            {"min_samples_split", c.min_samples_split},
            {"max_depth", c.max_depth ? json(*c.max_depth) : json(nullptr)},
            {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.n_trees = get<std::size_t>(j, "n_trees");
    c.max_features = MaxFeatures::parse(get<std::string>(j, "max_features"));
    c.min_samples_split = get<std::size_t>(j, "min_samples_split");
    if (!field(j, "max_depth").is_null()) c.max_depth = get<std::size_t>(j, "max_depth");
    c.seed = get<std::uint64_t>(j, "seed");
    return c;
}

json to_json(const ForestModel& model) {
    json trees = json::array();
    for (const auto& tree : model.trees) {
        json nodes = json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.natural, n.artifact}));
        trees.push_back(std::move(nodes));
    }
    return {{"schema", kModelSchema},
            {"config", to_json(model.config)},
            {"feature_names", model.feature_names},
            {"trees", trees},
            {"importances", model.importances}};
}

ForestModel forest_from_json(const json& j) {
    expect_schema(j, kModelSchema);
    ForestModel m;
    m.config = train_config_from_json(field(j, "config"));
    m.feature_names = get<std::vector<std::string>>(j, "feature_names");
    m.importances = number_list(j, "importances");
    if (m.importances.size() != m.feature_names.size()) schema_fail("importances", "length differs from feature_names");
    const json& trees = field(j, "trees");
    if (!trees.is_array() || trees.empty()) schema_fail("trees", "must be a non-empty array");
    const auto n_features = static_cast<std::int32_t>(m.feature_names.size());
    for (const auto& t : trees) {
        DecisionTree tree;
        if (!t.is_array() || t.empty()) schema_fail("trees", "each tree must be a non-empty node array");
        for (const auto& n : t) {
            if (!n.is_array() || n.size() != 6) schema_fail("trees", "node must have 6 entries");
            TreeNode node;
            node.feature = n[0].get<std::int32_t>();
            node.threshold = n[1].get<double>();
            node.left = n[2].get<std::int32_t>();
            node.right = n[3].get<std::int32_t>();
            node.natural = n[4].get<double>();
            node.artifact = n[5].get<double>();
            tree.nodes.push_back(node);
        }
        const auto count = static_cast<std::int32_t>(tree.nodes.size());
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) {
                if (!(node.natural + node.artifact > 0.0)) schema_fail("trees", "leaf with empty class counts");
            } else if (node.feature >= n_features || node.left <= 0 || node.right <= 0 || node.left >= count ||
                       node.right >= count) {
                schema_fail("trees", "node references an invalid feature or child");
            }
        }
        m.trees.push_back(std::move(tree));
    }
    if (m.trees.size() != m.config.n_trees) schema_fail("trees", "count differs from config.n_trees");
    return m;
}

json to_json(const TrajectoryClassifier& model) {
    json j = to_json(model.forest);
    json refs = json::array();
    for (const auto& t : model.reference)
        refs.push_back({{"id", t.id}, {"label", to_string(t.label)}, {"trajectory", t.values}});
    j["knn_reference"] = {{"k", model.features.k}, {"bins", model.features.bins}, {"trajectories", refs}};
    return j;
}

TrajectoryClassifier classifier_from_json(const json& j) {
    TrajectoryClassifier m;
    m.forest = forest_from_json(j);
    const json& ref = field(j, "knn_reference");
    m.features.k = get<int>(ref, "k");
    m.features.bins = get<int>(ref, "bins");
    const json& trajs = field(ref, "trajectories");
    if (!trajs.is_array()) schema_fail("trajectories", "must be an array");
    for (const auto& t : trajs)
        m.reference.push_back({get<std::string>(t, "id"), label_from_string(get<std::string>(t, "label")),
                               number_list(t, "trajectory"), {}});
    if (static_cast<std::size_t>(m.features.k) > m.reference.size()) schema_fail("k", "exceeds reference size");
    return m;
}

json to_json(const CvReport& r) {
    return {{"schema", kCvSchema},
            {"folds", r.folds},
            {"seed", r.seed},
            {"fold_accuracy", r.fold_accuracy},
            {"mean_accuracy", r.mean_accuracy},
            {"sem", r.sem},
            {"assignment", r.assignment}};
}

std::string cv_csv(const CvReport& r) {
    std::string out = "fold,accuracy\n";
    for (std::size_t f = 0; f < r.fold_accuracy.size(); ++f)
        out += std::to_string(f + 1) + "," + format_double(r.fold_accuracy[f]) + "\n";
    return out;
}

json to_json(const DeclineReport& r) {
    const auto group = [](const MeanSem& ms) { return json{{"mean", ms.mean}, {"sem", ms.sem}, {"n", ms.n}}; };
    json per = json::array();
    for (std::size_t i = 0; i < r.ids.size(); ++i)
        per.push_back({{"id", r.ids[i]}, {"label", to_string(r.labels[i])}, {"dmax", r.dmax[i]}});
    return {{"schema", kDeclineSchema},
            {"window", {{"start", r.window.start}, {"end", r.window.end},
                        {"order", r.window.diffusion_order ? "diffusion" : "sampling"}}},
            {"natural", group(r.natural)},
            {"artifact", group(r.artifact)},
            {"gap", r.gap()},
            {"gap_over_max_sem", std::max(r.natural.sem, r.artifact.sem) > 0.0
                                     ? json(r.gap() / std::max(r.natural.sem, r.artifact.sem))
                                     : json(nullptr)},
            {"trajectories", per}};
}

std::string decline_csv(const DeclineReport& r) {
    std::string out = "id,label,dmax\n";
    for (std::size_t i = 0; i < r.ids.size(); ++i)
        out += r.ids[i] + "," + to_string(r.labels[i]) + "," + format_double(r.dmax[i]) + "\n";
    return out;
}

json importance_json(const std::vector<double>& imp, const TrainConfig& config) {
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < imp.size(); ++i)
        if (imp[i] > imp[argmax]) argmax = i;
    return {{"schema", kImportanceSchema},
            {"config", to_json(config)},
            {"position_order", "sampling"},
            {"importances", imp},
            {"argmax_position", argmax + 1}};
}

std::string importance_csv(const std::vector<double>& imp) {
    std::string out = "position,diffusion_t,importance\n";
    for (std::size_t i = 0; i < imp.size(); ++i)
        out += std::to_string(i + 1) + "," + std::to_string(imp.size() - i) + "," + format_double(imp[i]) + "\n";
    return out;
}

json to_json(const AggregateTrajectory& agg, double signal_std) {
    return {{"schema", kAggregateSchema},
            {"model_tag", agg.model_tag},
            {"n_runs", agg.n_runs},
            {"snr_definition", "signal_std^2 / sigma^2"},
            {"signal_std", signal_std},
            {"snr", agg.snr},
            {"mean", agg.mean},
            {"sem", agg.sem}};
}

AggregateTrajectory aggregate_from_json(const json& j) {
    expect_schema(j, kAggregateSchema);
    AggregateTrajectory a;
    a.model_tag = get<std::string>(j, "model_tag");
    a.n_runs = j.contains("n_runs") ? get<std::size_t>(j, "n_runs") : 0;
    a.snr = number_list(j, "snr");
    a.mean = number_list(j, "mean");
    a.sem = number_list(j, "sem");
    if (a.mean.size() != a.snr.size()) schema_fail("mean", "length differs from snr");
    if (a.sem.size() != a.snr.size()) schema_fail("sem", "length differs from snr");
    return a;
}

std::string aggregate_csv(const AggregateTrajectory& agg) {
    std::string out = "snr,mean,sem\n";
    for (std::size_t s = 0; s < agg.size(); ++s)
        out += format_double(agg.snr[s]) + "," + format_double(agg.mean[s]) + "," + format_double(agg.sem[s]) + "\n";
    return out;
}

json to_json(const DominanceReport& r) {
    return {{"schema", kCompareSchema},
            {"band", {r.band.lo, r.band.hi}},
            {"steps", r.steps},
            {"a_lower", r.a_lower},
            {"fraction_a_lower", r.fraction_a_lower},
            {"significant", r.significant},
            {"fraction_significant", r.fraction_significant},
            {"min_gap", r.min_gap},
            {"snr", r.snr},
            {"gap", r.gap}};
}

std::string pairs_csv(const std::vector<PairSelection>& pairs) {
    std::string out = "prompt,highest_id,highest_prob,lowest_id,lowest_prob\n";
    for (const auto& p : pairs)
        out += p.group + "," + p.highest + "," + format_double(p.highest_probability) + "," + p.lowest + "," +
               format_double(p.lowest_probability) + "\n";
    return out;
}

}  // namespace trajscope::io
