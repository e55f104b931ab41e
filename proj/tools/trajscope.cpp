#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "trajscope/analysis.hpp"
#include "trajscope/features.hpp"
#include "trajscope/forest.hpp"
#include "trajscope/io.hpp"
#include "trajscope/modeleval.hpp"
#include "trajscope/parallel.hpp"
#include "trajscope/rng.hpp"
#include "trajscope/synth.hpp"
#include "trajscope/wavelet.hpp"

namespace fs = std::filesystem;
using namespace trajscope;
using io::json;

namespace {

struct Run {
    std::string command;
    std::vector<std::string> argv;
    fs::path out = ".";
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    json config = json::object();

    void write(const std::string& name, const std::string& content) {
        io::write_atomic(out / name, content);
        outputs.push_back(name);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
};

Dataset load_dataset(Run& run, const std::string& path) {
    run.inputs.push_back(path);
    auto data = io::dataset_from_jsonl(io::read_text(path));
    require(!data.empty(), path + " holds no trajectories");
    return data;
}

json load_json(Run& run, const std::string& path) {
    run.inputs.push_back(path);
    return io::read_json(path);
}

// Validators turn malformed a:b specs into usage errors.
const CLI::Validator window_spec(
    [](std::string& s) {
        try {
            Window::parse(s);
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string();
    },
    "A:B");

const CLI::Validator band_spec(
    [](std::string& s) {
        try {
            Band::parse(s);
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string();
    },
    "LO:HI");

const CLI::Validator max_features_spec(
    [](std::string& s) {
        try {
            MaxFeatures::parse(s);
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string();
    },
    "sqrt|all|N");

struct Options {
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string data, model, input, a, b, runs, sigmas, manifest, id, tag = "model";
    std::size_t natural = 255, artifact = 255, length = 49, prompts = 0;
    double target_natural = 0.017, target_artifact = 0.027, noise_scale = 0.0, depth_scale = 0.0,
           depth_multiplier = 1.0;
    std::size_t trees = 1000, folds = 10, min_split = 2, max_depth = 0;
    int k = 5, bins = 10;
    std::string max_features = "sqrt";
    std::string window = "13:34", band = "0.05:10000", compare_band = "0.8:700";
    bool diffusion_order = false;
    double threshold = 0.5, signal_std = 0.5;
    // evalsim
    long dim = 4, components = 4, steps = 50;
    double spread = 0.5, component_var = 0.01, perturb = 0.0;
    std::uint64_t mixture_seed = 1, model_seed = 2;
    std::size_t n_runs = 1000;
    std::string schedule = "cosine";
    std::size_t levels = 0;
};

PipelineConfig pipeline(const Options& o) {
    PipelineConfig p;
    p.features.k = o.k;
    p.features.bins = o.bins;
    p.forest.n_trees = o.trees;
    p.forest.seed = o.seed;
    p.forest.min_samples_split = o.min_split;
    p.forest.max_features = MaxFeatures::parse(o.max_features);
    if (o.max_depth > 0) p.forest.max_depth = o.max_depth;
    return p;
}

void cmd_simulate(const Options& o, Run& run) {
    SynthConfig cfg;
    cfg.n_natural = o.natural;
    cfg.n_artifact = o.artifact;
    cfg.length = o.length;
    cfg.target_dmax_natural = o.target_natural;
    cfg.target_dmax_artifact = o.target_artifact;
    cfg.noise_scale = o.noise_scale;
    cfg.depth_scale = o.depth_scale;
    cfg.depth_multiplier = o.depth_multiplier;
    cfg.drop_window = Window::parse(o.window);
    cfg.prompts = o.prompts;
    cfg.seed = o.seed;
    const auto res = synth_dataset(cfg);
    run.write("dataset.jsonl", io::to_jsonl(res.data));
    run.write_json("synth.json", {{"schema", "synth/1"},
                                  {"n_natural", cfg.n_natural},
                                  {"n_artifact", cfg.n_artifact},
                                  {"length", cfg.length},
                                  {"target_dmax_natural", cfg.target_dmax_natural},
                                  {"target_dmax_artifact", cfg.target_dmax_artifact},
                                  {"noise_scale", res.noise_scale},
                                  {"depth_scale", res.depth_scale},
                                  {"depth_multiplier", cfg.depth_multiplier},
                                  {"mean_dmax_natural", res.mean_dmax_natural},
                                  {"mean_dmax_artifact", res.mean_dmax_artifact}});
    std::printf("%zu trajectories, mean D_max natural %.5f artifact %.5f\n", res.data.size(), res.mean_dmax_natural,
                res.mean_dmax_artifact);
}

NoiseSchedule make_schedule(const Options& o) {
    const int t = static_cast<int>(o.steps);
    if (o.schedule == "linear") return NoiseSchedule::linear_ramp(t);
    return NoiseSchedule::cosine(t);
}

void cmd_evalsim(const Options& o, Run& run) {
    const auto mix = GaussianMixture::hypercube(o.dim, o.components, o.spread, o.component_var, o.mixture_seed);
    const auto schedule = make_schedule(o);
    const Denoiser denoiser = o.perturb > 0.0 ? perturbed_denoiser(mix, o.perturb, o.model_seed) : exact_denoiser(mix);
    const auto runs = rmse_runs(denoiser, o.dim, schedule, o.n_runs, o.seed, default_thread_count());
    std::string csv;
    for (const auto& r : runs) {
        for (std::size_t i = 0; i < r.size(); ++i) csv += (i ? "," : "") + io::format_double(r[i]);
        csv += "\n";
    }
    run.write("runs.csv", csv);
    run.write_json("sigmas.json", {{"schema", "sigmas/1"}, {"sigmas", ddim_pair_sigmas(schedule)}});
    run.write_json("sequence.json", io::to_json(ddim_sample(denoiser, o.dim, schedule, derive_seed(o.seed, 0))));
}

void cmd_trajectory(const Options& o, Run& run) {
    const auto seq = io::sequence_from_json(load_json(run, o.input));
    run.write_json("trajectory.json", io::to_json(compute_trajectory(seq, rmse_metric())));
}

std::vector<double> trajectory_values(const Options& o, Run& run) {
    if (!o.input.empty()) return io::trajectory_from_json(load_json(run, o.input)).values;
    require(!o.data.empty(), "haar needs --in or --data with --id");
    for (const auto& t : load_dataset(run, o.data))
        if (t.id == o.id) return t.values;
    fail(ErrorKind::InvalidInput, "no trajectory with id " + o.id);
}

void cmd_haar(const Options& o, Run& run) {
    const auto values = trajectory_values(o, run);
    const auto d = haar_decompose(values, o.levels > 0 ? std::optional<std::size_t>(o.levels) : std::nullopt);
    run.write_json("haar.json", io::to_json(d));
}

void cmd_features(const Options& o, Run& run) {
    const auto data = load_dataset(run, o.data);
    const auto fm = dataset_features(data, pipeline(o).features, default_thread_count());
    run.write("features.csv", io::feature_csv(fm, data));
}

void cmd_train(const Options& o, Run& run) {
    const auto model = train_classifier(load_dataset(run, o.data), pipeline(o), default_thread_count());
    run.write_json("model.json", io::to_json(model));
}

void cmd_predict(const Options& o, Run& run) {
    const auto model = io::classifier_from_json(load_json(run, o.model));
    const auto data = load_dataset(run, o.data);
    std::vector<double> probs(data.size());
    parallel_for(data.size(), default_thread_count(),
                 [&](std::size_t i) { probs[i] = model.probability(data[i].values); });
    json rows = json::array();
    std::string csv = "id,probability,predicted\n";
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Label l = label_for(probs[i], o.threshold);
        correct += l == data[i].label;
        rows.push_back({{"id", data[i].id}, {"probability", probs[i]}, {"predicted", to_string(l)}});
        csv += data[i].id + "," + io::format_double(probs[i]) + "," + to_string(l) + "\n";
    }
    run.write_json("predictions.json", {{"schema", "predict/1"}, {"threshold", o.threshold}, {"predictions", rows}});
    run.write("predictions.csv", csv);
    std::printf("agreement with manifest labels: %.4f\n", static_cast<double>(correct) / data.size());
}

void cmd_cv(const Options& o, Run& run) {
    const auto data = load_dataset(run, o.data);
    const auto rep = stratified_kfold_cv(data, o.folds, o.seed, pipeline(o), default_thread_count());
    run.write_json("cv_report.json", io::to_json(rep));
    run.write("cv_folds.csv", io::cv_csv(rep));
    std::printf("accuracy %.4f +/- %.4f (SEM, %zu folds)\n", rep.mean_accuracy, rep.sem, rep.folds);
}

void cmd_decline(const Options& o, Run& run) {
    auto w = Window::parse(o.window);
    w.diffusion_order = o.diffusion_order;
    const auto rep = group_decline_stats(load_dataset(run, o.data), w);
    run.write_json("decline.json", io::to_json(rep));
    run.write("decline.csv", io::decline_csv(rep));
    std::printf("natural %.5f +/- %.5f, artifact %.5f +/- %.5f\n", rep.natural.mean, rep.natural.sem,
                rep.artifact.mean, rep.artifact.sem);
}

void cmd_importance(const Options& o, Run& run) {
    const auto cfg = pipeline(o).forest;
    const auto imp = timestep_importance(load_dataset(run, o.data), cfg, default_thread_count());
    run.write_json("importance.json", io::importance_json(imp, cfg));
    run.write("importance.csv", io::importance_csv(imp));
}

std::vector<std::vector<double>> read_runs(Run& run, const std::string& path) {
    run.inputs.push_back(path);
    std::vector<std::vector<double>> out;
    std::istringstream in(io::read_text(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                fail(ErrorKind::SchemaError, path + " line " + std::to_string(line_no) + ": not a number");
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

void cmd_aggregate(const Options& o, Run& run) {
    const auto runs = read_runs(run, o.runs);
    const json sj = load_json(run, o.sigmas);
    if (!sj.contains("sigmas") || !sj["sigmas"].is_array())
        fail(ErrorKind::SchemaError, "field \"sigmas\": missing or not an array");
    SnrSchedule schedule{sj["sigmas"].get<std::vector<double>>(), o.signal_std};
    const auto agg = aggregate(runs, schedule, o.tag);
    const auto in_band = band_filter(agg, Band::parse(o.band));
    run.write_json("aggregate.json", io::to_json(agg, o.signal_std));
    run.write("aggregate.csv", io::aggregate_csv(agg));
    run.write("aggregate_band.csv", io::aggregate_csv(in_band));
}

void cmd_compare(const Options& o, Run& run) {
    const auto a = io::aggregate_from_json(load_json(run, o.a));
    const auto b = io::aggregate_from_json(load_json(run, o.b));
    const auto rep = compare(a, b, Band::parse(o.compare_band));
    run.write_json("compare.json", io::to_json(rep));
    std::printf("%s lower on %.1f%% of %zu in-band steps, significant on %.1f%%\n", a.model_tag.c_str(),
                100 * rep.fraction_a_lower, rep.steps, 100 * rep.fraction_significant);
}

void cmd_pairs(const Options& o, Run& run) {
    const auto model = io::classifier_from_json(load_json(run, o.model));
    const auto pairs = pair_selection(load_dataset(run, o.data), model, default_thread_count());
    json rows = json::array();
    for (const auto& p : pairs)
        rows.push_back({{"prompt", p.group},
                        {"highest", p.highest},
                        {"highest_probability", p.highest_probability},
                        {"lowest", p.lowest},
                        {"lowest_probability", p.lowest_probability}});
    run.write_json("pairs.json", {{"schema", "pairs/1"}, {"pairs", rows}});
    run.write("pairs.csv", io::pairs_csv(pairs));
}

json option_snapshot(const CLI::App* sub) {
    json cfg = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
        const auto key = opt->get_single_name();
        if (opt->get_expected_min() == 0) {
            cfg[key] = opt->count() > 0;
        } else if (opt->count() > 0) {
            cfg[key] = opt->as<std::string>();
        } else {
            cfg[key] = opt->get_default_str();
        }
    }
    return cfg;
}

int execute(std::vector<std::string> args, bool allow_replay);

int replay(const std::string& manifest, const std::string& out_override) {
    const json m = io::read_json(manifest);
    if (!m.contains("schema") || m["schema"] != io::kManifestSchema)
        fail(ErrorKind::SchemaError, "field \"schema\": expected \"runmanifest/1\"");
    if (!m.contains("argv") || !m["argv"].is_array()) fail(ErrorKind::SchemaError, "field \"argv\": missing");
    auto args = m["argv"].get<std::vector<std::string>>();
    if (!out_override.empty()) {
        bool replaced = false;
        for (std::size_t i = 0; i + 1 < args.size(); ++i)
            if (args[i] == "--out") {
                args[i + 1] = out_override;
                replaced = true;
            }
        if (!replaced) {
            args.push_back("--out");
            args.push_back(out_override);
        }
    }
    return execute(args, false);
}

int execute(std::vector<std::string> args, bool allow_replay) {
    CLI::App app{"Similarity-trajectory analysis of diffusion sampling runs", "trajscope"};
    app.set_version_flag("--version", TRAJSCOPE_VERSION);
    app.require_subcommand(1);
    Options o;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    };
    const auto add_data = [&](CLI::App* sub) {
        sub->add_option("--data", o.data, "Dataset manifest (JSONL)")->required();
    };
    const auto add_pipeline = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
        sub->add_option("--trees", o.trees, "Trees per forest")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--k", o.k, "Neighbours for the kNN feature")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--bins", o.bins, "Entropy histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--max-features", o.max_features, "Split candidates per node")
            ->capture_default_str()
            ->check(max_features_spec);
        sub->add_option("--min-samples-split", o.min_split)->capture_default_str()->check(CLI::Range(2, 1 << 30));
        sub->add_option("--max-depth", o.max_depth, "0 means unlimited")->capture_default_str();
    };

    std::map<CLI::App*, void (*)(const Options&, Run&)> handlers;

    auto* simulate = app.add_subcommand("simulate", "Generate a calibrated synthetic dataset");
    add_common(simulate);
    simulate->add_option("--seed", o.seed)->capture_default_str();
    simulate->add_option("--natural", o.natural)->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--artifact", o.artifact)->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--length", o.length)->capture_default_str()->check(CLI::Range(4, 100000));
    simulate->add_option("--prompts", o.prompts, "Prompt groups assigned round-robin")->capture_default_str();
    simulate->add_option("--target-dmax-natural", o.target_natural)->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--target-dmax-artifact", o.target_artifact)->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--noise-scale", o.noise_scale, "0 calibrates")->capture_default_str()->check(CLI::NonNegativeNumber);
    simulate->add_option("--depth-scale", o.depth_scale, "0 calibrates")->capture_default_str()->check(CLI::NonNegativeNumber);
    simulate->add_option("--depth-multiplier", o.depth_multiplier)->capture_default_str()->check(CLI::NonNegativeNumber);
    simulate->add_option("--window", o.window, "Drop window")->capture_default_str()->check(window_spec);
    handlers[simulate] = cmd_simulate;

    auto* evalsim = app.add_subcommand("evalsim", "RMSE trajectories of an analytic mixture sampler");
    add_common(evalsim);
    evalsim->add_option("--seed", o.seed)->capture_default_str();
    evalsim->add_option("--runs", o.n_runs)->capture_default_str()->check(CLI::Range(2, 10000000));
    evalsim->add_option("--dim", o.dim)->capture_default_str()->check(CLI::Range(1, 4096));
    evalsim->add_option("--components", o.components)->capture_default_str()->check(CLI::Range(1, 4096));
    evalsim->add_option("--spread", o.spread)->capture_default_str();
    evalsim->add_option("--component-var", o.component_var)->capture_default_str()->check(CLI::PositiveNumber);
    evalsim->add_option("--steps", o.steps)->capture_default_str()->check(CLI::Range(2, 100000));
    evalsim->add_option("--schedule", o.schedule)->capture_default_str()->check(CLI::IsMember({"cosine", "linear"}));
    evalsim->add_option("--perturb", o.perturb, "Mis-fit magnitude, 0 for the exact model")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    evalsim->add_option("--mixture-seed", o.mixture_seed)->capture_default_str();
    evalsim->add_option("--model-seed", o.model_seed)->capture_default_str();
    handlers[evalsim] = cmd_evalsim;

    auto* trajectory = app.add_subcommand("trajectory", "RMSE similarity trajectory of a denoised sequence");
    add_common(trajectory);
    trajectory->add_option("--in", o.input, "Sequence JSON")->required();
    handlers[trajectory] = cmd_trajectory;

    auto* haar = app.add_subcommand("haar", "Dump the Haar decomposition of one trajectory");
    add_common(haar);
    haar->add_option("--in", o.input, "Trajectory JSON");
    haar->add_option("--data", o.data, "Dataset manifest");
    haar->add_option("--id", o.id, "Trajectory id inside --data");
    haar->add_option("--levels", o.levels, "0 means full depth")->capture_default_str();
    handlers[haar] = cmd_haar;

    auto* features = app.add_subcommand("features", "Feature matrix CSV");
    add_common(features);
    add_data(features);
    features->add_option("--k", o.k)->capture_default_str()->check(CLI::PositiveNumber);
    features->add_option("--bins", o.bins)->capture_default_str()->check(CLI::PositiveNumber);
    handlers[features] = cmd_features;

    auto* train = app.add_subcommand("train", "Train the classifier");
    add_common(train);
    add_data(train);
    add_pipeline(train);
    handlers[train] = cmd_train;

    auto* predict = app.add_subcommand("predict", "Artifact probabilities");
    add_common(predict);
    add_data(predict);
    predict->add_option("--model", o.model)->required();
    predict->add_option("--threshold", o.threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    handlers[predict] = cmd_predict;

    auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
    add_common(cv);
    add_data(cv);
    add_pipeline(cv);
    cv->add_option("--folds", o.folds)->capture_default_str()->check(CLI::Range(2, 1000));
    handlers[cv] = cmd_cv;

    auto* decline = app.add_subcommand("decline", "Windowed max-decline statistics per class");
    add_common(decline);
    add_data(decline);
    decline->add_option("--window", o.window)->capture_default_str()->check(window_spec);
    decline->add_flag("--diffusion-order", o.diffusion_order, "Window counts from the last sampling step");
    handlers[decline] = cmd_decline;

    auto* importance = app.add_subcommand("importance", "Per-position feature importance");
    add_common(importance);
    add_data(importance);
    add_pipeline(importance);
    handlers[importance] = cmd_importance;

    auto* agg = app.add_subcommand("aggregate", "Mean and SEM over runs");
    add_common(agg);
    agg->add_option("--runs", o.runs, "CSV, one run per line")->required();
    agg->add_option("--sigmas", o.sigmas, "JSON with a sigmas array")->required();
    agg->add_option("--signal-std", o.signal_std)->capture_default_str()->check(CLI::PositiveNumber);
    agg->add_option("--band", o.band)->capture_default_str()->check(band_spec);
    agg->add_option("--tag", o.tag)->capture_default_str();
    handlers[agg] = cmd_aggregate;

    auto* cmp = app.add_subcommand("compare", "Is model A below model B inside the band?");
    add_common(cmp);
    cmp->add_option("--a", o.a)->required();
    cmp->add_option("--b", o.b)->required();
    cmp->add_option("--band", o.compare_band)->capture_default_str()->check(band_spec);
    handlers[cmp] = cmd_compare;

    auto* pairs = app.add_subcommand("pairs", "Highest and lowest probability per prompt");
    add_common(pairs);
    add_data(pairs);
    pairs->add_option("--model", o.model)->required();
    handlers[pairs] = cmd_pairs;

    std::string replay_out;
    CLI::App* rep = nullptr;
    if (allow_replay) {
        rep = app.add_subcommand("replay", "Re-run a recorded command");
        rep->add_option("manifest", o.manifest)->required();
        rep->add_option("--out", replay_out, "Override the recorded output directory");
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (rep && rep->parsed()) return replay(o.manifest, replay_out);

    for (auto& [sub, handler] : handlers) {
        if (!sub->parsed()) continue;
        Run run;
        run.command = sub->get_name();
        run.argv = args;
        run.out = o.out;
        run.seed = o.seed;
        run.config = option_snapshot(sub);
        fs::create_directories(run.out);
        handler(o, run);
        json manifest = {{"schema", io::kManifestSchema},
                         {"tool_version", TRAJSCOPE_VERSION},
                         {"command", run.command},
                         {"argv", run.argv},
                         {"seed", run.seed},
                         {"config", run.config},
                         {"inputs", run.inputs},
                         {"outputs", run.outputs}};
        io::write_atomic(run.out / "run_manifest.json", manifest.dump(2) + "\n");
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return execute(args, true);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
