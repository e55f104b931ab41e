// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "trajscope/analysis.hpp"
#include "trajscope/features.hpp"
#include "trajscope/forest.hpp"
#include "trajscope/io.hpp"
#include "trajscope/modeleval.hpp"
#include "trajscope/parallel.hpp"
#include "trajscope/rng.hpp"
#include "trajscope/synth.hpp"
#include "trajscope/wavelet.hpp"

using namespace trajscope;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && secs > limit_s) {
        out.pass = false;
        out.detail += " [over time limit " + std::to_string(limit_s) + " s]";
    }
    if (!out.pass) ++failures;
    std::printf("%s %2d %-34s %8.2f s  %s\n", out.pass ? "PASS" : "FAIL", id, name, secs, out.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome haar_correctness() {
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> z(2 + rng.below(127));
        for (auto& v : z) v = rng.uniform(-10, 10);
        const auto rec = haar_reconstruct(haar_decompose(z));
        for (std::size_t j = 0; j < z.size(); ++j) worst = std::max(worst, std::abs(rec(j) - z[j]));
    }
    std::size_t mismatches = 0, checked = 0;
    for (std::size_t n : {2, 4, 8, 16, 32, 64, 128}) {
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<double> z(n);
            for (auto& v : z) v = rng.uniform(-10, 10);
            const auto d = haar_decompose(z);
            for (std::size_t lv = 1; lv <= d.depth(); ++lv)
                for (std::size_t k = 1; k <= static_cast<std::size_t>(d.levels[lv - 1].detail.size()); ++k) {
                    ++checked;
                    mismatches += d.levels[lv - 1].detail(k - 1) != oracle::haar_detail(z, lv, k);
                    mismatches += d.levels[lv - 1].approx(k - 1) != oracle::haar_approx(z, lv, k);
                }
        }
    }
    return {worst <= 1e-12 && mismatches == 0,
            fmt("max reconstruction error %.2e; %zu/%zu dyadic coefficients differ", worst, mismatches, checked)};
}

Outcome dmax_oracle() {
    Rng rng(102);
    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> z(49);
        for (auto& v : z) v = rng.uniform();
        mismatches += max_decline(std::span<const double>(z)) != oracle::max_decline(z);
    }
    return {mismatches == 0, fmt("%zu/1000 mismatches", mismatches)};
}

Outcome statistic_oracles() {
    Rng rng(103);
    double worst = 0.0;
    std::size_t count_mismatch = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(2 + rng.below(40));
        for (auto& x : v) x = i % 4 == 0 ? double(rng.below(5)) - 2.0 : rng.normal();
        const auto b = stat_bundle(v, 10);
        const double want[] = {oracle::entropy(v, 10),          oracle::percentile(v, 5),  oracle::percentile(v, 25),
                               oracle::percentile(v, 50),       oracle::percentile(v, 75), oracle::percentile(v, 95),
                               oracle::mean(v),                 oracle::population_std(v)};
        const double got[] = {b.entropy, b.p5, b.p25, b.p50, b.p75, b.p95, b.mean, b.std};
        for (int s = 0; s < 8; ++s) worst = std::max(worst, std::abs(got[s] - want[s]));
        count_mismatch += b.mean_crossings != double(oracle::mean_crossings(v));
        count_mismatch += b.zero_crossings != double(oracle::zero_crossings(v));
    }
    return {worst <= 1e-10 && count_mismatch == 0,
            fmt("max deviation %.2e; %zu crossing-count mismatches", worst, count_mismatch)};
}

Outcome denoised_algebra() {
    Rng rng(104);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(16));
        Eigen::VectorXd x0(n), eps(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            x0(j) = rng.normal();
            eps(j) = rng.normal();
        }
        const double abar = rng.uniform(1e-3, 1.0);
        const Eigen::VectorXd xt = std::sqrt(abar) * x0 + std::sqrt(1 - abar) * eps;
        worst = std::max(worst, (ddim_denoised(xt, eps, abar) - x0).cwiseAbs().maxCoeff());
    }
    std::size_t heun_bad = 0;
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd x(4), n1(4), n2(4);
        for (int j = 0; j < 4; ++j) {
            x(j) = rng.normal();
            n1(j) = rng.normal();
            n2(j) = rng.normal();
        }
        const double sigma = rng.uniform(0.0, 80.0);
        heun_bad += heun_denoised(x, n1, n2, 0.0) != x;
        heun_bad += heun_denoised(x, n1, n1, sigma) != Eigen::VectorXd(x - sigma * n1);
    }
    return {worst <= 1e-10 && heun_bad == 0, fmt("DDIM round-trip max error %.2e; %zu Heun identity failures", worst, heun_bad)};
}

Outcome decline_calibration() {
    SynthConfig cfg;
    cfg.seed = 2024;
    const auto res = synth_dataset(cfg);
    const auto rep = group_decline_stats(res.data, cfg.drop_window);
    const double max_sem = std::max(rep.natural.sem, rep.artifact.sem);
    const bool nat_ok = std::abs(rep.natural.mean - 0.017) <= 0.0017;
    const bool art_ok = std::abs(rep.artifact.mean - 0.027) <= 0.0027;
    const bool gap_ok = rep.gap() > 10 * max_sem;
    return {nat_ok && art_ok && gap_ok && rep.natural.n == 255 && rep.artifact.n == 255,
            fmt("natural %.5f +/- %.5f, artifact %.5f +/- %.5f, gap/maxSEM %.1f", rep.natural.mean, rep.natural.sem,
                rep.artifact.mean, rep.artifact.sem, rep.gap() / max_sem)};
}

Outcome pipeline_cv() {
    const std::size_t threads = default_thread_count();
    PipelineConfig p;
    p.forest.seed = 1;
    SynthConfig cfg;
    cfg.seed = 7;
    const auto easy = stratified_kfold_cv(synth_dataset(cfg).data, 10, 1, p, threads);
    cfg.depth_multiplier = 0.5;
    const auto hard = stratified_kfold_cv(synth_dataset(cfg).data, 10, 1, p, threads);

    cfg.depth_multiplier = 1.0;
    Dataset base = synth_dataset(cfg).data;
    std::string perm_detail;
    bool perm_ok = true;
    double perm_sum = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        Dataset shuffled = base;
        std::vector<Label> labels;
        for (const auto& t : base) labels.push_back(t.label);
        Rng rng(900 + s);
        rng.shuffle(labels.begin(), labels.end());
        for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
        p.forest.seed = 100 + s;
        const double acc = stratified_kfold_cv(shuffled, 10, s, p, threads).mean_accuracy;
        perm_ok = perm_ok && std::abs(acc - 0.5) <= 0.1;
        perm_sum += acc;
        perm_detail += fmt(" %.3f", acc);
    }
    const bool ok = easy.mean_accuracy >= 0.85 && hard.mean_accuracy >= 0.65 && hard.mean_accuracy <= 0.95 &&
                    perm_ok && std::abs(perm_sum / 5 - 0.5) <= 0.1;
    return {ok, fmt("default %.3f, halved depth %.3f, permuted%s", easy.mean_accuracy, hard.mean_accuracy,
                    perm_detail.c_str())};
}

Outcome importance_window() {
    int inside = 0;
    double worst_sum = 0.0;
    std::string where;
    for (std::uint64_t s = 0; s < 10; ++s) {
        SynthConfig cfg;
        cfg.seed = 300 + s;
        TrainConfig tc;
        tc.seed = s;
        const auto imp = timestep_importance(synth_dataset(cfg).data, tc, default_thread_count());
        double sum = 0.0;
        for (double v : imp) sum += v;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        const auto pos = static_cast<std::size_t>(std::max_element(imp.begin(), imp.end()) - imp.begin()) + 1;
        inside += pos >= 13 && pos <= 34;
        where += " " + std::to_string(pos);
    }
    return {inside >= 9 && worst_sum <= 1e-9, fmt("argmax positions%s; |sum-1| <= %.1e", where.c_str(), worst_sum)};
}

Outcome model_fit_trend() {
    const auto mix = GaussianMixture::hypercube(4, 4, 0.5, 0.01, 1);
    const auto schedule = NoiseSchedule::cosine(50);
    const SnrSchedule snr{ddim_pair_sigmas(schedule), 0.5};
    const std::size_t threads = default_thread_count();
    const auto well = aggregate(rmse_runs(exact_denoiser(mix), 4, schedule, 5000, 11, threads), snr, "well-fit");
    const auto mis =
        aggregate(rmse_runs(perturbed_denoiser(mix, 0.1, 5), 4, schedule, 5000, 11, threads), snr, "mis-fit");
    const auto rep = compare(well, mis, Band{0.8, 700});
    return {rep.fraction_a_lower > 0.8 && rep.fraction_significant > 0.5,
            fmt("%zu in-band steps: well-fit lower on %.1f%%, gap > max SEM on %.1f%%", rep.steps,
                100 * rep.fraction_a_lower, 100 * rep.fraction_significant)};
}

Outcome determinism() {
    SynthConfig cfg;
    cfg.seed = 55;
    cfg.prompts = 10;
    const auto d1 = io::to_jsonl(synth_dataset(cfg).data);
    const auto d2 = io::to_jsonl(synth_dataset(cfg).data);
    const auto data = io::dataset_from_jsonl(d1);

    PipelineConfig p;
    p.forest.n_trees = 200;
    p.forest.seed = 3;
    const auto cv1 = io::to_json(stratified_kfold_cv(data, 10, 4, p, 1)).dump();
    const auto cv4 = io::to_json(stratified_kfold_cv(data, 10, 4, p, 4)).dump();
    const auto cv1b = io::to_json(stratified_kfold_cv(data, 10, 4, p, 1)).dump();

    const auto fm = dataset_features(data, p.features, 1);
    std::vector<Label> labels;
    for (const auto& t : data) labels.push_back(t.label);
    const auto f1 = io::to_json(train_forest(fm.values, labels, p.forest, fm.names, 1)).dump();
    const auto f4 = io::to_json(train_forest(fm.values, labels, p.forest, fm.names, 4)).dump();
    const auto f1b = io::to_json(train_forest(fm.values, labels, p.forest, fm.names, 1)).dump();
    const bool sim_ok = d1 == d2, cv_ok = cv1 == cv4 && cv1 == cv1b, rf_ok = f1 == f4 && f1 == f1b;
    return {sim_ok && cv_ok && rf_ok, fmt("simulate %s, cv %s, train_forest %s", sim_ok ? "identical" : "DIFFERS",
                                          cv_ok ? "identical" : "DIFFERS", rf_ok ? "identical" : "DIFFERS")};
}

Outcome posterior_oracle() {
    Rng rng(110);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const std::size_t k = 1 + rng.below(4);
        std::vector<oracle::Component1d> comps(k);
        GaussianMixture mix;
        mix.weights.resize(k);
        mix.means.resize(1, k);
        mix.scales.resize(k);
        double wsum = 0.0;
        for (auto& c : comps) {
            c = {rng.uniform(0.2, 1.0), rng.uniform(-2, 2), rng.uniform(0.01, 0.5)};
            wsum += c.weight;
        }
        for (std::size_t c = 0; c < k; ++c) {
            comps[c].weight /= wsum;
            mix.weights(c) = comps[c].weight;
            mix.means(0, c) = comps[c].mean;
            mix.scales(c) = comps[c].var;
        }
        mix.weights /= mix.weights.sum();
        const double abar = rng.uniform(0.05, 0.95), x = rng.uniform(-2, 2);
        const double got = gmm_posterior_mean(Eigen::VectorXd::Constant(1, x), abar, mix)(0);
        worst = std::max(worst, std::abs(got - oracle::gmm_posterior_mean_1d(comps, x, abar)));
    }
    return {worst <= 1e-6, fmt("max deviation %.2e over 50 cases", worst)};
}

}  // namespace

int main() {
    criterion(1, "Haar correctness", 5, haar_correctness);
    criterion(2, "D_max oracle equivalence", 5, dmax_oracle);
    criterion(3, "statistic oracles", 5, statistic_oracles);
    criterion(4, "denoised-state algebra", 0, denoised_algebra);
    criterion(5, "decline statistics calibration", 10, decline_calibration);
    criterion(6, "pipeline cross-validation", 180, pipeline_cv);
    criterion(7, "timestep importance window", 0, importance_window);
    criterion(8, "well-fit vs mis-fit trend", 120, model_fit_trend);
    criterion(9, "determinism", 0, determinism);
    criterion(10, "posterior mean oracle", 0, posterior_oracle);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
