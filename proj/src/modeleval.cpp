#include "trajscope/modeleval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trajscope/error.hpp"

namespace trajscope {

double snr_at(double sigma, double signal_std) {
    require(sigma > 0.0, "sigma must be positive");
    require(signal_std > 0.0, "signal_std must be positive");
    return (signal_std * signal_std) / (sigma * sigma);
}

void SnrSchedule::validate() const {
    require(signal_std > 0.0, "signal_std must be positive");
    for (double s : sigmas) require(s > 0.0 && std::isfinite(s), "sigmas must be positive and finite");
}

std::vector<double> SnrSchedule::snr() const {
    validate();
    std::vector<double> out;
    out.reserve(sigmas.size());
    for (double s : sigmas) out.push_back(snr_at(s, signal_std));
    return out;
}

Band Band::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    require(colon != std::string::npos, "band must look like lo:hi");
    Band b;
    try {
        b.lo = std::stod(spec.substr(0, colon));
        b.hi = std::stod(spec.substr(colon + 1));
    } catch (...) {
        fail(ErrorKind::InvalidInput, "band must look like lo:hi, got " + spec);
    }
    require(b.lo < b.hi, "band needs lo < hi");
    return b;
}

AggregateTrajectory aggregate(const std::vector<std::vector<double>>& runs, const SnrSchedule& schedule,
                              std::string model_tag) {
    require(runs.size() >= 2, "aggregation needs at least 2 runs");
    const std::size_t steps = runs.front().size();
    require(steps > 0, "runs are empty");
    require(schedule.sigmas.size() == steps, "sigma schedule length does not match runs");
    for (const auto& r : runs) require(r.size() == steps, "runs differ in length");

    AggregateTrajectory agg;
    agg.model_tag = std::move(model_tag);
    agg.n_runs = runs.size();
    agg.snr = schedule.snr();
    agg.mean.assign(steps, 0.0);
    agg.sem.assign(steps, 0.0);
    const double n = static_cast<double>(runs.size());
    for (std::size_t s = 0; s < steps; ++s) {
        double sum = 0.0;
        for (const auto& r : runs) sum += r[s];
        const double mu = sum / n;
        double ss = 0.0;
        for (const auto& r : runs) ss += (r[s] - mu) * (r[s] - mu);
        agg.mean[s] = mu;
        agg.sem[s] = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return agg;
}

AggregateTrajectory band_filter(const AggregateTrajectory& agg, Band band) {
    require(band.lo < band.hi, "band needs lo < hi");
    AggregateTrajectory out;
    out.model_tag = agg.model_tag;
    out.n_runs = agg.n_runs;
    for (std::size_t s = 0; s < agg.size(); ++s) {
        if (!band.contains(agg.snr[s])) continue;
        out.mean.push_back(agg.mean[s]);
        out.sem.push_back(agg.sem[s]);
        out.snr.push_back(agg.snr[s]);
    }
    if (out.mean.empty()) fail(ErrorKind::EmptyBand, "no steps inside the SNR band");
    return out;
}

DominanceReport compare(const AggregateTrajectory& a, const AggregateTrajectory& b, Band band) {
    const AggregateTrajectory fa = band_filter(a, band);
    const AggregateTrajectory fb = band_filter(b, band);
    require(fa.size() == fb.size(), "SNR grids differ inside the band");
    for (std::size_t s = 0; s < fa.size(); ++s)
        require(std::abs(fa.snr[s] - fb.snr[s]) <= 1e-9 * std::max(fa.snr[s], fb.snr[s]),
                "SNR grids differ inside the band");

    DominanceReport rep;
    rep.band = band;
    rep.steps = fa.size();
    rep.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < fa.size(); ++s) {
        const double gap = fb.mean[s] - fa.mean[s];
        const bool sig = gap > std::max(fa.sem[s], fb.sem[s]);
        if (fa.mean[s] < fb.mean[s]) ++rep.a_lower;
        if (sig) ++rep.significant;
        rep.min_gap = std::min(rep.min_gap, gap);
        rep.snr.push_back(fa.snr[s]);
        rep.gap.push_back(gap);
        rep.step_significant.push_back(sig);
    }
    rep.fraction_a_lower = static_cast<double>(rep.a_lower) / rep.steps;
    rep.fraction_significant = static_cast<double>(rep.significant) / rep.steps;
    return rep;
}

}  // namespace trajscope
