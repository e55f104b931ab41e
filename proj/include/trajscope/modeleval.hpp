#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "trajscope/trajectory.hpp"

namespace trajscope {

/// Signal-to-noise power ratio signal_std^2 / sigma^2.
double snr_at(double sigma, double signal_std = 0.5);

struct SnrSchedule {
    std::vector<double> sigmas;  // one per trajectory step
    double signal_std = 0.5;

    std::vector<double> snr() const;
    void validate() const;
};

struct AggregateTrajectory {
    std::vector<double> mean;
    std::vector<double> sem;
    std::vector<double> snr;
    std::size_t n_runs = 0;
    std::string model_tag;

    std::size_t size() const noexcept { return mean.size(); }
};

struct Band {
    double lo = 5e-2;
    double hi = 1e4;

    bool contains(double snr) const noexcept { return snr >= lo && snr <= hi; }
    static Band parse(const std::string& spec);  // "lo:hi"
};

/// Per-step mean and SEM (sample std / sqrt(n)) of equal-length runs.
AggregateTrajectory aggregate(const std::vector<std::vector<double>>& runs, const SnrSchedule& schedule,
                              std::string model_tag);

/// Keeps steps with lo <= snr <= hi. Throws EmptyBand when nothing is left.
AggregateTrajectory band_filter(const AggregateTrajectory& agg, Band band = {});

struct DominanceReport {
    Band band;
    std::size_t steps = 0;              // in-band steps compared
    std::size_t a_lower = 0;            // steps with a.mean < b.mean
    std::size_t significant = 0;        // steps with b.mean - a.mean > max(sem_a, sem_b)
    double fraction_a_lower = 0.0;
    double fraction_significant = 0.0;
    double min_gap = 0.0;               // min over steps of b.mean - a.mean
    std::vector<double> snr;
    std::vector<double> gap;
    std::vector<bool> step_significant;
};

/// Does `a` sit below `b` (lower dissimilarity) inside the band? SNR grids
/// must agree step for step within the band.
DominanceReport compare(const AggregateTrajectory& a, const AggregateTrajectory& b, Band band = {8e-1, 7e2});

}  // namespace trajscope
