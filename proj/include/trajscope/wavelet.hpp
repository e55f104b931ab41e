#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trajscope/error.hpp"

namespace trajscope {

template <typename Scalar>
using Series = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Averaging Haar convention: a = (u + v) / 2, d = (u - v) / 2, pairs taken
// as (1,2), (3,4), ... in 1-based terms. Not the orthonormal 1/sqrt(2) form.

template <typename Scalar>
struct HaarLevel {
    Series<Scalar> approx;
    Series<Scalar> detail;
    bool padded = false;  // input to this level had odd length and was edge-extended
};

template <typename Scalar>
struct HaarDecomposition {
    std::size_t original_length = 0;
    std::vector<HaarLevel<Scalar>> levels;

    std::size_t depth() const noexcept { return levels.size(); }
    const Series<Scalar>& final_approx() const { return levels.back().approx; }
};

template <typename Scalar>
struct DetailSet {
    std::string label;
    Series<Scalar> values;
};

namespace detail {

template <typename Scalar>
HaarLevel<Scalar> haar_step(const Series<Scalar>& in) {
    const Eigen::Index n = in.size();
    const Eigen::Index half = (n + 1) / 2;
    HaarLevel<Scalar> level;
    level.padded = (n % 2) != 0;
    level.approx.resize(half);
    level.detail.resize(half);
    for (Eigen::Index k = 0; k < half; ++k) {
        const Scalar u = in(2 * k);
        const Scalar v = (2 * k + 1 < n) ? in(2 * k + 1) : in(n - 1);
        level.approx(k) = (u + v) / Scalar(2);
        level.detail(k) = (u - v) / Scalar(2);
    }
    return level;
}

}  // namespace detail

/// Multi-level Haar decomposition. Recursion stops when the approximation
/// reaches length 1 or after `max_level` levels.
template <typename Derived>
HaarDecomposition<typename Derived::Scalar> haar_decompose(const Eigen::MatrixBase<Derived>& series,
                                                           std::optional<std::size_t> max_level = std::nullopt) {
    using Scalar = typename Derived::Scalar;
    require(series.size() >= 2, "haar_decompose needs at least 2 samples");
    require(!max_level || *max_level >= 1, "max_level must be positive");

    HaarDecomposition<Scalar> out;
    out.original_length = static_cast<std::size_t>(series.size());
    Series<Scalar> current = series;
    while (current.size() > 1 && (!max_level || out.levels.size() < *max_level)) {
        out.levels.push_back(detail::haar_step(current));
        current = out.levels.back().approx;
    }
    return out;
}

template <typename Scalar>
HaarDecomposition<Scalar> haar_decompose(const std::vector<Scalar>& series,
                                         std::optional<std::size_t> max_level = std::nullopt) {
    return haar_decompose(Eigen::Map<const Series<Scalar>>(series.data(), static_cast<Eigen::Index>(series.size())),
                          max_level);
}

/// Checks the level-length chain; throws CorruptDecomposition on mismatch.
template <typename Scalar>
void validate(const HaarDecomposition<Scalar>& d) {
    const auto corrupt = [](const std::string& what) { fail(ErrorKind::CorruptDecomposition, what); };
    if (d.levels.empty()) corrupt("decomposition has no levels");
    if (d.original_length < 2) corrupt("original length below 2");
    std::size_t prev = d.original_length;
    for (std::size_t j = 0; j < d.levels.size(); ++j) {
        const auto& lv = d.levels[j];
        const std::size_t want = (prev + 1) / 2;
        if (static_cast<std::size_t>(lv.approx.size()) != want || static_cast<std::size_t>(lv.detail.size()) != want)
            corrupt("level " + std::to_string(j + 1) + " has wrong coefficient count");
        if (lv.padded != (prev % 2 != 0)) corrupt("level " + std::to_string(j + 1) + " padding flag inconsistent");
        prev = want;
    }
}

/// Inverse transform: u = a + d, v = a - d per pair, padding stripped.
template <typename Scalar>
Series<Scalar> haar_reconstruct(const HaarDecomposition<Scalar>& d) {
    validate(d);
    Series<Scalar> current = d.levels.back().approx;
    for (std::size_t j = d.levels.size(); j-- > 0;) {
        const auto& lv = d.levels[j];
        const std::size_t target = (j == 0) ? d.original_length
                                            : static_cast<std::size_t>(d.levels[j - 1].approx.size());
        Series<Scalar> up(static_cast<Eigen::Index>(target));
        for (Eigen::Index k = 0; k < lv.approx.size(); ++k) {
            up(2 * k) = current(k) + lv.detail(k);
            if (2 * k + 1 < static_cast<Eigen::Index>(target)) up(2 * k + 1) = current(k) - lv.detail(k);
        }
        current = std::move(up);
    }
    return current;
}

/// Detail coefficients grouped per level, labeled haar_d1 .. haar_dJ.
template <typename Scalar>
std::vector<DetailSet<Scalar>> detail_sets(const HaarDecomposition<Scalar>& d) {
    std::vector<DetailSet<Scalar>> out;
    out.reserve(d.levels.size());
    for (std::size_t j = 0; j < d.levels.size(); ++j)
        out.push_back({"haar_d" + std::to_string(j + 1), d.levels[j].detail});
    return out;
}

/// Full-depth level count for a series of length n: ceil(log2(n)).
constexpr std::size_t haar_level_count(std::size_t n) {
    std::size_t levels = 0;
    while (n > 1) {
        n = (n + 1) / 2;
        ++levels;
    }
    return levels;
}

}  // namespace trajscope
