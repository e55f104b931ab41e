#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "trajscope/rng.hpp"
#include "trajscope/wavelet.hpp"

using namespace trajscope;

namespace {

std::vector<double> as_vec(const Series<double>& s) { return {s.begin(), s.end()}; }

std::vector<double> random_series(Rng& rng, std::size_t n) {
    std::vector<double> z(n);
    for (auto& v : z) v = rng.uniform(-1.0, 1.0);
    return z;
}

}  // namespace

TEST_CASE("worked example [8,4,6,2]") {
    const auto d = haar_decompose(std::vector<double>{8, 4, 6, 2});
    REQUIRE(d.depth() == 2);
    CHECK(as_vec(d.levels[0].approx) == std::vector<double>{6, 4});
    CHECK(as_vec(d.levels[0].detail) == std::vector<double>{2, 2});
    CHECK(as_vec(d.levels[1].approx) == std::vector<double>{5});
    CHECK(as_vec(d.levels[1].detail) == std::vector<double>{1});
    CHECK(as_vec(d.final_approx()) == std::vector<double>{5});
    CHECK_FALSE(d.levels[0].padded);

    CHECK(as_vec(haar_reconstruct(d)) == std::vector<double>{8, 4, 6, 2});

    const auto sets = detail_sets(d);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].label == "haar_d1");
    CHECK(as_vec(sets[0].values) == std::vector<double>{2, 2});
    CHECK(sets[1].label == "haar_d2");
    CHECK(as_vec(sets[1].values) == std::vector<double>{1});
}

TEST_CASE("two-sample series") {
    const auto d = haar_decompose(std::vector<double>{5, 3});
    REQUIRE(d.depth() == 1);
    CHECK(as_vec(d.levels[0].approx) == std::vector<double>{4});
    CHECK(as_vec(d.levels[0].detail) == std::vector<double>{1});
}

TEST_CASE("constant series has zero details") {
    const auto d = haar_decompose(std::vector<double>(49, 0.73));
    for (const auto& s : detail_sets(d)) CHECK(s.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("length 49 detail set sizes") {
    Rng rng(1);
    const auto d = haar_decompose(random_series(rng, 49));
    std::vector<std::size_t> sizes;
    for (const auto& s : detail_sets(d)) sizes.push_back(static_cast<std::size_t>(s.values.size()));
    CHECK(sizes == std::vector<std::size_t>{25, 13, 7, 4, 2, 1});
    CHECK(d.levels[0].padded);
    CHECK(d.levels[1].padded);
    CHECK(d.levels[2].padded);
    CHECK(d.levels[3].padded);
    CHECK_FALSE(d.levels[4].padded);
}

TEST_CASE("odd tail is edge-replicated") {
    const auto d = haar_decompose(std::vector<double>{1, 3, 7});
    CHECK(as_vec(d.levels[0].approx) == std::vector<double>{2, 7});
    CHECK(as_vec(d.levels[0].detail) == std::vector<double>{-1, 0});
    CHECK(as_vec(haar_reconstruct(d)) == std::vector<double>{1, 3, 7});
}

TEST_CASE("max_level stops early") {
    Rng rng(2);
    const auto z = random_series(rng, 16);
    const auto d = haar_decompose(z, 2);
    CHECK(d.depth() == 2);
    CHECK(d.final_approx().size() == 4);
    const auto back = haar_reconstruct(d);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(back(static_cast<Eigen::Index>(i)) == doctest::Approx(z[i]));
}

TEST_CASE("invalid input") {
    CHECK_THROWS_AS(haar_decompose(std::vector<double>{}), Error);
    CHECK_THROWS_AS(haar_decompose(std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(haar_decompose(std::vector<double>{1.0, 2.0}, 0), Error);
}

TEST_CASE("corrupt decompositions are rejected") {
    auto d = haar_decompose(std::vector<double>{1, 2, 3, 4, 5});
    auto bad = d;
    bad.levels[1].detail.resize(5);
    try {
        haar_reconstruct(bad);
        FAIL("expected corrupt-decomposition");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CorruptDecomposition);
    }
    bad = d;
    bad.levels[0].padded = false;
    CHECK_THROWS_AS(haar_reconstruct(bad), Error);
    bad = d;
    bad.original_length = 9;
    CHECK_THROWS_AS(haar_reconstruct(bad), Error);
}

TEST_CASE("level count is ceil(log2 n)") {
    for (std::size_t n = 2; n <= 300; ++n) {
        const auto expected = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n))));
        CHECK(haar_level_count(n) == expected);
        CHECK(haar_decompose(std::vector<double>(n, 1.0)).depth() == expected);
    }
}

TEST_CASE("details are bounded by the series range") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto z = random_series(rng, 2 + rng.below(127));
        const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
        const auto d = haar_decompose(z);
        for (const auto& s : detail_sets(d)) CHECK(s.values.cwiseAbs().maxCoeff() <= *hi - *lo);
    }
}

TEST_CASE("zeroed details reconstruct piecewise-constant blocks") {
    auto d = haar_decompose(std::vector<double>{8, 4, 6, 2});
    for (auto& lv : d.levels) lv.detail.setZero();
    CHECK(as_vec(haar_reconstruct(d)) == std::vector<double>{5, 5, 5, 5});
}

TEST_CASE("single precision instantiation") {
    const auto d = haar_decompose(std::vector<float>{8.f, 4.f, 6.f, 2.f});
    CHECK(d.levels[1].approx(0) == 5.f);
    CHECK(haar_reconstruct(d)(3) == 2.f);
}

TEST_CASE("matches the recursive oracle on dyadic lengths") {
    Rng rng(8);
    for (std::size_t n : {2, 4, 8, 16, 32, 64, 128}) {
        const auto z = random_series(rng, n);
        const auto d = haar_decompose(z);
        for (std::size_t j = 1; j <= d.depth(); ++j)
            for (std::size_t k = 1; k <= static_cast<std::size_t>(d.levels[j - 1].detail.size()); ++k) {
                CHECK(d.levels[j - 1].detail(static_cast<Eigen::Index>(k - 1)) == oracle::haar_detail(z, j, k));
                CHECK(d.levels[j - 1].approx(static_cast<Eigen::Index>(k - 1)) == oracle::haar_approx(z, j, k));
            }
    }
}

TEST_CASE("perfect reconstruction on random lengths") {
    Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const auto z = random_series(rng, 2 + rng.below(127));
        const auto back = haar_reconstruct(haar_decompose(z));
        REQUIRE(static_cast<std::size_t>(back.size()) == z.size());
        double err = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) err = std::max(err, std::abs(back(Eigen::Index(i)) - z[i]));
        CHECK(err <= 1e-12);
    }
}
