#include <doctest.h>

#include <algorithm>

#include "impactkit/errors.hpp"
#include "impactkit/journal_report.hpp"
#include "impactkit/rng.hpp"

using namespace impactkit;
using namespace impactkit::report;

namespace {

/// Bounded bell-ish sample around `center` (mean of three uniforms).
double clamped_noise(SplitMix64& rng, double center, double spread) {
    const double u =
        (rng.next_double() + rng.next_double() + rng.next_double()) / 3.0;
    return std::clamp(center + (u - 0.5) * 2.0 * spread, 0.0, 1.0);
}

}  // namespace

TEST_CASE("top-fraction means from the sort-and-slice oracle") {
    std::vector<double> scores;
    for (int i = 99; i >= 0; --i) scores.push_back(i / 100.0);
    // Shuffle to prove order does not matter.
    SplitMix64 rng(1);
    deterministic_shuffle(scores, rng);

    const auto report = journal_report({{"Q1", scores}}, {0.05, 0.25});
    REQUIRE(report.groups.size() == 1);
    const auto& row = report.groups[0];
    CHECK(row.n == 100);
    // top 5 values are 0.99..0.95.
    CHECK(row.top_fraction_means[0] ==
          doctest::Approx((0.99 + 0.98 + 0.97 + 0.96 + 0.95) / 5.0).epsilon(1e-12));
    // top 25 values are 0.75..0.99.
    CHECK(row.top_fraction_means[1] ==
          doctest::Approx((0.75 + 0.99) / 2.0).epsilon(1e-12));
    CHECK(row.overall_mean == doctest::Approx(0.495).epsilon(1e-12));
}

TEST_CASE("single-item and constant groups collapse to the same mean") {
    const auto single = journal_report({{"only", {0.42}}});
    CHECK(single.groups[0].top_fraction_means[0] == 0.42);
    CHECK(single.groups[0].top_fraction_means[1] == 0.42);
    CHECK(single.groups[0].overall_mean == 0.42);

    const auto constant =
        journal_report({{"flat", std::vector<double>(50, 0.7)}});
    CHECK(constant.groups[0].top_fraction_means[0] == doctest::Approx(0.7));
    CHECK(constant.groups[0].top_fraction_means[1] == doctest::Approx(0.7));
    CHECK(constant.groups[0].overall_mean == doctest::Approx(0.7));
}

TEST_CASE("per-group means are ordered: top 5% >= top 25% >= overall") {
    SplitMix64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> scores;
        const std::size_t n = 1 + rng.next_below(300);
        for (std::size_t i = 0; i < n; ++i) scores.push_back(rng.next_double());
        const auto report = journal_report({{"g", scores}});
        const auto& row = report.groups[0];
        CHECK(row.top_fraction_means[0] >= row.top_fraction_means[1] - 1e-12);
        CHECK(row.top_fraction_means[1] >= row.overall_mean - 1e-12);
    }
}

TEST_CASE("group means are invariant under input permutation") {
    SplitMix64 rng(77);
    std::vector<double> scores;
    for (int i = 0; i < 200; ++i) scores.push_back(rng.next_double());
    const auto base = journal_report({{"g", scores}});
    auto shuffled = scores;
    deterministic_shuffle(shuffled, rng);
    const auto permuted = journal_report({{"g", shuffled}});
    CHECK(base.groups[0].top_fraction_means ==
          permuted.groups[0].top_fraction_means);
    CHECK(base.groups[0].overall_mean ==
          doctest::Approx(permuted.groups[0].overall_mean).epsilon(1e-12));
}

TEST_CASE("stochastically ordered quartiles produce ordered top-5% means") {
    SplitMix64 rng(2025);
    const std::vector<std::pair<std::string, double>> centers{
        {"Q1", 0.80}, {"Q2", 0.60}, {"Q3", 0.40}, {"Q4", 0.20}};
    for (int trial = 0; trial < 20; ++trial) {
        std::map<std::string, std::vector<double>> groups;
        for (const auto& [label, center] : centers) {
            for (int i = 0; i < 200; ++i) {
                groups[label].push_back(clamped_noise(rng, center, 0.08));
            }
        }
        const auto report = journal_report(groups);
        REQUIRE(report.groups.size() == 4);  // Q1..Q4 in label order
        for (std::size_t g = 1; g < 4; ++g) {
            CHECK(report.groups[g - 1].top_fraction_means[0] >
                  report.groups[g].top_fraction_means[0]);
        }
    }
}

TEST_CASE("ceil-with-floor-one slicing") {
    // n=10 at 5%: ceil(0.5) = 1 item.
    std::vector<double> ten{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    const auto report = journal_report({{"g", ten}}, {0.05});
    CHECK(report.groups[0].top_fraction_means[0] == 1.0);

    // n=3 at 1%: floor of one item still applies.
    const auto tiny = journal_report({{"g", {0.3, 0.9, 0.6}}}, {0.01});
    CHECK(tiny.groups[0].top_fraction_means[0] == 0.9);
}

TEST_CASE("report input validation") {
    CHECK_THROWS_AS(journal_report({}), EmptyGroupError);
    CHECK_THROWS_AS(journal_report({{"g", {}}}), EmptyGroupError);
    CHECK_THROWS_AS(journal_report({{"g", {0.5}}}, {0.0}), InvalidArgumentError);
    CHECK_THROWS_AS(journal_report({{"g", {0.5}}}, {1.5}), InvalidArgumentError);
}
