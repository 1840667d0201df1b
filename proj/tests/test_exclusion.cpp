#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "y00lab/channel.hpp"
#include "y00lab/exclusion.hpp"

using namespace y00lab;

TEST(ConsistentBases, PointItselfIsConsistent)
{
    const auto spec = ConstellationSpec::n_type(16, 16, 10);
    for (std::size_t m = 0; m < 16; ++m)
        for (std::size_t ell = 0; ell < 16; ell += 5) {
            const auto set = consistent_bases(spec, spec.map_point(ell, m), 0.01);
            EXPECT_NE(std::find(set.begin(), set.end(), m), set.end());
        }
    EXPECT_THROW(consistent_bases(spec, 0, 0), std::invalid_argument);
}

TEST(ConsistentBases, ToyOverlap)
{
    const auto set = consistent_bases(ConstellationSpec::toy(10), Amplitude(10, 0), 5);
    EXPECT_EQ(set, (std::vector<std::uint32_t>{0, 1}));
}

TEST(ConsistentBases, PTypeMidpointMatchesDistanceTable)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    const double a = spec.amplitude();
    for (int k = 0; k < 34; ++k) {
        const Amplitude z = std::polar(a, std::numbers::pi * (k + 0.5) / 17);
        std::vector<std::uint32_t> expected;
        for (std::uint32_t m = 0; m < 17; ++m) {
            bool near = false;
            for (std::size_t ell = 0; ell < 2; ++ell)
                near = near || std::abs(z - spec.map_point(ell, m)) < 5.0;
            if (near)
                expected.push_back(m);
        }
        EXPECT_EQ(consistent_bases(spec, z, 5.0), expected);
    }
}

TEST(RRatio, ToyIsAlwaysOne)
{
    const auto spec = ConstellationSpec::toy(10);
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> u(-30, 30);
    for (int i = 0; i < 1000; ++i)
        EXPECT_EQ(r_ratio(spec, {u(gen), u(gen)}, 10.0), 1.0);
}

TEST(RRatio, FarOutsideCountsAsNoExclusion)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    EXPECT_TRUE(consistent_bases(spec, Amplitude(40, 40), 5).empty());
    EXPECT_EQ(r_ratio(spec, Amplitude(40, 40), 5), 1.0);
}

TEST(RzMap, ToyGridIsConstant)
{
    const auto grid = rz_map(ConstellationSpec::toy(10), 10, {-15, 15, -5, 5}, 0.5);
    for (double r : grid.ratio)
        EXPECT_EQ(r, 1.0);
    EXPECT_EQ(grid.columns, 61u);
    EXPECT_EQ(grid.rows, 21u);
}

TEST(RzMap, PTypeSaturatesWithM)
{
    const Window w{-11, 11, -11, 11};
    const auto small = rz_map(ConstellationSpec::p_type(17, 10), 5, w, 0.25, 4);
    const auto large = rz_map(ConstellationSpec::p_type(257, 10), 5, w, 0.25, 4);
    EXPECT_LT(std::abs(small.mean() - large.mean()), 0.05);
}

TEST(RzMap, NTypeCellAreaFraction)
{
    const auto spec = ConstellationSpec::n_type(64, 16, 10);
    const double r = 5;
    const auto grid = rz_map(spec, r, {-5, 5, -5, 5}, 0.1, 4);
    EXPECT_NEAR(grid.mean(), std::numbers::pi * r * r / 100, 0.05);

    // Area oracle: dense uniform sampling with a brute-force distance check.
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-5, 5);
    double sum = 0;
    const int samples = 20000;
    for (int i = 0; i < samples; ++i) {
        const Amplitude z(u(gen), u(gen));
        std::size_t hits = 0;
        for (std::size_t m = 0; m < 64; ++m) {
            bool near = false;
            for (std::size_t ell = 0; ell < 16 && !near; ++ell)
                near = std::abs(z - spec.map_point(ell, m)) < r;
            hits += near ? 1 : 0;
        }
        sum += hits ? static_cast<double>(hits) / 64 : 1.0;
    }
    EXPECT_NEAR(grid.mean(), sum / samples, 0.02);
}

TEST(RunExclusion, NoOutcomesKeepsEveryone)
{
    const auto e = CandidateEnsemble::with_decoys(1, 100);
    const auto state = run_exclusion(ConstellationSpec::p_type(17, 10), {}, 5, e.candidates);
    EXPECT_EQ(state.survivors.size(), 101u);
    EXPECT_EQ(state.log_expected_fraction, 0.0);
    EXPECT_TRUE(state.trace.empty());
}

TEST(RunExclusion, PTypeIsolatesTrueSecret)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    int isolated = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const auto e = CandidateEnsemble::with_decoys(100 + trial, 1000);
        const auto batch = transmit(spec, e.true_secret(), 100, 200 + trial);
        const auto state = run_exclusion(spec, batch.outcomes(), 5, e.candidates);
        isolated += state.survivors == std::vector<std::size_t>{e.true_index} ? 1 : 0;
        for (std::size_t i = 1; i < state.trace.size(); ++i)
            ASSERT_LE(state.trace[i].survivor_count, state.trace[i - 1].survivor_count);
    }
    EXPECT_GE(isolated, 95);
}

TEST(RunExclusion, ToyExcludesNothing)
{
    const auto spec = ConstellationSpec::toy(10);
    const auto e = CandidateEnsemble::with_decoys(2, 200);
    const auto batch = transmit(spec, e.true_secret(), 500, 3);
    const auto state = run_exclusion(spec, batch.outcomes(), 10, e.candidates);
    for (const auto& step : state.trace)
        EXPECT_EQ(step.survivor_count, 201u);
    EXPECT_EQ(state.log_expected_fraction, 0.0);
}
