#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "y00lab/constellation.hpp"

using namespace y00lab;

namespace {
std::set<std::pair<double, double>> distinct_points(const ConstellationSpec& s)
{
    std::set<std::pair<double, double>> out;
    for (auto p : s.points())
        out.insert({p.real(), p.imag()});
    return out;
}
} // namespace

TEST(MapPoint, ToyTwoLevels)
{
    const auto toy = ConstellationSpec::toy(10);
    EXPECT_EQ(toy.map_point(0, 0), Amplitude(-10, 0));
    EXPECT_EQ(toy.map_point(1, 0), Amplitude(10, 0));
    EXPECT_EQ(toy.map_point(0, 1), Amplitude(10, 0));
    EXPECT_EQ(toy.map_point(1, 1), Amplitude(-10, 0));
}

TEST(MapPoint, PTypeThreeBasesSixPointsOnCircle)
{
    const auto p = ConstellationSpec::p_type(3, 10);
    EXPECT_DOUBLE_EQ(p.amplitude(), 5.0);
    EXPECT_EQ(distinct_points(p).size(), 6u);
    for (auto z : p.points())
        EXPECT_NEAR(std::abs(z), 5.0, 1e-12);
    // Equally spaced: neighbours are pi/3 apart.
    std::vector<double> angles;
    for (auto z : p.points())
        angles.push_back(std::arg(z));
    std::sort(angles.begin(), angles.end());
    for (std::size_t i = 1; i < angles.size(); ++i)
        EXPECT_NEAR(angles[i] - angles[i - 1], std::numbers::pi / 3, 1e-12);
}

TEST(MapPoint, PTypeSeventeenBasesThirtyFourPoints)
{
    const auto p = ConstellationSpec::p_type(17, 10);
    EXPECT_EQ(p.symbols(), 2u);
    EXPECT_EQ(distinct_points(p).size(), 34u);
    for (std::size_t m = 0; m < 17; ++m)
        EXPECT_NEAR(std::abs(p.map_point(0, m) + p.map_point(1, m)), 0.0, 1e-12);
}

TEST(MapPoint, NTypeShifts)
{
    const auto n = ConstellationSpec::n_type(64, 16, 10);
    double max_component = 0;
    for (std::size_t ell = 0; ell < 16; ++ell) {
        const auto shift0 = n.map_point(ell, 0) - n.map_point(ell, 0);
        EXPECT_EQ(shift0, Amplitude(0, 0));
        for (std::size_t m = 0; m < 64; ++m) {
            const auto delta = n.map_point(ell, m) - n.map_point(0, m) - (n.map_point(ell, 0) - n.map_point(0, 0));
            EXPECT_NEAR(std::abs(delta), 0.0, 1e-12);
            const auto shift = n.map_point(ell, m) - n.map_point(ell, 0);
            max_component = std::max({max_component, shift.real(), shift.imag()});
        }
    }
    EXPECT_NEAR(max_component, 7.0 * 10 / 8, 1e-12);
    EXPECT_LT(max_component, 10.0);
    // Basis 0 is the centred coarse lattice.
    EXPECT_EQ(n.map_point(0, 0), Amplitude(-15, -15));
    EXPECT_EQ(n.map_point(15, 0), Amplitude(15, 15));
}

TEST(MapPoint, IndexOutOfRange)
{
    const auto p = ConstellationSpec::p_type(17, 10);
    EXPECT_THROW(p.map_point(2, 0), std::out_of_range);
    EXPECT_THROW(p.map_point(0, 17), std::out_of_range);
    EXPECT_THROW(ConstellationSpec::n_type(10, 16, 10), std::invalid_argument);
    EXPECT_THROW(ConstellationSpec::p_type(17, -1), std::invalid_argument);
    EXPECT_THROW(ConstellationSpec::custom(2, 2, {1, 2, 3}), std::invalid_argument);
}

TEST(MapPoint, ToyQamIsBasisIndependentAsASet)
{
    for (unsigned j : {1u, 2u, 3u, 4u}) {
        const auto q = ConstellationSpec::toy_qam(j);
        const auto all = distinct_points(q);
        EXPECT_EQ(all.size(), q.symbols());
        for (std::size_t m = 0; m < q.bases(); ++m) {
            std::set<std::pair<double, double>> row;
            for (auto p : q.basis_points(m))
                row.insert({p.real(), p.imag()});
            EXPECT_EQ(row, all);
        }
    }
}

TEST(Correctness, MinimumDistances)
{
    const auto toy = check_correctness(ConstellationSpec::toy(10), 10);
    EXPECT_TRUE(toy.passes);
    EXPECT_DOUBLE_EQ(toy.min_same_basis_distance, 20.0);

    const auto n = check_correctness(ConstellationSpec::n_type(64, 16, 10), 5);
    EXPECT_NEAR(n.min_same_basis_distance, 10.0, 1e-12);

    // Antipodal pair: 2A with A = d/2.
    const auto p = check_correctness(ConstellationSpec::p_type(17, 10), 5);
    EXPECT_NEAR(p.min_same_basis_distance, 10.0, 1e-12);
    EXPECT_FALSE(check_correctness(ConstellationSpec::p_type(17, 10), 10.5).passes);
}

TEST(Hiding, ToyExactOverlap)
{
    const auto r = check_hiding(ConstellationSpec::toy(10), 0.1);
    EXPECT_TRUE(r.all_symbols_confusable);
    EXPECT_DOUBLE_EQ(r.uniformity_spread, 1.0);
    EXPECT_THROW(check_hiding(ConstellationSpec::toy(10), 0), std::invalid_argument);
}

TEST(Hiding, PTypePhaseOnly)
{
    const auto r = check_hiding(ConstellationSpec::p_type(17, 10), 5.0);
    EXPECT_TRUE(r.all_symbols_confusable);
    EXPECT_TRUE(r.every_point_confusable);
}

TEST(Hiding, NTypeMatchesExhaustiveDistanceCheck)
{
    const auto spec = ConstellationSpec::n_type(64, 16, 10);
    const double eps = 10.0 / 8;
    const auto r = check_hiding(spec, eps);

    // Independent brute force over all 16 x 64 points.
    bool all_confusable = true, all_symbols = true;
    std::size_t confusable = 0;
    for (std::size_t ell = 0; ell < 16; ++ell)
        for (std::size_t m = 0; m < 64; ++m) {
            std::vector<bool> reach(16, false);
            for (std::size_t b = 0; b < 64; ++b)
                for (std::size_t other = 0; other < 16; ++other)
                    if (std::abs(spec.map_point(ell, m) - spec.map_point(other, b)) <= eps)
                        reach[other] = true;
            bool any = false, every = true;
            for (std::size_t other = 0; other < 16; ++other) {
                if (other == ell)
                    continue;
                any = any || reach[other];
                every = every && reach[other];
            }
            confusable += any ? 1 : 0;
            all_confusable = all_confusable && any;
            all_symbols = all_symbols && every;
        }
    EXPECT_EQ(r.all_symbols_confusable, all_symbols);
    EXPECT_FALSE(r.all_symbols_confusable);
    EXPECT_EQ(r.every_point_confusable, all_confusable);
    EXPECT_DOUBLE_EQ(r.confusable_fraction, static_cast<double>(confusable) / (16 * 64));
}

TEST(ConstellationCsv, RoundTrip)
{
    const auto spec = ConstellationSpec::n_type(16, 16, 7.5);
    std::stringstream buf;
    write_constellation_csv(buf, spec);
    const auto back = read_constellation_csv(buf);
    EXPECT_EQ(back.kind(), ConstellationKind::Custom);
    EXPECT_EQ(back.points(), spec.points());
    EXPECT_EQ(back.bases(), 16u);
}

TEST(ConstellationCsv, MissingEntryIsReported)
{
    std::stringstream buf("ell,m,re,im\n1,1,0,0\n2,1,1,0\n1,2,2,0\n");
    EXPECT_THROW(read_constellation_csv(buf), FormatError);
}

TEST(Kind, ParseRoundTrip)
{
    for (auto k : {ConstellationKind::P, ConstellationKind::N, ConstellationKind::Toy, ConstellationKind::ToyQam,
                   ConstellationKind::Custom})
        EXPECT_EQ(parse_kind(to_string(k)), k);
    EXPECT_THROW(parse_kind("Q"), std::invalid_argument);
}
