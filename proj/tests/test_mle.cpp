#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "y00lab/channel.hpp"
#include "y00lab/mle.hpp"
#include "y00lab/stats.hpp"

using namespace y00lab;
using testing_support::workers;

TEST(MixtureLikelihood, IsolatedComponentPeak)
{
    const auto toy = ConstellationSpec::toy(10);
    EXPECT_NEAR(mixture_likelihood(toy, toy.map_point(0, 0), 0), 1.0 / (2 * std::numbers::pi), 1e-9);
}

TEST(MixtureLikelihood, ToyBasesAreIndistinguishable)
{
    const auto toy = ConstellationSpec::toy(10);
    std::mt19937 gen(2);
    std::uniform_real_distribution<double> u(-15, 15);
    for (int i = 0; i < 1000; ++i) {
        const Amplitude z(u(gen), u(gen));
        EXPECT_EQ(mixture_likelihood(toy, z, 0), mixture_likelihood(toy, z, 1));
    }
}

TEST(MixtureLikelihood, Normalised)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    const double h = 0.05, half = spec.amplitude() + 8;
    const int steps = static_cast<int>(2 * half / h);
    double sum = 0;
    for (int i = 0; i < steps; ++i)
        for (int j = 0; j < steps; ++j)
            sum += mixture_likelihood(spec, {-half + (i + 0.5) * h, -half + (j + 0.5) * h}, 3);
    EXPECT_NEAR(sum * h * h, 1.0, 1e-6);
}

TEST(MixtureLikelihood, FloorKeepsFarOutcomesFinite)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    bool floored = false;
    const double t = score_term(spec, Amplitude(1e3, 0), 0, floored);
    EXPECT_TRUE(floored);
    EXPECT_EQ(t, 745.0);
}

TEST(Nll, EmptyIsZero)
{
    EXPECT_EQ(nll(ConstellationSpec::toy(10), {}, {}), 0.0);
    EXPECT_THROW(nll(ConstellationSpec::toy(10), std::vector<Amplitude>{1}, {}), std::invalid_argument);
}

TEST(Nll, PerOutcomeMeansMatchCltParameters)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    const auto stats = clt_params(spec, 200'000, 3, 0, workers());
    const std::size_t n = 1000;
    const auto truth = Secret::whole(31), wrong = Secret::whole(32);
    const auto batch = transmit(spec, truth, n, 17);
    const double per_true = nll(spec, batch.outcomes(), basis_sequence(truth, n, 17)) / n;
    const double per_wrong = nll(spec, batch.outcomes(), basis_sequence(wrong, n, 17)) / n;
    EXPECT_NEAR(per_true, stats.a_s, 4 * std::sqrt(stats.var_s / n));
    EXPECT_NEAR(per_wrong, stats.a_sprime, 4 * std::sqrt(stats.var_sprime / n));
    EXPECT_NEAR(stats.a_s, 2.8, 0.15);
    EXPECT_NEAR(per_wrong, 21, 4 * std::sqrt(stats.var_sprime / n) + 1);
}

TEST(Rank, SingleCandidate)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    const auto batch = transmit(spec, Secret::whole(1), 10, 1);
    const LikelihoodTable table(spec, batch.outcomes());
    const std::vector<Secret> one{Secret::whole(1)};
    EXPECT_EQ(rank_candidates(table, one, 10)[0].rank, 1u);
}

TEST(Rank, PTypeTrueSecretFirstAtTwoHundred)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    const auto e = CandidateEnsemble::with_decoys(7, 1000);
    const auto batch = transmit(spec, e.true_secret(), 200, 7);
    const LikelihoodTable table(spec, batch.outcomes(), workers());
    const auto ranking = rank_candidates(table, e.candidates, 200, workers());
    EXPECT_EQ(rank_of(ranking, e.true_index), 1u);
    EXPECT_EQ(ranking[0].nll, table.score(e.true_secret(), 200));
}

TEST(Rank, ToyRankIsUniform)
{
    const auto spec = ConstellationSpec::toy(10);
    std::vector<double> deciles(10, 0);
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        const auto e = CandidateEnsemble::with_decoys(900 + trial, 1000);
        const auto batch = transmit(spec, e.true_secret(), 800, 40 + trial);
        const LikelihoodTable table(spec, batch.outcomes());
        const auto rank = rank_of(rank_candidates(table, e.candidates, 800, workers()), e.true_index);
        deciles[std::min<std::size_t>(9, (rank - 1) * 10 / 1001)] += 1;
    }
    double chi2 = 0;
    for (double c : deciles)
        chi2 += (c - 20) * (c - 20) / 20;
    EXPECT_GT(chi_square_sf(chi2, 9), 0.01);
}

TEST(NllPaths, MatchDirectScores)
{
    const auto spec = ConstellationSpec::n_type(16, 16, 10);
    const auto e = CandidateEnsemble::with_decoys(3, 30);
    const auto batch = transmit(spec, e.true_secret(), 120, 3);
    const LikelihoodTable table(spec, batch.outcomes());
    const auto paths = nll_paths(table, e.candidates, 3);
    for (std::size_t c = 0; c < e.size(); ++c)
        for (std::size_t n : {0u, 1u, 60u, 120u})
            EXPECT_DOUBLE_EQ(paths.at(c, n), table.score(e.candidates[c], n));
    const auto trace = nll_trace(paths, e.true_index);
    ASSERT_EQ(trace.size(), 120u);
    EXPECT_LT(trace.back().nll_true, trace.back().decoy_min);
    EXPECT_EQ(paths.cross_section(50, e.true_index).size(), 30u);
}

TEST(CltParams, TableRowsForPAndN)
{
    const auto p = clt_params(ConstellationSpec::p_type(17, 10), 200'000, 1, 0, workers());
    EXPECT_NEAR(p.a_s, 2.8, 0.15 * 2.8);
    EXPECT_NEAR(p.a_sprime, 21, 0.15 * 21);
    EXPECT_NEAR(p.var_sprime, 250, 0.15 * 250);
    EXPECT_NEAR(p.gamma, 0.63, 0.15 * 0.63);

    const auto n = clt_params(ConstellationSpec::n_type(64, 16, 10), 200'000, 1, 0, workers());
    EXPECT_NEAR(n.a_s, 4.9, 0.15 * 4.9);
    EXPECT_NEAR(n.a_sprime, 25, 0.15 * 25);
    EXPECT_NEAR(n.var_sprime, 320, 0.15 * 320);
    EXPECT_NEAR(n.gamma, 0.63, 0.15 * 0.63);
}

TEST(CltParams, IsolatedComponentEntropyAnchor)
{
    const double ln_pi_e = std::log(std::numbers::pi * std::numbers::e);
    const auto p = clt_params(ConstellationSpec::p_type(17, 10), 100'000, 2, 0, workers());
    const auto n = clt_params(ConstellationSpec::n_type(64, 16, 10), 100'000, 2, 0, workers());
    EXPECT_NEAR(p.a_s, ln_pi_e + std::log(2.0), 0.01 * p.a_s);
    EXPECT_NEAR(n.a_s, ln_pi_e + std::log(16.0), 0.01 * n.a_s);
}

TEST(CltParams, ToyHasNoGap)
{
    const auto t = clt_params(ConstellationSpec::toy(10), 100'000, 4, 0, workers());
    EXPECT_LT(std::abs(t.a_s - t.a_sprime), 4 * t.se_gap() + 1e-15);
    EXPECT_LT(t.gamma, 1e-3);
    EXPECT_TRUE(std::isinf(t.n_th));
}

TEST(CltParams, RefusesSmallBudgets)
{
    EXPECT_THROW(clt_params(ConstellationSpec::toy(10), 999, 1, 0), std::invalid_argument);
}

TEST(CltParams, WorkerCountDoesNotChangeResult)
{
    const auto spec = ConstellationSpec::n_type(16, 16, 10);
    const auto a = clt_params(spec, 50'000, 9, 1, 1);
    const auto b = clt_params(spec, 50'000, 9, 1, 8);
    EXPECT_EQ(a.a_s, b.a_s);
    EXPECT_EQ(a.var_sprime, b.var_sprime);
    EXPECT_EQ(a.gamma, b.gamma);
}

TEST(CltParams, DecoyEnsembleMatchesWrongCandidateStatistics)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    const auto stats = clt_params(spec, 200'000, 5, 0, workers());
    const std::size_t n = 1000;
    const auto e = CandidateEnsemble::with_decoys(11, 1000);
    const auto batch = transmit(spec, e.true_secret(), n, 11);
    const LikelihoodTable table(spec, batch.outcomes(), workers());
    Moments decoys;
    for (std::size_t c = 0; c < e.size(); ++c)
        if (c != e.true_index)
            decoys.push(table.score(e.candidates[c], n) / n);
    EXPECT_NEAR(decoys.mean(), stats.a_sprime, 4 * std::sqrt(stats.var_sprime / n));
    EXPECT_NEAR(decoys.variance() * n, stats.var_sprime, 0.1 * stats.var_sprime);
}

TEST(Kl, IdenticalGaussiansAndAsymptotics)
{
    AttackStatistics same;
    same.a_s = same.a_sprime = 3;
    same.var_s = same.var_sprime = 2;
    EXPECT_DOUBLE_EQ(kl_gaussian_pair(same, 100), 0.0);

    const auto p = clt_params(ConstellationSpec::p_type(17, 10), 100'000, 6, 0, workers());
    EXPECT_NEAR(kl_gaussian_pair(p, 1000) / (1000 * p.gamma), 1.0, 0.05);
    AttackStatistics flat;
    EXPECT_THROW(kl_gaussian_pair(flat, 10), std::domain_error);
}

TEST(Threshold, ArithmeticAndErrors)
{
    EXPECT_NEAR(n_threshold(0.63, std::log(1001.0)), 10.97, 0.01);
    EXPECT_NEAR(n_threshold(0.63, 16 * std::log(2.0)), 17.6, 0.05);
    EXPECT_THROW(n_threshold(0.0, 1.0), std::domain_error);
    AttackStatistics s;
    s.gamma = 0.63;
    EXPECT_EQ(p_err(s, 0), 1.0);
    EXPECT_NEAR(p_err(s, 10), std::exp(-6.3), 1e-15);
}

TEST(Threshold, FiveTimesThresholdRecoversSixteenBitSecret)
{
    const auto spec = ConstellationSpec::p_type(17, 10);
    const auto stats = clt_params(spec, 100'000, 8, 16 * std::log(2.0), workers());
    const auto n = static_cast<std::size_t>(std::ceil(5 * stats.n_th));
    int first = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const auto e = CandidateEnsemble::enumerated(300 + trial, 16);
        const auto batch = transmit(spec, e.true_secret(), n, 600 + trial);
        const LikelihoodTable table(spec, batch.outcomes());
        const auto ranking = rank_candidates(table, e.candidates, n, workers());
        first += ranking[0].candidate_id == e.true_index && ranking[1].nll > ranking[0].nll ? 1 : 0;
    }
    EXPECT_GE(first, 99);
}

TEST(Jensen, ConsistencyHelper)
{
    AttackStatistics s;
    s.a_s = 5;
    s.a_sprime = 4.9;
    s.se_a_s = s.se_a_sprime = 0.01;
    EXPECT_FALSE(jensen_consistent(s));
    s.a_sprime = 4.97;
    EXPECT_TRUE(jensen_consistent(s));
}
