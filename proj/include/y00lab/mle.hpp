#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "y00lab/constellation.hpp"
#include "y00lab/csv.hpp"
#include "y00lab/keystream.hpp"
#include "y00lab/parallel.hpp"
#include "y00lab/rng.hpp"
#include "y00lab/stats.hpp"

namespace y00lab {

/// ln p~ is clamped here before it enters any sum (double underflow bound).
inline constexpr double log_likelihood_floor = -745.0;

/// ln p~(z | basis): the equal-weight mixture of the L heterodyne densities of
/// that basis, with unit normaliser.
inline double log_mixture_likelihood(const ConstellationSpec& spec, Amplitude z, std::size_t basis)
{
    const auto pts = spec.basis_points(basis);
    double best = -std::numeric_limits<double>::infinity();
    for (auto p : pts)
        best = std::max(best, -std::norm(z - p));
    double acc = 0;
    for (auto p : pts)
        acc += std::exp(-std::norm(z - p) - best);
    return best + std::log(acc) - std::log(std::numbers::pi * static_cast<double>(pts.size()));
}

inline double mixture_likelihood(const ConstellationSpec& spec, Amplitude z, std::size_t basis)
{
    return std::exp(log_mixture_likelihood(spec, z, basis));
}

/// -ln p~ with the floor applied; `floored` is set when the clamp fired.
inline double score_term(const ConstellationSpec& spec, Amplitude z, std::size_t basis, bool& floored)
{
    const double lp = log_mixture_likelihood(spec, z, basis);
    floored = lp < log_likelihood_floor;
    return -std::max(lp, log_likelihood_floor);
}

/// Negative log-likelihood of outcomes under one basis sequence.
inline double nll(const ConstellationSpec& spec, std::span<const Amplitude> z,
                  std::span<const std::uint32_t> bases)
{
    if (z.size() != bases.size())
        throw std::invalid_argument("nll: outcome and basis sequence lengths differ");
    double sum = 0;
    bool floored = false;
    for (std::size_t n = 0; n < z.size(); ++n)
        sum += score_term(spec, z[n], bases[n], floored);
    return sum;
}

/// Per-outcome, per-basis score terms -ln p~(z_n | b_m), computed once so
/// that scoring a candidate costs one lookup per outcome.
class LikelihoodTable
{
  public:
    LikelihoodTable(const ConstellationSpec& spec, std::span<const Amplitude> z, unsigned workers = 1)
        : outcomes_(z.size()), bases_(spec.bases()), terms_(z.size() * spec.bases())
    {
        std::vector<std::size_t> floored(outcomes_, 0);
        parallel_for(outcomes_, workers, [&](std::size_t n) {
            for (std::size_t m = 0; m < bases_; ++m) {
                bool f = false;
                terms_[n * bases_ + m] = score_term(spec, z[n], m, f);
                floored[n] += f ? 1 : 0;
            }
        });
        for (auto f : floored)
            floor_hits_ += f;
    }

    std::size_t outcomes() const noexcept { return outcomes_; }
    std::size_t bases() const noexcept { return bases_; }
    std::size_t floor_hits() const noexcept { return floor_hits_; }

    double term(std::size_t n, std::size_t basis) const { return terms_[n * bases_ + basis]; }

    /// NLL of a candidate over the first `count` outcomes.
    double score(const Secret& candidate, std::size_t count) const
    {
        count = std::min(count, outcomes_);
        const auto m = static_cast<std::uint32_t>(bases_);
        double sum = 0;
        for (std::size_t n = 0; n < count; ++n)
            sum += terms_[n * bases_ + basis_at(candidate, n, m)];
        return sum;
    }

  private:
    std::size_t outcomes_;
    std::size_t bases_;
    std::vector<double> terms_;
    std::size_t floor_hits_ = 0;
};

struct CandidateScore
{
    std::size_t candidate_id = 0;
    double nll = 0;
    std::size_t rank = 0;
};

/// Candidates ordered by NLL over the first `count` outcomes; ties keep
/// ascending candidate id. Ranks are 1-based.
inline std::vector<CandidateScore> rank_candidates(const LikelihoodTable& table,
                                                   std::span<const Secret> candidates,
                                                   std::size_t count, unsigned workers = 1)
{
    if (candidates.empty())
        throw std::invalid_argument("rank_candidates: no candidates");
    std::vector<CandidateScore> scores(candidates.size());
    parallel_for(candidates.size(), workers, [&](std::size_t c) {
        scores[c] = {c, table.score(candidates[c], count), 0};
    });
    std::stable_sort(scores.begin(), scores.end(),
                     [](const CandidateScore& a, const CandidateScore& b) { return a.nll < b.nll; });
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i].rank = i + 1;
    return scores;
}

inline std::size_t rank_of(std::span<const CandidateScore> ranking, std::size_t candidate_id)
{
    for (const auto& s : ranking)
        if (s.candidate_id == candidate_id)
            return s.rank;
    throw std::out_of_range("rank_of: candidate not ranked");
}

inline void write_ranking_csv(std::ostream& out, std::span<const CandidateScore> ranking)
{
    csv::Writer w(out);
    w.header({"rank", "candidate_id", "nll"});
    for (const auto& s : ranking)
        w.row(s.rank, s.candidate_id, s.nll);
}

/// Cumulative NLL of every candidate after each outcome: paths[c * N + n] is
/// the NLL of candidate c over the first n+1 outcomes.
struct NllPaths
{
    std::size_t candidates = 0;
    std::size_t length = 0;
    std::vector<double> values;

    double at(std::size_t candidate, std::size_t count) const
    {
        if (count == 0)
            return 0.0;
        return values[candidate * length + (count - 1)];
    }

    /// NLL at `count` outcomes for every candidate except `skip`.
    std::vector<double> cross_section(std::size_t count, std::size_t skip) const
    {
        std::vector<double> out;
        out.reserve(candidates);
        for (std::size_t c = 0; c < candidates; ++c)
            if (c != skip)
                out.push_back(at(c, count));
        return out;
    }
};

inline NllPaths nll_paths(const LikelihoodTable& table, std::span<const Secret> candidates,
                          unsigned workers = 1)
{
    NllPaths paths{candidates.size(), table.outcomes(), {}};
    paths.values.resize(paths.candidates * paths.length);
    const auto bases = static_cast<std::uint32_t>(table.bases());
    parallel_for(candidates.size(), workers, [&](std::size_t c) {
        double sum = 0;
        double* row = paths.values.data() + c * paths.length;
        for (std::size_t n = 0; n < paths.length; ++n) {
            sum += table.term(n, basis_at(candidates[c], n, bases));
            row[n] = sum;
        }
    });
    return paths;
}

struct TraceRow
{
    std::size_t count = 0;
    double nll_true = 0;
    double decoy_mean = 0;
    double decoy_min = 0;
    double decoy_max = 0;
};

/// NLL-versus-N summary: the true candidate against the decoy band.
inline std::vector<TraceRow> nll_trace(const NllPaths& paths, std::size_t true_index)
{
    if (true_index >= paths.candidates)
        throw std::out_of_range("nll_trace: true index out of range");
    std::vector<TraceRow> rows;
    rows.reserve(paths.length);
    for (std::size_t n = 1; n <= paths.length; ++n) {
        TraceRow r{n, paths.at(true_index, n), 0, std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
        std::size_t decoys = 0;
        for (std::size_t c = 0; c < paths.candidates; ++c) {
            if (c == true_index)
                continue;
            const double v = paths.at(c, n);
            r.decoy_mean += v;
            r.decoy_min = std::min(r.decoy_min, v);
            r.decoy_max = std::max(r.decoy_max, v);
            ++decoys;
        }
        if (decoys == 0)
            r.decoy_min = r.decoy_max = std::numeric_limits<double>::quiet_NaN();
        else
            r.decoy_mean /= static_cast<double>(decoys);
        rows.push_back(r);
    }
    return rows;
}

inline void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows)
{
    csv::Writer w(out);
    w.header({"N", "nll_true", "nll_decoy_mean", "nll_decoy_min", "nll_decoy_max"});
    for (const auto& r : rows)
        w.row(r.count, r.nll_true, r.decoy_mean, r.decoy_min, r.decoy_max);
}

/// Monte Carlo estimates of the per-outcome NLL statistics for the true
/// candidate (a_s, var_s) and for an independent wrong one (a_sprime,
/// var_sprime), with the derived error exponent and measurement budget.
struct AttackStatistics
{
    double a_s = 0;
    double var_s = 0;
    double a_sprime = 0;
    double var_sprime = 0;
    double gamma = 0;
    double n_th = 0;
    double sigma_nats = 0;
    std::size_t mc_samples = 0;
    std::size_t floor_hits = 0;

    double se_a_s = 0;
    double se_var_s = 0;
    double se_a_sprime = 0;
    double se_var_sprime = 0;
    double se_gamma = 0;

    /// Unpaired standard error of a_sprime - a_s.
    double se_gap() const { return std::hypot(se_a_s, se_a_sprime); }
};

inline double error_exponent(double a_s, double a_sprime, double var_sprime)
{
    if (!(var_sprime > 0))
        throw std::domain_error("error_exponent: variance must be positive");
    const double gap = a_s - a_sprime;
    return gap * gap / (2.0 * var_sprime);
}

/// Measurement budget sigma / Gamma. Gamma <= 0 means the protocol leaks
/// nothing through this attack and no budget exists.
inline double n_threshold(double gamma, double sigma_nats)
{
    if (!(gamma > 0))
        throw std::domain_error("n_threshold: error exponent is not positive");
    return sigma_nats / gamma;
}

inline double n_threshold(const AttackStatistics& stats, double sigma_nats)
{
    return n_threshold(stats.gamma, sigma_nats);
}

/// exp(-N Gamma).
inline double p_err(const AttackStatistics& stats, double count)
{
    if (count <= 0)
        return 1.0;
    return std::exp(-count * stats.gamma);
}

/// KL divergence between the CLT Gaussians of the true and wrong NLL at N.
inline double kl_gaussian_pair(const AttackStatistics& stats, double count)
{
    if (!(stats.var_s > 0) || !(stats.var_sprime > 0))
        throw std::domain_error("kl_gaussian_pair: variances must be positive");
    const double gap = stats.a_s - stats.a_sprime;
    return (count * gap * gap + stats.var_s) / (2.0 * stats.var_sprime) +
           0.5 * std::log(stats.var_sprime / stats.var_s) - 0.5;
}

inline constexpr std::size_t min_mc_samples = 10'000;

/// One Monte Carlo draw: basis m, symbol l, outcome z ~ p(.|alpha(l, m)), and
/// an independent basis m'. Returns the pair of score terms.
struct CltDraw
{
    double true_term = 0;
    double wrong_term = 0;
    bool floored = false;
};

inline CltDraw clt_draw(const ConstellationSpec& spec, const RandomStream& stream, std::uint64_t i)
{
    const auto m = stream.below(8 * i, spec.bases());
    const auto ell = stream.below(8 * i + 1, spec.symbols());
    const auto m_wrong = stream.below(8 * i + 2, spec.bases());
    const Amplitude z = spec.map_point(ell, m) + stream.unit_complex_gaussian(4 * i + 2);
    bool f1 = false, f2 = false;
    CltDraw d;
    d.true_term = score_term(spec, z, m, f1);
    d.wrong_term = score_term(spec, z, m_wrong, f2);
    d.floored = f1 || f2;
    return d;
}

inline AttackStatistics clt_params(const ConstellationSpec& spec, std::size_t mc_samples, std::uint64_t seed,
                                   double sigma_nats, unsigned workers = 1)
{
    if (mc_samples < min_mc_samples)
        throw std::invalid_argument("clt_params: need at least 10^4 Monte Carlo samples");
    const RandomStream stream{seed, domain::monte_carlo};
    struct Acc
    {
        Moments truth, wrong;
        std::size_t floored = 0;
    };
    const Acc acc = chunked_reduce<Acc>(
        mc_samples, 8192, workers,
        [&](std::size_t begin, std::size_t end) {
            Acc a;
            for (std::size_t i = begin; i < end; ++i) {
                const auto d = clt_draw(spec, stream, i);
                a.truth.push(d.true_term);
                a.wrong.push(d.wrong_term);
                a.floored += d.floored ? 1 : 0;
            }
            return a;
        },
        [](Acc lhs, const Acc& rhs) {
            lhs.truth.merge(rhs.truth);
            lhs.wrong.merge(rhs.wrong);
            lhs.floored += rhs.floored;
            return lhs;
        });

    AttackStatistics s;
    const double n = static_cast<double>(mc_samples);
    s.mc_samples = mc_samples;
    s.floor_hits = acc.floored;
    s.sigma_nats = sigma_nats;
    s.a_s = acc.truth.mean();
    s.var_s = acc.truth.variance();
    s.a_sprime = acc.wrong.mean();
    s.var_sprime = acc.wrong.variance();
    s.se_a_s = std::sqrt(s.var_s / n);
    s.se_a_sprime = std::sqrt(s.var_sprime / n);
    s.se_var_s = acc.truth.variance_stderr();
    s.se_var_sprime = acc.wrong.variance_stderr();
    s.gamma = s.var_sprime > 0 ? error_exponent(s.a_s, s.a_sprime, s.var_sprime) : 0.0;
    if (s.var_sprime > 0) {
        const double gap = s.a_sprime - s.a_s;
        const double v = s.var_sprime;
        const double se_gap = s.se_gap();
        const double d_gap = gap / v;
        const double d_var = gap * gap / (2 * v * v);
        s.se_gamma = std::sqrt(d_gap * d_gap * se_gap * se_gap + d_var * d_var * s.se_var_sprime * s.se_var_sprime) +
                     se_gap * se_gap / (2 * v);
    }
    s.n_th = s.gamma > 0 ? sigma_nats / s.gamma : std::numeric_limits<double>::infinity();
    return s;
}

/// Jensen: the wrong-candidate mean cannot fall below the true one beyond noise.
inline bool jensen_consistent(const AttackStatistics& s, double k = 4.0)
{
    return s.a_sprime >= s.a_s - k * s.se_gap();
}

} // namespace y00lab
