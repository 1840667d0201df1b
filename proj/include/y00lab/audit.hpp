#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "y00lab/constellation.hpp"
#include "y00lab/mle.hpp"
#include "y00lab/parallel.hpp"
#include "y00lab/rng.hpp"

namespace y00lab {

namespace detail {
struct WeightedPoint
{
    Amplitude at;
    double weight;
};

/// Signed measure p(.|b_m) - p(.|b_m') with bit-identical support points merged.
inline std::vector<WeightedPoint> difference_measure(const ConstellationSpec& spec, std::size_t m,
                                                     std::size_t m_other)
{
    const double w = 1.0 / static_cast<double>(spec.symbols());
    std::vector<WeightedPoint> pts;
    for (auto p : spec.basis_points(m))
        pts.push_back({p, w});
    for (auto p : spec.basis_points(m_other))
        pts.push_back({p, -w});
    std::sort(pts.begin(), pts.end(), [](const WeightedPoint& a, const WeightedPoint& b) {
        return a.at.real() < b.at.real() || (a.at.real() == b.at.real() && a.at.imag() < b.at.imag());
    });
    std::vector<WeightedPoint> merged;
    for (const auto& p : pts) {
        if (!merged.empty() && merged.back().at == p.at)
            merged.back().weight += p.weight;
        else
            merged.push_back(p);
    }
    std::erase_if(merged, [](const WeightedPoint& p) { return p.weight == 0.0; });
    return merged;
}
} // namespace detail

/// L2 distance between the basis-conditional outcome densities of two bases,
/// from the closed-form overlap of unit heterodyne Gaussians:
/// integral of p_a p_b = exp(-|a - b|^2 / 2) / (2 pi).
inline double mixture_l2_distance(const ConstellationSpec& spec, std::size_t m, std::size_t m_other)
{
    if (m >= spec.bases() || m_other >= spec.bases())
        throw std::out_of_range("mixture_l2_distance: basis index out of range");
    const auto measure = detail::difference_measure(spec, m, m_other);
    double sq = 0;
    for (const auto& a : measure)
        for (const auto& b : measure)
            sq += a.weight * b.weight * std::exp(-0.5 * std::norm(a.at - b.at));
    sq /= 2.0 * std::numbers::pi;
    return std::sqrt(std::max(0.0, sq));
}

struct SampledL2
{
    double squared = 0;
    double stderr_squared = 0;
};

/// Importance-sampled estimate of the squared L2 distance, drawing outcomes
/// from the equal mixture q of both densities: E_q[(p_a - p_b)^2 / q].
inline SampledL2 mixture_l2_squared_mc(const ConstellationSpec& spec, std::size_t m, std::size_t m_other,
                                       std::size_t samples, std::uint64_t seed, unsigned workers = 1)
{
    if (m >= spec.bases() || m_other >= spec.bases())
        throw std::out_of_range("mixture_l2_squared_mc: basis index out of range");
    if (samples < 2)
        throw std::invalid_argument("mixture_l2_squared_mc: need at least two samples");
    const RandomStream stream{seed ^ 0x12A5, domain::monte_carlo};
    const auto acc = chunked_reduce<Moments>(
        samples, 8192, workers,
        [&](std::size_t begin, std::size_t end) {
            Moments mo;
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t basis = (stream.bits(4 * i) & 1) ? m_other : m;
                const auto ell = stream.below(4 * i + 1, spec.symbols());
                const Amplitude z = spec.map_point(ell, basis) + stream.unit_complex_gaussian(2 * i + 1);
                const double pa = mixture_likelihood(spec, z, m);
                const double pb = mixture_likelihood(spec, z, m_other);
                const double q = 0.5 * (pa + pb);
                mo.push(q > 0 ? (pa - pb) * (pa - pb) / q : 0.0);
            }
            return mo;
        },
        [](Moments lhs, const Moments& rhs) {
            lhs.merge(rhs);
            return lhs;
        });
    return {acc.mean(), acc.mean_stderr()};
}

enum class AuditClass { ConditionHolds, Leaky };

inline std::string_view to_string(AuditClass c)
{
    return c == AuditClass::ConditionHolds ? "ConditionHolds" : "Leaky";
}

struct PairDistance
{
    std::size_t m = 0, m_other = 0;
    double distance = 0;
};

struct AuditReport
{
    double max_pair_l2 = 0;
    AuditClass classification = AuditClass::ConditionHolds;
    double tolerance = 0;
    double gamma_estimate = 0;
    double gamma_stderr = 0;
    std::size_t gamma_samples = 0;
    bool subsampled = false;
    std::vector<PairDistance> per_pair_table;
};

struct AuditOptions
{
    double tolerance = 1e-9;
    std::size_t gamma_samples = 100'000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    /// Above this basis count a random subset of pairs is evaluated.
    std::size_t exhaustive_limit = 150;
    std::size_t sampled_pairs = 10'000;
};

/// Checks whether every basis induces the same outcome distribution. A nonzero
/// distance certifies that outcomes carry information about the basis sequence.
inline AuditReport audit(const ConstellationSpec& spec, const AuditOptions& opt = {})
{
    if (!(opt.tolerance > 0))
        throw std::invalid_argument("audit: tolerance must be positive");
    const std::size_t M = spec.bases();
    AuditReport report;
    report.tolerance = opt.tolerance;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (M <= opt.exhaustive_limit) {
        for (std::size_t a = 0; a < M; ++a)
            for (std::size_t b = a + 1; b < M; ++b)
                pairs.emplace_back(a, b);
    } else {
        report.subsampled = true;
        const RandomStream pick{opt.seed ^ 0xA0D1, domain::monte_carlo};
        for (std::size_t i = 0; i < opt.sampled_pairs; ++i) {
            const auto a = pick.below(2 * i, M);
            auto b = pick.below(2 * i + 1, M - 1);
            if (b >= a)
                ++b;
            pairs.emplace_back(std::min<std::size_t>(a, b), std::max<std::size_t>(a, b));
        }
    }
    report.per_pair_table.resize(pairs.size());
    parallel_for(pairs.size(), opt.workers, [&](std::size_t i) {
        report.per_pair_table[i] = {pairs[i].first, pairs[i].second,
                                    mixture_l2_distance(spec, pairs[i].first, pairs[i].second)};
    });
    for (const auto& p : report.per_pair_table)
        report.max_pair_l2 = std::max(report.max_pair_l2, p.distance);
    report.classification =
        report.max_pair_l2 <= opt.tolerance ? AuditClass::ConditionHolds : AuditClass::Leaky;
    if (opt.gamma_samples > 0) {
        const auto stats = clt_params(spec, opt.gamma_samples, opt.seed, 0.0, opt.workers);
        report.gamma_estimate = stats.gamma;
        report.gamma_stderr = stats.se_gamma;
        report.gamma_samples = opt.gamma_samples;
    }
    return report;
}

inline nlohmann::ordered_json to_json(const AuditReport& r)
{
    nlohmann::ordered_json j;
    j["classification"] = std::string(to_string(r.classification));
    j["max_pair_l2"] = r.max_pair_l2;
    j["tolerance"] = r.tolerance;
    j["gamma_estimate"] = r.gamma_estimate;
    j["gamma_stderr"] = r.gamma_stderr;
    j["gamma_samples"] = r.gamma_samples;
    j["subsampled"] = r.subsampled;
    auto table = nlohmann::ordered_json::array();
    for (const auto& p : r.per_pair_table)
        table.push_back({p.m + 1, p.m_other + 1, p.distance});
    j["per_pair_table"] = std::move(table);
    return j;
}

inline std::string verdict_line(const ConstellationSpec& spec, const AuditReport& r)
{
    std::string line = std::string(to_string(spec.kind())) + " M=" + std::to_string(spec.bases()) +
                       " L=" + std::to_string(spec.symbols()) + ": " +
                       std::string(to_string(r.classification)) + " (max pair L2 " +
                       csv::format(r.max_pair_l2) + ", Gamma " + csv::format(r.gamma_estimate) + " +/- " +
                       csv::format(r.gamma_stderr) + ")";
    return line;
}

enum class ProtocolType { ConventionalStream, Y00Whole, Y00Divided };

inline std::string_view to_string(ProtocolType p)
{
    switch (p) {
    case ProtocolType::ConventionalStream: return "ConventionalStream";
    case ProtocolType::Y00Whole: return "Y00Whole";
    case ProtocolType::Y00Divided: return "Y00Divided";
    }
    return "?";
}

/// Secret entropy still protecting the key stream after a successful
/// measurement-only attack.
inline double remaining_entropy(ProtocolType protocol, double sigma_total, double sigma_phi)
{
    if (!(sigma_phi >= 0) || !(sigma_total >= 0) || sigma_phi > sigma_total)
        throw std::invalid_argument("remaining_entropy: need 0 <= sigma_phi <= sigma_total");
    switch (protocol) {
    case ProtocolType::ConventionalStream: return sigma_total;
    case ProtocolType::Y00Whole: return 0.0;
    case ProtocolType::Y00Divided: return sigma_total - sigma_phi;
    }
    return sigma_total;
}

} // namespace y00lab
