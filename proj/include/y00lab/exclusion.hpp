#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "y00lab/constellation.hpp"
#include "y00lab/csv.hpp"
#include "y00lab/keystream.hpp"
#include "y00lab/parallel.hpp"

namespace y00lab {

/// Bases having some point strictly within r of z, ascending.
inline std::vector<std::uint32_t> consistent_bases(const ConstellationSpec& spec, Amplitude z, double r)
{
    if (!(r > 0))
        throw std::invalid_argument("consistent_bases: r must be positive");
    const double r2 = r * r;
    std::vector<std::uint32_t> out;
    for (std::size_t m = 0; m < spec.bases(); ++m) {
        for (auto p : spec.basis_points(m)) {
            if (std::norm(z - p) < r2) {
                out.push_back(static_cast<std::uint32_t>(m));
                break;
            }
        }
    }
    return out;
}

/// |B+(z)| / M. An empty consistent set excludes nothing and counts as 1.
inline double r_ratio(const ConstellationSpec& spec, Amplitude z, double r)
{
    const auto set = consistent_bases(spec, z, r);
    if (set.empty())
        return 1.0;
    return static_cast<double>(set.size()) / static_cast<double>(spec.bases());
}

struct Window
{
    double re_min = -1, re_max = 1, im_min = -1, im_max = 1;
};

struct RzGrid
{
    std::size_t columns = 0, rows = 0;
    /// Row-major over im, then re.
    std::vector<Amplitude> z;
    std::vector<double> ratio;

    double mean() const
    {
        double s = 0;
        for (double v : ratio)
            s += v;
        return ratio.empty() ? 0.0 : s / static_cast<double>(ratio.size());
    }
};

inline RzGrid rz_map(const ConstellationSpec& spec, double r, const Window& window, double step,
                     unsigned workers = 1)
{
    if (!(step > 0))
        throw std::invalid_argument("rz_map: grid step must be positive");
    if (!(window.re_max >= window.re_min) || !(window.im_max >= window.im_min))
        throw std::invalid_argument("rz_map: empty window");
    RzGrid grid;
    grid.columns = static_cast<std::size_t>(std::floor((window.re_max - window.re_min) / step + 1e-9)) + 1;
    grid.rows = static_cast<std::size_t>(std::floor((window.im_max - window.im_min) / step + 1e-9)) + 1;
    grid.z.resize(grid.columns * grid.rows);
    grid.ratio.resize(grid.z.size());
    parallel_for(grid.rows, workers, [&](std::size_t row) {
        for (std::size_t col = 0; col < grid.columns; ++col) {
            const Amplitude z(window.re_min + static_cast<double>(col) * step,
                              window.im_min + static_cast<double>(row) * step);
            grid.z[row * grid.columns + col] = z;
            grid.ratio[row * grid.columns + col] = r_ratio(spec, z, r);
        }
    });
    return grid;
}

inline void write_rz_csv(std::ostream& out, const RzGrid& grid)
{
    csv::Writer w(out);
    w.header({"re", "im", "R"});
    for (std::size_t i = 0; i < grid.z.size(); ++i)
        w.row(grid.z[i].real(), grid.z[i].imag(), grid.ratio[i]);
}

struct ExclusionStep
{
    std::size_t n = 0;
    std::size_t survivor_count = 0;
    double log_expected_fraction = 0;
};

struct ExclusionState
{
    /// Candidate indices, ascending.
    std::vector<std::size_t> survivors;
    /// Running sum of ln R(z_n).
    double log_expected_fraction = 0;
    std::size_t n_processed = 0;
    /// Outcomes whose consistent set was empty and were skipped.
    std::size_t empty_sets = 0;
    std::vector<ExclusionStep> trace;
};

/// Hard basis-exclusion attack: a candidate survives while its basis at every
/// processed position lies in B+(z_n).
inline ExclusionState run_exclusion(const ConstellationSpec& spec, std::span<const Amplitude> z, double r,
                                    std::span<const Secret> candidates)
{
    if (candidates.empty())
        throw std::invalid_argument("run_exclusion: no candidates");
    ExclusionState state;
    state.survivors.resize(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        state.survivors[i] = i;
    const auto bases = static_cast<std::uint32_t>(spec.bases());
    std::vector<char> allowed(spec.bases());
    for (std::size_t n = 0; n < z.size(); ++n) {
        const auto set = consistent_bases(spec, z[n], r);
        ++state.n_processed;
        if (set.empty()) {
            ++state.empty_sets;
        } else {
            std::fill(allowed.begin(), allowed.end(), 0);
            for (auto m : set)
                allowed[m] = 1;
            state.log_expected_fraction += std::log(static_cast<double>(set.size()) / bases);
            std::erase_if(state.survivors,
                          [&](std::size_t c) { return !allowed[basis_at(candidates[c], n, bases)]; });
        }
        state.trace.push_back({state.n_processed, state.survivors.size(), state.log_expected_fraction});
    }
    return state;
}

inline void write_survivor_trace_csv(std::ostream& out, const ExclusionState& state)
{
    csv::Writer w(out);
    w.header({"n", "survivor_count", "log_expected_fraction"});
    for (const auto& s : state.trace)
        w.row(s.n, s.survivor_count, s.log_expected_fraction);
}

} // namespace y00lab
