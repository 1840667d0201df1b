#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "y00lab/csv.hpp"

namespace y00lab {

/// Streaming central moments up to fourth order. Merging is exact in the
/// algebraic sense, so chunked accumulation combined in a fixed order is
/// reproducible.
struct Moments
{
    double n = 0;
    double mean_ = 0;
    double m2 = 0, m3 = 0, m4 = 0;

    void push(double x)
    {
        const double n1 = n;
        n += 1;
        const double delta = x - mean_;
        const double dn = delta / n;
        const double dn2 = dn * dn;
        const double term1 = delta * dn * n1;
        mean_ += dn;
        m4 += term1 * dn2 * (n * n - 3 * n + 3) + 6 * dn2 * m2 - 4 * dn * m3;
        m3 += term1 * dn * (n - 2) - 3 * dn * m2;
        m2 += term1;
    }

    void merge(const Moments& b)
    {
        if (b.n == 0)
            return;
        if (n == 0) {
            *this = b;
            return;
        }
        const double na = n, nb = b.n, nt = na + nb;
        const double delta = b.mean_ - mean_;
        const double d2 = delta * delta, d3 = d2 * delta, d4 = d2 * d2;
        const double new_m4 = m4 + b.m4 + d4 * na * nb * (na * na - na * nb + nb * nb) / (nt * nt * nt) +
                              6 * d2 * (na * na * b.m2 + nb * nb * m2) / (nt * nt) +
                              4 * delta * (na * b.m3 - nb * m3) / nt;
        const double new_m3 = m3 + b.m3 + d3 * na * nb * (na - nb) / (nt * nt) +
                              3 * delta * (na * b.m2 - nb * m2) / nt;
        m2 = m2 + b.m2 + d2 * na * nb / nt;
        m3 = new_m3;
        m4 = new_m4;
        mean_ += delta * nb / nt;
        n = nt;
    }

    double count() const { return n; }
    double mean() const { return mean_; }
    /// Population variance.
    double variance() const { return n > 0 ? m2 / n : 0.0; }
    double fourth_central() const { return n > 0 ? m4 / n : 0.0; }
    double mean_stderr() const { return n > 0 ? std::sqrt(variance() / n) : 0.0; }
    double variance_stderr() const
    {
        if (n < 2)
            return 0.0;
        const double v = variance();
        return std::sqrt(std::max(0.0, fourth_central() - v * v) / n);
    }
};

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty())
        throw std::invalid_argument("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct HistogramBin
{
    double lo = 0, hi = 0;
    std::size_t count = 0;
};

struct Histogram
{
    std::vector<HistogramBin> bins;
    double bin_width = 0;
};

/// Freedman-Diaconis binning (width 2 IQR n^(-1/3)) from min to max.
inline Histogram histogram_fd(std::vector<double> values)
{
    Histogram h;
    if (values.empty())
        return h;
    std::sort(values.begin(), values.end());
    const double lo = values.front(), hi = values.back();
    const double iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
    double width = 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
    std::size_t count = 1;
    if (width > 0 && hi > lo)
        count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / width)));
    else
        width = std::max(hi - lo, 1.0);
    h.bin_width = width;
    h.bins.resize(count);
    for (std::size_t k = 0; k < count; ++k)
        h.bins[k] = {lo + static_cast<double>(k) * width, lo + static_cast<double>(k + 1) * width, 0};
    for (double v : values) {
        auto k = static_cast<std::size_t>((v - lo) / width);
        h.bins[std::min(k, count - 1)].count++;
    }
    return h;
}

inline void write_histogram_csv(std::ostream& out, const Histogram& h)
{
    csv::Writer w(out);
    w.header({"bin_lo", "bin_hi", "count"});
    for (const auto& b : h.bins)
        w.row(b.lo, b.hi, b.count);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf)
{
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// Upper-tail probability of a chi-square variable.
inline double chi_square_sf(double x, double dof)
{
    if (x <= 0)
        return 1.0;
    return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

} // namespace y00lab
