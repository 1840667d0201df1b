#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "y00lab/csv.hpp"
#include "y00lab/rng.hpp"

namespace y00lab {

enum class ConstellationKind { P, N, Toy, ToyQam, Custom };

inline std::string_view to_string(ConstellationKind kind)
{
    switch (kind) {
    case ConstellationKind::P: return "P";
    case ConstellationKind::N: return "N";
    case ConstellationKind::Toy: return "Toy";
    case ConstellationKind::ToyQam: return "ToyQam";
    case ConstellationKind::Custom: return "Custom";
    }
    return "?";
}

inline ConstellationKind parse_kind(std::string_view text)
{
    if (text == "P") return ConstellationKind::P;
    if (text == "N") return ConstellationKind::N;
    if (text == "Toy") return ConstellationKind::Toy;
    if (text == "ToyQam") return ConstellationKind::ToyQam;
    if (text == "Custom") return ConstellationKind::Custom;
    throw std::invalid_argument("unknown constellation kind '" + std::string(text) + "'");
}

namespace detail {
inline std::size_t exact_sqrt(std::size_t n)
{
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : 0;
}
} // namespace detail

/// The mapping alpha(symbol, basis) for every ciphertext symbol and basis.
///
/// Symbols and bases are 0-based here (symbol in [0, L), basis in [0, M));
/// the CSV exchange format uses 1-based `ell,m` columns.
///
/// Geometry conventions:
///  - P:   2M points on a circle of radius A = d/2. Basis m holds the antipodal
///         pair at angle pi*m/M; the symbol sits on the pair member whose
///         angular index has parity symbol, so angular neighbours carry opposite
///         symbols when M is odd. d is the same-basis (antipodal) distance.
///  - N:   sqrt(L) x sqrt(L) coarse lattice of spacing d centred on 0, row-major
///         symbols; basis m translates it by (u, v) * d / sqrt(M), m = u*sqrt(M)+v.
///  - Toy: L = M = 2, alpha = +A when symbol XOR basis = 1, else -A.
///  - ToyQam: L = M = 2^J, point indexed by the J-bit word symbol XOR basis on a
///         centred QAM grid of spacing d.
class ConstellationSpec
{
  public:
    static ConstellationSpec p_type(std::size_t bases, double d)
    {
        if (bases < 2)
            throw std::invalid_argument("P constellation needs M >= 2");
        check_distance(d);
        ConstellationSpec spec(ConstellationKind::P, bases, 2, d);
        spec.amplitude_ = d / 2.0;
        for (std::size_t m = 0; m < bases; ++m) {
            for (std::size_t ell = 0; ell < 2; ++ell) {
                const std::size_t half = ell ^ (m & 1);
                const double theta = std::numbers::pi * static_cast<double>(m) /
                                         static_cast<double>(bases) +
                                     std::numbers::pi * static_cast<double>(half);
                spec.points_[spec.slot(ell, m)] = std::polar(spec.amplitude_, theta);
            }
        }
        return spec;
    }

    static ConstellationSpec n_type(std::size_t bases, std::size_t symbols, double d)
    {
        const std::size_t side = detail::exact_sqrt(symbols);
        const std::size_t shift_side = detail::exact_sqrt(bases);
        if (symbols < 2 || side == 0)
            throw std::invalid_argument("N constellation needs L a perfect square >= 4");
        if (bases < 2 || shift_side == 0)
            throw std::invalid_argument("N constellation needs M a perfect square >= 4");
        check_distance(d);
        ConstellationSpec spec(ConstellationKind::N, bases, symbols, d);
        const double centre = static_cast<double>(side) / 2.0;
        const double step = d / static_cast<double>(shift_side);
        double reach = 0;
        for (std::size_t m = 0; m < bases; ++m) {
            const Amplitude shift(static_cast<double>(m / shift_side) * step,
                                  static_cast<double>(m % shift_side) * step);
            for (std::size_t ell = 0; ell < symbols; ++ell) {
                const Amplitude coarse((static_cast<double>(ell / side) + 0.5 - centre) * d,
                                       (static_cast<double>(ell % side) + 0.5 - centre) * d);
                const Amplitude point = coarse + shift;
                spec.points_[spec.slot(ell, m)] = point;
                reach = std::max(reach, std::abs(point));
            }
        }
        spec.amplitude_ = reach;
        return spec;
    }

    static ConstellationSpec toy(double amplitude = 10.0)
    {
        if (!(amplitude > 0) || !std::isfinite(amplitude))
            throw std::invalid_argument("Toy constellation needs a positive amplitude");
        ConstellationSpec spec(ConstellationKind::Toy, 2, 2, 2 * amplitude);
        spec.amplitude_ = amplitude;
        for (std::size_t m = 0; m < 2; ++m)
            for (std::size_t ell = 0; ell < 2; ++ell)
                spec.points_[spec.slot(ell, m)] = Amplitude((ell ^ m) == 1 ? amplitude : -amplitude, 0);
        return spec;
    }

    static ConstellationSpec toy_qam(unsigned bits, double d = 20.0)
    {
        if (bits < 1 || bits > 12)
            throw std::invalid_argument("ToyQam needs 1 <= J <= 12");
        check_distance(d);
        const std::size_t count = std::size_t{1} << bits;
        ConstellationSpec spec(ConstellationKind::ToyQam, count, count, d);
        const std::size_t cols = std::size_t{1} << ((bits + 1) / 2);
        const std::size_t rows = count / cols;
        double reach = 0;
        for (std::size_t m = 0; m < count; ++m) {
            for (std::size_t ell = 0; ell < count; ++ell) {
                const std::size_t word = ell ^ m;
                const Amplitude point(
                    (static_cast<double>(word % cols) + 0.5 - static_cast<double>(cols) / 2) * d,
                    (static_cast<double>(word / cols) + 0.5 - static_cast<double>(rows) / 2) * d);
                spec.points_[spec.slot(ell, m)] = point;
                reach = std::max(reach, std::abs(point));
            }
        }
        spec.bits_ = bits;
        spec.amplitude_ = reach;
        return spec;
    }

    /// points[m * L + ell] = alpha(ell, m).
    static ConstellationSpec custom(std::size_t symbols, std::size_t bases,
                                    std::vector<Amplitude> points)
    {
        if (symbols < 2 || bases < 2)
            throw std::invalid_argument("custom constellation needs L >= 2 and M >= 2");
        if (points.size() != symbols * bases)
            throw std::invalid_argument("custom constellation needs exactly L*M points");
        for (auto p : points)
            require_finite(p, "custom constellation");
        ConstellationSpec spec(ConstellationKind::Custom, bases, symbols, 0.0);
        spec.points_ = std::move(points);
        double reach = 0;
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < bases; ++m)
            for (std::size_t a = 0; a < symbols; ++a) {
                reach = std::max(reach, std::abs(spec.map_point(a, m)));
                for (std::size_t b = a + 1; b < symbols; ++b)
                    nearest = std::min(nearest, std::abs(spec.map_point(a, m) - spec.map_point(b, m)));
            }
        spec.amplitude_ = reach;
        spec.distance_ = nearest;
        return spec;
    }

    ConstellationKind kind() const noexcept { return kind_; }
    std::size_t bases() const noexcept { return bases_; }
    std::size_t symbols() const noexcept { return symbols_; }
    /// Design distance d (P: antipodal, N: coarse spacing, Toy: 2A, ToyQam: grid
    /// spacing, Custom: minimum same-basis distance).
    double distance() const noexcept { return distance_; }
    /// Circle radius for P and Toy; largest |alpha| for the others.
    double amplitude() const noexcept { return amplitude_; }
    unsigned qam_bits() const noexcept { return bits_; }

    Amplitude map_point(std::size_t symbol, std::size_t basis) const
    {
        if (symbol >= symbols_ || basis >= bases_)
            throw std::out_of_range("map_point: index out of range");
        return points_[slot(symbol, basis)];
    }

    /// The L points of one basis, contiguous.
    std::span<const Amplitude> basis_points(std::size_t basis) const
    {
        if (basis >= bases_)
            throw std::out_of_range("basis_points: index out of range");
        return {points_.data() + basis * symbols_, symbols_};
    }

    const std::vector<Amplitude>& points() const noexcept { return points_; }

    /// Rigid translation of every point; used by the audit invariance checks.
    ConstellationSpec translated(Amplitude offset) const
    {
        ConstellationSpec copy = *this;
        copy.kind_ = ConstellationKind::Custom;
        for (auto& p : copy.points_)
            p += offset;
        return copy;
    }

  private:
    ConstellationSpec(ConstellationKind kind, std::size_t bases, std::size_t symbols, double d)
        : kind_(kind), bases_(bases), symbols_(symbols), distance_(d), points_(bases * symbols)
    {
    }

    static void check_distance(double d)
    {
        if (!(d > 0) || !std::isfinite(d))
            throw std::invalid_argument("constellation distance d must be positive");
    }

    std::size_t slot(std::size_t symbol, std::size_t basis) const noexcept
    {
        return basis * symbols_ + symbol;
    }

    ConstellationKind kind_;
    std::size_t bases_;
    std::size_t symbols_;
    double distance_;
    double amplitude_ = 0;
    unsigned bits_ = 0;
    std::vector<Amplitude> points_;
};

struct CorrectnessResult
{
    bool passes = false;
    double min_same_basis_distance = 0;
};

/// Minimum distance between different symbols of the same basis, and whether
/// it exceeds `threshold`.
inline CorrectnessResult check_correctness(const ConstellationSpec& spec, double threshold)
{
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < spec.bases(); ++m) {
        auto pts = spec.basis_points(m);
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b)
                nearest = std::min(nearest, std::abs(pts[a] - pts[b]));
    }
    return {nearest > threshold, nearest};
}

struct HidingReport
{
    /// Every (symbol, basis) can be confused with every symbol under some basis.
    bool all_symbols_confusable = false;
    /// counts[(ell * M + m) * L + ell'] = number of bases b' with
    /// |alpha(ell, m) - alpha(ell', b')| <= epsilon.
    std::vector<std::uint32_t> confusion_counts;
    /// max/min of confusion_counts over ell' != ell; infinite when some count is 0.
    double uniformity_spread = 0;
    /// Every (symbol, basis) has some other-symbol point within epsilon.
    bool every_point_confusable = false;
    /// Fraction of (symbol, basis) pairs with some other-symbol point within epsilon.
    double confusable_fraction = 0;
    double epsilon = 0;
};

inline HidingReport check_hiding(const ConstellationSpec& spec, double epsilon)
{
    if (!(epsilon > 0))
        throw std::invalid_argument("check_hiding: epsilon must be positive");
    const std::size_t L = spec.symbols();
    const std::size_t M = spec.bases();
    HidingReport report;
    report.epsilon = epsilon;
    report.confusion_counts.assign(L * M * L, 0);
    const double eps2 = epsilon * epsilon;
    std::size_t confusable_hits = 0;
    std::uint32_t lo = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t hi = 0;
    for (std::size_t ell = 0; ell < L; ++ell) {
        for (std::size_t m = 0; m < M; ++m) {
            const Amplitude here = spec.map_point(ell, m);
            std::uint32_t* row = &report.confusion_counts[(ell * M + m) * L];
            for (std::size_t b = 0; b < M; ++b) {
                auto pts = spec.basis_points(b);
                for (std::size_t other = 0; other < L; ++other)
                    if (std::norm(here - pts[other]) <= eps2)
                        ++row[other];
            }
            bool confusable = false;
            for (std::size_t other = 0; other < L; ++other) {
                if (other == ell)
                    continue;
                confusable = confusable || row[other] > 0;
                lo = std::min(lo, row[other]);
                hi = std::max(hi, row[other]);
            }
            confusable_hits += confusable ? 1 : 0;
        }
    }
    report.all_symbols_confusable = lo > 0;
    report.uniformity_spread = lo == 0 ? std::numeric_limits<double>::infinity()
                                       : static_cast<double>(hi) / static_cast<double>(lo);
    report.confusable_fraction = static_cast<double>(confusable_hits) / static_cast<double>(L * M);
    report.every_point_confusable = confusable_hits == L * M;
    return report;
}

/// Writes the `ell,m,re,im` table (1-based indices).
inline void write_constellation_csv(std::ostream& out, const ConstellationSpec& spec)
{
    csv::Writer w(out);
    w.header({"ell", "m", "re", "im"});
    for (std::size_t m = 0; m < spec.bases(); ++m)
        for (std::size_t ell = 0; ell < spec.symbols(); ++ell) {
            const auto p = spec.map_point(ell, m);
            w.row(ell + 1, m + 1, p.real(), p.imag());
        }
}

/// Reads an `ell,m,re,im` table into a Custom spec. Every (ell, m) cell of the
/// L x M grid must appear exactly once.
inline ConstellationSpec read_constellation_csv(std::istream& in)
{
    const auto table = csv::read(in, {"ell", "m", "re", "im"});
    std::size_t L = 0, M = 0;
    struct Cell { std::size_t ell, m; Amplitude p; std::size_t line; };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const auto line = table.line_numbers[i];
        try {
            Cell c{csv::parse_u64(r[0]), csv::parse_u64(r[1]),
                   {csv::parse_double(r[2]), csv::parse_double(r[3])}, line};
            if (c.ell == 0 || c.m == 0)
                throw FormatError("indices are 1-based");
            L = std::max(L, c.ell);
            M = std::max(M, c.m);
            cells.push_back(c);
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(line) + ": " + e.what());
        }
    }
    if (L < 2 || M < 2)
        throw FormatError("constellation table needs L >= 2 and M >= 2");
    std::vector<Amplitude> points(L * M);
    std::vector<bool> seen(L * M, false);
    for (const auto& c : cells) {
        const auto idx = (c.m - 1) * L + (c.ell - 1);
        if (seen[idx])
            throw FormatError("line " + std::to_string(c.line) + ": duplicate entry");
        if (!is_finite(c.p))
            throw FormatError("line " + std::to_string(c.line) + ": non-finite amplitude");
        seen[idx] = true;
        points[idx] = c.p;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw FormatError("constellation table is missing entries");
    return ConstellationSpec::custom(L, M, std::move(points));
}

} // namespace y00lab
