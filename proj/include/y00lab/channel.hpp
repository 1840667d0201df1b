#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "y00lab/constellation.hpp"
#include "y00lab/csv.hpp"
#include "y00lab/keystream.hpp"
#include "y00lab/parallel.hpp"
#include "y00lab/rng.hpp"

namespace y00lab {

/// Eve's record of one transmission run. The ciphertext symbols travel with
/// the batch for Bob-side checks only; attack code consumes `outcomes()`.
class MeasurementBatch
{
  public:
    MeasurementBatch(ConstellationSpec spec, std::vector<Amplitude> z, std::uint64_t seed,
                     std::string secret_id, std::optional<std::vector<std::uint32_t>> symbols = {})
        : spec_(std::move(spec)), z_(std::move(z)), seed_(seed), secret_id_(std::move(secret_id)),
          symbols_(std::move(symbols))
    {
        if (symbols_ && symbols_->size() != z_.size())
            throw std::invalid_argument("MeasurementBatch: symbol count differs from outcome count");
    }

    std::span<const Amplitude> outcomes() const noexcept { return z_; }
    std::size_t size() const noexcept { return z_.size(); }
    const ConstellationSpec& spec() const noexcept { return spec_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& secret_id() const noexcept { return secret_id_; }
    bool has_symbols() const noexcept { return symbols_.has_value(); }
    std::span<const std::uint32_t> ciphertext_symbols() const
    {
        if (!symbols_)
            throw std::logic_error("MeasurementBatch: ciphertext symbols not retained");
        return *symbols_;
    }

    /// First n outcomes, symbols included.
    MeasurementBatch prefix(std::size_t n) const
    {
        n = std::min(n, z_.size());
        std::optional<std::vector<std::uint32_t>> syms;
        if (symbols_)
            syms.emplace(symbols_->begin(), symbols_->begin() + static_cast<std::ptrdiff_t>(n));
        return {spec_, {z_.begin(), z_.begin() + static_cast<std::ptrdiff_t>(n)}, seed_, secret_id_,
                std::move(syms)};
    }

  private:
    ConstellationSpec spec_;
    std::vector<Amplitude> z_;
    std::uint64_t seed_;
    std::string secret_id_;
    std::optional<std::vector<std::uint32_t>> symbols_;
};

/// Alice sends N uniformly drawn ciphertext symbols under the basis sequence
/// of `secret`; each state is measured once by heterodyne detection.
inline MeasurementBatch transmit(const ConstellationSpec& spec, const Secret& secret, std::size_t count,
                                 std::uint64_t seed, std::string secret_id = "true",
                                 unsigned workers = 1)
{
    const RandomStream symbol_stream{seed, domain::ciphertext};
    const RandomStream noise{seed, domain::channel};
    const auto bases = static_cast<std::uint32_t>(spec.bases());
    std::vector<Amplitude> z(count);
    std::vector<std::uint32_t> symbols(count);
    constexpr std::size_t block = 4096;
    parallel_for((count + block - 1) / block, workers, [&](std::size_t b) {
        const std::size_t end = std::min(count, (b + 1) * block);
        for (std::size_t n = b * block; n < end; ++n) {
            symbols[n] = static_cast<std::uint32_t>(symbol_stream.below(n, spec.symbols()));
            const auto alpha = spec.map_point(symbols[n], basis_at(secret, n, bases));
            z[n] = sample_heterodyne(alpha, noise, n);
        }
    });
    return {spec, std::move(z), seed, std::move(secret_id), std::move(symbols)};
}

struct DecodeOutcome
{
    std::vector<std::uint32_t> symbols;
    /// Present only when the batch retained its ciphertext symbols.
    std::optional<std::size_t> symbol_error_count;
    std::optional<double> symbol_error_rate;
    std::optional<double> bit_error_rate;
};

/// Nearest point of the given basis; ties go to the smallest symbol index.
inline std::uint32_t nearest_symbol(const ConstellationSpec& spec, Amplitude z, std::size_t basis)
{
    auto pts = spec.basis_points(basis);
    std::uint32_t best = 0;
    double best_d2 = std::norm(z - pts[0]);
    for (std::uint32_t ell = 1; ell < pts.size(); ++ell) {
        const double d2 = std::norm(z - pts[ell]);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = ell;
        }
    }
    return best;
}

namespace detail {
inline void score_decode(const MeasurementBatch& batch, DecodeOutcome& out)
{
    if (!batch.has_symbols())
        return;
    const auto truth = batch.ciphertext_symbols();
    const unsigned bits_per_symbol =
        std::max(1u, static_cast<unsigned>(std::bit_width(batch.spec().symbols() - 1)));
    std::size_t sym_err = 0, bit_err = 0;
    for (std::size_t n = 0; n < truth.size(); ++n) {
        if (out.symbols[n] != truth[n]) {
            ++sym_err;
            bit_err += static_cast<std::size_t>(std::popcount(out.symbols[n] ^ truth[n]));
        }
    }
    out.symbol_error_count = sym_err;
    const double n = static_cast<double>(truth.size());
    out.symbol_error_rate = truth.empty() ? 0.0 : static_cast<double>(sym_err) / n;
    out.bit_error_rate = truth.empty() ? 0.0 : static_cast<double>(bit_err) / (n * bits_per_symbol);
}
} // namespace detail

/// Bob decodes with the shared basis sequence.
inline DecodeOutcome bob_decode(const ConstellationSpec& spec, std::span<const std::uint32_t> bases,
                                const MeasurementBatch& batch)
{
    if (bases.size() != batch.size())
        throw std::invalid_argument("bob_decode: basis sequence length differs from batch");
    DecodeOutcome out;
    out.symbols.resize(batch.size());
    const auto z = batch.outcomes();
    for (std::size_t n = 0; n < z.size(); ++n)
        out.symbols[n] = nearest_symbol(spec, z[n], bases[n]);
    detail::score_decode(batch, out);
    return out;
}

struct BlindDecodeOutcome
{
    DecodeOutcome decode;
    std::vector<std::uint32_t> guessed_bases;
};

/// Eve decodes with a uniformly random basis guess per position.
inline BlindDecodeOutcome eve_blind_decode(const ConstellationSpec& spec, const MeasurementBatch& batch)
{
    const RandomStream guesses{batch.seed(), domain::decoy};
    BlindDecodeOutcome out;
    out.guessed_bases.resize(batch.size());
    out.decode.symbols.resize(batch.size());
    const auto z = batch.outcomes();
    for (std::size_t n = 0; n < z.size(); ++n) {
        out.guessed_bases[n] = static_cast<std::uint32_t>(guesses.below(n, spec.bases()));
        out.decode.symbols[n] = nearest_symbol(spec, z[n], out.guessed_bases[n]);
    }
    detail::score_decode(batch, out.decode);
    return out;
}

/// Writes the `n,re,im` outcome table (n is 1-based).
inline void write_batch_csv(std::ostream& out, std::span<const Amplitude> z)
{
    csv::Writer w(out);
    w.header({"n", "re", "im"});
    for (std::size_t n = 0; n < z.size(); ++n)
        w.row(n + 1, z[n].real(), z[n].imag());
}

inline std::vector<Amplitude> read_batch_csv(std::istream& in)
{
    const auto table = csv::read(in, {"n", "re", "im"});
    std::vector<Amplitude> z;
    z.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        try {
            if (csv::parse_u64(r[0]) != i + 1)
                throw FormatError("rows must be numbered 1..N in order");
            Amplitude v(csv::parse_double(r[1]), csv::parse_double(r[2]));
            if (!is_finite(v))
                throw FormatError("non-finite outcome");
            z.push_back(v);
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(table.line_numbers[i]) + ": " + e.what());
        }
    }
    return z;
}

} // namespace y00lab
