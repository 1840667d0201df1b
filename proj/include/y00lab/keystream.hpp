#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "y00lab/csv.hpp"
#include "y00lab/rng.hpp"

namespace y00lab {

enum class SecretMode { Whole, Divided };

/// Pre-shared secret. In Whole mode both PRNG streams derive from `s`; in
/// Divided mode the basis stream uses `s_phi` and the key stream `s_k`.
struct Secret
{
    SecretMode mode = SecretMode::Whole;
    std::uint64_t s = 0;
    std::uint64_t s_k = 0;
    std::uint64_t s_phi = 0;

    static constexpr Secret whole(std::uint64_t s) { return {SecretMode::Whole, s, 0, 0}; }
    static constexpr Secret divided(std::uint64_t s_k, std::uint64_t s_phi)
    {
        return {SecretMode::Divided, 0, s_k, s_phi};
    }

    constexpr std::uint64_t basis_seed() const noexcept
    {
        return mode == SecretMode::Whole ? s : s_phi;
    }
    constexpr std::uint64_t key_seed() const noexcept
    {
        return mode == SecretMode::Whole ? s : s_k;
    }

    friend constexpr bool operator==(const Secret&, const Secret&) = default;
};

using BasisSequence = std::vector<std::uint32_t>;
using Bits = std::vector<std::uint8_t>;

/// phi_n(secret) in [0, M), 0-based.
constexpr std::uint32_t basis_at(const Secret& secret, std::uint64_t n, std::uint32_t bases) noexcept
{
    return static_cast<std::uint32_t>(prf(secret.basis_seed(), domain::basis, n) % bases);
}

constexpr std::uint8_t key_bit_at(const Secret& secret, std::uint64_t n) noexcept
{
    return static_cast<std::uint8_t>(prf(secret.key_seed(), domain::key, n) & 1u);
}

inline BasisSequence basis_sequence(const Secret& secret, std::size_t count, std::size_t bases)
{
    if (bases < 2 || bases > UINT32_MAX)
        throw std::invalid_argument("basis_sequence: need 2 <= M < 2^32");
    BasisSequence seq(count);
    for (std::size_t n = 0; n < count; ++n)
        seq[n] = basis_at(secret, n, static_cast<std::uint32_t>(bases));
    return seq;
}

inline Bits key_bits(const Secret& secret, std::size_t count)
{
    Bits bits(count);
    for (std::size_t n = 0; n < count; ++n)
        bits[n] = key_bit_at(secret, n);
    return bits;
}

inline Bits encrypt(std::span<const std::uint8_t> plaintext, std::span<const std::uint8_t> key)
{
    if (plaintext.size() != key.size())
        throw std::invalid_argument("encrypt: plaintext and key lengths differ");
    Bits out(plaintext.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>((plaintext[i] ^ key[i]) & 1u);
    return out;
}

inline Bits decrypt(std::span<const std::uint8_t> ciphertext, std::span<const std::uint8_t> key)
{
    if (ciphertext.size() != key.size())
        throw std::invalid_argument("decrypt: ciphertext and key lengths differ");
    return encrypt(ciphertext, key);
}

struct KeyObservation
{
    std::uint64_t position = 0;
    std::uint8_t bit = 0;
};

/// Indices of candidates whose key stream agrees with every observation.
inline std::vector<std::size_t> kpa_filter(std::span<const Secret> candidates,
                                           std::span<const KeyObservation> observed)
{
    std::vector<std::size_t> survivors;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        bool consistent = true;
        for (const auto& o : observed) {
            if (key_bit_at(candidates[c], o.position) != (o.bit & 1u)) {
                consistent = false;
                break;
            }
        }
        if (consistent)
            survivors.push_back(c);
    }
    return survivors;
}

/// Narrow an existing survivor list by one more observation.
inline void kpa_refine(std::span<const Secret> candidates, std::vector<std::size_t>& survivors,
                       const KeyObservation& o)
{
    std::erase_if(survivors, [&](std::size_t c) {
        return key_bit_at(candidates[c], o.position) != (o.bit & 1u);
    });
}

/// Candidate secrets Eve scores, with the index of the true one. The entropy
/// of the secret is taken as ln(size).
struct CandidateEnsemble
{
    std::vector<Secret> candidates;
    std::size_t true_index = 0;

    std::size_t size() const noexcept { return candidates.size(); }
    const Secret& true_secret() const { return candidates.at(true_index); }
    double entropy_nats() const { return std::log(static_cast<double>(candidates.size())); }

    /// `decoys` random secrets plus the true one, placed at a seeded uniform
    /// position so candidate ids carry no information.
    static CandidateEnsemble with_decoys(std::uint64_t seed, std::size_t decoys,
                                         SecretMode mode = SecretMode::Whole)
    {
        const RandomStream stream{seed, domain::decoy};
        CandidateEnsemble e;
        e.candidates.reserve(decoys + 1);
        for (std::size_t i = 0; i <= decoys; ++i) {
            const auto a = stream.bits(2 * i);
            e.candidates.push_back(mode == SecretMode::Whole ? Secret::whole(a)
                                                             : Secret::divided(a, stream.bits(2 * i + 1)));
        }
        e.true_index = static_cast<std::size_t>(stream.below(std::uint64_t{1} << 40, decoys + 1));
        return e;
    }

    /// Full enumeration of a 2^bits secret space around a seeded base word.
    /// Divided mode spends `phi_bits` of the budget on s_phi and the rest on s_k.
    static CandidateEnsemble enumerated(std::uint64_t seed, unsigned bits,
                                        SecretMode mode = SecretMode::Whole, unsigned phi_bits = 0)
    {
        if (bits < 1 || bits > 24)
            throw std::invalid_argument("enumerated ensemble: 1 <= bits <= 24");
        if (mode == SecretMode::Divided && phi_bits > bits)
            throw std::invalid_argument("enumerated ensemble: phi_bits exceeds bits");
        const RandomStream stream{seed, domain::decoy};
        const std::uint64_t base_s = stream.bits(0) & ~((std::uint64_t{1} << bits) - 1);
        const std::uint64_t base_k = stream.bits(1) & ~((std::uint64_t{1} << bits) - 1);
        const std::uint64_t base_phi = stream.bits(2) & ~((std::uint64_t{1} << bits) - 1);
        const std::size_t count = std::size_t{1} << bits;
        CandidateEnsemble e;
        e.candidates.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (mode == SecretMode::Whole) {
                e.candidates.push_back(Secret::whole(base_s | i));
            } else {
                const std::uint64_t phi_part = i & ((std::uint64_t{1} << phi_bits) - 1);
                const std::uint64_t k_part = i >> phi_bits;
                e.candidates.push_back(Secret::divided(base_k | k_part, base_phi | phi_part));
            }
        }
        e.true_index = static_cast<std::size_t>(stream.below(std::uint64_t{1} << 40, count));
        return e;
    }
};

inline void write_candidates_csv(std::ostream& out, std::span<const Secret> candidates)
{
    csv::Writer w(out);
    w.header({"candidate_id", "mode", "s", "s_k", "s_phi"});
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        w.row(i, c.mode == SecretMode::Whole ? "whole" : "divided", csv::hex(c.s), csv::hex(c.s_k),
              csv::hex(c.s_phi));
    }
}

inline std::vector<Secret> read_candidates_csv(std::istream& in)
{
    const auto table = csv::read(in, {"candidate_id", "mode", "s", "s_k", "s_phi"});
    std::vector<Secret> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const auto line = std::to_string(table.line_numbers[i]);
        try {
            if (csv::parse_u64(r[0]) != i)
                throw FormatError("candidate ids must be 0..n-1 in order");
            Secret s;
            if (r[1] == "whole")
                s.mode = SecretMode::Whole;
            else if (r[1] == "divided")
                s.mode = SecretMode::Divided;
            else
                throw FormatError("unknown mode '" + r[1] + "'");
            s.s = csv::parse_u64(r[2]);
            s.s_k = csv::parse_u64(r[3]);
            s.s_phi = csv::parse_u64(r[4]);
            out.push_back(s);
        } catch (const FormatError& e) {
            throw FormatError("line " + line + ": " + e.what());
        }
    }
    return out;
}

} // namespace y00lab
