#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "y00lab/audit.hpp"
#include "y00lab/channel.hpp"
#include "y00lab/constellation.hpp"
#include "y00lab/csv.hpp"
#include "y00lab/exclusion.hpp"
#include "y00lab/keystream.hpp"
#include "y00lab/mle.hpp"
#include "y00lab/stats.hpp"

namespace y00lab {

/// Invalid scenario description. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// A run produced a result that contradicts a structural guarantee.
class InvariantViolation : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

enum class AttackKind { Exclusion, Mle, Both };

inline std::string_view to_string(AttackKind a)
{
    switch (a) {
    case AttackKind::Exclusion: return "exclusion";
    case AttackKind::Mle: return "mle";
    case AttackKind::Both: return "both";
    }
    return "?";
}

struct ConstellationParams
{
    ConstellationKind kind = ConstellationKind::P;
    std::size_t bases = 17;
    std::size_t symbols = 2;
    double d = 10.0;
    double amplitude = 10.0;
    unsigned bits = 2;
    std::string points_csv;

    ConstellationSpec build() const
    {
        switch (kind) {
        case ConstellationKind::P: return ConstellationSpec::p_type(bases, d);
        case ConstellationKind::N: return ConstellationSpec::n_type(bases, symbols, d);
        case ConstellationKind::Toy: return ConstellationSpec::toy(amplitude);
        case ConstellationKind::ToyQam: return ConstellationSpec::toy_qam(bits, d);
        case ConstellationKind::Custom: {
            std::ifstream in(points_csv);
            if (!in)
                throw IoError("cannot open constellation table '" + points_csv + "'");
            return read_constellation_csv(in);
        }
        }
        throw std::logic_error("unhandled constellation kind");
    }
};

struct SecretParams
{
    SecretMode mode = SecretMode::Whole;
    std::size_t decoys = 1000;
    /// Nonzero selects a fully enumerated 2^bits space instead of decoys.
    unsigned enumerated_bits = 0;
    unsigned phi_bits = 0;
};

struct ScenarioConfig
{
    ConstellationParams constellation;
    SecretParams secret;
    AttackKind attack = AttackKind::Both;
    std::vector<std::size_t> measurements{3000};
    std::vector<std::size_t> hist_n{200, 800};
    double r_over_d = 0.5;
    std::size_t mc_samples = 100'000;
    std::uint64_t seed = 1;
    std::string output_dir = "y00lab_out";
    unsigned workers = 1;
    double rz_step = 0;
    std::vector<ConstellationParams> mc_table;
    std::size_t kpa_measurements = 0;
    unsigned kpa_bits = 16;
    double audit_tolerance = 1e-9;

    std::size_t max_measurements() const
    {
        return measurements.empty() ? 0 : *std::max_element(measurements.begin(), measurements.end());
    }
};

inline std::vector<ConstellationParams> default_mc_rows()
{
    std::vector<ConstellationParams> rows;
    for (std::size_t m : {3, 9, 17, 257})
        rows.push_back({ConstellationKind::P, m, 2, 10.0, 10.0, 2, {}});
    for (std::size_t m : {16, 64, 256, 1024})
        rows.push_back({ConstellationKind::N, m, 16, 10.0, 10.0, 2, {}});
    rows.push_back({ConstellationKind::Toy, 2, 2, 20.0, 10.0, 2, {}});
    return rows;
}

namespace detail {

inline std::size_t line_of(std::string_view text, std::string_view key)
{
    if (key.empty())
        return 0;
    const std::string quoted = "\"" + std::string(key) + "\"";
    const auto pos = text.find(quoted);
    if (pos == std::string_view::npos)
        return 0;
    return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) + 1;
}

class ConfigReader
{
  public:
    explicit ConfigReader(std::string_view text) : text_(text) {}

    [[noreturn]] void fail(std::string_view key, const std::string& msg) const
    {
        throw ConfigError(msg, line_of(text_, key));
    }

    void only_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                   std::string_view where) const
    {
        if (!obj.is_object())
            fail(where, std::string(where.empty() ? "config" : where) + " must be an object");
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
                fail(it.key(), "unknown key '" + it.key() + "'");
        }
    }

    template <class T>
    T get(const nlohmann::json& obj, std::string_view key, T fallback) const
    {
        const auto it = obj.find(std::string(key));
        if (it == obj.end())
            return fallback;
        try {
            if constexpr (std::is_unsigned_v<T>) {
                if (!it->is_number_unsigned())
                    fail(key, "'" + std::string(key) + "' must be a non-negative integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number())
                    fail(key, "'" + std::string(key) + "' must be a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string())
                    fail(key, "'" + std::string(key) + "' must be a string");
            }
            return it->get<T>();
        } catch (const nlohmann::json::exception& e) {
            fail(key, "'" + std::string(key) + "': " + e.what());
        }
    }

    std::vector<std::size_t> counts(const nlohmann::json& obj, std::string_view key,
                                    std::vector<std::size_t> fallback) const
    {
        const auto it = obj.find(std::string(key));
        if (it == obj.end())
            return fallback;
        std::vector<std::size_t> out;
        if (it->is_number_unsigned()) {
            out.push_back(it->get<std::size_t>());
        } else if (it->is_array()) {
            for (const auto& v : *it) {
                if (!v.is_number_unsigned())
                    fail(key, "'" + std::string(key) + "' entries must be non-negative integers");
                out.push_back(v.get<std::size_t>());
            }
        } else {
            fail(key, "'" + std::string(key) + "' must be a count or a list of counts");
        }
        return out;
    }

    ConstellationParams constellation(const nlohmann::json& obj) const
    {
        only_keys(obj, {"kind", "M", "L", "d", "amplitude", "bits", "points_csv"}, "constellation");
        ConstellationParams p;
        try {
            p.kind = parse_kind(get<std::string>(obj, "kind", "P"));
        } catch (const std::invalid_argument& e) {
            fail("kind", e.what());
        }
        const bool is_n = p.kind == ConstellationKind::N;
        p.bases = get<std::size_t>(obj, "M", is_n ? 64 : 17);
        p.symbols = get<std::size_t>(obj, "L", is_n ? 16 : 2);
        p.amplitude = get<double>(obj, "amplitude", 10.0);
        p.bits = get<unsigned>(obj, "bits", 2);
        p.d = get<double>(obj, "d", p.kind == ConstellationKind::ToyQam || p.kind == ConstellationKind::Toy
                                        ? 2 * p.amplitude
                                        : 10.0);
        p.points_csv = get<std::string>(obj, "points_csv", "");
        if (p.kind == ConstellationKind::Toy) {
            p.bases = p.symbols = 2;
            p.d = 2 * p.amplitude;
        }
        if (p.kind == ConstellationKind::ToyQam)
            p.bases = p.symbols = std::size_t{1} << std::min(p.bits, 12u);
        if (p.kind == ConstellationKind::P)
            p.symbols = 2;
        if (p.kind == ConstellationKind::Custom && p.points_csv.empty())
            fail("kind", "Custom constellation needs 'points_csv'");
        try {
            if (p.kind != ConstellationKind::Custom)
                (void)p.build();
        } catch (const std::invalid_argument& e) {
            fail("constellation", e.what());
        }
        return p;
    }

  private:
    std::string_view text_;
};

inline nlohmann::ordered_json to_json(const ConstellationParams& p)
{
    nlohmann::ordered_json j;
    j["kind"] = std::string(to_string(p.kind));
    j["M"] = p.bases;
    j["L"] = p.symbols;
    j["d"] = p.d;
    j["amplitude"] = p.amplitude;
    j["bits"] = p.bits;
    j["points_csv"] = p.points_csv;
    return j;
}

} // namespace detail

inline ScenarioConfig parse_config(std::string_view text)
{
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto byte = std::min<std::size_t>(e.byte, text.size());
        const auto line = static_cast<std::size_t>(
                              std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n')) +
                          1;
        throw ConfigError(std::string("malformed JSON: ") + e.what(), line);
    }
    const detail::ConfigReader rd(text);
    rd.only_keys(root,
                 {"constellation", "secret", "attack", "N", "hist_N", "r_over_d", "mc_samples", "seed",
                  "output_dir", "workers", "rz_step", "mc_table", "kpa_measurements", "kpa_bits",
                  "audit_tolerance"},
                 "");
    ScenarioConfig c;
    if (root.contains("constellation"))
        c.constellation = rd.constellation(root["constellation"]);
    if (root.contains("secret")) {
        const auto& s = root["secret"];
        rd.only_keys(s, {"mode", "decoys", "enumerated_bits", "phi_bits"}, "secret");
        const auto mode = rd.get<std::string>(s, "mode", "whole");
        if (mode == "whole")
            c.secret.mode = SecretMode::Whole;
        else if (mode == "divided")
            c.secret.mode = SecretMode::Divided;
        else
            rd.fail("mode", "secret mode must be 'whole' or 'divided'");
        c.secret.decoys = rd.get<std::size_t>(s, "decoys", c.secret.decoys);
        c.secret.enumerated_bits = rd.get<unsigned>(s, "enumerated_bits", 0);
        c.secret.phi_bits = rd.get<unsigned>(s, "phi_bits", c.secret.enumerated_bits / 2);
        if (c.secret.enumerated_bits > 24)
            rd.fail("enumerated_bits", "enumerated_bits must be at most 24");
        if (c.secret.phi_bits > c.secret.enumerated_bits && c.secret.enumerated_bits > 0)
            rd.fail("phi_bits", "phi_bits exceeds enumerated_bits");
    }
    const auto attack = rd.get<std::string>(root, "attack", "both");
    if (attack == "mle")
        c.attack = AttackKind::Mle;
    else if (attack == "exclusion")
        c.attack = AttackKind::Exclusion;
    else if (attack == "both")
        c.attack = AttackKind::Both;
    else
        rd.fail("attack", "attack must be 'exclusion', 'mle' or 'both'");
    c.measurements = rd.counts(root, "N", c.measurements);
    if (c.measurements.empty())
        rd.fail("N", "'N' list is empty");
    c.hist_n = rd.counts(root, "hist_N", c.hist_n);
    c.r_over_d = rd.get<double>(root, "r_over_d", c.r_over_d);
    if (!(c.r_over_d > 0))
        rd.fail("r_over_d", "r_over_d must be positive");
    c.mc_samples = rd.get<std::size_t>(root, "mc_samples", c.mc_samples);
    if (c.mc_samples < min_mc_samples)
        rd.fail("mc_samples", "mc_samples must be at least 10000");
    c.seed = rd.get<std::uint64_t>(root, "seed", c.seed);
    c.output_dir = rd.get<std::string>(root, "output_dir", c.output_dir);
    c.workers = rd.get<unsigned>(root, "workers", c.workers);
    if (c.workers == 0)
        rd.fail("workers", "workers must be at least 1");
    c.rz_step = rd.get<double>(root, "rz_step", 0.0);
    if (c.rz_step < 0)
        rd.fail("rz_step", "rz_step must be non-negative");
    if (root.contains("mc_table")) {
        if (!root["mc_table"].is_array())
            rd.fail("mc_table", "mc_table must be a list of constellations");
        for (const auto& row : root["mc_table"])
            c.mc_table.push_back(rd.constellation(row));
    } else {
        c.mc_table = default_mc_rows();
    }
    c.kpa_measurements = rd.get<std::size_t>(root, "kpa_measurements", 0);
    c.kpa_bits = rd.get<unsigned>(root, "kpa_bits", c.kpa_bits);
    if (c.kpa_bits < 2 || c.kpa_bits > 24)
        rd.fail("kpa_bits", "kpa_bits must be in [2, 24]");
    c.audit_tolerance = rd.get<double>(root, "audit_tolerance", c.audit_tolerance);
    if (!(c.audit_tolerance > 0))
        rd.fail("audit_tolerance", "audit_tolerance must be positive");
    return c;
}

/// Fully resolved config; parse_config(echo) reproduces it.
inline nlohmann::ordered_json to_json(const ScenarioConfig& c)
{
    nlohmann::ordered_json j;
    j["constellation"] = detail::to_json(c.constellation);
    j["secret"] = {{"mode", c.secret.mode == SecretMode::Whole ? "whole" : "divided"},
                   {"decoys", c.secret.decoys},
                   {"enumerated_bits", c.secret.enumerated_bits},
                   {"phi_bits", c.secret.phi_bits}};
    j["attack"] = std::string(to_string(c.attack));
    j["N"] = c.measurements;
    j["hist_N"] = c.hist_n;
    j["r_over_d"] = c.r_over_d;
    j["mc_samples"] = c.mc_samples;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    j["rz_step"] = c.rz_step;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : c.mc_table)
        rows.push_back(detail::to_json(r));
    j["mc_table"] = std::move(rows);
    j["kpa_measurements"] = c.kpa_measurements;
    j["kpa_bits"] = c.kpa_bits;
    j["audit_tolerance"] = c.audit_tolerance;
    return j;
}

inline ScenarioConfig load_config(const std::string& path)
{
    return parse_config(csv::slurp(path));
}

inline std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Output directory that records every file it writes for the manifest.
class ArtifactSink
{
  public:
    explicit ArtifactSink(std::filesystem::path dir, std::uint64_t seed) : dir_(std::move(dir)), seed_(seed)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            throw IoError("cannot create output directory '" + dir_.string() + "'");
    }

    const std::filesystem::path& dir() const noexcept { return dir_; }

    void write(const std::string& name, const std::function<void(std::ostream&)>& fill)
    {
        std::ostringstream buf;
        fill(buf);
        const std::string bytes = buf.str();
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write '" + path.string() + "'");
        out << bytes;
        out.close();
        if (!out)
            throw IoError("failed writing '" + path.string() + "'");
        files_.push_back({name, bytes.size(), fnv1a64(bytes)});
    }

    void write_json(const std::string& name, const nlohmann::ordered_json& j)
    {
        write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    }

    nlohmann::ordered_json& notes() { return notes_; }

    /// Writes manifest.json listing every file written so far.
    void finish()
    {
        nlohmann::ordered_json m;
        m["seed"] = seed_;
        auto files = nlohmann::ordered_json::array();
        for (const auto& f : files_)
            files.push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a64", csv::hex(f.hash)}, {"seed", seed_}});
        m["files"] = std::move(files);
        m["notes"] = notes_;
        const std::string text = m.dump(2) + "\n";
        std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!out || !(out << text))
            throw IoError("cannot write manifest in '" + dir_.string() + "'");
    }

    struct FileRecord
    {
        std::string name;
        std::size_t bytes;
        std::uint64_t hash;
    };
    const std::vector<FileRecord>& files() const noexcept { return files_; }

  private:
    std::filesystem::path dir_;
    std::uint64_t seed_;
    std::vector<FileRecord> files_;
    nlohmann::ordered_json notes_ = nlohmann::ordered_json::object();
};

inline std::uint64_t ensemble_seed(std::uint64_t seed) { return mix64(seed ^ 0x5EC2E7ULL); }

inline CandidateEnsemble build_ensemble(const ScenarioConfig& c)
{
    if (c.secret.enumerated_bits > 0)
        return CandidateEnsemble::enumerated(ensemble_seed(c.seed), c.secret.enumerated_bits, c.secret.mode,
                                             c.secret.phi_bits);
    return CandidateEnsemble::with_decoys(ensemble_seed(c.seed), c.secret.decoys, c.secret.mode);
}

inline nlohmann::ordered_json spec_json(const ConstellationSpec& spec)
{
    return {{"kind", std::string(to_string(spec.kind()))},
            {"M", spec.bases()},
            {"L", spec.symbols()},
            {"d", spec.distance()},
            {"amplitude", spec.amplitude()},
            {"bits", spec.qam_bits()}};
}

inline void write_stats_header(csv::Writer& w)
{
    w.header({"kind", "M", "L", "d", "a_s", "var_s", "a_sprime", "var_sprime", "gamma", "n_th", "mc_samples",
              "se_a_s", "se_var_s", "se_a_sprime", "se_var_sprime", "se_gamma"});
}

inline void write_stats_row(csv::Writer& w, const ConstellationSpec& spec, const AttackStatistics& s)
{
    w.row(to_string(spec.kind()), spec.bases(), spec.symbols(), spec.distance(), s.a_s, s.var_s, s.a_sprime,
          s.var_sprime, s.gamma, s.n_th, s.mc_samples, s.se_a_s, s.se_var_s, s.se_a_sprime, s.se_var_sprime,
          s.se_gamma);
}

inline void check_statistics(const AttackStatistics& s)
{
    if (!jensen_consistent(s))
        throw InvariantViolation("Jensen bound violated: a_sprime " + csv::format(s.a_sprime) + " < a_s " +
                                 csv::format(s.a_s) + " beyond 4 standard errors");
}

inline std::string_view secret_mode_name(SecretMode m) { return m == SecretMode::Whole ? "whole" : "divided"; }

/// Transmission and decoding only: scatter data plus decode summaries.
inline void run_simulation(const ScenarioConfig& c, ArtifactSink& sink)
{
    const auto spec = c.constellation.build();
    const auto ensemble = build_ensemble(c);
    const std::size_t n = c.max_measurements();
    const auto batch = transmit(spec, ensemble.true_secret(), n, c.seed,
                                "candidate-" + std::to_string(ensemble.true_index), c.workers);
    sink.write_json("config.resolved.json", to_json(c));
    sink.write("constellation.csv", [&](std::ostream& o) { write_constellation_csv(o, spec); });
    sink.write("scatter.csv", [&](std::ostream& o) { write_batch_csv(o, batch.outcomes()); });
    const auto bob = bob_decode(spec, basis_sequence(ensemble.true_secret(), n, spec.bases()), batch);
    const auto eve = eve_blind_decode(spec, batch);
    nlohmann::ordered_json meta;
    meta["spec"] = spec_json(spec);
    meta["seed"] = c.seed;
    meta["secret_id"] = batch.secret_id();
    meta["secret_mode"] = std::string(secret_mode_name(c.secret.mode));
    meta["N"] = n;
    meta["bob_symbol_error_rate"] = bob.symbol_error_rate.value_or(0.0);
    meta["bob_bit_error_rate"] = bob.bit_error_rate.value_or(0.0);
    meta["eve_blind_symbol_error_rate"] = eve.decode.symbol_error_rate.value_or(0.0);
    meta["eve_blind_bit_error_rate"] = eve.decode.bit_error_rate.value_or(0.0);
    sink.write_json("scatter.json", meta);
}

inline Window default_window(const ConstellationSpec& spec, double r)
{
    double re_lo = 0, re_hi = 0, im_lo = 0, im_hi = 0;
    for (auto p : spec.points()) {
        re_lo = std::min(re_lo, p.real());
        re_hi = std::max(re_hi, p.real());
        im_lo = std::min(im_lo, p.imag());
        im_hi = std::max(im_hi, p.imag());
    }
    const double pad = r + 1.0;
    return {re_lo - pad, re_hi + pad, im_lo - pad, im_hi + pad};
}

inline double exclusion_radius(const ConstellationSpec& spec, double r_over_d)
{
    return r_over_d * spec.distance();
}

inline void run_rz_map(const ScenarioConfig& c, ArtifactSink& sink)
{
    const auto spec = c.constellation.build();
    const double r = exclusion_radius(spec, c.r_over_d);
    const double step = c.rz_step > 0 ? c.rz_step : spec.distance() / 20.0;
    const auto grid = rz_map(spec, r, default_window(spec, r), step, c.workers);
    sink.write("rz_map.csv", [&](std::ostream& o) { write_rz_csv(o, grid); });
    sink.notes()["rz_map"] = {{"r", r}, {"step", step}, {"mean_R", grid.mean()}};
}

inline void run_mc_table(const ScenarioConfig& c, ArtifactSink& sink)
{
    const double sigma = build_ensemble(c).entropy_nats();
    sink.write("table1.csv", [&](std::ostream& o) {
        csv::Writer w(o);
        write_stats_header(w);
        for (const auto& row : c.mc_table) {
            const auto spec = row.build();
            const auto stats = clt_params(spec, c.mc_samples, c.seed, sigma, c.workers);
            check_statistics(stats);
            write_stats_row(w, spec, stats);
        }
    });
}

inline void run_audit(const ScenarioConfig& c, ArtifactSink& sink, std::string* verdict = nullptr)
{
    const auto spec = c.constellation.build();
    AuditOptions opt;
    opt.tolerance = c.audit_tolerance;
    opt.gamma_samples = c.mc_samples;
    opt.seed = c.seed;
    opt.workers = c.workers;
    const auto report = audit(spec, opt);
    if (report.classification == AuditClass::ConditionHolds &&
        !(report.gamma_estimate <= 4 * report.gamma_stderr))
        throw InvariantViolation("audit: distributions identical but Gamma estimate is significantly positive");
    auto j = to_json(report);
    j["spec"] = spec_json(spec);
    sink.write_json("audit.json", j);
    if (verdict)
        *verdict = verdict_line(spec, report);
}

/// Full attack scenario: transmission, the selected attacks, and the audit.
inline void run_scenario(const ScenarioConfig& c, ArtifactSink& sink)
{
    run_simulation(c, sink);
    const auto spec = c.constellation.build();
    const auto ensemble = build_ensemble(c);
    const std::size_t n = c.max_measurements();
    const auto batch = transmit(spec, ensemble.true_secret(), n, c.seed,
                                "candidate-" + std::to_string(ensemble.true_index), c.workers);
    sink.write("candidates.csv", [&](std::ostream& o) { write_candidates_csv(o, ensemble.candidates); });
    sink.notes()["true_candidate_id"] = ensemble.true_index;
    sink.notes()["sigma_nats"] = ensemble.entropy_nats();

    if (c.attack != AttackKind::Exclusion) {
        const LikelihoodTable table(spec, batch.outcomes(), c.workers);
        const auto paths = nll_paths(table, ensemble.candidates, c.workers);
        const auto trace = nll_trace(paths, ensemble.true_index);
        sink.write("nll_trace.csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
        auto hists = nlohmann::ordered_json::object();
        for (auto h : c.hist_n) {
            if (h == 0 || h > n || ensemble.size() < 2)
                continue;
            const auto hist = histogram_fd(paths.cross_section(h, ensemble.true_index));
            const std::string name = "hist_N" + std::to_string(h) + ".csv";
            sink.write(name, [&](std::ostream& o) { write_histogram_csv(o, hist); });
            hists[name] = {{"N", h}, {"bin_width", hist.bin_width}, {"binning", "freedman-diaconis"},
                           {"nll_true", paths.at(ensemble.true_index, h)}};
        }
        sink.notes()["histograms"] = hists;
        const auto ranking = rank_candidates(table, ensemble.candidates, n, c.workers);
        sink.write("ranking.csv", [&](std::ostream& o) { write_ranking_csv(o, ranking); });
        sink.notes()["true_rank"] = rank_of(ranking, ensemble.true_index);
        sink.notes()["likelihood_floor_hits"] = table.floor_hits();
        if (c.measurements.size() > 1) {
            sink.write("sweep.csv", [&](std::ostream& o) {
                csv::Writer w(o);
                w.header({"N", "true_rank", "nll_true", "nll_decoy_min"});
                for (auto m : c.measurements) {
                    const auto r = rank_candidates(table, ensemble.candidates, m, c.workers);
                    const double true_nll = paths.at(ensemble.true_index, m);
                    double decoy_min = std::numeric_limits<double>::infinity();
                    for (const auto& s : r)
                        if (s.candidate_id != ensemble.true_index)
                            decoy_min = std::min(decoy_min, s.nll);
                    w.row(m, rank_of(r, ensemble.true_index), true_nll, decoy_min);
                }
            });
        }
        const auto stats = clt_params(spec, c.mc_samples, c.seed, ensemble.entropy_nats(), c.workers);
        check_statistics(stats);
        sink.write("table1.csv", [&](std::ostream& o) {
            csv::Writer w(o);
            write_stats_header(w);
            write_stats_row(w, spec, stats);
        });
    }

    if (c.attack != AttackKind::Mle) {
        run_rz_map(c, sink);
        const double r = exclusion_radius(spec, c.r_over_d);
        const auto state = run_exclusion(spec, batch.outcomes(), r, ensemble.candidates);
        for (std::size_t i = 1; i < state.trace.size(); ++i)
            if (state.trace[i].survivor_count > state.trace[i - 1].survivor_count)
                throw InvariantViolation("exclusion survivors grew");
        sink.write("survivor_trace.csv", [&](std::ostream& o) { write_survivor_trace_csv(o, state); });
        const bool true_survives =
            std::binary_search(state.survivors.begin(), state.survivors.end(), ensemble.true_index);
        sink.notes()["exclusion"] = {{"r", r},
                                     {"survivors", state.survivors.size()},
                                     {"true_survives", true_survives},
                                     {"empty_consistent_sets", state.empty_sets}};
    }
    run_audit(c, sink);
}

struct KpaRow
{
    ProtocolType protocol;
    unsigned ensemble_bits = 0;
    double sigma_nats = 0;
    double sigma_phi_nats = 0;
    std::size_t measurements = 0;
    std::size_t measurement_survivors = 0;
    bool true_survives_measurement = true;
    std::size_t kpa_bits_to_unique = 0;
    double predicted_remaining_nats = 0;
};

namespace detail {
/// Observe the true key stream bit by bit until one candidate is left.
inline std::size_t kpa_bits_needed(std::span<const Secret> candidates, std::vector<std::size_t> survivors,
                                   const Secret& truth, std::size_t cap = 64)
{
    std::size_t used = 0;
    while (survivors.size() > 1 && used < cap) {
        kpa_refine(candidates, survivors, {used, key_bit_at(truth, used)});
        ++used;
    }
    return used;
}

/// Candidates attaining the minimum NLL (exact ties kept).
inline std::vector<std::size_t> mle_survivors(const LikelihoodTable& table, std::span<const Secret> candidates,
                                              std::size_t count, unsigned workers)
{
    std::vector<double> scores(candidates.size());
    parallel_for(candidates.size(), workers, [&](std::size_t c) { scores[c] = table.score(candidates[c], count); });
    const double best = *std::min_element(scores.begin(), scores.end());
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < scores.size(); ++c)
        if (scores[c] == best)
            out.push_back(c);
    return out;
}
} // namespace detail

/// Known-plaintext effort with and without the measurement attack, per protocol type.
inline std::vector<KpaRow> kpa_compare(const ScenarioConfig& c)
{
    const auto spec = c.constellation.build();
    const unsigned bits = c.kpa_bits;
    const unsigned phi_bits = bits / 2;
    const double sigma = bits * std::numbers::ln2;
    const double sigma_phi = phi_bits * std::numbers::ln2;
    std::size_t n = c.kpa_measurements;
    if (n == 0) {
        const auto stats = clt_params(spec, c.mc_samples, c.seed, sigma, c.workers);
        check_statistics(stats);
        n = stats.gamma > 0 ? static_cast<std::size_t>(std::ceil(5.0 * sigma / stats.gamma)) : 0;
    }
    std::vector<KpaRow> rows;
    {
        const auto e = CandidateEnsemble::enumerated(ensemble_seed(c.seed), bits);
        std::vector<std::size_t> all(e.size());
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = i;
        KpaRow r{ProtocolType::ConventionalStream, bits, sigma, 0.0, 0, e.size(), true, 0,
                 remaining_entropy(ProtocolType::ConventionalStream, sigma, 0.0)};
        r.kpa_bits_to_unique = detail::kpa_bits_needed(e.candidates, all, e.true_secret());
        rows.push_back(r);
    }
    for (auto protocol : {ProtocolType::Y00Whole, ProtocolType::Y00Divided}) {
        const bool divided = protocol == ProtocolType::Y00Divided;
        const auto e = CandidateEnsemble::enumerated(ensemble_seed(c.seed), bits,
                                                     divided ? SecretMode::Divided : SecretMode::Whole, phi_bits);
        const auto batch = transmit(spec, e.true_secret(), n, c.seed, "true", c.workers);
        const LikelihoodTable table(spec, batch.outcomes(), c.workers);
        auto survivors = detail::mle_survivors(table, e.candidates, n, c.workers);
        KpaRow r;
        r.protocol = protocol;
        r.ensemble_bits = bits;
        r.sigma_nats = sigma;
        r.sigma_phi_nats = divided ? sigma_phi : sigma;
        r.measurements = n;
        r.measurement_survivors = survivors.size();
        r.true_survives_measurement = std::find(survivors.begin(), survivors.end(), e.true_index) != survivors.end();
        r.predicted_remaining_nats = remaining_entropy(protocol, sigma, r.sigma_phi_nats);
        r.kpa_bits_to_unique = detail::kpa_bits_needed(e.candidates, std::move(survivors), e.true_secret());
        rows.push_back(r);
    }
    return rows;
}

inline void write_kpa_csv(std::ostream& out, std::span<const KpaRow> rows)
{
    csv::Writer w(out);
    w.header({"protocol", "ensemble_bits", "sigma_nats", "sigma_phi_nats", "measurements", "measurement_survivors",
              "true_survives_measurement", "kpa_bits_to_unique", "predicted_remaining_nats",
              "predicted_kpa_bits"});
    for (const auto& r : rows)
        w.row(to_string(r.protocol), r.ensemble_bits, r.sigma_nats, r.sigma_phi_nats, r.measurements,
              r.measurement_survivors, r.true_survives_measurement ? 1 : 0, r.kpa_bits_to_unique,
              r.predicted_remaining_nats, r.predicted_remaining_nats / std::numbers::ln2);
}

inline void run_kpa(const ScenarioConfig& c, ArtifactSink& sink)
{
    const auto rows = kpa_compare(c);
    sink.write("kpa.csv", [&](std::ostream& o) { write_kpa_csv(o, rows); });
}

} // namespace y00lab
