// Command-line front end for the y00lab simulation and attack toolkit.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "y00lab/scenario.hpp"

namespace {

enum ExitCode { Ok = 0, ConfigFailure = 2, IoFailure = 3, InvariantFailure = 4 };

struct Common
{
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config, "scenario JSON (defaults apply when omitted)");
    cmd->add_option("--output", c.output, "output directory (overrides output_dir)");
    cmd->add_option("--seed", c.seed, "master seed (overrides config)");
    cmd->add_option("--workers", c.workers, "worker threads (overrides config)")->check(CLI::PositiveNumber);
}

y00lab::ScenarioConfig resolve(const Common& c)
{
    auto cfg = c.config.empty() ? y00lab::parse_config("{}") : y00lab::load_config(c.config);
    if (!c.output.empty())
        cfg.output_dir = c.output;
    if (c.seed)
        cfg.seed = *c.seed;
    if (c.workers)
        cfg.workers = *c.workers;
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Y00 quantum stream cipher simulator and attack lab"};
    app.require_subcommand(1);

    Common common;
    auto* simulate = app.add_subcommand("simulate", "transmit and decode, write scatter data");
    auto* attack = app.add_subcommand("attack", "full scenario: transmission, attacks and audit");
    auto* rz = app.add_subcommand("rz-map", "exclusion ratio over a grid of outcomes");
    auto* mc = app.add_subcommand("mc-table", "Monte Carlo attack statistics table");
    auto* aud = app.add_subcommand("audit", "check whether outcomes leak the basis");
    auto* kpa = app.add_subcommand("kpa", "known-plaintext effort per protocol type");
    for (auto* cmd : {simulate, attack, rz, mc, aud, kpa})
        add_common(cmd, common);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve(common);
        y00lab::ArtifactSink sink(cfg.output_dir, cfg.seed);
        if (*simulate) {
            y00lab::run_simulation(cfg, sink);
        } else if (*attack) {
            y00lab::run_scenario(cfg, sink);
        } else {
            sink.write_json("config.resolved.json", y00lab::to_json(cfg));
            if (*rz) {
                y00lab::run_rz_map(cfg, sink);
            } else if (*mc) {
                y00lab::run_mc_table(cfg, sink);
            } else if (*aud) {
                std::string verdict;
                y00lab::run_audit(cfg, sink, &verdict);
                std::cout << verdict << '\n';
            } else if (*kpa) {
                y00lab::run_kpa(cfg, sink);
            }
        }
        sink.finish();
        std::cout << "wrote " << sink.files().size() + 1 << " files to " << sink.dir().string() << '\n';
        return Ok;
    } catch (const y00lab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const y00lab::FormatError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const y00lab::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return IoFailure;
    } catch (const y00lab::InvariantViolation& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return InvariantFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ConfigFailure;
    }
}
