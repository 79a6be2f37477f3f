// uvjitter pdf|ber-sigma|ber-range|validate --config <file> --out <dir>
//   [--seed <u64>] [--workers <n>] [--samples <n>] [--symbols <n>]
// Exit codes: 0 ok, 1 validation failure, 2 input error.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "uvjitter/commands.hpp"
#include "uvjitter/error.hpp"

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::int64_t> samples;
    std::optional<std::int64_t> symbols;
};

void add_common(CLI::App* cmd, Options& o, bool needs_out)
{
    cmd->add_option("--config", o.config, "scenario file (defaults to the baseline scenario)")
        ->check(CLI::ExistingFile);
    if (needs_out) cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "override mc.seed");
    cmd->add_option("--workers", o.workers, "override mc.workers")->check(CLI::PositiveNumber);
    cmd->add_option("--samples", o.samples, "override mc.n_samples")->check(CLI::PositiveNumber);
    cmd->add_option("--symbols", o.symbols, "override mc.n_symbols")->check(CLI::PositiveNumber);
}

uvjitter::scenario::Scenario load(const Options& o)
{
    uvjitter::scenario::Scenario s;
    if (!o.config.empty()) s = uvjitter::scenario::load_scenario(o.config);
    if (o.seed) s.mc.seed = *o.seed;
    if (o.workers) s.mc.workers = *o.workers;
    if (o.samples) s.mc.n_samples = *o.samples;
    if (o.symbols) s.mc.n_symbols = *o.symbols;
    s.validate();
    return s;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Transceiver jitter analysis for NLOS ultraviolet scattering links"};
    app.require_subcommand(1);
    Options o;
    auto* pdf = app.add_subcommand("pdf", "received-power PDF and count CDF (pdf.csv, cdf.csv)");
    auto* sigma = app.add_subcommand("ber-sigma", "BER against jitter standard deviation (ber_sigma.csv)");
    auto* range = app.add_subcommand("ber-range", "BER against link range (ber_range.csv)");
    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    auto* dump = app.add_subcommand("config", "print the effective scenario");
    add_common(pdf, o, true);
    add_common(sigma, o, true);
    add_common(range, o, true);
    add_common(validate, o, false);
    add_common(dump, o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto s = load(o);
        if (pdf->parsed()) uvjitter::commands::cmd_pdf(s, o.out, std::cout);
        if (sigma->parsed()) uvjitter::commands::cmd_ber_sigma(s, o.out, std::cout);
        if (range->parsed()) uvjitter::commands::cmd_ber_range(s, o.out, std::cout);
        if (dump->parsed()) std::cout << uvjitter::scenario::serialize(s);
        if (validate->parsed()) return uvjitter::commands::cmd_validate(s, std::cout) ? 0 : 1;
    } catch (const uvjitter::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
