#pragma once

// Batch commands behind the uvjitter executable. Each writes its CSV (and a
// best-effort SVG) into out_dir and reports progress on log.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "uvjitter/scenario.hpp"

namespace uvjitter::commands {

/// pdf.csv (e_r_w, f_analytic, hist_exact, hist_ftpd), cdf.csv
/// (k, cdf_jitter, cdf_nojitter) and pdf.svg.
void cmd_pdf(const scenario::Scenario& s, const std::filesystem::path& out_dir, std::ostream& log);

/// ber_sigma.csv (sigma_rad, ber_analytic, ber_mc, ci_lo, ci_hi, n_th) and
/// ber_sigma.svg. Uses the sweep when it is over sigma, else 0..0.07 rad.
void cmd_ber_sigma(const scenario::Scenario& s, const std::filesystem::path& out_dir,
                   std::ostream& log);

/// ber_range.csv (range_m, ber_jitter, ber_nojitter, ber_mc, ci_lo, ci_hi)
/// and ber_range.svg. Uses the sweep when it is over range_m, else 30..170 m.
void cmd_ber_range(const scenario::Scenario& s, const std::filesystem::path& out_dir,
                   std::ostream& log);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant suite over all modules at the scenario's geometry.
std::vector<CheckResult> run_checks(const scenario::Scenario& s);

/// Prints the check table; returns true when every check passed.
bool cmd_validate(const scenario::Scenario& s, std::ostream& out);

/// Seed for sweep point i, derived from the base seed.
std::uint64_t point_seed(std::uint64_t base, std::size_t i);

} // namespace uvjitter::commands
