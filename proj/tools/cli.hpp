#pragma once

// Command-line front end. `run` is the whole program minus process exit so the
// tests can drive it in-process.
//
//   l1surface fit --config run.ini
//   l1surface audit --surface surface.csv --curves curves.csv --spot 100
//   l1surface diagnostics --surface surface.csv (--config run.ini | --curves c.csv --spot 100)
//
// Exit codes: 0 success, 1 configuration or IO error, 2 infeasible LP,
// 3 audit failure.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l1surface/recovery.hpp"

namespace l1surface::cli {

enum ExitCode { ok = 0, io_error = 1, infeasible = 2, audit_failed = 3 };

/// Every key of a fit config file. Keys match the long option names of `fit`.
struct RunConfig {
    std::string quotes;
    std::string curves;  // optional: flat `rate` / `dividend` otherwise
    double spot = 0.0;
    double rate = 0.0;
    double dividend = 0.0;
    std::string quote_kind = "price";  // price | vol

    std::string mode = "tensor";  // tensor | fx
    std::size_t order_t = 7;
    std::size_t order_k = 14;
    std::vector<double> alphas;
    std::size_t poly_orders = 2;
    std::string extension = "linear_floored";  // constant | linear | linear_floored
    std::optional<std::size_t> grid_maturities;  // default 11 (tensor) or the quoted count (fx)
    std::optional<std::size_t> grid_strikes;     // default 104 (tensor) or 406 (fx)
    double strike_extension = 0.15;
    std::optional<double> maturity_extension;

    std::optional<std::string> tolerance;  // relative | absolute | bid_ask
    double epsilon = 5e-4;
    std::string caps = "literal";  // literal | discounted_forward
    bool relax_outside_quoted = false;
    bool relax_to_feasible = false;

    std::string formulation = "auto";  // auto | primal | dual
    std::size_t max_iterations = 0;
    double feasibility_tol = 1e-8;
    double optimality_tol = 1e-9;

    std::string local_vol_form = "dupire";  // dupire | inverted

    std::string output = ".";
    bool export_surface = true;
    bool export_diagnostics = true;
    bool export_coefficients = true;
    bool export_lp = false;
};

/// Reads a config file (key = value lines, '#' comments); `overrides` are
/// command-line style arguments ("--epsilon", "1e-3") that win over the file.
/// Throws ParseError on unknown keys or bad values.
RunConfig load_run_config(const std::string& path, std::vector<std::string> overrides = {});

/// Maps the textual settings onto the library configuration. Throws ValidationError.
RecoveryConfig to_recovery_config(const RunConfig& rc);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace l1surface::cli
