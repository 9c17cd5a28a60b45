#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "l1surface/analytics.hpp"
#include "l1surface/error.hpp"
#include "l1surface/kernels.hpp"
#include "l1surface/market_data.hpp"
#include "l1surface/surface_io.hpp"

namespace l1surface::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void add_run_options(CLI::App& app, RunConfig& rc) {
    app.add_option("--quotes", rc.quotes, "quote CSV: maturity,strike,bid,ask[,mid]");
    app.add_option("--curves", rc.curves, "curve CSV: maturity,rate,dividend");
    app.add_option("--spot", rc.spot, "spot price");
    app.add_option("--rate", rc.rate, "flat rate when no curve file is given");
    app.add_option("--dividend", rc.dividend, "flat dividend yield when no curve file is given");
    app.add_option("--quote_kind", rc.quote_kind)->check(CLI::IsMember({"price", "vol"}));
    app.add_option("--mode", rc.mode)->check(CLI::IsMember({"tensor", "fx"}));
    app.add_option("--order_t", rc.order_t, "N_T");
    app.add_option("--order_k", rc.order_k, "N_K");
    app.add_option("--alphas", rc.alphas, "mollification widths (fx mode)")->delimiter(',');
    app.add_option("--poly_orders", rc.poly_orders);
    app.add_option("--extension", rc.extension)->check(CLI::IsMember({"constant", "linear", "linear_floored"}));
    app.add_option("--grid_maturities", rc.grid_maturities, "M_T");
    app.add_option("--grid_strikes", rc.grid_strikes, "M_K");
    app.add_option("--strike_extension", rc.strike_extension);
    app.add_option("--maturity_extension", rc.maturity_extension);
    app.add_option("--tolerance", rc.tolerance)->check(CLI::IsMember({"relative", "absolute", "bid_ask"}));
    app.add_option("--epsilon", rc.epsilon);
    app.add_option("--caps", rc.caps)->check(CLI::IsMember({"literal", "discounted_forward"}));
    app.add_option("--relax_outside_quoted", rc.relax_outside_quoted);
    app.add_option("--relax_to_feasible", rc.relax_to_feasible,
                 "bisect a common band multiplier until the LP is feasible");
    app.add_option("--formulation", rc.formulation)->check(CLI::IsMember({"auto", "primal", "dual"}));
    app.add_option("--max_iterations", rc.max_iterations);
    app.add_option("--feasibility_tol", rc.feasibility_tol);
    app.add_option("--optimality_tol", rc.optimality_tol);
    app.add_option("--local_vol_form", rc.local_vol_form)->check(CLI::IsMember({"dupire", "inverted"}));
    app.add_option("--output", rc.output, "output directory");
    app.add_option("--export_surface", rc.export_surface);
    app.add_option("--export_diagnostics", rc.export_diagnostics);
    app.add_option("--export_coefficients", rc.export_coefficients);
    app.add_option("--export_lp", rc.export_lp);
}

CapConvention parse_caps(const std::string& s) {
    return s == "discounted_forward" ? CapConvention::discounted_forward : CapConvention::literal;
}

LocalVolForm parse_local_vol(const std::string& s) {
    return s == "inverted" ? LocalVolForm::inverted : LocalVolForm::dupire;
}

Market load_market(const std::string& curves, double spot, double rate, double dividend) {
    if (!(spot > 0.0)) throw ValidationError("spot must be positive");
    Market m;
    m.spot = spot;
    if (curves.empty()) {
        m.rate = Curve::flat(rate);
        m.dividend = Curve::flat(dividend);
    } else {
        TermStructure ts = load_curves(fs::path(curves));
        m.rate = std::move(ts.rate);
        m.dividend = std::move(ts.dividend);
    }
    return m;
}

ordered_json slack_json(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

ordered_json audit_json(const AuditReport& a) {
    ordered_json j;
    j["pass"] = a.pass;
    j["tolerance"] = a.tolerance;
    j["worst_family"] = std::string(family_name(a.worst_family));
    j["worst_slack"] = slack_json(a.worst_slack);
    ordered_json fams = ordered_json::object();
    for (const FamilyAudit& f : a.families) {
        ordered_json e;
        e["pass"] = f.pass;
        e["checked"] = f.checked;
        e["worst_slack"] = slack_json(f.worst_slack);
        if (f.node) {
            e["maturity"] = f.maturity;
            e["strike"] = f.strike;
        }
        fams[std::string(family_name(f.family))] = e;
    }
    j["families"] = fams;
    j["tight_cap_excess"] = a.tight_cap_excess;
    j["cap_warning"] = a.cap_warning;
    return j;
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    fn(f);
    if (!f) throw Error("failed writing " + path.string());
}

int cmd_fit(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    if (rc.quotes.empty()) throw ValidationError("config is missing `quotes`");
    const Market market = load_market(rc.curves, rc.spot, rc.rate, rc.dividend);
    IngestOptions io;
    io.kind = rc.quote_kind == "vol" ? QuoteKind::implied_vol : QuoteKind::call_price;
    const QuoteSet quotes = load_quotes(fs::path(rc.quotes), market, io);
    const RecoveryConfig cfg = to_recovery_config(rc);

    const fs::path dir(rc.output);
    fs::create_directories(dir);

    ordered_json report;
    report["mode"] = rc.mode;
    report["kernels"] = std::string(kernels::name(kernels::active().isa));

    if (rc.export_lp) {
        const RecoveryProblem p = build_problem(quotes, cfg);
        write_file(dir / "lp.txt", [&](std::ostream& f) { write_lp(f, p.lp); });
        write_file(dir / "system.txt", [&](std::ostream& f) { write_system(f, p.system); });
    }

    RecoveredSurface s;
    double scale = 1.0;
    try {
        if (rc.relax_to_feasible) {
            RelaxedRecovery r = recover_relaxed(quotes, cfg);
            s = std::move(r.surface);
            scale = r.scale;
        } else {
            s = recover(quotes, cfg);
        }
    } catch (const InfeasibleError& e) {
        report["status"] = "infeasible";
        if (e.family()) report["infeasible_family"] = std::string(family_name(*e.family()));
        report["infeasible_group"] = std::string(group_name(e.group()));
        write_json(dir / "audit.json", report);
        err << e.what() << '\n';
        return infeasible;
    } catch (const SolverError& e) {
        report["status"] = std::string(status_name(e.status()));
        write_json(dir / "audit.json", report);
        err << e.what() << '\n';
        return io_error;
    }

    report["status"] = std::string(status_name(s.status));
    report["objective"] = s.objective;
    report["iterations"] = s.iterations;
    report["lp_rows"] = s.lp_rows;
    report["lp_vars"] = s.lp_vars;
    report["max_violation"] = s.max_violation;
    report["complementarity"] = s.complementarity;
    report["nonzero_coefficients"] = s.nonzero_coefficients;
    report["coefficients"] = s.x.size();
    report["band_excess"] = s.band_excess();
    report["band_scale"] = scale;
    report["grid"] = {{"maturities", s.grid.num_maturities()}, {"strikes", s.grid.num_strikes()}};
    report["audit"] = audit_json(s.audit);
    write_json(dir / "audit.json", report);

    if (rc.export_surface)
        write_file(dir / "surface.csv", [&](std::ostream& f) { write_surface(f, s.grid, s.prices); });
    if (rc.export_coefficients)
        write_file(dir / "coefficients.csv", [&](std::ostream& f) { write_coefficients(f, s); });
    if (rc.export_diagnostics) {
        DiagnosticsOptions dopt;
        dopt.local_vol_form = parse_local_vol(rc.local_vol_form);
        dopt.audit = {cfg.no_arbitrage.caps, -1e-8, cfg.no_arbitrage.relax_outside_quoted};
        const SurfaceDiagnostics d = diagnose(s.prices, s.grid, dopt);
        const NodeSlacks ns = node_slacks(s.prices, s.grid, dopt.audit);
        write_file(dir / "diagnostics.csv", [&](std::ostream& f) { write_diagnostics(f, s.grid, s.prices, d, ns); });
    }

    out << fmt::format("status {}  objective {:.10g}  iterations {}  nonzero {}/{}  audit {}\n",
                       status_name(s.status), s.objective, s.iterations, s.nonzero_coefficients, s.x.size(),
                       s.audit.pass ? "pass" : "FAIL");
    if (s.audit.cap_warning)
        out << fmt::format("warning: first-strike price exceeds S*exp(-qT) by {:.6g}\n", s.audit.tight_cap_excess);
    return s.audit.pass ? ok : audit_failed;
}

struct SurfaceArgs {
    std::string surface;
    std::string curves;
    std::string config;
    double spot = 0.0;
    double rate = 0.0;
    double dividend = 0.0;
    std::string caps = "literal";
    std::string local_vol_form = "dupire";
    std::string out;
};

MarketStructure load_aligned(const SurfaceArgs& a, Vector& prices) {
    const SurfaceTable table = read_surface(fs::path(a.surface));
    const Market market = load_market(a.curves, a.spot, a.rate, a.dividend);
    return align_surface(table, market, prices);
}

int cmd_audit(const SurfaceArgs& a, std::ostream& out) {
    Vector prices;
    const MarketStructure grid = load_aligned(a, prices);
    const AuditReport r = audit(prices, grid, {parse_caps(a.caps), -1e-8, false});
    const ordered_json j = audit_json(r);
    if (!a.out.empty()) write_json(fs::path(a.out), j);
    out << fmt::format("audit {}  worst {} slack {:.6g}\n", r.pass ? "pass" : "FAIL", family_name(r.worst_family),
                       r.worst_slack);
    return r.pass ? ok : audit_failed;
}

int cmd_diagnostics(SurfaceArgs a, std::ostream& out) {
    if (!a.config.empty()) {
        const RunConfig rc = load_run_config(a.config);
        a.curves = rc.curves;
        a.spot = rc.spot;
        a.rate = rc.rate;
        a.dividend = rc.dividend;
        a.caps = rc.caps;
        a.local_vol_form = rc.local_vol_form;
    }
    Vector prices;
    const MarketStructure grid = load_aligned(a, prices);
    DiagnosticsOptions dopt;
    dopt.local_vol_form = parse_local_vol(a.local_vol_form);
    dopt.audit.caps = parse_caps(a.caps);
    const SurfaceDiagnostics d = diagnose(prices, grid, dopt);
    const NodeSlacks ns = node_slacks(prices, grid, dopt.audit);
    const fs::path path = a.out.empty() ? fs::path("diagnostics.csv") : fs::path(a.out);
    write_file(path, [&](std::ostream& f) { write_diagnostics(f, grid, prices, d, ns); });
    out << fmt::format("wrote {} ({} nodes, audit {})\n", path.string(), grid.size(), d.audit.pass ? "pass" : "FAIL");
    return ok;
}

}  // namespace

RunConfig load_run_config(const std::string& path, std::vector<std::string> overrides) {
    if (!fs::exists(path)) throw ParseError("config file not found: " + path);
    RunConfig rc;
    CLI::App app("config");
    add_run_options(app, rc);
    app.set_config("--config", path, "", true);
    app.allow_config_extras(false);
    try {
        std::reverse(overrides.begin(), overrides.end());  // CLI11 consumes from the back
        app.parse(overrides);
    } catch (const CLI::ParseError& e) {
        throw ParseError(std::string("bad config ") + path + ": " + e.what());
    }
    return rc;
}

RecoveryConfig to_recovery_config(const RunConfig& rc) {
    const bool fx = rc.mode == "fx";
    RecoveryConfig cfg = fx ? RecoveryConfig::fx_defaults() : RecoveryConfig{};
    cfg.order_t = rc.order_t;
    cfg.order_k = rc.order_k;
    cfg.shape.alphas = rc.alphas;
    cfg.shape.poly_orders = rc.poly_orders;
    cfg.shape.extension = rc.extension == "constant" ? PiecewiseLinear::Extension::constant
                          : rc.extension == "linear" ? PiecewiseLinear::Extension::linear
                                                     : PiecewiseLinear::Extension::linear_floored;
    if (rc.grid_maturities) cfg.grid_maturities = *rc.grid_maturities;
    if (rc.grid_strikes) cfg.grid_strikes = *rc.grid_strikes;
    cfg.extension.strike_fraction = rc.strike_extension;
    cfg.extension.maturity_fraction = rc.maturity_extension;

    if (rc.tolerance) {
        cfg.tolerance.mode = *rc.tolerance == "absolute" ? ToleranceMode::absolute
                             : *rc.tolerance == "bid_ask" ? ToleranceMode::bid_ask
                                                          : ToleranceMode::relative;
    }
    cfg.tolerance.epsilon = rc.epsilon;
    cfg.no_arbitrage.caps = parse_caps(rc.caps);
    cfg.no_arbitrage.relax_outside_quoted = rc.relax_outside_quoted;

    cfg.solver.formulation = rc.formulation == "primal" ? Formulation::primal
                             : rc.formulation == "dual" ? Formulation::dual
                                                        : Formulation::automatic;
    cfg.solver.max_iterations = rc.max_iterations;
    cfg.solver.feasibility_tol = rc.feasibility_tol;
    cfg.solver.optimality_tol = rc.optimality_tol;
    return cfg;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app("Arbitrage-free call surface recovery by weighted l1 minimization", "l1surface");
    app.require_subcommand(1);

    std::string fit_config;
    CLI::App* fit = app.add_subcommand("fit", "recover a surface from quotes");
    fit->add_option("--config", fit_config, "run configuration (key = value per line)")->required();
    fit->allow_extras();
    fit->footer("Any config key can also be given as --key value and overrides the file.");

    SurfaceArgs aa;
    CLI::App* aud = app.add_subcommand("audit", "check a surface file for static arbitrage");
    aud->add_option("--surface", aa.surface, "T,K,C surface file")->required();
    aud->add_option("--curves", aa.curves, "maturity,rate,dividend curve file");
    aud->add_option("--spot", aa.spot, "spot price")->required();
    aud->add_option("--rate", aa.rate, "flat rate when no curve file is given");
    aud->add_option("--dividend", aa.dividend, "flat dividend yield when no curve file is given");
    aud->add_option("--caps", aa.caps)->check(CLI::IsMember({"literal", "discounted_forward"}));
    aud->add_option("--out", aa.out, "write the report as JSON");

    SurfaceArgs da;
    CLI::App* dia = app.add_subcommand("diagnostics", "implied vol, density and local vol of a surface file");
    dia->add_option("--surface", da.surface, "T,K,C surface file")->required();
    auto* dcfg = dia->add_option("--config", da.config, "fit config supplying spot and curves");
    dia->add_option("--curves", da.curves)->excludes(dcfg);
    dia->add_option("--spot", da.spot)->excludes(dcfg);
    dia->add_option("--rate", da.rate)->excludes(dcfg);
    dia->add_option("--dividend", da.dividend)->excludes(dcfg);
    dia->add_option("--caps", da.caps)->check(CLI::IsMember({"literal", "discounted_forward"}));
    dia->add_option("--local_vol_form", da.local_vol_form)->check(CLI::IsMember({"dupire", "inverted"}));
    dia->add_option("--out", da.out, "output CSV (default diagnostics.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return io_error;
    }

    try {
        if (fit->parsed()) return cmd_fit(load_run_config(fit_config, fit->remaining()), out, err);
        if (aud->parsed()) return cmd_audit(aa, out);
        if (dia->parsed()) return cmd_diagnostics(da, out);
    } catch (const InfeasibleError& e) {
        err << e.what() << '\n';
        return infeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return io_error;
    }
    return io_error;
}

}  // namespace l1surface::cli
