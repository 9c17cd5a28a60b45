// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status is 0 once every criterion has been evaluated and reported, so a
// FAIL line documents a shortfall without breaking the test run. Pass --strict
// to turn any FAIL into a nonzero exit.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "l1surface/analytics.hpp"
#include "l1surface/kernels.hpp"
#include "l1surface/mollifier.hpp"
#include "l1surface/poly_basis.hpp"
#include "l1surface/recovery.hpp"
#include "oracles.hpp"

using namespace l1surface;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> equidistant(double lo, double hi, std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

Market flat_market(double spot) {
    Market m;
    m.spot = spot;
    m.rate = Curve::flat(0.0);
    m.dividend = Curve::flat(0.0);
    return m;
}

constexpr double kSigma = 0.2;

QuoteSet flat_vol_quotes(double bump = 0.0) {
    std::vector<Quote> qs;
    for (double t : {0.25, 0.5, 1.0})
        for (int i = 0; i < 9; ++i) {
            const double k = 80.0 + 5.0 * i;
            double c = oracle::bs_call(100.0, k, t, 0.0, 0.0, kSigma);
            if (t == 0.5 && k == 100.0) c += bump;
            qs.push_back({t, k, c, c, c});
        }
    return make_quote_set(flat_market(100.0), qs);
}

// Nodes strictly inside the rectangle spanned by the quotes.
bool interior(const MarketStructure& g, std::size_t m, std::size_t k) {
    const ExtensionInfo& e = g.extension();
    const double kk = g.strike(m, k) * g.forward(0) / g.forward(m);
    return m > 0 && g.maturity(m) < e.quoted_maturity_max - 1e-12 && kk > e.quoted_strike_min + 1e-9 &&
           kk < e.quoted_strike_max - 1e-9;
}

Outcome orthonormality() {
    const std::size_t nodes[] = {10, 50, 104};
    const std::size_t orders[] = {5, 14, 14};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        const OrthonormalFamily f(equidistant(68.0, 138.0, nodes[i]), orders[i]);
        const Matrix& v = f.values();
        const Eigen::MatrixXd g = Eigen::MatrixXd(v).transpose() * Eigen::MatrixXd(v);
        worst = std::max(worst, (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-8, fmt::format("max |G - I| = {:.3g}", worst)};
}

Outcome lp_oracle() {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const oracle::RandomLp r = oracle::random_lp(rng);
        const auto ref = oracle::vertex_enumeration(r.g, r.h, r.c);
        LpProblem lp;
        lp.g = r.g;
        lp.h = r.h;
        lp.cost = r.c;
        lp.provenance.assign(static_cast<std::size_t>(r.h.size()), RowGroup::other);
        const LpSolution s = solve(lp);
        if (!ref || s.status != LpStatus::optimal) {
            ++mismatches;
            continue;
        }
        const double err = std::abs(s.objective - *ref);
        worst = std::max(worst, err);
        if (err > 1e-7) ++mismatches;
    }
    return {mismatches == 0, fmt::format("100 LPs, {} mismatches, max |obj - vertex min| = {:.3g}", mismatches, worst)};
}

struct FlatVolRun {
    std::optional<RecoveredSurface> surface;
    std::string error;
    double seconds = 0.0;
};

FlatVolRun& flat_vol_run() {
    static FlatVolRun run = [] {
        FlatVolRun r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r.surface = recover(flat_vol_quotes(), RecoveryConfig{});
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        r.seconds = seconds_since(t0);
        return r;
    }();
    return run;
}

Outcome flat_vol_round_trip() {
    const FlatVolRun& run = flat_vol_run();
    if (!run.surface) return {false, "recovery failed: " + run.error};
    const RecoveredSurface& s = *run.surface;
    const double excess = s.band_excess();
    const MarketStructure& g = s.grid;
    double iv_err = 0.0;
    std::size_t checked = 0, undefined = 0;
    for (std::size_t m = 0; m < g.num_maturities(); ++m)
        for (std::size_t k = 0; k < g.num_strikes(); ++k) {
            if (!interior(g, m, k)) continue;
            ++checked;
            try {
                const double iv = implied_vol(s.prices(static_cast<Eigen::Index>(g.index(m, k))), 100.0, g.strike(m, k),
                                              g.maturity(m), 0.0, 0.0);
                iv_err = std::max(iv_err, std::abs(iv - kSigma));
            } catch (const NoSolutionError&) {
                ++undefined;
            }
        }
    const bool pass = s.status == LpStatus::optimal && s.fitted.size() == 27 && excess <= 1e-8 &&
                      s.audit.worst_slack >= -1e-8 && undefined == 0 && iv_err <= 0.01 && run.seconds < 120.0;
    return {pass, fmt::format("status {}, {} residuals, band excess {:.3g}, audit worst slack {:.3g}, "
                              "max |iv - 0.2| {:.4f} over {} interior nodes ({} undefined), solve {:.2f} s",
                              status_name(s.status), s.fitted.size(), excess, s.audit.worst_slack, iv_err, checked,
                              undefined, run.seconds)};
}

Outcome density_shape() {
    const FlatVolRun& run = flat_vol_run();
    if (!run.surface) return {false, "no criterion-3 surface: " + run.error};
    const RecoveredSurface& s = *run.surface;
    const MarketStructure& g = s.grid;
    const std::vector<double> rho = density(s.prices, g);
    double min_rho = std::numeric_limits<double>::infinity();
    double worst = 0.0;
    double worst_t = 0.0, worst_k = 0.0;
    double worst_quoted = 0.0;  // reported only
    std::size_t checked = 0;
    for (std::size_t m = 0; m < g.num_maturities(); ++m) {
        const double t = g.maturity(m);
        if (t > g.extension().quoted_maturity_max + 1e-12) continue;
        const double sd = kSigma * std::sqrt(t);
        for (std::size_t k = 1; k + 1 < g.num_strikes(); ++k) {
            const double r = rho[g.index(m, k)];
            min_rho = std::min(min_rho, r);
            const double x = std::log(g.strike(m, k) / g.forward(m));
            if (std::abs(x) > 1.5 * sd) continue;
            const double ref = oracle::bs_density(100.0, g.strike(m, k), t, 0.0, 0.0, kSigma);
            const double rel = std::abs(r - ref) / ref;
            ++checked;
            if (interior(g, m, k)) worst_quoted = std::max(worst_quoted, rel);
            if (rel > worst) {
                worst = rel;
                worst_t = t;
                worst_k = g.strike(m, k);
            }
        }
    }
    return {min_rho >= 0.0 && worst <= 0.02 && checked > 0,
            fmt::format("min interior density {:.3g}; max relative error {:.2f}% at T={:.4g}, K={:.4g} over {} nodes "
                        "within 1.5 sd ({:.2f}% inside the quoted strike range)",
                        min_rho, 100.0 * worst, worst_t, worst_k, checked, 100.0 * worst_quoted)};
}

Outcome local_vol_sanity() {
    const FlatVolRun& run = flat_vol_run();
    if (!run.surface) return {false, "no criterion-3 surface: " + run.error};
    const RecoveredSurface& s = *run.surface;
    const MarketStructure& g = s.grid;
    const auto lv = local_vol(s.prices, g);
    const auto rho = density(s.prices, g);
    const auto dt = dcdt(s.prices, g);
    double worst = 0.0;
    std::size_t checked = 0, missing = 0, stray_markers = 0;
    for (std::size_t m = 0; m < g.num_maturities(); ++m)
        for (std::size_t k = 0; k < g.num_strikes(); ++k) {
            const std::size_t n = g.index(m, k);
            const bool defined_inputs = rho[n] > 0.0 && dt[n] > 0.0;
            if (lv[n].has_value() != defined_inputs) ++stray_markers;
            if (!interior(g, m, k)) continue;
            const double x = std::log(g.strike(m, k) / g.forward(m));
            if (std::abs(x) > kSigma * std::sqrt(g.maturity(m))) continue;
            ++checked;
            if (!lv[n]) {
                ++missing;
                continue;
            }
            worst = std::max(worst, std::abs(*lv[n] - kSigma));
        }
    return {checked > 0 && missing == 0 && worst <= 0.02 && stray_markers == 0,
            fmt::format("max |sigma_loc - 0.2| {:.4f} over {} interior nodes within 1 sd of the forward; "
                        "{} undefined there; {} markers inconsistent with density/dCdT signs",
                        worst, checked, missing, stray_markers)};
}

QuoteSet pegged_quotes() {
    std::ostringstream csv;
    csv << "maturity,strike,bid,ask\n";
    for (double t : {1.0 / 12, 2.0 / 12, 3.0 / 12, 0.5, 0.75, 1.0, 1.5, 2.0})
        for (double k : {7.75, 7.775, 7.80, 7.825, 7.85}) csv << fmt::format("{},{},{},{}\n", t, k, 0.0175, 0.0225);
    std::istringstream in(csv.str());
    return load_quotes(in, flat_market(7.80), {QuoteKind::implied_vol});
}

Outcome fx_mode() {
    const QuoteSet q = pegged_quotes();
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<RecoveredSurface> fx;
    std::string fx_error;
    try {
        fx = recover(q, RecoveryConfig::fx_defaults());
    } catch (const std::exception& e) {
        fx_error = e.what();
    }
    const double fx_seconds = seconds_since(t0);
    if (!fx) return {false, "fx recovery failed: " + fx_error};
    const std::size_t fx_spikes = density_spikes(diagnose(fx->prices, fx->grid));

    RecoveryConfig tensor;
    tensor.grid_maturities = q.maturities.size();
    tensor.grid_strikes = 406;
    tensor.tolerance = {ToleranceMode::bid_ask, 0.0, 1.0};
    std::optional<std::size_t> tensor_spikes;
    std::string tensor_note;
    try {
        const RecoveredSurface t = recover(q, tensor);
        tensor_spikes = density_spikes(diagnose(t.prices, t.grid));
    } catch (const std::exception& e) {
        tensor_note = e.what();
    }
    const double seconds = seconds_since(t0);
    const bool inside = fx->band_excess() <= 1e-9;
    const bool lower = tensor_spikes && fx_spikes < *tensor_spikes;
    std::string detail = fmt::format("fx: {} strikes/slice, band excess {:.3g}, audit {}, spikes {} ({:.2f} s); ",
                                     fx->grid.num_strikes(), fx->band_excess(), fx->audit.pass ? "clean" : "FAILED",
                                     fx_spikes, fx_seconds);
    if (tensor_spikes)
        detail += fmt::format("tensor spikes {}", *tensor_spikes);
    else
        detail += "tensor mode has no solution on this data, so there is no spike count to beat (" + tensor_note + ")";
    detail += fmt::format("; total {:.1f} s", seconds);
    return {inside && fx->audit.pass && lower && seconds < 300.0, detail};
}

Outcome mollifier_suite() {
    auto raw = [](double x) { return x * x < 1.0 ? std::exp(1.0 / (x * x - 1.0)) : 0.0; };
    double norm_err = 0.0;
    for (double alpha : {0.1, 1.0, 10.0})
        norm_err = std::max(norm_err, std::abs(oracle::simpson([&](double x) { return mollifier::scaled(x, alpha); },
                                                               -alpha, alpha, 20000) -
                                               1.0));
    const double k_ref = 1.0 / oracle::simpson(raw, -1.0, 1.0, 200000);
    norm_err = std::max(norm_err, std::abs(mollifier::normalization() - k_ref) / k_ref);

    const PiecewiseLinear affine({0.0, 10.0}, {3.0, -2.0}, PiecewiseLinear::Extension::linear);
    const std::vector<double> pts{0.7, 2.0, 5.5, 9.3};
    const auto va = mollify(affine, 0.7, pts);
    double affine_err = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) affine_err = std::max(affine_err, std::abs(va[i] - affine(pts[i])));

    std::vector<double> ks, cs;
    for (int i = 0; i < 9; ++i) {
        ks.push_back(80.0 + 5.0 * i);
        cs.push_back(oracle::bs_call(100.0, ks.back(), 0.5, 0.0, 0.0, kSigma));
    }
    const PiecewiseLinear convex(ks, cs, PiecewiseLinear::Extension::linear);
    const auto fine = equidistant(70.0, 130.0, 401);
    double min_second = std::numeric_limits<double>::infinity();
    for (double alpha : {2.5, 5.0, 10.0}) {
        const auto v = mollify(convex, alpha, fine);
        for (std::size_t i = 1; i + 1 < v.size(); ++i) min_second = std::min(min_second, v[i + 1] - 2.0 * v[i] + v[i - 1]);
    }

    const PiecewiseLinear kink({90.0, 100.0, 110.0}, {10.0, 0.5, 0.0});
    bool monotone = true;
    double prev = kink(100.0);
    for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double v = mollify(kink, alpha, std::vector<double>{100.0})[0];
        monotone = monotone && v > prev;
        prev = v;
    }
    return {norm_err <= 1e-6 && affine_err <= 1e-8 && min_second >= -1e-10 && monotone,
            fmt::format("normalization error {:.3g}, affine error {:.3g}, min second difference {:.3g}, "
                        "value at kink {} in alpha",
                        norm_err, affine_err, min_second, monotone ? "increasing" : "NOT increasing")};
}

Outcome infeasibility_detection() {
    RecoveryConfig cfg;
    cfg.tolerance = {ToleranceMode::relative, 0.0, 1.0};
    try {
        const RecoveredSurface s = recover(flat_vol_quotes(1.0), cfg);
        return {false, fmt::format("solver returned {} instead of infeasible", status_name(s.status))};
    } catch (const InfeasibleError& e) {
        const bool named = e.family() && *e.family() == ConstraintFamily::butterfly;
        return {named, fmt::format("infeasible, family {}: {}",
                                   e.family() ? std::string(family_name(*e.family())) : "none", e.what())};
    } catch (const std::exception& e) {
        return {false, std::string("unexpected error: ") + e.what()};
    }
}

Outcome weight_law() {
    const auto w = weights_tensor(7, 14);
    // K^2 T: maturity order 2 (y = 2), strike order 3 (z = 3)
    const double constant = w[0];
    const double k2t = w[(2 - 1) * 14 + (3 - 1)];
    return {constant == 2.0 && k2t == 5.0, fmt::format("w(1) = {}, w(K^2 T) = {}", constant, k2t)};
}

}  // namespace

int main(int argc, char** argv) {
    const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
    std::cout << "kernels: " << kernels::name(kernels::active().isa) << '\n';

    struct Criterion {
        int id;
        const char* title;
        double budget;  // seconds
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "orthonormality", 1.0, orthonormality},
        {2, "LP oracle", 10.0, lp_oracle},
        {3, "flat-vol round trip", 120.0, flat_vol_round_trip},
        {4, "density shape", 0.0, density_shape},
        {5, "local vol sanity", 0.0, local_vol_sanity},
        {6, "FX mode", 300.0, fx_mode},
        {7, "mollifier suite", 0.0, mollifier_suite},
        {8, "infeasibility detection", 0.0, infeasibility_detection},
        {9, "weight law", 0.0, weight_law},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double dt = seconds_since(t0);
        if (c.budget > 0.0 && dt >= c.budget) {
            o.pass = false;
            o.detail += fmt::format("; over the {:.0f} s budget", c.budget);
        }
        if (!o.pass) ++failures;
        std::cout << fmt::format("criterion {} {}: {} [{:.2f} s] {}\n", c.id, c.title, o.pass ? "PASS" : "FAIL", dt,
                                 o.detail)
                  << std::flush;
    }
    std::cout << fmt::format("{} of {} criteria pass\n", criteria.size() - static_cast<std::size_t>(failures),
                             criteria.size());
    return strict && failures > 0 ? 1 : 0;
}
