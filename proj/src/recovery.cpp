#include "l1surface/recovery.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace l1surface {

namespace {

std::optional<ConstraintFamily> family_of_group(RowGroup g) {
    switch (g) {
        case RowGroup::butterfly: return ConstraintFamily::butterfly;
        case RowGroup::calendar: return ConstraintFamily::calendar;
        case RowGroup::vertical_upper: return ConstraintFamily::vertical_upper;
        case RowGroup::vertical_lower: return ConstraintFamily::vertical_lower;
        case RowGroup::bound: return ConstraintFamily::bound;
        default: return std::nullopt;
    }
}

struct QuoteArbitrage {
    ConstraintFamily family;
    double violation;  // in units of the spread's largest weight
    double maturity;
    double strike;
};

// Static arbitrage that every price vector inside the quote bands carries,
// checked spread by spread between neighbouring quotes.
std::optional<QuoteArbitrage> quote_arbitrage(const QuoteSet& q, const Vector& lower, const Vector& upper) {
    std::optional<QuoteArbitrage> worst;
    auto consider = [&](ConstraintFamily f, double v, const Quote& at) {
        if (v > 0.0 && (!worst || v > worst->violation)) worst = QuoteArbitrage{f, v, at.maturity, at.strike};
    };
    std::vector<std::vector<std::size_t>> slices(q.maturities.size());
    for (std::size_t i = 0, m = 0; i < q.quotes.size(); ++i) {
        while (q.quotes[i].maturity != q.maturities[m]) ++m;
        slices[m].push_back(i);
    }
    auto lo = [&](std::size_t i) { return lower(static_cast<Eigen::Index>(i)); };
    auto hi = [&](std::size_t i) { return upper(static_cast<Eigen::Index>(i)); };
    const double tiny = 1e-12 * std::max(1.0, upper.lpNorm<Eigen::Infinity>());

    for (std::size_t m = 0; m < slices.size(); ++m) {
        const auto& s = slices[m];
        const double d = discount(q, q.maturities[m]);
        for (std::size_t j = 0; j + 1 < s.size(); ++j) {
            const Quote& a = q.quotes[s[j]];
            const Quote& b = q.quotes[s[j + 1]];
            consider(ConstraintFamily::vertical_upper, lo(s[j + 1]) - hi(s[j]) - tiny, b);
            consider(ConstraintFamily::vertical_lower, (lo(s[j]) - hi(s[j + 1]) - d * (b.strike - a.strike) - tiny) /
                                                           std::max(1.0, d * (b.strike - a.strike)),
                     b);
            if (j + 2 < s.size()) {
                const double k1 = a.strike, k2 = b.strike, k3 = q.quotes[s[j + 2]].strike;
                const double best = (k3 - k2) * hi(s[j]) - (k3 - k1) * lo(s[j + 1]) + (k2 - k1) * hi(s[j + 2]);
                consider(ConstraintFamily::butterfly, (-best - tiny * (k3 - k1)) / (k3 - k1), b);
            }
        }
        if (m + 1 == slices.size()) continue;
        const double f0 = forward(q, q.maturities[m]), f1 = forward(q, q.maturities[m + 1]);
        const double ratio = (discount(q, q.maturities[m + 1]) * f1) / (d * f0);
        for (std::size_t i : slices[m])
            for (std::size_t k : slices[m + 1])
                if (std::abs(q.quotes[k].strike - q.quotes[i].strike * f1 / f0) <= 1e-10 * q.quotes[k].strike)
                    consider(ConstraintFamily::calendar, (ratio * lo(i) - hi(k) - tiny) / std::max(1.0, ratio),
                             q.quotes[k]);
    }
    return worst;
}

RowGroup group_of_family(ConstraintFamily f) {
    switch (f) {
        case ConstraintFamily::butterfly: return RowGroup::butterfly;
        case ConstraintFamily::calendar: return RowGroup::calendar;
        case ConstraintFamily::vertical_upper: return RowGroup::vertical_upper;
        case ConstraintFamily::vertical_lower: return RowGroup::vertical_lower;
        case ConstraintFamily::bound: return RowGroup::bound;
    }
    return RowGroup::other;
}

[[noreturn]] void throw_infeasible(const RecoveryProblem& p, const LpSolution& sol) {
    if (const auto arb = quote_arbitrage(p.quotes, p.system.fit_lower, p.system.fit_upper)) {
        throw InfeasibleError(fmt::format("recovery LP is infeasible; the quote bands already contain a {} arbitrage "
                                          "near T={}, K={} (widen the tolerance or check the quotes)",
                                          family_name(arb->family), arb->maturity, arb->strike),
                              arb->family, group_of_family(arb->family));
    }
    const LpProblem& lp = p.lp;
    // Weight of each row in the certificate, in units of its largest coefficient.
    std::optional<std::size_t> best;
    double best_weight = 0.0;
    std::optional<std::size_t> best_fit;
    double best_fit_weight = 0.0;
    for (Eigen::Index i = 0; i < sol.farkas.size(); ++i) {
        const double w = sol.farkas(i) * lp.g.row(i).lpNorm<Eigen::Infinity>();
        const auto row = static_cast<std::size_t>(i);
        if (family_of_group(lp.provenance[row])) {
            if (w > best_weight) {
                best_weight = w;
                best = row;
            }
        } else if (w > best_fit_weight) {
            best_fit_weight = w;
            best_fit = row;
        }
    }
    if (!best) best = best_fit ? best_fit : sol.certificate_row;
    const RowGroup group = best ? lp.provenance[*best] : RowGroup::other;
    const auto family = family_of_group(group);
    throw InfeasibleError(fmt::format("recovery LP is infeasible; the certificate is dominated by {} constraints "
                                      "(widen the tolerance or check the quotes)",
                                      group_name(group)),
                          family, group);
}

}  // namespace

void RecoveryConfig::validate(const QuoteSet& q) const {
    if (grid_strikes < 3) throw ValidationError("the grid needs at least three strikes per slice");
    if (mode == RecoveryMode::tensor_wl1) {
        if (order_t == 0 || order_k == 0) throw ValidationError("polynomial orders must be at least one");
        const std::size_t mt = grid_maturities ? grid_maturities : q.maturities.size();
        if (order_t * order_k > mt * grid_strikes)
            throw ValidationError(fmt::format("{} basis functions exceed the {} grid nodes", order_t * order_k,
                                              mt * grid_strikes));
    } else {
        if (grid_maturities != 0 && grid_maturities != q.maturities.size())
            throw ValidationError(fmt::format("fx mode builds one slice per quoted maturity ({}), not {}",
                                              q.maturities.size(), grid_maturities));
        if (tolerance.mode != ToleranceMode::bid_ask)
            throw ValidationError("fx mode fits inside the bid-ask band");
    }
    if (tolerance.mode != ToleranceMode::bid_ask && !(tolerance.epsilon >= 0.0))
        throw ValidationError("fit tolerance must be nonnegative");
    if (!(tolerance.scale > 0.0)) throw ValidationError("band scale must be positive");
}

RecoveryConfig RecoveryConfig::fx_defaults() {
    RecoveryConfig cfg;
    cfg.mode = RecoveryMode::fx_per_slice;
    cfg.grid_maturities = 0;
    cfg.grid_strikes = 406;
    cfg.tolerance = {ToleranceMode::bid_ask, 0.0};
    return cfg;
}

std::vector<double> weights_tensor(std::size_t order_t, std::size_t order_k) {
    std::vector<double> w(order_t * order_k);
    for (std::size_t y = 1; y <= order_t; ++y)
        for (std::size_t z = 1; z <= order_k; ++z) w[(y - 1) * order_k + (z - 1)] = static_cast<double>(y + z);
    return w;
}

double RecoveredSurface::band_excess() const {
    if (fitted.size() == 0) return 0.0;
    return std::max((fit_lower - fitted).maxCoeff(), (fitted - fit_upper).maxCoeff());
}

RecoveryProblem build_problem(const QuoteSet& q, const RecoveryConfig& cfg) {
    cfg.validate(q);
    RecoveryProblem p;
    p.quotes = q;
    const std::size_t mt = cfg.grid_maturities ? cfg.grid_maturities : q.maturities.size();
    GridExtension ext = cfg.extension;
    if (cfg.mode == RecoveryMode::fx_per_slice) ext.maturity_fraction.reset();
    p.grid = build_fine_grid(q, cfg.grid_strikes, mt, ext);
    if (cfg.mode == RecoveryMode::tensor_wl1) {
        p.basis = tensor_basis(p.grid, cfg.order_t, cfg.order_k);
    } else {
        p.basis = shape_basis_matrix(q, p.grid, cfg.shape);
    }
    p.system = assemble(p.grid, p.basis, q, cfg.tolerance, cfg.no_arbitrage);
    p.lp = to_lp(p.system, p.basis.column_weights);
    return p;
}

RecoveredSurface solve_problem(RecoveryProblem problem, const RecoveryConfig& cfg) {
    const LpSolution sol = solve(problem.lp, cfg.solver);
    if (sol.status == LpStatus::infeasible) throw_infeasible(problem, sol);
    if (sol.status != LpStatus::optimal)
        throw SolverError(fmt::format("recovery LP stopped with status {} after {} iterations",
                                      status_name(sol.status), sol.iterations),
                          sol.status);

    RecoveredSurface s;
    s.mode = cfg.mode;
    const Recovered rec = recover_x(sol);
    s.x = rec.x;
    s.complementarity = rec.complementarity;
    s.prices = problem.basis.values * s.x;
    s.fitted = problem.system.fit.a * s.x;
    s.residuals = s.fitted - problem.system.target;
    s.fit_lower = problem.system.fit_lower;
    s.fit_upper = problem.system.fit_upper;
    s.quote_nodes = problem.system.fit.grid_rows;
    const double xmax = s.x.size() ? s.x.lpNorm<Eigen::Infinity>() : 0.0;
    for (Eigen::Index i = 0; i < s.x.size(); ++i)
        if (std::abs(s.x(i)) > 1e-8 * xmax) ++s.nonzero_coefficients;
    s.status = sol.status;
    s.objective = sol.objective;
    s.iterations = sol.iterations;
    s.max_violation = sol.max_violation;
    s.lp_rows = problem.lp.num_rows();
    s.lp_vars = problem.lp.num_vars();
    s.audit = audit(s.prices, problem.grid,
                    {cfg.no_arbitrage.caps, -1e-8, cfg.no_arbitrage.relax_outside_quoted});
    s.grid = std::move(problem.grid);
    s.basis = std::move(problem.basis);
    return s;
}

RecoveredSurface recover_tensor(const QuoteSet& q, const RecoveryConfig& cfg) {
    if (cfg.mode != RecoveryMode::tensor_wl1) throw ValidationError("recover_tensor needs mode tensor_wl1");
    return solve_problem(build_problem(q, cfg), cfg);
}

RecoveredSurface recover_fx(const QuoteSet& q, const RecoveryConfig& cfg) {
    if (cfg.mode != RecoveryMode::fx_per_slice) throw ValidationError("recover_fx needs mode fx_per_slice");
    return solve_problem(build_problem(q, cfg), cfg);
}

RecoveredSurface recover(const QuoteSet& q, const RecoveryConfig& cfg) {
    return cfg.mode == RecoveryMode::tensor_wl1 ? recover_tensor(q, cfg) : recover_fx(q, cfg);
}

RelaxedRecovery recover_relaxed(const QuoteSet& q, const RecoveryConfig& cfg, double max_scale, double rel_tol) {
    RelaxedRecovery out;
    auto attempt = [&](double scale) -> std::optional<RecoveredSurface> {
        RecoveryConfig c = cfg;
        c.tolerance.scale = cfg.tolerance.scale * scale;
        ++out.solves;
        try {
            return recover(q, c);
        } catch (const InfeasibleError&) {
            return std::nullopt;
        }
    };

    double lo = 1.0;
    double hi = 1.0;
    std::optional<RecoveredSurface> best = attempt(1.0);
    if (best) {
        out.surface = std::move(*best);
        return out;
    }
    while (!best) {
        lo = hi;
        hi *= 2.0;
        if (hi > max_scale)
            throw InfeasibleError(fmt::format("still infeasible with the band scaled by {}", lo), std::nullopt,
                                  RowGroup::other);
        best = attempt(hi);
    }
    while ((hi - lo) > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (auto s = attempt(mid)) {
            best = std::move(s);
            hi = mid;
        } else {
            lo = mid;
        }
    }
    out.surface = std::move(*best);
    out.scale = hi;
    return out;
}

}  // namespace l1surface
