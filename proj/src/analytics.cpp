#include "l1surface/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "l1surface/black_scholes.hpp"
#include "l1surface/error.hpp"

namespace l1surface {

namespace {

constexpr double kVolLow = 1e-6;
constexpr double kVolHigh = 5.0;

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_shape(const Vector& prices, const MarketStructure& grid) {
    if (static_cast<std::size_t>(prices.size()) != grid.size())
        throw ConsistencyError(fmt::format("{} prices for a grid of {} nodes", prices.size(), grid.size()));
}

// Rates implied by the grid's discount factor and forward at slice m.
double slice_rate(const MarketStructure& grid, std::size_t m) { return -std::log(grid.discount(m)) / grid.maturity(m); }
double slice_dividend(const MarketStructure& grid, std::size_t m) {
    return slice_rate(grid, m) - std::log(grid.forward(m) / grid.market().spot) / grid.maturity(m);
}

class AuditBuilder {
public:
    AuditBuilder(const MarketStructure& grid, const AuditOptions& opts, NodeSlacks* per_node = nullptr)
        : grid_(grid), opts_(opts), per_node_(per_node) {
        if (per_node_)
            for (auto& v : *per_node_) v.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t f = 0; f < kConstraintFamilyCount; ++f) {
            report_.families[f].family = static_cast<ConstraintFamily>(f);
            report_.families[f].worst_slack = std::numeric_limits<double>::infinity();
        }
        report_.tolerance = opts.tolerance;
    }

    // `nodes` are the (m, k) pairs the row touches; the row is reported at (m, k).
    void record(ConstraintFamily f, double slack, std::size_t m, std::size_t k,
                std::initializer_list<std::pair<std::size_t, std::size_t>> nodes, bool always = false) {
        if (opts_.relax_outside_quoted && !always) {
            for (const auto& [mm, kk] : nodes)
                if (!grid_.in_quoted_domain(mm, kk)) return;
        }
        FamilyAudit& fa = report_.families[static_cast<std::size_t>(f)];
        ++fa.checked;
        if (per_node_) {
            double& cell = (*per_node_)[static_cast<std::size_t>(f)][grid_.index(m, k)];
            if (std::isnan(cell) || slack < cell) cell = slack;
        }
        if (slack < fa.worst_slack) {
            fa.worst_slack = slack;
            fa.node = grid_.index(m, k);
            fa.maturity = grid_.maturity(m);
            fa.strike = grid_.strike(m, k);
        }
    }

    AuditReport finish() {
        report_.worst_slack = std::numeric_limits<double>::infinity();
        for (FamilyAudit& fa : report_.families) {
            fa.pass = fa.worst_slack >= opts_.tolerance;
            report_.pass = report_.pass && fa.pass;
            if (fa.worst_slack < report_.worst_slack) {
                report_.worst_slack = fa.worst_slack;
                report_.worst_family = fa.family;
            }
        }
        return report_;
    }

    AuditReport& report() { return report_; }

private:
    const MarketStructure& grid_;
    AuditOptions opts_;
    NodeSlacks* per_node_;
    AuditReport report_;
};

}  // namespace

double implied_vol(double price, double spot, double strike, double maturity, double rate, double dividend) {
    if (!(maturity > 0.0) || !(spot > 0.0) || !(strike > 0.0))
        throw DomainError("implied volatility needs positive spot, strike and maturity");
    const double upper = spot * std::exp(-dividend * maturity);
    const double lower = std::max(upper - strike * std::exp(-rate * maturity), 0.0);
    if (!(price > lower))
        throw NoSolutionError(fmt::format("price {} is at or below the lower bound {}", price, lower));
    if (!(price < upper))
        throw NoSolutionError(fmt::format("price {} is at or above the upper bound {}", price, upper));

    auto f = [&](double s) { return bs::call_price(spot, strike, maturity, rate, dividend, s) - price; };
    double lo = kVolLow;
    double hi = kVolHigh;
    if (f(hi) < 0.0) throw NoSolutionError(fmt::format("price {} needs a volatility above {}", price, kVolHigh));
    if (f(lo) > 0.0) throw NoSolutionError(fmt::format("price {} needs a volatility below {}", price, kVolLow));
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }
    double sigma = 0.5 * (lo + hi);
    for (int it = 0; it < 2; ++it) {
        const double v = bs::vega(spot, strike, maturity, rate, dividend, sigma);
        if (!(v > 0.0)) break;
        const double next = sigma - f(sigma) / v;
        if (next > lo && next < hi) sigma = next;
    }
    return sigma;
}

AuditReport audit(const Vector& prices, const MarketStructure& grid, const AuditOptions& opts) {
    return audit(prices, grid, opts, nullptr);
}

NodeSlacks node_slacks(const Vector& prices, const MarketStructure& grid, const AuditOptions& opts) {
    NodeSlacks out;
    audit(prices, grid, opts, &out);
    return out;
}

AuditReport audit(const Vector& prices, const MarketStructure& grid, const AuditOptions& opts, NodeSlacks* per_node) {
    check_shape(prices, grid);
    const std::size_t mt = grid.num_maturities();
    const std::size_t mk = grid.num_strikes();
    auto c = [&](std::size_t m, std::size_t k) { return prices(ix(grid.index(m, k))); };
    AuditBuilder b(grid, opts, per_node);
    using F = ConstraintFamily;

    for (std::size_t m = 0; m < mt; ++m) {
        const double df = grid.discount(m) * grid.forward(m);
        const double cap = opts.caps == CapConvention::literal ? grid.market().spot * df : df;
        const double d = grid.discount(m);

        // Convexity written through consecutive slopes; the strike-zero value is the cap.
        auto k = [&](std::size_t i) { return grid.strike(m, i); };
        if (mk >= 2) {
            const double s01 = (c(m, 0) - cap) / k(0);
            const double s12 = (c(m, 1) - c(m, 0)) / (k(1) - k(0));
            b.record(F::butterfly, k(0) * (s12 - s01), m, 0, {{m, 0}, {m, 1}});
        }
        for (std::size_t i = 1; i + 1 < mk; ++i) {
            const double left = (c(m, i) - c(m, i - 1)) / (k(i) - k(i - 1));
            const double right = (c(m, i + 1) - c(m, i)) / (k(i + 1) - k(i));
            b.record(F::butterfly, (k(i) - k(i - 1)) * (right - left), m, i, {{m, i - 1}, {m, i}, {m, i + 1}});
        }
        if (mk >= 2) b.record(F::butterfly, c(m, mk - 2) - c(m, mk - 1), m, mk - 1, {{m, mk - 2}, {m, mk - 1}});

        b.record(F::vertical_upper, cap - c(m, 0), m, 0, {{m, 0}});
        b.record(F::vertical_lower, c(m, 0) - d * std::max(grid.forward(m) - k(0), 0.0), m, 0, {{m, 0}});
        for (std::size_t i = 1; i < mk; ++i) {
            b.record(F::vertical_upper, c(m, i - 1) - c(m, i), m, i, {{m, i - 1}, {m, i}});
            b.record(F::vertical_lower, c(m, i) - c(m, i - 1) + d * (k(i) - k(i - 1)), m, i, {{m, i - 1}, {m, i}});
        }

        const double tight = df;  // S e^{-qT}
        b.report().tight_cap_excess =
            m == 0 ? c(m, 0) - tight : std::max(b.report().tight_cap_excess, c(m, 0) - tight);
    }

    for (std::size_t m = 0; m + 1 < mt; ++m) {
        const double ratio = (grid.discount(m + 1) * grid.forward(m + 1)) / (grid.discount(m) * grid.forward(m));
        for (std::size_t i = 0; i < mk; ++i)
            b.record(F::calendar, c(m + 1, i) - ratio * c(m, i), m + 1, i, {{m, i}, {m + 1, i}});
    }

    if (mt > 0 && mk > 0) {
        const double floor = std::max(grid.forward(0) - grid.strike(0, mk - 1), 0.0);
        b.record(F::bound, c(0, mk - 1) - floor, 0, mk - 1, {{0, mk - 1}}, true);
    }

    AuditReport r = b.finish();
    r.cap_warning = r.tight_cap_excess > 0.0;
    return r;
}

std::vector<double> density(const Vector& prices, const MarketStructure& grid) {
    check_shape(prices, grid);
    const std::size_t mk = grid.num_strikes();
    if (mk < 3) throw ValidationError("density needs at least three strikes per slice");
    std::vector<double> out(grid.size());
    for (std::size_t m = 0; m < grid.num_maturities(); ++m) {
        const auto k = grid.slice_strikes(m);
        auto c = [&](std::size_t i) { return prices(ix(grid.index(m, i))); };
        for (std::size_t i = 1; i + 1 < mk; ++i) {
            const double left = (c(i) - c(i - 1)) / (k[i] - k[i - 1]);
            const double right = (c(i + 1) - c(i)) / (k[i + 1] - k[i]);
            out[grid.index(m, i)] = 2.0 * (right - left) / (k[i + 1] - k[i - 1]);
        }
        out[grid.index(m, 0)] = out[grid.index(m, 1)];
        out[grid.index(m, mk - 1)] = out[grid.index(m, mk - 2)];
    }
    return out;
}

std::vector<double> dcdt(const Vector& prices, const MarketStructure& grid) {
    check_shape(prices, grid);
    const std::size_t mt = grid.num_maturities();
    std::vector<double> out(grid.size(), 0.0);
    if (mt < 2) return out;
    for (std::size_t m = 0; m < mt; ++m) {
        const std::size_t a = m + 1 < mt ? m : m - 1;
        const double dt = grid.maturity(a + 1) - grid.maturity(a);
        for (std::size_t k = 0; k < grid.num_strikes(); ++k)
            out[grid.index(m, k)] = (prices(ix(grid.index(a + 1, k))) - prices(ix(grid.index(a, k)))) / dt;
    }
    return out;
}

std::vector<std::optional<double>> local_vol(const Vector& prices, const MarketStructure& grid, LocalVolForm form) {
    const std::vector<double> rho = density(prices, grid);
    const std::vector<double> dt = dcdt(prices, grid);
    const std::size_t mt = grid.num_maturities();
    std::vector<std::optional<double>> out(grid.size());
    for (std::size_t m = 0; m < mt; ++m) {
        const std::size_t a = m + 1 < mt ? m : (m > 0 ? m - 1 : m);
        const std::size_t b = m + 1 < mt ? m + 1 : m;
        for (std::size_t k = 0; k < grid.num_strikes(); ++k) {
            const double strike = grid.strike(m, k);
            const bool aligned = std::abs(grid.strike(a, k) - grid.strike(b, k)) <= 1e-12 * strike;
            const std::size_t n = grid.index(m, k);
            if (!aligned || !(rho[n] > 0.0) || !(dt[n] > 0.0) || !(strike > 0.0)) continue;
            const double q = form == LocalVolForm::dupire ? dt[n] / rho[n] : rho[n] / dt[n];
            out[n] = std::sqrt(2.0 * q) / strike;
        }
    }
    return out;
}

SurfaceDiagnostics diagnose(const Vector& prices, const MarketStructure& grid, const DiagnosticsOptions& opts) {
    SurfaceDiagnostics d;
    d.num_maturities = grid.num_maturities();
    d.num_strikes = grid.num_strikes();
    d.density = density(prices, grid);
    d.dcdt = dcdt(prices, grid);
    d.local_vol = local_vol(prices, grid, opts.local_vol_form);
    d.density_copied.assign(grid.size(), false);
    d.implied_vol.resize(grid.size());
    for (std::size_t m = 0; m < grid.num_maturities(); ++m) {
        d.density_copied[grid.index(m, 0)] = true;
        d.density_copied[grid.index(m, grid.num_strikes() - 1)] = true;
        const double r = slice_rate(grid, m);
        const double q = slice_dividend(grid, m);
        for (std::size_t k = 0; k < grid.num_strikes(); ++k) {
            const std::size_t n = grid.index(m, k);
            try {
                d.implied_vol[n] = implied_vol(prices(ix(n)), grid.market().spot, grid.strike(m, k), grid.maturity(m), r, q);
            } catch (const NoSolutionError&) {
            }
        }
    }
    d.audit = audit(prices, grid, opts.audit);
    return d;
}

std::size_t spike_count(std::span<const double> v) {
    if (v.size() < 5) return 0;
    std::vector<double> t(v.size() - 3);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = v[i + 3] - 3.0 * v[i + 2] + 3.0 * v[i + 1] - v[i];
    std::vector<double> mag(t.size());
    std::transform(t.begin(), t.end(), mag.begin(), [](double x) { return std::abs(x); });
    auto mid = mag.begin() + static_cast<std::ptrdiff_t>(mag.size() / 2);
    std::nth_element(mag.begin(), mid, mag.end());
    const double threshold = 10.0 * *mid;
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
        if (std::abs(t[i]) > threshold && std::abs(t[i + 1]) > threshold && (t[i] > 0.0) != (t[i + 1] > 0.0)) ++count;
    return count;
}

std::size_t density_spikes(const SurfaceDiagnostics& d) {
    std::size_t total = 0;
    for (std::size_t m = 0; m < d.num_maturities; ++m) {
        if (d.num_strikes < 3) continue;
        std::span<const double> interior(d.density.data() + m * d.num_strikes + 1, d.num_strikes - 2);
        total += spike_count(interior);
    }
    return total;
}

}  // namespace l1surface
