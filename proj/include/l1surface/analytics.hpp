#pragma once

// Diagnostics on a recovered price grid: Black-Scholes implied volatility,
// state-price density, Dupire local volatility, and an arbitrage audit that
// re-derives the static conditions straight from the prices.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l1surface/constraints.hpp"
#include "l1surface/linalg.hpp"
#include "l1surface/market_data.hpp"

namespace l1surface {

/// Black-Scholes implied volatility in [1e-6, 5]. Throws NoSolutionError when
/// the price is not strictly between max(S e^{-qT} - K e^{-rT}, 0) and S e^{-qT},
/// or when no volatility in the search range reproduces it.
double implied_vol(double price, double spot, double strike, double maturity, double rate, double dividend);

struct FamilyAudit {
    ConstraintFamily family = ConstraintFamily::butterfly;
    std::size_t checked = 0;
    double worst_slack = 0.0;  // +inf when nothing was checked
    std::optional<std::size_t> node;  // flat grid index of the worst row
    double maturity = 0.0;
    double strike = 0.0;
    bool pass = true;
};

struct AuditOptions {
    CapConvention caps = CapConvention::literal;
    double tolerance = -1e-8;
    /// Skip rows that touch nodes outside the quoted domain (mirrors NoArbitrageOptions).
    bool relax_outside_quoted = false;
};

struct AuditReport {
    std::array<FamilyAudit, kConstraintFamilyCount> families{};
    double tolerance = -1e-8;
    bool pass = true;
    ConstraintFamily worst_family = ConstraintFamily::butterfly;
    double worst_slack = 0.0;

    /// Informational: max over slices of C(K_1, T) - S e^{-qT}. Positive values
    /// mean the first strike sits above the tight cap even if the configured
    /// cap allows it.
    double tight_cap_excess = 0.0;
    bool cap_warning = false;

    const FamilyAudit& family(ConstraintFamily f) const { return families[static_cast<std::size_t>(f)]; }
};

/// Checks butterfly, calendar, monotonicity, slope floor and bound conditions
/// on `prices` (slice-major over `grid`). Slacks are positive when satisfied and
/// use the same row scaling as the LP constraints.
AuditReport audit(const Vector& prices, const MarketStructure& grid, const AuditOptions& opts = {});

/// Per family, the smallest slack of the rows reported at each node (NaN where none).
/// Rows are reported at their middle node (butterfly), later slice (calendar)
/// or right-hand node (monotonicity).
using NodeSlacks = std::array<std::vector<double>, kConstraintFamilyCount>;
AuditReport audit(const Vector& prices, const MarketStructure& grid, const AuditOptions& opts, NodeSlacks* per_node);
NodeSlacks node_slacks(const Vector& prices, const MarketStructure& grid, const AuditOptions& opts = {});

/// Which quotient the local-volatility formula uses.
enum class LocalVolForm {
    dupire,   // (1/K) sqrt(2 dC/dT / d2C/dK2)
    inverted, // (1/K) sqrt(2 d2C/dK2 / dC/dT), the form as printed in some references
};

struct DiagnosticsOptions {
    LocalVolForm local_vol_form = LocalVolForm::dupire;
    AuditOptions audit;
};

/// Grids share the fine-grid shape (slice-major). Undefined values are nullopt.
struct SurfaceDiagnostics {
    std::size_t num_maturities = 0;
    std::size_t num_strikes = 0;
    std::vector<std::optional<double>> implied_vol;
    std::vector<double> density;
    std::vector<bool> density_copied;  // end nodes carry the adjacent interior value
    std::vector<double> dcdt;
    std::vector<std::optional<double>> local_vol;
    AuditReport audit;
};

/// Nonuniform central second differences per slice; the two end nodes copy
/// their neighbour. Throws ValidationError if a slice has fewer than three strikes.
std::vector<double> density(const Vector& prices, const MarketStructure& grid);

/// Forward differences in maturity along the aligned strikes, backward on the last slice.
std::vector<double> dcdt(const Vector& prices, const MarketStructure& grid);

/// Undefined where the density or dC/dT is not positive, or where consecutive
/// slices do not share strikes (nonzero carry).
std::vector<std::optional<double>> local_vol(const Vector& prices, const MarketStructure& grid,
                                             LocalVolForm form = LocalVolForm::dupire);

SurfaceDiagnostics diagnose(const Vector& prices, const MarketStructure& grid, const DiagnosticsOptions& opts = {});

/// Number of sign changes between consecutive third differences of `values`
/// where both exceed ten times the median absolute third difference.
std::size_t spike_count(std::span<const double> values);

/// Sum of spike_count over the interior density of each slice.
std::size_t density_spikes(const SurfaceDiagnostics& d);

}  // namespace l1surface
